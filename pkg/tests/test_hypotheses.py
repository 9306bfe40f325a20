import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from treedet import (
    Alphabet,
    BINARY,
    Direction,
    DistributionPair,
    EquivalenceViolation,
    InputError,
    bernoulli_pair,
    kl_divergence,
    llr_array,
    log_likelihood_ratio,
    product_pair,
    second_moment_null,
    validate_assumptions,
)
from treedet.hypotheses import UnknownSymbol

LOG3 = math.log(3.0)


class TestAlphabet:
    def test_basic(self):
        a = Alphabet(("a", "b", "c"))
        assert len(a) == 3
        assert list(a) == ["a", "b", "c"]
        assert "b" in a
        assert a.index("c") == 2

    def test_rejects_duplicates(self):
        with pytest.raises(InputError):
            Alphabet((0, 1, 0))

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            Alphabet(())

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbol):
            BINARY.index(2)


class TestDistributionPair:
    def test_bernoulli(self, pair75):
        assert pair75.alphabet == BINARY
        assert_allclose(pair75.p0, [0.75, 0.25])
        assert_allclose(pair75.p1, [0.25, 0.75])
        assert pair75.prob0(0) == 0.75
        assert pair75.prob1(0) == 0.25

    def test_mass_must_sum_to_one(self):
        with pytest.raises(InputError):
            DistributionPair(BINARY, np.array([0.7, 0.2]), np.array([0.5, 0.5]))

    def test_negative_mass_rejected(self):
        with pytest.raises(InputError):
            DistributionPair(BINARY, np.array([1.2, -0.2]), np.array([0.5, 0.5]))

    def test_one_sided_zero_rejected(self):
        with pytest.raises(EquivalenceViolation):
            DistributionPair(BINARY, np.array([1.0, 0.0]), np.array([0.5, 0.5]))

    def test_both_sided_zero_allowed(self):
        abc = Alphabet((0, 1, 2))
        pair = DistributionPair.from_mapping(
            abc, {0: 0.75, 1: 0.25}, {0: 0.25, 1: 0.75}
        )
        assert_allclose(pair.support, [True, True, False])

    def test_json_round_trip(self, pair75):
        again = DistributionPair.from_json(pair75.to_json())
        assert again.alphabet == pair75.alphabet
        assert_allclose(again.p0, pair75.p0)
        assert_allclose(again.p1, pair75.p1)

    def test_from_json_rejects_garbage(self):
        with pytest.raises(InputError):
            DistributionPair.from_json("{not json")


class TestDivergences:
    def test_bern75_is_symmetric(self, pair75):
        d01 = kl_divergence(pair75, Direction.ZERO_ONE)
        d10 = kl_divergence(pair75, Direction.ONE_ZERO)
        assert_allclose(d01, 0.5 * LOG3, rtol=1e-14)
        assert_allclose(d10, 0.5 * LOG3, rtol=1e-14)

    def test_asymmetric_pair(self):
        pair = DistributionPair.from_mapping(
            BINARY, {0: 0.9, 1: 0.1}, {0: 0.5, 1: 0.5}
        )
        assert_allclose(
            kl_divergence(pair, Direction.ZERO_ONE), 0.36806420716849714, rtol=1e-13
        )
        assert_allclose(
            kl_divergence(pair, Direction.ONE_ZERO), 0.5108256237659905, rtol=1e-13
        )

    def test_product_pair_adds_divergence(self, pair75):
        double = product_pair(pair75, 2)
        assert len(double.alphabet) == 4
        assert_allclose(
            kl_divergence(double, Direction.ZERO_ONE),
            2.0 * kl_divergence(pair75, Direction.ZERO_ONE),
            rtol=1e-13,
        )

    def test_llr_values(self, pair75):
        assert_allclose(log_likelihood_ratio(pair75, 0), -LOG3, rtol=1e-14)
        assert_allclose(log_likelihood_ratio(pair75, 1), LOG3, rtol=1e-14)

    def test_llr_array_marks_dead_symbols(self):
        abc = Alphabet((0, 1, 2))
        pair = DistributionPair.from_mapping(
            abc, {0: 0.75, 1: 0.25}, {0: 0.25, 1: 0.75}
        )
        arr = llr_array(pair)
        assert_allclose(arr[:2], [-LOG3, LOG3], rtol=1e-14)
        assert math.isnan(arr[2])

    def test_second_moment(self, pair75):
        assert_allclose(second_moment_null(pair75), LOG3 * LOG3, rtol=1e-14)


class TestValidateAssumptions:
    def test_informative_family(self, pair75, leaf_family):
        report = validate_assumptions(pair75, leaf_family.leaf)
        assert report.equivalent
        assert report.informative_exists
        assert report.informative_quantizer is not None
        assert_allclose(report.second_moment, LOG3 * LOG3, rtol=1e-14)
        assert_allclose(report.chebyshev_constant, LOG3 * LOG3 + 2.0, rtol=1e-14)

    def test_uninformative_family(self, pair75, leaf_family):
        constants = [g for g in leaf_family.leaf if len({g(s) for s in BINARY}) == 1]
        assert len(constants) == 2
        report = validate_assumptions(pair75, constants)
        assert not report.informative_exists
        assert report.informative_quantizer is None
