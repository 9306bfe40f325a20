"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line for its criterion and pins its own
tolerances and wall-clock budget.  The criteria exercise the package
through its public API only; anything numeric is checked against an
independently derived closed form or a frozen oracle value.
"""

import math
import time

import numpy as np

from conftest import build_regular_tree, build_rugged_tree, build_uniform_tree
from treedet import (
    Alphabet,
    DistributionPair,
    TreeFamily,
    all_binary_leaf_family,
    analyze_tree,
    and_gate,
    bernoulli_pair,
    build_relay_strategy,
    chebyshev_variance_check,
    chernoff_bound_report,
    empirical_exponent,
    enumerate_quantizers,
    estimate_z,
    exact_error_probs,
    feasible_threshold_interval,
    fenchel_legendre,
    forward_first_gate,
    fused_pair,
    fusion_loss_constant,
    identity_map,
    kl_divergence,
    log_mgf,
    monte_carlo_error,
    np_calibrate_root,
    or_gate,
    rate_table,
    recipe_threshold,
    simple_strategy,
    tail_report,
    uniformize,
)
from treedet.channels import induced_pair
from treedet.hypotheses import BINARY, Direction

PAIR = bernoulli_pair(0.75)
IDENT = identity_map(BINARY)
FAMILY = all_binary_leaf_family(BINARY)
LOG3 = math.log(3.0)

G_STAR = -0.5493061443340548

# closed-form per-leaf rates for two observations fused through a gate
FORWARD_RATE = -LOG3 / 4.0
OR_RATE = -(0.5625 * math.log(9.0) + 0.4375 * math.log(7.0 / 15.0)) / 2.0
AND_RATE = -(0.9375 * math.log(15.0 / 7.0) + 0.0625 * math.log(1.0 / 9.0)) / 2.0


def _verdict(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_star_family_reaches_parallel_exponent():
    t0 = time.perf_counter()
    fit = empirical_exponent(
        TreeFamily("parallel"),
        PAIR,
        (251, 501, 1001, 2001),
        lambda tree: simple_strategy(tree, PAIR, FAMILY, 0.02).strategy,
        alpha=0.25,
    )
    elapsed = time.perf_counter() - t0
    final = fit.per_leaf[-1]
    detail = (
        f"per-leaf at 2000 leaves {final:.5f} vs {G_STAR:.5f}, "
        f"r2 {fit.r_squared:.6f}, {elapsed:.2f}s"
    )
    ok = (
        fit.leaf_counts == (250, 500, 1000, 2000)
        and abs(final - G_STAR) <= 0.05
        and fit.r_squared >= 0.999
        and elapsed < 1.0
    )
    _verdict(1, ok, detail)


def _random_pair(rng):
    k = int(rng.integers(2, 6))
    p0 = rng.dirichlet(np.ones(k)) + 0.05
    p1 = rng.dirichlet(np.ones(k)) + 0.05
    return DistributionPair(Alphabet(tuple(range(k))), p0 / p0.sum(), p1 / p1.sum())


def test_criterion_02_rate_recursion_self_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_identity = 0.0
    worst_numeric = 0.0
    n_done = 0
    while n_done < 200:
        pair = _random_pair(rng)
        maps = []
        for g in all_binary_leaf_family(pair.alphabet).leaf:
            lo, hi = feasible_threshold_interval(pair, g)
            if lo < -1e-3 and hi > 1e-3:
                maps.append(g)
        if not maps:
            continue
        gamma = maps[int(rng.integers(0, len(maps)))]
        h = int(rng.integers(1, 5))
        message = induced_pair(pair, gamma)
        # draw each level inside the running feasible interval, tracking the
        # rates locally so the library table is built once per config
        lo, hi = feasible_threshold_interval(pair, gamma)
        ts = [float(lo + (hi - lo) * rng.uniform(0.1, 0.9))]
        r1, _ = fenchel_legendre(
            lambda lam: log_mgf(message, 1, lam), ts[0], (-1.0, 0.0)
        )
        r0, _ = fenchel_legendre(
            lambda lam: log_mgf(message, 0, lam), ts[0], (0.0, 1.0)
        )
        for _level in range(1, h):
            t = float(-r1 + (r0 + r1) * rng.uniform(0.1, 0.9))
            ts.append(t)
            r0, r1 = (
                r0 * (r1 + t) / (r0 + r1),
                r1 * (r0 - t) / (r0 + r1),
            )
        table = rate_table(pair, gamma, ts)
        n_done += 1
        for k in range(1, h + 1):
            gap = abs(table.level1(k) - (table.level0(k) - ts[k - 1]))
            worst_identity = max(worst_identity, gap)
        # re-derive every level numerically from the envelope conjugates
        check1, _ = fenchel_legendre(
            lambda lam: log_mgf(message, 1, lam), ts[0], (-1.0, 0.0)
        )
        check0, _ = fenchel_legendre(
            lambda lam: log_mgf(message, 0, lam), ts[0], (0.0, 1.0)
        )
        worst_numeric = max(
            worst_numeric,
            abs(check1 - table.level1(1)),
            abs(check0 - table.level0(1)),
        )
        for k in range(2, h + 1):
            r0, r1 = table.level0(k - 1), table.level1(k - 1)

            def envelope(j):
                return lambda lam: max(-r1 * (j + lam), r0 * (j - 1 + lam))

            check1, _ = fenchel_legendre(envelope(1), ts[k - 1], (-1.0, 0.0))
            check0, _ = fenchel_legendre(envelope(0), ts[k - 1], (0.0, 1.0))
            worst_numeric = max(
                worst_numeric,
                abs(check1 - table.level1(k)),
                abs(check0 - table.level0(k)),
            )
    elapsed = time.perf_counter() - t0
    detail = (
        f"200 random pairs, conjugate identity gap {worst_identity:.2e}, "
        f"numeric gap {worst_numeric:.2e}, {elapsed:.2f}s"
    )
    ok = worst_identity <= 1e-10 and worst_numeric <= 1e-8 and elapsed < 10.0
    _verdict(2, ok, detail)


def test_criterion_03_exact_tails_respect_chernoff_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = math.inf
    n_root_rows = 0
    for i in range(50):
        h = int(rng.integers(1, 4))
        # alternate wide level-regular trees with narrow degree-heterogeneous
        # ones; wide heterogeneous fringes have exponentially many exact atoms
        if i % 2 == 0:
            tree = build_regular_tree(rng, h, 10**4)
        else:
            tree = build_uniform_tree(rng, h, lo=2, hi=7)
        assert int(tree.subtree_leaf_count[tree.root]) <= 10**4
        eps = float(rng.uniform(0.05, 0.4))
        t = recipe_threshold(PAIR, IDENT, eps)
        table = rate_table(PAIR, IDENT, (t,) * h)
        strat = build_relay_strategy(tree, IDENT, (t,) * h, pair=PAIR)
        n_floor = int(tree.subtree_leaf_count[tree.fringe].min())
        report = chernoff_bound_report(tree, table, n_floor)
        tails = {r.node: r for r in tail_report(strat, PAIR)}
        for row in report.rows:
            actual = (
                tails[row.node].log_miss_per_leaf
                if row.kind.endswith("type1")
                else tails[row.node].log_fa_per_leaf
            )
            worst = min(worst, row.value - actual)
            if row.kind.startswith("root_"):
                n_root_rows += 1
    elapsed = time.perf_counter() - t0
    detail = f"50 trees, min bound slack {worst:.3e}, {n_root_rows} root rows, {elapsed:.2f}s"
    ok = worst >= -1e-9 and n_root_rows == 100 and elapsed < 60.0
    _verdict(3, ok, detail)


def test_criterion_04_two_relay_slope_matches_parallel_exponent():
    t0 = time.perf_counter()
    fit = empirical_exponent(
        TreeFamily("two_relay"),
        PAIR,
        (15000, 30000, 60000, 120000),
        lambda tree: simple_strategy(tree, PAIR, FAMILY, 0.02).strategy,
        alpha=0.25,
    )
    elapsed = time.perf_counter() - t0
    detail = f"slope {fit.slope:.5f} vs {G_STAR:.5f}, r2 {fit.r_squared:.6f}, {elapsed:.2f}s"
    ok = abs(fit.slope - G_STAR) <= 0.05 and elapsed < 5.0
    _verdict(4, ok, detail)


def test_criterion_05_gate_rates_match_closed_forms():
    t0 = time.perf_counter()
    gates = {
        "forward": (forward_first_gate(), FORWARD_RATE),
        "or": (or_gate(), OR_RATE),
        "and": (and_gate(), AND_RATE),
    }
    gaps = {}
    above = True
    for name, (gate, closed) in gates.items():
        fused = fused_pair(PAIR, (IDENT, IDENT), gate)
        rate = -kl_divergence(fused, Direction.ZERO_ONE) / 2.0
        gaps[name] = abs(rate - closed)
        above = above and rate > G_STAR
    fit = empirical_exponent(
        TreeFamily("wide_uniform", {"m": 2}),
        PAIR,
        (50, 100, 200, 400),
        lambda tree: build_relay_strategy(
            tree, IDENT, (0.0, 0.0), level1_gate=or_gate()
        ),
        alpha=0.25,
    )
    elapsed = time.perf_counter() - t0
    max_gap = max(gaps.values())
    detail = (
        f"closed-form gap {max_gap:.2e}, all above star exponent {above}, "
        f"or-gate slope {fit.slope:.5f} vs {OR_RATE:.5f}, {elapsed:.2f}s"
    )
    ok = (
        max_gap <= 1e-6
        and above
        and abs(fit.slope - OR_RATE) <= 0.05
        and elapsed < 5.0
    )
    _verdict(5, ok, detail)


def test_criterion_06_increasing_leaves_family():
    t0 = time.perf_counter()
    growth = estimate_z(TreeFamily("increasing_leaves"), (25, 50, 100, 200), (2, 5, 10))
    vanish = all(
        all(b < a for a, b in zip(curve, curve[1:])) and curve[-1] < 0.02
        for curve in (growth.small_fraction_curves[c] for c in (2, 5, 10))
    )
    fit = empirical_exponent(
        TreeFamily("increasing_leaves"),
        PAIR,
        (15, 17, 19, 21, 23),
        lambda tree: simple_strategy(tree, PAIR, FAMILY, 0.4).strategy,
        alpha=0.25,
    )
    elapsed = time.perf_counter() - t0
    slope_ok = abs(fit.slope - G_STAR) <= 0.05
    detail = (
        f"q_10 final {growth.small_fraction_curves[10][-1]:.4f}, "
        f"slope {fit.slope:.5f} vs {G_STAR:.5f}, {elapsed:.2f}s"
    )
    ok = vanish and slope_ok and elapsed < 10.0
    _verdict(6, ok, detail)


def test_criterion_07_all_zeros_rule_is_inadmissible():
    t0 = time.perf_counter()
    relays = 10**5
    m = 20
    # every node forwards 1 unless all inputs are 0: under the null each
    # leaf bit is 1 w.p. 0.25, so log P0(declare 0) = N*m*log(0.75)
    naive_type_i = -math.expm1(relays * m * math.log(0.75))
    res = simple_strategy(
        TreeFamily("wide_uniform", {"m": m}).generate(relays), PAIR, FAMILY, 0.02
    )
    calibrated = np_calibrate_root(res.strategy, PAIR, 0.25)
    exact = exact_error_probs(calibrated, PAIR)
    elapsed = time.perf_counter() - t0
    detail = (
        f"naive type I {naive_type_i:.6f} at 1e5 relays vs calibrated "
        f"{exact.type_i:.5f}, {elapsed:.2f}s"
    )
    ok = naive_type_i > 0.25 and exact.type_i <= 0.25 and elapsed < 5.0
    _verdict(7, ok, detail)


def test_criterion_08_uniformize_contract():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    caps = (2, 5, 10)
    ok = True
    checked = 0
    for _ in range(100):
        tree = build_rugged_tree(rng, int(rng.integers(2, 5)))
        res = uniformize(tree)
        u = res.tree
        h = tree.height
        ok = ok and u.is_uniform
        ok = ok and int(u.subtree_leaf_count[u.root]) == int(
            tree.subtree_leaf_count[tree.root]
        )
        relays_before = int(np.sum(~tree.is_leaf))
        relays_after = int(np.sum(~u.is_leaf))
        ok = ok and relays_after <= h * relays_before
        for n_cap in caps:
            q_after = analyze_tree(u, n_cap).small_leaf_fraction
            for m_cap in caps:
                q_before = analyze_tree(tree, m_cap).small_leaf_fraction
                bound = h * (n_cap * q_before + n_cap / m_cap)
                ok = ok and q_after <= bound + 1e-12
                checked += 1
    elapsed = time.perf_counter() - t0
    detail = f"100 trees, {checked} fraction bounds, {elapsed:.2f}s"
    ok = ok and elapsed < 5.0
    _verdict(8, ok, detail)


def test_criterion_09_pairwise_fusion_loses_exponent():
    t0 = time.perf_counter()
    gates = enumerate_quantizers((BINARY, BINARY), BINARY)
    rep = fusion_loss_constant(PAIR, FAMILY, gates, 2)
    elapsed = time.perf_counter() - t0
    gap = abs(rep.constant - OR_RATE)
    detail = (
        f"K2 {rep.constant:.9f} vs closed form {OR_RATE:.9f} "
        f"(gap {gap:.2e}), dominated {rep.dominated}, {elapsed:.2f}s"
    )
    ok = gap <= 1e-9 and rep.constant > G_STAR and rep.dominated and elapsed < 1.0
    _verdict(9, ok, detail)


def test_criterion_10_root_concentration_bound():
    t0 = time.perf_counter()
    a_const = LOG3 * LOG3 + 2.0
    prev = math.inf
    ok = True
    details = []
    for relays in (50, 100, 200):
        tree = TreeFamily("wide_uniform", {"m": 2}).generate(relays)
        strat = build_relay_strategy(tree, IDENT, (0.0, 0.0), pair=PAIR)
        rep = chebyshev_variance_check(strat, PAIR, small_cap=2, eta=0.3)
        l_f = 2 * relays
        expected_bound = a_const * 3.0 / (0.09 * l_f)
        ok = (
            ok
            and rep.holds
            and abs(rep.bound - expected_bound) <= 1e-12
            and rep.exceed_probability < prev
        )
        prev = rep.exceed_probability
        details.append(f"l={l_f}: {rep.exceed_probability:.2e}<={rep.bound:.3f}")
    elapsed = time.perf_counter() - t0
    detail = "; ".join(details) + f", {elapsed:.2f}s"
    ok = ok and elapsed < 5.0
    _verdict(10, ok, detail)


def _random_config(rng, idx):
    kind = idx % 5
    if kind == 0:
        tree = TreeFamily("parallel").generate(int(rng.integers(3, 40)))
    elif kind == 1:
        tree = TreeFamily("two_relay").generate(int(rng.integers(2, 25)))
    elif kind == 2:
        tree = TreeFamily("wide_uniform", {"m": int(rng.integers(2, 5))}).generate(
            int(rng.integers(2, 40))
        )
    elif kind == 3:
        tree = TreeFamily("increasing_leaves").generate(int(rng.integers(2, 13)))
    else:
        tree = build_uniform_tree(rng, int(rng.integers(1, 4)), lo=2, hi=5)
    h = tree.height
    gate = None
    if kind == 2 and int(tree.n_children[tree.fringe[0]]) == 2 and rng.random() < 0.5:
        gate = or_gate() if rng.random() < 0.5 else and_gate()
    if gate is not None:
        strat = build_relay_strategy(tree, IDENT, (0.0,) * h, level1_gate=gate)
    else:
        t = recipe_threshold(PAIR, IDENT, float(rng.uniform(0.1, 0.5)))
        strat = build_relay_strategy(tree, IDENT, (t,) * h)
    alpha = float(rng.choice((0.1, 0.25, 0.4)))
    return np_calibrate_root(strat, PAIR, alpha)


def test_criterion_11_monte_carlo_agrees_with_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    trials = 10**5
    agree = 0
    repeats = []
    for idx in range(50):
        strat = _random_config(rng, idx)
        exact = exact_error_probs(strat, PAIR)
        mc = monte_carlo_error(strat, PAIR, trials=trials, seed=idx)
        good = True
        for p, q in ((exact.type_i, mc.type_i), (exact.type_ii, mc.type_ii)):
            se = math.sqrt(p * (1.0 - p) / trials)
            good = good and abs(p - q) <= 4.0 * se
        agree += int(good)
        if idx < 5:
            repeats.append((strat, mc))
    identical = True
    for seed, (strat, mc) in enumerate(repeats):
        again = monte_carlo_error(strat, PAIR, trials=trials, seed=seed)
        identical = identical and (again.type_i, again.type_ii) == (
            mc.type_i,
            mc.type_ii,
        )
    elapsed = time.perf_counter() - t0
    detail = f"{agree}/50 within 4 se, reruns identical {identical}, {elapsed:.2f}s"
    ok = agree >= 48 and identical and elapsed < 60.0
    _verdict(11, ok, detail)
