"""Binary hypothesis pairs on finite alphabets.

Observations live on finite discrete alphabets so every divergence, moment
generating function, and error probability downstream is an exact finite sum.
Probability vectors are validated at construction (never silently repaired)
and instances are immutable afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import EquivalenceViolation, InputError, UnknownSymbol

Symbol = int | str

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of distinct symbol identifiers."""

    symbols: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise InputError("alphabet must be non-empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError("alphabet symbols must be distinct")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.symbols

    def index(self, symbol: Symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise UnknownSymbol(f"symbol {symbol!r} not in alphabet") from None


BINARY = Alphabet((0, 1))


class Direction(Enum):
    """Orientation of a divergence between the two hypotheses."""

    ZERO_ONE = "zero-one"  # divergence of the null law from the alternative
    ONE_ZERO = "one-zero"  # divergence of the alternative law from the null


def _as_prob_array(values, size: int, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (size,):
        raise InputError(f"{label} must have one probability per symbol")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InputError(f"{label} entries must lie in [0, 1]")
    if abs(float(arr.sum()) - 1.0) > PROB_SUM_TOL:
        raise InputError(f"{label} must sum to 1 within {PROB_SUM_TOL}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DistributionPair:
    """A null/alternative pair of pmfs over a shared finite alphabet.

    The two laws must be equivalent: a symbol has positive probability under
    one hypothesis iff it does under the other.  Symbols that are dead under
    both hypotheses are tolerated (push-forwards drop them explicitly).
    """

    alphabet: Alphabet
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.alphabet)
        object.__setattr__(self, "p0", _as_prob_array(self.p0, n, "p0"))
        object.__setattr__(self, "p1", _as_prob_array(self.p1, n, "p1"))
        one_sided = (self.p0 > 0.0) != (self.p1 > 0.0)
        if np.any(one_sided):
            bad = [s for s, m in zip(self.alphabet, one_sided) if m]
            raise EquivalenceViolation(
                f"symbols {bad!r} have positive probability under exactly one hypothesis"
            )

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_mapping(
        cls,
        alphabet: Alphabet,
        p0: Mapping[Symbol, float],
        p1: Mapping[Symbol, float],
    ) -> "DistributionPair":
        return cls(
            alphabet,
            np.array([p0.get(s, 0.0) for s in alphabet]),
            np.array([p1.get(s, 0.0) for s in alphabet]),
        )

    @classmethod
    def from_json(cls, text: str) -> "DistributionPair":
        try:
            doc = json.loads(text)
            alphabet = Alphabet(tuple(doc["alphabet"]))
            return cls(alphabet, np.asarray(doc["p0"]), np.asarray(doc["p1"]))
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed pair document: {exc}") from None
        except (KeyError, TypeError) as exc:
            raise InputError(f"pair document missing field {exc}") from None

    def to_json(self) -> str:
        return json.dumps(
            {
                "alphabet": list(self.alphabet),
                "p0": self.p0.tolist(),
                "p1": self.p1.tolist(),
            },
            sort_keys=True,
        )

    # -- lookups -----------------------------------------------------------

    def prob0(self, symbol: Symbol) -> float:
        return float(self.p0[self.alphabet.index(symbol)])

    def prob1(self, symbol: Symbol) -> float:
        return float(self.p1[self.alphabet.index(symbol)])

    @property
    def support(self) -> np.ndarray:
        """Mask of symbols alive under both hypotheses."""
        return self.p0 > 0.0

    def __len__(self) -> int:
        return len(self.alphabet)


def bernoulli_pair(p: float) -> DistributionPair:
    """Pair on {0, 1}: the alternative puts mass ``p`` on 1, the null ``1 - p``."""
    if not 0.0 < p < 1.0:
        raise InputError("p must lie strictly inside (0, 1)")
    return DistributionPair(BINARY, np.array([p, 1.0 - p]), np.array([1.0 - p, p]))


def product_pair(pair: DistributionPair, k: int) -> DistributionPair:
    """Pair of i.i.d. ``k``-tuples; symbols become tuples of base symbols."""
    if k < 1:
        raise InputError("k must be >= 1")
    symbols: list[Symbol] = list(pair.alphabet)
    tuples = [(s,) for s in symbols]
    q0 = pair.p0.copy()
    q1 = pair.p1.copy()
    for _ in range(k - 1):
        tuples = [t + (s,) for t in tuples for s in symbols]
        q0 = np.outer(q0, pair.p0).ravel()
        q1 = np.outer(q1, pair.p1).ravel()
    return DistributionPair(Alphabet(tuple(tuples)), q0, q1)


def kl_divergence(pair: DistributionPair, direction: Direction) -> float:
    """Kullback-Leibler divergence between the two laws, in nats.

    Symbols dead under both hypotheses contribute zero.  Equivalence rules
    out one-sided zeros, so the sum is always finite.
    """
    if direction is Direction.ZERO_ONE:
        p, q = pair.p0, pair.p1
    else:
        p, q = pair.p1, pair.p0
    mask = p > 0.0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def log_likelihood_ratio(pair: DistributionPair, symbol: Symbol) -> float:
    """log of alternative-to-null probability at ``symbol``."""
    i = pair.alphabet.index(symbol)
    p0 = float(pair.p0[i])
    p1 = float(pair.p1[i])
    if p0 == 0.0:
        raise EquivalenceViolation(
            f"symbol {symbol!r} has zero probability under both hypotheses"
        )
    return math.log(p1) - math.log(p0)


def llr_array(pair: DistributionPair) -> np.ndarray:
    """Vector of log-likelihood ratios over the full alphabet.

    Dead symbols get NaN; callers sampling from the pair can never hit them.
    """
    out = np.full(len(pair.alphabet), np.nan)
    mask = pair.support
    out[mask] = np.log(pair.p1[mask]) - np.log(pair.p0[mask])
    out.flags.writeable = False
    return out


def second_moment_null(pair: DistributionPair) -> float:
    """Second moment of the log-likelihood ratio under the null law."""
    mask = pair.support
    llr = np.log(pair.p1[mask]) - np.log(pair.p0[mask])
    return float(np.sum(pair.p0[mask] * llr * llr))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the standing-assumption checks for a pair and leaf family."""

    equivalent: bool
    informative_exists: bool
    informative_quantizer: object | None
    second_moment: float
    chebyshev_constant: float


def validate_assumptions(pair: DistributionPair, leaf_family) -> ValidationReport:
    """Check the standing assumptions used by the asymptotic results.

    Reports whether the pair is equivalent (always true for a constructed
    pair), whether some leaf quantizer in ``leaf_family`` separates the
    hypotheses with strictly positive divergence both ways, the null second
    moment of the raw log-likelihood ratio, and the variance-bound constant
    (second moment plus two) used by the root concentration check.
    """
    from .channels import induced_pair  # deferred: channels imports this module

    informative = None
    for gamma in leaf_family:
        quantized = induced_pair(pair, gamma)
        d0 = kl_divergence(quantized, Direction.ZERO_ONE)
        d1 = kl_divergence(quantized, Direction.ONE_ZERO)
        if d0 > 0.0 and d1 > 0.0:
            informative = gamma
            break
    moment = second_moment_null(pair)
    return ValidationReport(
        equivalent=True,
        informative_exists=informative is not None,
        informative_quantizer=informative,
        second_moment=moment,
        chebyshev_constant=moment + 2.0,
    )
