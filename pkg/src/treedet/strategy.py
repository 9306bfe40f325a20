"""Complete detection strategies on height-uniform trees.

A strategy fixes one arity-0 map for every leaf, a one-bit threshold rule
per relay level, and the root's decision threshold.  Fringe nodes may
instead apply a fixed gate to their incoming bits, which is how bounded
fan-in fusion rules are compared against threshold rules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .channels import TransmissionFunction, parallel_exponent
from .errors import (
    EpsilonTooLarge,
    InvalidParams,
    NotUniform,
    Unachievable,
)
from .hypotheses import DistributionPair
from .rates import rate_table, recipe_threshold
from .topology import Tree, uniformize


@dataclass(frozen=True)
class Strategy:
    """Leaf map, per-level thresholds, and the root decision rule.

    ``thresholds[k-1]`` drives level-k nodes; the root (level h) compares its
    normalized incoming sum against ``root_threshold`` instead, declaring the
    alternative on values strictly above it.  When ``level1_gate`` is set,
    fringe nodes apply that gate to their incoming bits and
    ``thresholds[0]`` is ignored.
    """

    tree: Tree
    gamma: TransmissionFunction
    thresholds: tuple[float, ...]
    root_threshold: float
    level1_gate: TransmissionFunction | None = None

    def __post_init__(self) -> None:
        if self.gamma.arity != 0:
            raise InvalidParams("leaf map must have arity 0")
        if not self.tree.is_uniform:
            raise NotUniform("strategies are defined on height-uniform trees")
        h = self.tree.height
        if h < 1:
            raise InvalidParams("tree must have at least one level")
        if len(self.thresholds) != h:
            raise InvalidParams(
                f"need {h} thresholds for a height-{h} tree, got {len(self.thresholds)}"
            )
        gate = self.level1_gate
        if gate is not None:
            if h < 2:
                raise InvalidParams("a fringe gate needs height at least 2")
            degrees = self.tree.n_children[self.tree.fringe]
            if np.any(degrees != gate.arity):
                raise InvalidParams(
                    f"gate arity {gate.arity} does not match every fringe degree"
                )
            out = self.gamma.output_alphabet.symbols
            if any(a.symbols != out for a in gate.input_alphabets):
                raise InvalidParams("gate inputs must match the leaf message alphabet")

    @property
    def is_relay_strategy(self) -> bool:
        """No internal node reads an observation of its own."""
        return True

    def threshold_at_level(self, k: int) -> float:
        return self.thresholds[k - 1]

    def to_json(self) -> str:
        doc = {
            "gamma": json.loads(self.gamma.to_json()),
            "thresholds": list(self.thresholds),
            "root_threshold": self.root_threshold,
        }
        if self.level1_gate is not None:
            doc["level1_gate"] = json.loads(self.level1_gate.to_json())
        return json.dumps(doc, sort_keys=True)


def build_relay_strategy(
    tree: Tree,
    gamma: TransmissionFunction,
    thresholds: Sequence[float],
    *,
    pair: DistributionPair | None = None,
    level1_gate: TransmissionFunction | None = None,
) -> Strategy:
    """Assembles the uniform-threshold relay strategy on an h-uniform tree.

    Passing ``pair`` validates threshold feasibility level by level through
    the rate recursion (skipped for gate strategies, where the first level is
    not a threshold rule).
    """
    if not tree.is_uniform:
        raise NotUniform("uniformize the tree before building a strategy")
    ts = tuple(float(t) for t in thresholds)
    if pair is not None and level1_gate is None:
        rate_table(pair, gamma, ts)
    return Strategy(
        tree=tree,
        gamma=gamma,
        thresholds=ts,
        root_threshold=ts[-1],
        level1_gate=level1_gate,
    )


@dataclass(frozen=True)
class SimpleStrategyResult:
    strategy: Strategy
    gamma: TransmissionFunction
    threshold: float
    node_map: dict[int, int] = field(repr=False)
    parallel_exponent: float


def simple_strategy(
    tree: Tree,
    pair: DistributionPair,
    leaf_family: Sequence[TransmissionFunction],
    epsilon: float,
) -> SimpleStrategyResult:
    """One leaf map everywhere, one threshold everywhere.

    The leaf map maximizes the null-to-alternative divergence over the
    family; every level then thresholds at that divergence's negation plus
    half of ``epsilon``, a choice that stays feasible at every level and
    concedes at most ``epsilon`` of exponent.  Non-uniform input trees are
    uniformized first, so the returned strategy may live on a larger tree
    (the node map identifies the original ids).
    """
    if epsilon <= 0.0:
        raise InvalidParams("epsilon must be positive")
    g_p, best = parallel_exponent(pair, leaf_family)
    if epsilon >= -g_p:
        raise EpsilonTooLarge(
            f"epsilon {epsilon:.6g} is not below the exponent magnitude {-g_p:.6g}"
        )
    t = recipe_threshold(pair, best, epsilon)
    uni = uniformize(tree)
    strat = build_relay_strategy(
        uni.tree, best, (t,) * uni.tree.height, pair=pair
    )
    return SimpleStrategyResult(
        strategy=strat,
        gamma=best,
        threshold=t,
        node_map=uni.node_map,
        parallel_exponent=g_p,
    )


RootLawFn = Callable[["Strategy", DistributionPair], tuple[np.ndarray, np.ndarray, np.ndarray]]


def np_calibrate_root(
    strategy: Strategy,
    pair: DistributionPair,
    alpha: float,
    evaluator: RootLawFn | None = None,
) -> Strategy:
    """Smallest root threshold whose exact false-alarm rate is within alpha.

    Candidate thresholds are the achievable atoms of the root's normalized
    incoming sum, so the result is the most powerful root-threshold variant
    of the given strategy among deterministic tests.  ``evaluator`` maps
    (strategy, pair) to (raw-sum atoms, log null masses, log alt masses) and
    defaults to the exact law computed by the evaluation module.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParams("alpha must lie in (0, 1)")
    if evaluator is None:
        from .evaluate import root_sum_law

        evaluator = root_sum_law
    values, logp0, _ = evaluator(strategy, pair)
    if values.size == 0:
        raise Unachievable("root sum law has no atoms")
    l_f = int(strategy.tree.subtree_leaf_count[strategy.tree.root])
    # log of the null mass strictly above each atom
    above = np.full(values.size, -np.inf)
    if values.size > 1:
        above[:-1] = np.logaddexp.accumulate(logp0[::-1])[::-1][1:]
    for i, s in enumerate(values):
        if np.exp(above[i]) <= alpha:
            return replace(strategy, root_threshold=float(s) / l_f)
    raise Unachievable("no admissible root threshold found")
