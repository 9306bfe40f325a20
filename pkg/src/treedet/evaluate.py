"""Exact and Monte Carlo error evaluation of strategies on uniform trees.

Exact evaluation propagates the discrete law of each node's outgoing
message bottom-up, in the log domain throughout: tail masses reach e^-1000
scales on wide trees, far below what linear doubles can hold.  Sums of
identical child laws use closed binomial forms; distinct laws are combined
by pairwise convolution with atom merging.  Laws are computed once per
structurally distinct subtree, so trees with millions of isomorphic
branches cost no more than their distinct shapes.

Monte Carlo draws leaf messages from counter-based substreams and reuses
the exact laws for every deterministic step, snapping simulated sums onto
the exact atom grid so threshold comparisons at calibrated atoms cannot
flip on rounding noise.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .channels import _pushforward, fused_pair, induced_pair
from .errors import InvalidParams, StateSpaceTooLarge
from .hypotheses import DistributionPair
from .strategy import Strategy, np_calibrate_root
from .topology import Tree, TreeFamily

STATE_SPACE_CAP = 10**7

_MERGE_ATOL = 1e-12
_MERGE_RTOL = 1e-12
_MASS_TOL = 1e-7
_SNAP_RTOL = 1e-9
_MC_BLOCK_FLOATS = 1 << 22


def _merged(
    values: np.ndarray, logp0: np.ndarray, logp1: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(values, kind="stable")
    v = values[order]
    a = logp0[order]
    b = logp1[order]
    if v.size <= 1:
        return v, a, b
    gaps = np.diff(v)
    new_group = gaps > (_MERGE_ATOL + _MERGE_RTOL * np.abs(v[1:]))
    starts = np.flatnonzero(np.concatenate(([True], new_group)))
    if starts.size == v.size:
        return v, a, b
    return (
        v[starts],
        np.logaddexp.reduceat(a, starts),
        np.logaddexp.reduceat(b, starts),
    )


@dataclass(frozen=True, eq=False)
class MessageLaw:
    """Discrete law of a log-likelihood statistic under both hypotheses.

    Atoms are sorted and deduplicated; masses are stored as logs and must
    each total one.  Long convolution chains accumulate rounding in the
    gamma-function mass terms, hence the loose constructor tolerance; unit
    tests pin 1e-12 on short chains.
    """

    values: np.ndarray
    logp0: np.ndarray
    logp1: np.ndarray

    def __post_init__(self) -> None:
        for name in ("values", "logp0", "logp1"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.values.size == self.logp0.size == self.logp1.size):
            raise InvalidParams("law arrays must share a length")
        if self.values.size == 0:
            raise InvalidParams("law must have at least one atom")
        if np.any(np.diff(self.values) <= 0):
            raise InvalidParams("law atoms must be strictly increasing")
        for logs in (self.logp0, self.logp1):
            total = float(logsumexp(logs))
            if abs(math.expm1(total)) > _MASS_TOL:
                raise InvalidParams(f"law mass {math.exp(total)} is not 1")

    @property
    def n_atoms(self) -> int:
        return int(self.values.size)

    @property
    def p0(self) -> np.ndarray:
        return np.exp(self.logp0)

    @property
    def p1(self) -> np.ndarray:
        return np.exp(self.logp1)


def law_from_pair(pair: DistributionPair) -> MessageLaw:
    """Law of the log-likelihood ratio of one observation of ``pair``."""
    support = pair.p0 > 0.0
    logp0 = np.log(pair.p0[support])
    logp1 = np.log(pair.p1[support])
    return MessageLaw(*_merged(logp1 - logp0, logp0, logp1))


def _conv(a: MessageLaw, b: MessageLaw) -> MessageLaw:
    if a.n_atoms * b.n_atoms > STATE_SPACE_CAP:
        raise StateSpaceTooLarge(
            f"convolution would create {a.n_atoms * b.n_atoms} atoms"
        )
    values = np.add.outer(a.values, b.values).ravel()
    logp0 = np.add.outer(a.logp0, b.logp0).ravel()
    logp1 = np.add.outer(a.logp1, b.logp1).ravel()
    return MessageLaw(*_merged(values, logp0, logp1))


def _binomial_power(law: MessageLaw, m: int) -> MessageLaw:
    # m-fold sum of a two-atom law: closed form, m+1 atoms
    if m + 1 > STATE_SPACE_CAP:
        raise StateSpaceTooLarge(f"{m + 1} atoms exceed the cap")
    k = np.arange(m + 1, dtype=float)
    log_comb = gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0)
    v0, v1 = law.values
    values = (m - k) * v0 + k * v1
    logp0 = log_comb + (m - k) * law.logp0[0] + k * law.logp0[1]
    logp1 = log_comb + (m - k) * law.logp1[0] + k * law.logp1[1]
    return MessageLaw(*_merged(values, logp0, logp1))


def _conv_power(law: MessageLaw, m: int) -> MessageLaw:
    if m < 1:
        raise InvalidParams("need at least one copy")
    if m == 1:
        return law
    if law.n_atoms == 1:
        return MessageLaw(law.values * m, law.logp0 * m, law.logp1 * m)
    if law.n_atoms == 2:
        return _binomial_power(law, m)
    # square-and-multiply keeps the chain logarithmic in m
    result: MessageLaw | None = None
    base = law
    remaining = m
    while remaining:
        if remaining & 1:
            result = base if result is None else _conv(result, base)
        remaining >>= 1
        if remaining:
            base = _conv(base, base)
    assert result is not None
    return result


def _split_log_mass(
    law: MessageLaw, leaf_count: int, threshold: float
) -> tuple[float, float, float, float]:
    """Log masses of the low side (normalized value <= threshold) and high
    side, under both hypotheses."""
    low = law.values / leaf_count <= threshold
    def side(logs: np.ndarray, mask: np.ndarray) -> float:
        return float(logsumexp(logs[mask])) if mask.any() else -np.inf

    return (
        side(law.logp0, low),
        side(law.logp1, low),
        side(law.logp0, ~low),
        side(law.logp1, ~low),
    )


def _bit_law(
    sum_law: MessageLaw, leaf_count: int, threshold: float
) -> tuple[MessageLaw, tuple[float, float]]:
    """One-bit output law of thresholding the normalized sum; also returns
    the (low, high) output values for simulation lookups."""
    low0, low1, high0, high1 = _split_log_mass(sum_law, leaf_count, threshold)
    if low0 == -np.inf and low1 == -np.inf:
        law = MessageLaw(np.zeros(1), np.zeros(1), np.zeros(1))
        return law, (0.0, 0.0)
    if high0 == -np.inf and high1 == -np.inf:
        law = MessageLaw(np.zeros(1), np.zeros(1), np.zeros(1))
        return law, (0.0, 0.0)
    v_low = low1 - low0
    v_high = high1 - high0
    law = MessageLaw(
        np.array([v_low, v_high]),
        np.array([low0, high0]),
        np.array([low1, high1]),
    )
    return law, (v_low, v_high)


@dataclass(frozen=True, eq=False)
class _GateInfo:
    cdf0: np.ndarray
    cdf1: np.ndarray
    lut: np.ndarray
    out_values: np.ndarray


@dataclass(frozen=True, eq=False)
class _LawContext:
    tree: Tree
    leaf_law: MessageLaw
    out_by_key: dict
    sum_by_key: dict
    bit_values: dict
    root_sum: MessageLaw
    gate: "_GateInfo | None"


def _gate_info(strategy: Strategy, pair: DistributionPair) -> _GateInfo:
    gate = strategy.level1_gate
    assert gate is not None
    # full-alphabet masses: a repeated cdf value is never selected by
    # searchsorted, so dead symbols stay unsampled
    q0, q1 = _pushforward(pair, strategy.gamma)
    fused = fused_pair(pair, [strategy.gamma] * gate.arity, gate)
    out_values = np.full(len(gate.output_alphabet), np.nan)
    for i, s in enumerate(gate.output_alphabet):
        if s in fused.alphabet:
            j = fused.alphabet.index(s)
            out_values[i] = math.log(fused.p1[j]) - math.log(fused.p0[j])
    in_alphabet = strategy.gamma.output_alphabet
    shape = (len(in_alphabet),) * gate.arity
    lut = np.empty(shape, dtype=np.int64)
    for idx in np.ndindex(shape):
        symbols = [in_alphabet.symbols[i] for i in idx]
        lut[idx] = gate.output_alphabet.index(gate(*symbols))
    return _GateInfo(
        cdf0=np.cumsum(q0),
        cdf1=np.cumsum(q1),
        lut=lut,
        out_values=out_values,
    )


def _build_context(strategy: Strategy, pair: DistributionPair) -> _LawContext:
    tree = strategy.tree
    h = tree.height
    shape = tree.shape_ids
    leaf_law = law_from_pair(induced_pair(pair, strategy.gamma))
    out_by_key: dict[tuple[int, int], MessageLaw] = {(0, 0): leaf_law}
    sum_by_key: dict[tuple[int, int], MessageLaw] = {}
    bit_values: dict[tuple[int, int], tuple[float, float]] = {}
    gate = _gate_info(strategy, pair) if strategy.level1_gate is not None else None
    gate_law = (
        law_from_pair(
            fused_pair(
                pair,
                [strategy.gamma] * strategy.level1_gate.arity,
                strategy.level1_gate,
            )
        )
        if strategy.level1_gate is not None
        else None
    )
    lcount = tree.subtree_leaf_count
    root_sum: MessageLaw | None = None
    for d in range(h - 1, -1, -1):
        level = h - d
        nodes = tree.nodes_at_depth(d)
        uniq, first = np.unique(shape[nodes], return_index=True)
        for sid, rep_idx in zip(uniq, first):
            key = (level, int(sid))
            if key in out_by_key or (d == 0 and root_sum is not None):
                continue
            v = int(nodes[rep_idx])
            if level == 1 and gate_law is not None:
                out_by_key[key] = gate_law
                continue
            kids = tree.children(v)
            kid_level = level - 1
            kid_shapes, counts = np.unique(shape[kids], return_counts=True)
            parts = [
                _conv_power(out_by_key[(kid_level, int(s))], int(c))
                for s, c in zip(kid_shapes, counts)
            ]
            total = parts[0]
            for part in parts[1:]:
                total = _conv(total, part)
            sum_by_key[key] = total
            if d == 0:
                root_sum = total
            else:
                t = strategy.threshold_at_level(level)
                out, pair_vals = _bit_law(total, int(lcount[v]), t)
                out_by_key[key] = out
                bit_values[key] = pair_vals
    assert root_sum is not None
    return _LawContext(
        tree=tree,
        leaf_law=leaf_law,
        out_by_key=out_by_key,
        sum_by_key=sum_by_key,
        bit_values=bit_values,
        root_sum=root_sum,
        gate=gate,
    )


_CTX_CACHE: OrderedDict[tuple, tuple] = OrderedDict()
_CTX_CACHE_SIZE = 8
_CTX_LOCK = threading.Lock()


def _context_for(strategy: Strategy, pair: DistributionPair) -> _LawContext:
    # the context never depends on the root threshold, so calibration and
    # evaluation of the same strategy share one build
    key = (
        id(strategy.tree),
        id(strategy.gamma),
        strategy.thresholds[:-1],
        id(strategy.level1_gate),
        id(pair),
    )
    with _CTX_LOCK:
        hit = _CTX_CACHE.get(key)
        if hit is not None:
            _CTX_CACHE.move_to_end(key)
            return hit[-1]
    ctx = _build_context(strategy, pair)
    with _CTX_LOCK:
        _CTX_CACHE[key] = (
            strategy.tree,
            strategy.gamma,
            strategy.level1_gate,
            pair,
            ctx,
        )
        while len(_CTX_CACHE) > _CTX_CACHE_SIZE:
            _CTX_CACHE.popitem(last=False)
    return ctx


def root_sum_law(
    strategy: Strategy, pair: DistributionPair
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw-sum atoms of the root's incoming log-likelihood mass and their
    log masses under both hypotheses."""
    law = _context_for(strategy, pair).root_sum
    return law.values, law.logp0, law.logp1


@dataclass(frozen=True)
class ErrorEstimate:
    """Both error probabilities, with exact log values.

    Linear fields underflow to 0.0 far below 1e-308; the log fields stay
    exact and drive all exponent arithmetic.
    """

    type_i: float
    type_ii: float
    log_type_i: float
    log_type_ii: float
    method: str
    trials: int | None = None
    std_error_i: float | None = None
    std_error_ii: float | None = None


def exact_error_probs(strategy: Strategy, pair: DistributionPair) -> ErrorEstimate:
    """False-alarm and miss probabilities of the strategy, exactly."""
    ctx = _context_for(strategy, pair)
    l_f = int(ctx.tree.subtree_leaf_count[ctx.tree.root])
    low0, low1, high0, high1 = _split_log_mass(
        ctx.root_sum, l_f, strategy.root_threshold
    )
    # summed log masses can drift an ulp above 0 on long convolution chains
    high0 = min(high0, 0.0)
    low1 = min(low1, 0.0)
    return ErrorEstimate(
        type_i=float(np.exp(high0)),
        type_ii=float(np.exp(low1)),
        log_type_i=high0,
        log_type_ii=low1,
        method="exact",
    )


@dataclass(frozen=True)
class TailRow:
    node: int
    level: int
    leaf_count: int
    pred_count: int
    log_miss_per_leaf: float
    log_fa_per_leaf: float


def tail_report(strategy: Strategy, pair: DistributionPair) -> tuple[TailRow, ...]:
    """Per-node normalized log tail masses at that node's threshold.

    The miss column is (1/l) log P1(normalized sum <= t); the false-alarm
    column is (1/l) log P0(normalized sum > t).  The root row uses the
    level-h threshold, not the calibrated root threshold.
    """
    ctx = _context_for(strategy, pair)
    tree = ctx.tree
    shape = tree.shape_ids
    lcount = tree.subtree_leaf_count
    pcount = tree.subtree_node_count
    rows = []
    cache: dict[tuple[int, int], tuple[float, float]] = {}
    for v in np.flatnonzero(~tree.is_leaf):
        level = int(tree.level[v])
        key = (level, int(shape[v]))
        if key not in cache:
            law = ctx.sum_by_key.get(key)
            if law is None:
                # gate level: tails of a gate are not threshold tails
                continue
            t = strategy.threshold_at_level(level)
            low0, low1, high0, high1 = _split_log_mass(law, int(lcount[v]), t)
            cache[key] = (low1 / int(lcount[v]), high0 / int(lcount[v]))
        miss, fa = cache[key]
        rows.append(
            TailRow(
                node=int(v),
                level=level,
                leaf_count=int(lcount[v]),
                pred_count=int(pcount[v]),
                log_miss_per_leaf=miss,
                log_fa_per_leaf=fa,
            )
        )
    return tuple(rows)


def fringe_message_laws(
    strategy: Strategy, pair: DistributionPair
) -> list[tuple[MessageLaw, int]]:
    """Distinct outgoing-message laws of fringe nodes with multiplicities."""
    ctx = _context_for(strategy, pair)
    tree = ctx.tree
    fringe = tree.fringe
    shapes, counts = np.unique(tree.shape_ids[fringe], return_counts=True)
    level = int(tree.level[fringe[0]]) if len(fringe) else 1
    return [
        (ctx.out_by_key[(level, int(s))], int(c)) for s, c in zip(shapes, counts)
    ]


def _snap_to_atoms(sums: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    if atoms.size == 1:
        near = np.full_like(sums, atoms[0])
    else:
        idx = np.clip(np.searchsorted(atoms, sums), 1, atoms.size - 1)
        left = atoms[idx - 1]
        right = atoms[idx]
        near = np.where(np.abs(sums - left) <= np.abs(right - sums), left, right)
    tol = _SNAP_RTOL * np.maximum(1.0, np.abs(sums))
    return np.where(np.abs(sums - near) <= tol, near, sums)


def _simulate_error_count(
    ctx: _LawContext, strategy: Strategy, hypothesis: int, trials: int, seed: int
) -> int:
    tree = ctx.tree
    h = tree.height
    shape = tree.shape_ids
    lcount = tree.subtree_leaf_count
    widths = [len(tree.nodes_at_depth(d)) for d in range(h + 1)]
    block = max(1, min(trials, _MC_BLOCK_FLOATS // max(widths)))

    # per-depth gather info, parent-sorted child rows
    gather = []
    for d in range(h):
        child_nodes = tree.nodes_at_depth(d + 1)
        order = np.argsort(tree.parents[child_nodes], kind="stable")
        counts = tree.n_children[tree.nodes_at_depth(d)]
        starts = np.zeros(counts.size, dtype=np.int64)
        np.cumsum(counts[:-1], out=starts[1:])
        gather.append((order, starts))

    leaf_cdf = (
        np.cumsum(ctx.leaf_law.p0) if hypothesis == 0 else np.cumsum(ctx.leaf_law.p1)
    )
    errors = 0
    wrong_bit = 1 if hypothesis == 0 else 0
    root_l = int(lcount[tree.root])
    n_blocks = (trials + block - 1) // block
    for b in range(n_blocks):
        nb = min(block, trials - b * block)
        rng = np.random.Generator(
            np.random.Philox(key=[seed, 0], counter=[0, b, hypothesis, 0])
        )
        u = rng.random((widths[h], nb))
        if ctx.gate is not None:
            cdf = ctx.gate.cdf0 if hypothesis == 0 else ctx.gate.cdf1
            state: np.ndarray = np.searchsorted(cdf, u, side="right")
        else:
            state = ctx.leaf_law.values[np.searchsorted(leaf_cdf, u, side="right")]
        for d in range(h - 1, -1, -1):
            order, starts = gather[d]
            rows = state[order]
            nodes = tree.nodes_at_depth(d)
            level = h - d
            if level == 1 and ctx.gate is not None:
                arity = ctx.gate.lut.ndim
                grouped = rows.reshape(len(nodes), arity, nb)
                flat = np.zeros((len(nodes), nb), dtype=np.int64)
                stride = 1
                for a in range(arity - 1, -1, -1):
                    flat += grouped[:, a, :] * stride
                    stride *= ctx.gate.lut.shape[a]
                out_idx = ctx.gate.lut.ravel()[flat]
                state = ctx.gate.out_values[out_idx]
                continue
            sums = np.add.reduceat(rows, starts, axis=0)
            if d == 0:
                atoms = ctx.root_sum.values
                snapped = _snap_to_atoms(sums[0], atoms)
                decide_1 = snapped / root_l > strategy.root_threshold
                errors += int(np.count_nonzero(decide_1 == (wrong_bit == 1)))
                state = sums
                continue
            t = strategy.threshold_at_level(level)
            out = np.empty((len(nodes), nb))
            uniq = np.unique(shape[nodes])
            for sid in uniq:
                mask = shape[nodes] == sid
                key = (level, int(sid))
                law = ctx.sum_by_key[key]
                snapped = _snap_to_atoms(sums[mask], law.values)
                l_v = int(lcount[nodes[mask][0]])
                v_low, v_high = ctx.bit_values[key]
                out[mask] = np.where(snapped / l_v <= t, v_low, v_high)
            state = out
    return errors


def monte_carlo_error(
    strategy: Strategy, pair: DistributionPair, trials: int, seed: int
) -> ErrorEstimate:
    """Simulates both hypotheses with deterministic counter-based streams.

    Identical (strategy, pair, trials, seed) always reproduce the same
    estimate, regardless of call order or chunking internals.
    """
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    ctx = _context_for(strategy, pair)
    wrong0 = _simulate_error_count(ctx, strategy, 0, trials, seed)
    wrong1 = _simulate_error_count(ctx, strategy, 1, trials, seed)
    p_i = wrong0 / trials
    p_ii = wrong1 / trials
    return ErrorEstimate(
        type_i=p_i,
        type_ii=p_ii,
        log_type_i=math.log(p_i) if p_i > 0 else -math.inf,
        log_type_ii=math.log(p_ii) if p_ii > 0 else -math.inf,
        method="monte_carlo",
        trials=trials,
        std_error_i=math.sqrt(p_i * (1.0 - p_i) / trials),
        std_error_ii=math.sqrt(p_ii * (1.0 - p_ii) / trials),
    )


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares decay fit of exact miss probabilities along a grid."""

    sizes: tuple[int, ...]
    node_counts: tuple[int, ...]
    leaf_counts: tuple[int, ...]
    alpha: float
    regressor: str
    type_i: tuple[float, ...]
    log_type_ii: tuple[float, ...]
    per_leaf: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float


def empirical_exponent(
    family: TreeFamily,
    pair: DistributionPair,
    sizes: Sequence[int],
    strategy_factory: Callable[[Tree], Strategy],
    *,
    alpha: float = 0.25,
    regress_on: str = "leaves",
    max_workers: int = 1,
) -> ExponentFit:
    """Calibrates at each size, evaluates exactly, and fits log miss
    probability against leaf count (or node count).

    The factory receives each generated tree and returns the strategy to
    calibrate; its tree may be a uniformized copy, which preserves the leaf
    count.  Grid points are independent; ``max_workers`` bounds how many run
    concurrently, with results always collected in grid order.
    """
    if regress_on not in ("leaves", "nodes"):
        raise InvalidParams("regress_on must be 'leaves' or 'nodes'")

    def one(size: int) -> tuple[int, int, float, float]:
        tree = family.generate(int(size))
        strat = strategy_factory(tree)
        calibrated = np_calibrate_root(strat, pair, alpha)
        est = exact_error_probs(calibrated, pair)
        stree = calibrated.tree
        lf = int(stree.subtree_leaf_count[stree.root])
        return stree.n, lf, est.type_i, est.log_type_ii

    if max_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, sizes))
    else:
        results = [one(s) for s in sizes]
    node_counts = [r[0] for r in results]
    leaf_counts = [r[1] for r in results]
    t1s = [r[2] for r in results]
    logb = [r[3] for r in results]
    xs = [
        float(l if regress_on == "leaves" else n)
        for n, l in zip(node_counts, leaf_counts)
    ]
    x = np.asarray(xs)
    y = np.asarray(logb)
    xm = x - x.mean()
    denom = float(np.dot(xm, xm))
    if denom == 0.0:
        raise InvalidParams("regressor is constant across the grid")
    slope = float(np.dot(xm, y) / denom)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.dot(resid, resid)) / ss_tot
    return ExponentFit(
        sizes=tuple(int(s) for s in sizes),
        node_counts=tuple(node_counts),
        leaf_counts=tuple(leaf_counts),
        alpha=alpha,
        regressor=regress_on,
        type_i=tuple(t1s),
        log_type_ii=tuple(logb),
        per_leaf=tuple(b / l for b, l in zip(logb, leaf_counts)),
        slope=slope,
        intercept=intercept,
        r_squared=r2,
    )


@dataclass(frozen=True)
class ChebyshevReport:
    mean_per_leaf: float
    exceed_probability: float
    bound: float
    holds: bool


def chebyshev_variance_check(
    strategy: Strategy,
    pair: DistributionPair,
    small_cap: int,
    eta: float,
) -> ChebyshevReport:
    """Exact concentration of the root's normalized sum against the
    second-moment bound a(1+N)/(eta^2 l(f)).

    Stated for height-2 trees whose fringe nodes all hold at most
    ``small_cap`` leaves.
    """
    if eta <= 0.0:
        raise InvalidParams("eta must be positive")
    tree = strategy.tree
    if tree.height != 2:
        raise InvalidParams("the concentration check applies to height-2 trees")
    lcount = tree.subtree_leaf_count
    if np.any(lcount[tree.fringe] > small_cap):
        raise InvalidParams("every fringe node must hold at most small_cap leaves")
    from .hypotheses import validate_assumptions

    report = validate_assumptions(pair, [strategy.gamma])
    law = _context_for(strategy, pair).root_sum
    l_f = int(lcount[tree.root])
    mean = float(np.dot(law.p0, law.values)) / l_f
    far = np.abs(law.values / l_f - mean) > eta
    prob = float(np.exp(logsumexp(law.logp0[far]))) if far.any() else 0.0
    bound = report.chebyshev_constant * (1.0 + small_cap) / (eta * eta * l_f)
    return ChebyshevReport(
        mean_per_leaf=mean,
        exceed_probability=prob,
        bound=bound,
        holds=prob <= bound + 1e-12,
    )
