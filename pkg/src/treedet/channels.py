"""Transmission functions and quantizer families.

A transmission function is a total deterministic map from a node's inputs to
one outgoing message symbol.  Leaves map their own observation (arity 0);
relays map the tuple of incoming messages (arity d).  The one-bit normalized
log-likelihood-ratio quantizer used at relays is parametric in a real
threshold, so it is provided as a function rather than a table.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateFamily,
    EnumerationTooLarge,
    EquivalenceViolation,
    InputError,
    InvalidParams,
)
from .hypotheses import (
    BINARY,
    Alphabet,
    Direction,
    DistributionPair,
    Symbol,
    kl_divergence,
    product_pair,
)

ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class TransmissionFunction:
    """Total deterministic map from input tuples to an output symbol.

    ``arity`` counts incoming messages: 0 for a leaf (whose single input is
    its observation), d >= 1 for a relay fusing d messages.
    """

    arity: int
    input_alphabets: tuple[Alphabet, ...]
    output_alphabet: Alphabet
    table: Mapping[tuple[Symbol, ...], Symbol]
    name: str = ""

    def __post_init__(self) -> None:
        expected_inputs = 1 if self.arity == 0 else self.arity
        if self.arity < 0:
            raise InvalidParams("arity must be >= 0")
        if len(self.input_alphabets) != expected_inputs:
            raise InvalidParams(
                f"arity {self.arity} requires {expected_inputs} input alphabet(s)"
            )
        domain = list(itertools.product(*[a.symbols for a in self.input_alphabets]))
        table = dict(self.table)
        missing = [t for t in domain if t not in table]
        if missing:
            raise InvalidParams(f"table not total: missing {missing[:3]!r}...")
        extra = [t for t in table if t not in set(domain)]
        if extra:
            raise InvalidParams(f"table has entries outside the domain: {extra[:3]!r}")
        bad = [y for y in table.values() if y not in self.output_alphabet]
        if bad:
            raise InvalidParams(f"outputs {bad[:3]!r} not in the output alphabet")
        object.__setattr__(self, "table", table)

    def __call__(self, *inputs: Symbol) -> Symbol:
        try:
            return self.table[tuple(inputs)]
        except KeyError:
            raise InputError(f"inputs {inputs!r} outside the domain") from None

    def to_json(self) -> str:
        return json.dumps(
            {
                "arity": self.arity,
                "inputs": [list(a) for a in self.input_alphabets],
                "output": list(self.output_alphabet),
                "map": {
                    "|".join(str(s) for s in k): v for k, v in sorted(
                        self.table.items(), key=lambda kv: str(kv[0])
                    )
                },
                "name": self.name,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TransmissionFunction":
        doc = json.loads(text)
        try:
            inputs = tuple(Alphabet(tuple(a)) for a in doc["inputs"])
            output = Alphabet(tuple(doc["output"]))
            arity = int(doc["arity"])
        except KeyError as exc:
            raise InputError(f"transmission function missing field {exc}") from None
        lookup: dict[str, Symbol] = {}
        for alph in inputs:
            for s in alph:
                lookup[str(s)] = s
        table = {}
        for key, out in doc["map"].items():
            parts = key.split("|")
            table[tuple(lookup.get(p, p) for p in parts)] = out
        return cls(arity, inputs, output, table, doc.get("name", ""))


def identity_map(alphabet: Alphabet) -> TransmissionFunction:
    return TransmissionFunction(
        0, (alphabet,), alphabet, {(s,): s for s in alphabet}, name="identity"
    )


def constant_map(
    alphabet: Alphabet, value: Symbol, output: Alphabet | None = None
) -> TransmissionFunction:
    out = output if output is not None else alphabet
    return TransmissionFunction(
        0, (alphabet,), out, {(s,): value for s in alphabet}, name=f"const-{value}"
    )


def _binary_gate(table: Mapping[tuple[int, int], int], name: str) -> TransmissionFunction:
    return TransmissionFunction(2, (BINARY, BINARY), BINARY, table, name=name)


def or_gate() -> TransmissionFunction:
    return _binary_gate({(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1}, "or")


def and_gate() -> TransmissionFunction:
    return _binary_gate({(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 1}, "and")


def xor_gate() -> TransmissionFunction:
    return _binary_gate({(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}, "xor")


def forward_first_gate() -> TransmissionFunction:
    return _binary_gate({(0, 0): 0, (0, 1): 0, (1, 0): 1, (1, 1): 1}, "forward")


@dataclass(frozen=True)
class QuantizerFamily:
    """Finite menus of candidate maps, per arity.

    Relay nodes may always fall back to the parametric one-bit quantizer
    (``apply_llrq``); ``relay`` lists explicit gates used when exploring
    fixed fusion rules.
    """

    leaf: tuple[TransmissionFunction, ...]
    relay: Mapping[int, tuple[TransmissionFunction, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.leaf:
            raise InvalidParams("leaf family must be non-empty")
        for gamma in self.leaf:
            if gamma.arity != 0:
                raise InvalidParams("leaf family entries must have arity 0")
        object.__setattr__(self, "relay", dict(self.relay))

    def gates(self, arity: int) -> tuple[TransmissionFunction, ...]:
        return tuple(self.relay.get(arity, ()))


def all_binary_leaf_family(alphabet: Alphabet) -> QuantizerFamily:
    """Every deterministic map from ``alphabet`` to a binary message."""
    return QuantizerFamily(leaf=enumerate_quantizers(alphabet, BINARY))


def _pushforward(pair: DistributionPair, tf: TransmissionFunction) -> tuple[np.ndarray, np.ndarray]:
    """Output masses over the full output alphabet (dead symbols kept)."""
    if tf.arity != 0:
        raise InvalidParams("push-forward of an observation needs an arity-0 map")
    if tf.input_alphabets[0].symbols != pair.alphabet.symbols:
        raise InputError("map input alphabet does not match the pair alphabet")
    k = len(tf.output_alphabet)
    q0 = np.zeros(k)
    q1 = np.zeros(k)
    for i, s in enumerate(pair.alphabet):
        j = tf.output_alphabet.index(tf(s))
        q0[j] += pair.p0[i]
        q1[j] += pair.p1[i]
    # summed masses may overshoot 1 by an ulp, which the pair constructor rejects
    return np.minimum(q0, 1.0), np.minimum(q1, 1.0)


def induced_pair(pair: DistributionPair, tf: TransmissionFunction) -> DistributionPair:
    """Distribution pair of the transmitted message for an arity-0 map.

    Output symbols dead under both hypotheses are dropped.  A one-sided zero
    cannot arise from an equivalent input pair, but the check is kept because
    the error is unrecoverable downstream.
    """
    q0, q1 = _pushforward(pair, tf)
    dead = (q0 == 0.0) & (q1 == 0.0)
    if np.any((q0 == 0.0) != (q1 == 0.0)):
        bad = [
            s
            for s, z0, z1 in zip(tf.output_alphabet, q0 == 0.0, q1 == 0.0)
            if z0 != z1
        ]
        raise EquivalenceViolation(f"push-forward kills {bad!r} under one hypothesis only")
    keep = ~dead
    symbols = tuple(s for s, k_ in zip(tf.output_alphabet, keep) if k_)
    return DistributionPair(Alphabet(symbols), q0[keep], q1[keep])


def fused_pair(
    pair: DistributionPair,
    leaf_maps: Sequence[TransmissionFunction],
    gate: TransmissionFunction,
) -> DistributionPair:
    """Law of ``gate`` applied to independently quantized observations."""
    k = len(leaf_maps)
    if gate.arity != k:
        raise InvalidParams(f"gate arity {gate.arity} != {k} quantized inputs")
    margins = [_pushforward(pair, g) for g in leaf_maps]
    out_n = len(gate.output_alphabet)
    q0 = np.zeros(out_n)
    q1 = np.zeros(out_n)
    supports = [
        [s for s in g.output_alphabet] for g in leaf_maps
    ]
    for combo in itertools.product(*[range(len(s)) for s in supports]):
        m0 = 1.0
        m1 = 1.0
        symbols = []
        for leaf_idx, sym_idx in enumerate(combo):
            m0 *= margins[leaf_idx][0][sym_idx]
            m1 *= margins[leaf_idx][1][sym_idx]
            symbols.append(supports[leaf_idx][sym_idx])
        if m0 == 0.0 and m1 == 0.0:
            continue
        j = gate.output_alphabet.index(gate(*symbols))
        q0[j] += m0
        q1[j] += m1
    dead = (q0 == 0.0) & (q1 == 0.0)
    if np.any((q0 == 0.0) != (q1 == 0.0)):
        raise EquivalenceViolation("fused push-forward breaks equivalence")
    keep = ~dead
    symbols = tuple(s for s, k_ in zip(gate.output_alphabet, keep) if k_)
    return DistributionPair(Alphabet(symbols), q0[keep], q1[keep])


def apply_llrq(
    d: int, t: float, incoming_llrs: Sequence[float], subtree_leaf_count: int
) -> int:
    """One-bit quantizer on the leaf-normalized sum of incoming LLRs.

    Sends 0 iff the normalized sum is <= t; ties go to 0.
    """
    if len(incoming_llrs) != d:
        raise InvalidParams(f"expected {d} incoming values, got {len(incoming_llrs)}")
    if subtree_leaf_count <= 0:
        raise InvalidParams("subtree leaf count must be positive")
    x = math.fsum(incoming_llrs) / subtree_leaf_count
    return 0 if x <= t else 1


def enumerate_quantizers(
    inputs: Alphabet | Sequence[Alphabet],
    output: Alphabet,
    *,
    canonicalize: bool = False,
    cap: int = ENUMERATION_CAP,
) -> tuple[TransmissionFunction, ...]:
    """All total deterministic maps from the (product) input to ``output``.

    With ``canonicalize`` set, maps that differ only by a relabeling of
    output symbols are deduplicated (first representative wins).  Off by
    default because relabeling changes the message alphabet seen upstream.
    """
    if isinstance(inputs, Alphabet):
        alphabets: tuple[Alphabet, ...] = (inputs,)
        arity = 0
    else:
        alphabets = tuple(inputs)
        if not alphabets:
            raise InvalidParams("need at least one input alphabet")
        arity = len(alphabets)
    domain = list(itertools.product(*[a.symbols for a in alphabets]))
    total = len(output) ** len(domain)
    if total > cap:
        raise EnumerationTooLarge(
            f"{total} maps exceed the cap of {cap}; restrict the alphabets"
        )
    out: list[TransmissionFunction] = []
    seen: set[tuple[int, ...]] = set()
    for assignment in itertools.product(output.symbols, repeat=len(domain)):
        if canonicalize:
            relabel: dict[Symbol, int] = {}
            sig = []
            for y in assignment:
                if y not in relabel:
                    relabel[y] = len(relabel)
                sig.append(relabel[y])
            key = tuple(sig)
            if key in seen:
                continue
            seen.add(key)
        table = dict(zip(domain, assignment))
        out.append(TransmissionFunction(arity, alphabets, output, table))
    return tuple(out)


def parallel_exponent(
    pair: DistributionPair, leaf_family: QuantizerFamily | Sequence[TransmissionFunction]
) -> tuple[float, TransmissionFunction]:
    """Optimal per-leaf error exponent for a star network.

    Equals minus the largest null-to-alternative divergence achievable by a
    single leaf map from the family.  Ties keep the earliest map.
    """
    gammas = leaf_family.leaf if isinstance(leaf_family, QuantizerFamily) else tuple(leaf_family)
    if not gammas:
        raise InvalidParams("leaf family must be non-empty")
    best_gamma = None
    best_d = 0.0
    for gamma in gammas:
        d = kl_divergence(induced_pair(pair, gamma), Direction.ZERO_ONE)
        if d > best_d:
            best_d = d
            best_gamma = gamma
    if best_gamma is None:
        raise DegenerateFamily("every map in the family yields zero divergence")
    return -best_d, best_gamma


@dataclass(frozen=True)
class FusionLossReport:
    """Best fused divergence rate over k observations, vs the per-leaf optimum."""

    k: int
    constant: float
    best_gate: TransmissionFunction
    best_leaf_maps: tuple[TransmissionFunction, ...]
    parallel: float
    dominated: bool  # parallel exponent strictly below the fused constant


def fusion_loss_constant(
    pair: DistributionPair,
    leaf_family: QuantizerFamily | Sequence[TransmissionFunction],
    relay_family: Sequence[TransmissionFunction],
    k: int,
    *,
    cap: int = ENUMERATION_CAP,
) -> FusionLossReport:
    """Infimum over gate-and-leaf-map choices of the per-observation rate
    at which the null law drifts from the alternative after fusing k
    quantized observations into one message.

    Uninformative combinations contribute exactly zero.  The report also
    says whether the parallel per-leaf exponent is strictly better (lower)
    than this constant, which is the condition under which bounded-degree
    fusion provably loses exponent.
    """
    gammas = leaf_family.leaf if isinstance(leaf_family, QuantizerFamily) else tuple(leaf_family)
    if k < 1:
        raise InvalidParams("k must be >= 1")
    gates = [g for g in relay_family if g.arity == k]
    if not gates:
        raise InvalidParams(f"relay family has no gates of arity {k}")
    combos = len(gates) * len(gammas) ** k
    if combos > cap:
        raise EnumerationTooLarge(f"{combos} fused configurations exceed cap {cap}")
    best = math.inf
    best_xi: tuple[TransmissionFunction, tuple[TransmissionFunction, ...]] | None = None
    for gate in gates:
        for leafs in itertools.product(gammas, repeat=k):
            fused = fused_pair(pair, leafs, gate)
            value = -kl_divergence(fused, Direction.ZERO_ONE) / k
            if value < best:
                best = value
                best_xi = (gate, leafs)
    assert best_xi is not None
    g_parallel, _ = parallel_exponent(pair, gammas)
    return FusionLossReport(
        k=k,
        constant=best,
        best_gate=best_xi[0],
        best_leaf_maps=best_xi[1],
        parallel=g_parallel,
        dominated=g_parallel < best,
    )
