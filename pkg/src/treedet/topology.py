"""Rooted in-trees, per-node metrics, and tree-sequence statistics.

Edges point toward the root (the fusion center).  Node ids are dense
integers; derived metrics are cached numpy arrays, and trees are treated as
immutable after construction.  Metric passes are vectorized per depth so
trees with millions of nodes stay cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyAfterPrune,
    InputError,
    InvalidParams,
    NotUniform,
)


class Tree:
    """Rooted directed in-tree over dense integer node ids."""

    def __init__(self, parents: Sequence[int | None], root: int | None = None):
        arr = np.asarray(
            [-1 if p is None else int(p) for p in parents], dtype=np.int64
        )
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("parents must be a non-empty 1-d sequence")
        roots = np.flatnonzero(arr < 0)
        if roots.size != 1:
            raise InputError(f"expected exactly one parentless node, found {roots.size}")
        self._parents = arr
        self._root = int(roots[0])
        if root is not None and int(root) != self._root:
            raise InputError(
                f"declared root {root} but the parentless node is {self._root}"
            )
        n = arr.size
        others = np.flatnonzero(arr >= 0)
        if np.any(arr[others] >= n):
            raise InputError("parent id out of range")
        arr.setflags(write=False)
        if np.any(self.depth < 0):
            raise InputError("tree is disconnected or contains a cycle")

    @property
    def n(self) -> int:
        return int(self._parents.size)

    def __len__(self) -> int:
        return self.n

    @property
    def root(self) -> int:
        return self._root

    @property
    def parents(self) -> np.ndarray:
        return self._parents

    @cached_property
    def _children_csr(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.n_children, out=offsets[1:])
        order = np.argsort(self._parents, kind="stable")
        # argsort puts the root (parent -1) first; drop it
        return offsets, order[1:].copy()

    def children(self, v: int) -> np.ndarray:
        offsets, flat = self._children_csr
        return flat[offsets[v] : offsets[v + 1]]

    @cached_property
    def n_children(self) -> np.ndarray:
        counts = np.bincount(
            self._parents[self._parents >= 0], minlength=self.n
        ).astype(np.int64)
        counts.setflags(write=False)
        return counts

    @cached_property
    def depth(self) -> np.ndarray:
        """Path length to the root; -1 marks unreachable nodes."""
        n = self.n
        depth = np.full(n, -1, dtype=np.int64)
        depth[self._root] = 0
        safe_parents = np.where(self._parents >= 0, self._parents, self._root)
        while True:
            pending = depth < 0
            ready = pending & (depth[safe_parents] >= 0)
            if not ready.any():
                break
            depth[ready] = depth[safe_parents[ready]] + 1
        depth.setflags(write=False)
        return depth

    @cached_property
    def height(self) -> int:
        return int(self.depth.max())

    @cached_property
    def level(self) -> np.ndarray:
        """height - depth; the root sits at the top level."""
        lev = self.height - self.depth
        lev.setflags(write=False)
        return lev

    @cached_property
    def is_leaf(self) -> np.ndarray:
        mask = (self.n_children == 0) & (np.arange(self.n) != self._root)
        mask.setflags(write=False)
        return mask

    @cached_property
    def leaves(self) -> np.ndarray:
        out = np.flatnonzero(self.is_leaf)
        out.setflags(write=False)
        return out

    @cached_property
    def _by_depth(self) -> list[np.ndarray]:
        order = np.argsort(self.depth, kind="stable")
        bounds = np.searchsorted(self.depth[order], np.arange(self.height + 2))
        return [order[bounds[d] : bounds[d + 1]] for d in range(self.height + 1)]

    def nodes_at_depth(self, d: int) -> np.ndarray:
        return self._by_depth[d]

    @cached_property
    def subtree_leaf_count(self) -> np.ndarray:
        """l(v): leaves in the subtree rooted at v (1 for a leaf itself)."""
        counts = self.is_leaf.astype(np.int64)
        for d in range(self.height, 0, -1):
            at_d = self.nodes_at_depth(d)
            np.add.at(counts, self._parents[at_d], counts[at_d])
        counts.setflags(write=False)
        return counts

    @cached_property
    def subtree_node_count(self) -> np.ndarray:
        """p(v): proper descendants of v, so the root scores n - 1."""
        counts = np.zeros(self.n, dtype=np.int64)
        for d in range(self.height, 0, -1):
            at_d = self.nodes_at_depth(d)
            np.add.at(counts, self._parents[at_d], counts[at_d] + 1)
        counts.setflags(write=False)
        return counts

    @cached_property
    def leaf_parents(self) -> np.ndarray:
        """Nodes with at least one leaf child."""
        out = np.unique(self._parents[self.is_leaf])
        out.setflags(write=False)
        return out

    @cached_property
    def fringe(self) -> np.ndarray:
        """Non-leaf nodes all of whose children are leaves."""
        leaf_child_count = np.bincount(
            self._parents[self.is_leaf], minlength=self.n
        )
        mask = (self.n_children > 0) & (leaf_child_count == self.n_children)
        out = np.flatnonzero(mask)
        out.setflags(write=False)
        return out

    @cached_property
    def is_uniform(self) -> bool:
        """True when every leaf sits at depth equal to the height."""
        return bool(np.all(self.depth[self.leaves] == self.height))

    @cached_property
    def shape_ids(self) -> np.ndarray:
        """Interned structural fingerprints: equal ids iff isomorphic subtrees."""
        shape = np.zeros(self.n, dtype=np.int64)
        interned: dict[tuple[int, ...], int] = {}
        for d in range(self.height - 1, -1, -1):
            for v in self.nodes_at_depth(d):
                kids = self.children(v)
                if kids.size == 0:
                    continue
                key = tuple(sorted(shape[kids].tolist()))
                sid = interned.get(key)
                if sid is None:
                    sid = len(interned) + 1
                    interned[key] = sid
                shape[v] = sid
        shape.setflags(write=False)
        return shape

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "root": self._root,
                "parents": [None if p < 0 else int(p) for p in self._parents],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Tree":
        try:
            doc = json.loads(text)
            parents = doc["parents"]
            n = int(doc["n"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tree document: {exc}") from None
        if len(parents) != n:
            raise InputError(f"declared n={n} but {len(parents)} parent entries")
        return cls(parents, root=doc.get("root"))


@dataclass(frozen=True)
class TreeStats:
    """Summary counters for one tree at one smallness cap."""

    height: int
    n_nodes: int
    n_leaves: int
    n_leaf_parents: int
    n_fringe: int
    small_fringe: tuple[int, ...]
    small_leaf_fraction: float
    leaf_fraction: float
    fringe_count_check: bool


def analyze_tree(tree: Tree, small_cap: int) -> TreeStats:
    """Counts leaves living under fringe nodes with at most ``small_cap`` leaves.

    The returned fraction is 0 when no fringe node is that small.  The count
    check asserts that the number of small fringe nodes is at least
    (fraction * total leaves / cap), which holds by construction.
    """
    if small_cap <= 0:
        raise InvalidParams("small_cap must be positive")
    lcounts = tree.subtree_leaf_count
    fringe = tree.fringe
    small = fringe[lcounts[fringe] <= small_cap]
    total_leaves = int(lcounts[tree.root])
    covered = int(lcounts[small].sum())
    q = covered / total_leaves if total_leaves else 0.0
    check = len(small) + 1e-12 >= q * total_leaves / small_cap
    return TreeStats(
        height=tree.height,
        n_nodes=tree.n,
        n_leaves=total_leaves,
        n_leaf_parents=len(tree.leaf_parents),
        n_fringe=len(fringe),
        small_fringe=tuple(int(v) for v in small),
        small_leaf_fraction=q,
        leaf_fraction=total_leaves / tree.n,
        fringe_count_check=bool(check),
    )


_TREND_FLOOR = 0.02
_TREND_SHRINK = 0.5


def _trending_to_zero(seq: Sequence[float]) -> bool:
    return seq[-1] < _TREND_FLOOR or seq[-1] <= _TREND_SHRINK * seq[0]


@dataclass(frozen=True)
class GrowthReport:
    """Leaf-dominance diagnostics along a growing size grid."""

    sizes: tuple[int, ...]
    leaf_counts: tuple[int, ...]
    leaf_fractions: tuple[float, ...]
    z_estimate: float
    small_fraction_curves: dict[int, tuple[float, ...]]
    consistent: bool


def estimate_z(
    family: "TreeFamily",
    size_grid: Sequence[int],
    small_caps: Sequence[int] = (2, 5, 10),
) -> GrowthReport:
    """Tracks the leaf fraction and the small-fringe leaf fractions on a grid.

    The consistency flag records whether the two diagnostics agree: the leaf
    fraction trends to one exactly when every small-fringe curve trends to
    zero.  Trends over a finite grid are judged by the final value.
    """
    sizes = [int(s) for s in size_grid]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidParams("size grid must be non-empty and increasing")
    leaf_counts: list[int] = []
    fractions: list[float] = []
    curves: dict[int, list[float]] = {int(c): [] for c in small_caps}
    for size in sizes:
        tree = family.generate(size)
        lf = int(tree.subtree_leaf_count[tree.root])
        leaf_counts.append(lf)
        fractions.append(lf / tree.n)
        for cap in curves:
            curves[cap].append(analyze_tree(tree, cap).small_leaf_fraction)
    z_to_one = _trending_to_zero([1.0 - f for f in fractions])
    qs_to_zero = all(_trending_to_zero(c) for c in curves.values())
    return GrowthReport(
        sizes=tuple(sizes),
        leaf_counts=tuple(leaf_counts),
        leaf_fractions=tuple(fractions),
        z_estimate=fractions[-1],
        small_fraction_curves={c: tuple(v) for c, v in curves.items()},
        consistent=z_to_one == qs_to_zero,
    )


@dataclass(frozen=True)
class UniformizeResult:
    tree: Tree
    node_map: dict[int, int]


def uniformize(tree: Tree) -> UniformizeResult:
    """Re-attaches shallow leaves through relay chains so every leaf sits at
    the full height.

    For each node with leaf children above the bottom level, the whole group
    of its leaf children is moved through a single new chain.  Existing node
    ids are preserved (the returned map is the identity on them); chain nodes
    take fresh ids at the end.
    """
    if tree.is_uniform:
        return UniformizeResult(tree, {i: i for i in range(tree.n)})
    h = tree.height
    parents = tree.parents.tolist()
    depth = tree.depth
    is_leaf = tree.is_leaf
    next_id = tree.n
    for v in tree.leaf_parents:
        kids = tree.children(v)
        leaf_kids = kids[is_leaf[kids]]
        deficit = h - (int(depth[v]) + 1)
        if deficit == 0:
            continue
        chain_top = int(v)
        for _ in range(deficit):
            parents.append(chain_top)
            chain_top = next_id
            next_id += 1
        for c in leaf_kids:
            parents[int(c)] = chain_top
    out = Tree(parents)
    return UniformizeResult(out, {i: i for i in range(tree.n)})


def _relabel(tree: Tree, keep: np.ndarray) -> Tree:
    ids = np.flatnonzero(keep)
    new_id = np.full(tree.n, -1, dtype=np.int64)
    new_id[ids] = np.arange(ids.size)
    parents = tree.parents[ids]
    remapped = np.where(parents >= 0, new_id[np.clip(parents, 0, None)], -1)
    return Tree(remapped.tolist())


def prune_small(tree: Tree, small_cap: int) -> Tree:
    """Drops fringe nodes with at most ``small_cap`` leaves, their leaves, and
    any ancestors left childless, keeping the tree height-uniform.
    """
    if not tree.is_uniform:
        raise NotUniform("prune requires a height-uniform tree")
    lcounts = tree.subtree_leaf_count
    fringe = tree.fringe
    small = fringe[lcounts[fringe] <= small_cap]
    if small.size == fringe.size:
        raise EmptyAfterPrune(
            f"every fringe node has at most {small_cap} leaves; nothing survives"
        )
    if small.size == 0:
        return tree
    keep = np.ones(tree.n, dtype=bool)
    keep[small] = False
    leaf_parent = tree.parents[tree.is_leaf]
    dead_leaf = np.zeros(tree.n, dtype=bool)
    dead_leaf[small] = True
    keep[tree.leaves[dead_leaf[leaf_parent]]] = False
    # cascade upward: an internal node survives only with a surviving child
    for d in range(tree.height - 2, -1, -1):
        at_d = tree.nodes_at_depth(d)
        internal = at_d[tree.n_children[at_d] > 0]
        kept_below = np.bincount(
            tree.parents[np.flatnonzero(keep & (tree.depth == d + 1))],
            minlength=tree.n,
        )
        keep[internal] &= kept_below[internal] > 0
    return _relabel(tree, keep)


def collapse_leaves(tree: Tree) -> Tree:
    """Deletes every leaf; the former fringe becomes the new leaf set."""
    if tree.height < 2:
        raise InvalidParams("collapse needs height at least 2")
    if not tree.is_uniform:
        raise NotUniform("collapse requires a height-uniform tree")
    return _relabel(tree, ~tree.is_leaf)


def _gen_parallel(params: Mapping[str, object], size: int) -> Tree:
    if size < 2:
        raise InvalidParams("parallel tree needs at least 2 nodes")
    return Tree([-1] + [0] * (size - 1))


def _gen_chain_plus_leaves(params: Mapping[str, object], size: int) -> Tree:
    h = int(params["h"])
    if h < 1:
        raise InvalidParams("height must be >= 1")
    if size < h + 2:
        raise InvalidParams(f"need at least {h + 2} nodes for height {h}")
    parents = [-1]
    for i in range(1, h):
        parents.append(i - 1)
    parents.append(h - 1)  # the single deep leaf
    parents.extend([0] * (size - h - 1))
    return Tree(parents)


def _gen_two_relay(params: Mapping[str, object], size: int) -> Tree:
    if size < 1:
        raise InvalidParams("need at least one leaf per relay")
    return Tree([-1, 0, 0] + [1] * size + [2] * size)


def _gen_wide_uniform(params: Mapping[str, object], size: int) -> Tree:
    has_m = "m" in params
    has_r = "n_relays" in params
    if has_m == has_r:
        raise InvalidParams("fix exactly one of 'm' (leaves per relay) or 'n_relays'")
    if has_m:
        m, relays = int(params["m"]), size
    else:
        m, relays = size, int(params["n_relays"])
    if m < 1 or relays < 1:
        raise InvalidParams("leaves per relay and relay count must be >= 1")
    parents = np.empty(1 + relays + relays * m, dtype=np.int64)
    parents[0] = -1
    parents[1 : relays + 1] = 0
    parents[relays + 1 :] = np.repeat(np.arange(1, relays + 1), m)
    return Tree(parents.tolist())


def _gen_increasing_leaves(params: Mapping[str, object], size: int) -> Tree:
    if size < 1:
        raise InvalidParams("need at least one relay")
    relay_ids = np.arange(1, size + 1)
    parents = np.concatenate(
        [
            np.array([-1], dtype=np.int64),
            np.zeros(size, dtype=np.int64),
            np.repeat(relay_ids, relay_ids + 1),
        ]
    )
    return Tree(parents.tolist())


def _gen_explicit(params: Mapping[str, object], size: int) -> Tree:
    if "tree" in params:
        tree = params["tree"]
        if not isinstance(tree, Tree):
            raise InvalidParams("'tree' must be a Tree instance")
        return tree
    if "path" in params:
        from pathlib import Path

        return Tree.from_json(Path(str(params["path"])).read_text())
    raise InvalidParams("explicit family needs 'tree' or 'path'")


_GENERATORS = {
    "parallel": _gen_parallel,
    "chain_plus_leaves": _gen_chain_plus_leaves,
    "two_relay": _gen_two_relay,
    "wide_uniform": _gen_wide_uniform,
    "increasing_leaves": _gen_increasing_leaves,
    "explicit": _gen_explicit,
}


@dataclass(frozen=True)
class TreeFamily:
    """Parametric generator of trees indexed by one growing size argument.

    The size argument's meaning is per kind: total nodes for ``parallel`` and
    ``chain_plus_leaves``, leaves per relay for ``two_relay``, the free one of
    (relay count, leaves per relay) for ``wide_uniform``, the relay count for
    ``increasing_leaves``.  ``explicit`` ignores it.
    """

    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _GENERATORS:
            raise InvalidParams(
                f"unknown family {self.kind!r}; known: {sorted(_GENERATORS)}"
            )
        object.__setattr__(self, "params", dict(self.params))

    def generate(self, size: int) -> Tree:
        try:
            return _GENERATORS[self.kind](self.params, int(size))
        except KeyError as exc:
            raise InvalidParams(f"family {self.kind!r} missing parameter {exc}") from None


def generate_family(kind: str, params: Mapping[str, object] | None, size: int) -> Tree:
    return TreeFamily(kind, params or {}).generate(size)
