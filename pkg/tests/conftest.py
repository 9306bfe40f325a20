import numpy as np
import pytest

from treedet import (
    Tree,
    all_binary_leaf_family,
    bernoulli_pair,
    identity_map,
)


@pytest.fixture(scope="session")
def pair75():
    return bernoulli_pair(0.75)


@pytest.fixture(scope="session")
def ident(pair75):
    return identity_map(pair75.alphabet)


@pytest.fixture(scope="session")
def leaf_family(pair75):
    return all_binary_leaf_family(pair75.alphabet)


def build_uniform_tree(rng, height, lo=2, hi=6):
    """Random height-uniform tree; every node gets lo..hi-1 children."""
    parents = [-1]
    frontier = [0]
    for _ in range(height):
        nxt = []
        for v in frontier:
            for _ in range(int(rng.integers(lo, hi))):
                parents.append(v)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return Tree(parents)


def build_regular_tree(rng, height, leaf_cap):
    """Random tree with one child count per depth, product of counts capped.

    Same-level nodes share a subtree shape, so exact message laws stay
    polynomially sized even when levels are wide.
    """
    degrees = []
    budget = leaf_cap
    for d in range(height):
        rest = 2 ** (height - d - 1)
        c = int(rng.integers(2, max(3, budget // rest + 1)))
        degrees.append(c)
        budget //= c
    parents = [-1]
    frontier = [0]
    for c in degrees:
        nxt = []
        for v in frontier:
            for _ in range(c):
                parents.append(v)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return Tree(parents)


def build_rugged_tree(rng, max_height):
    """Random tree with leaves at mixed depths.

    The root keeps at least two children and one branch always reaches
    max_height, so the result is connected and genuinely non-uniform
    whenever any other branch stops early.
    """
    parents = [-1]
    frontier = [0]
    for d in range(max_height):
        nxt = []
        for i, v in enumerate(frontier):
            forced = 1 if (d == 0 or i == 0) else 0
            k = max(forced, int(rng.integers(0, 4)))
            if d == 0:
                k = max(k, 2)
            for _ in range(k):
                parents.append(v)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return Tree(parents)


@pytest.fixture
def make_uniform_tree():
    return build_uniform_tree


@pytest.fixture
def make_rugged_tree():
    return build_rugged_tree
