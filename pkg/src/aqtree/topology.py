"""Single-sink directed trees with a uniform link capacity."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InvalidTopology(ValueError):
    pass


@dataclass(frozen=True)
class TreeNetwork:
    """Directed tree where every edge points toward the root (the sink).

    Nodes are dense integers ``0..n-1``.  The edge leaving node ``v`` is
    identified by ``v`` itself, so edge ids are the non-root node ids.
    """

    parent: tuple[Optional[int], ...]
    capacity: int
    root: int = field(init=False)
    depth: tuple[int, ...] = field(init=False, repr=False)
    children: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.parent)
        if n == 0:
            raise InvalidTopology("network needs at least one node")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        roots = [v for v, p in enumerate(self.parent) if p is None]
        if len(roots) != 1:
            raise InvalidTopology(f"expected exactly one root, found {len(roots)}")
        kids: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(self.parent):
            if p is None:
                continue
            if not 0 <= p < n:
                raise InvalidTopology(f"parent of {v} is {p}, outside [0, {n})")
            if p == v:
                raise InvalidTopology(f"node {v} is its own parent")
            kids[p].append(v)
        depth = [-1] * n
        depth[roots[0]] = 0
        stack = [roots[0]]
        while stack:
            u = stack.pop()
            for w in kids[u]:
                depth[w] = depth[u] + 1
                stack.append(w)
        if min(depth) < 0:
            bad = [v for v in range(n) if depth[v] < 0]
            raise InvalidTopology(f"cycle detected through nodes {bad}")
        object.__setattr__(self, "root", roots[0])
        object.__setattr__(self, "depth", tuple(depth))
        object.__setattr__(self, "children", tuple(tuple(k) for k in kids))

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def sink(self) -> int:
        return self.root

    def edges(self) -> list[int]:
        """Edge ids (the child endpoint), ascending."""
        return [v for v in range(self.n) if v != self.root]

    def scan_order(self) -> list[int]:
        """Nodes by ascending (distance to sink, id)."""
        return sorted(range(self.n), key=lambda v: (self.depth[v], v))

    def subtree_matrix(self) -> np.ndarray:
        """Boolean ``n x n`` matrix M with M[u, e] true iff edge e lies on u's route."""
        m = np.zeros((self.n, self.n), dtype=bool)
        for u in range(self.n):
            for e in path_to_root(self, u)[:-1]:
                m[u, e] = True
        return m


def build_line(n: int, c: int) -> TreeNetwork:
    """Path v_1 -> ... -> v_n with v_i as id i-1 and the sink at id n-1."""
    if n < 1 or c < 1:
        raise ValueError(f"build_line needs n >= 1 and c >= 1, got n={n}, c={c}")
    return TreeNetwork(tuple(list(range(1, n)) + [None]), c)


def build_tree(parents: Sequence[Optional[int]], c: int) -> TreeNetwork:
    return TreeNetwork(tuple(parents), c)


def build_star(leaves: int, c: int) -> TreeNetwork:
    """Center 0 is the sink; leaves 1..leaves point at it."""
    return TreeNetwork(tuple([None] + [0] * leaves), c)


def random_tree(n: int, c: int, rng: np.random.Generator) -> TreeNetwork:
    """Random recursive tree rooted at 0 (node i attaches to a uniform earlier node)."""
    parents: list[Optional[int]] = [None]
    for i in range(1, n):
        parents.append(int(rng.integers(0, i)))
    return TreeNetwork(tuple(parents), c)


def path_to_root(net: TreeNetwork, v: int) -> list[int]:
    if not 0 <= v < net.n:
        raise ValueError(f"unknown node {v}")
    path = [v]
    while net.parent[path[-1]] is not None:
        path.append(net.parent[path[-1]])
    return path
