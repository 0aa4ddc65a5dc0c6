"""Forwarding policies evaluated once per forwarding ministep.

Every policy maps ``(network, loads, k)`` to the set of nodes that
forward one packet in the k-th forwarding ministep.  ``loads`` is the
live snapshot: packets sent earlier in the round have left their sender
but have not yet arrived.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .engine import height_of
from .topology import TreeNetwork


class PathKind(enum.Enum):
    DOWNHILL_TO_SINK = "downhill-to-sink"
    DOWNHILL_TO_EMPTY = "downhill-to-empty"
    FLAT = "flat"


DEFAULT_PRIORITY = (PathKind.DOWNHILL_TO_SINK, PathKind.DOWNHILL_TO_EMPTY, PathKind.FLAT)


@dataclass(frozen=True)
class ActivationPath:
    kind: PathKind
    nodes: tuple[int, ...]  # toward the root; may end at the sink


@dataclass(frozen=True)
class ActivationPathSet:
    paths: tuple[ActivationPath, ...]
    sink: int
    activated: frozenset[int]  # path nodes holding a packet; they forward this ministep

    @property
    def nodes(self) -> frozenset[int]:
        """Every non-sink node on some path, including empty Downhill-to-Empty terminals."""
        return frozenset(v for p in self.paths for v in p.nodes if v != self.sink)


def _heights(net: TreeNetwork, loads: Sequence[int]) -> list[int]:
    c = net.capacity
    return [height_of(x, c) for x in loads]


def _walk(net: TreeNetwork, start: int, hts: list[int], used: list[bool]):
    """Follow parents from ``start`` through unused height-1 nodes.

    Returns (nodes, terminal) where terminal is the first node that is the
    sink, has height != 1, or is already used.
    """
    path = [start]
    w = net.parent[start]
    while w != net.root and not used[w] and hts[w] == 1:
        path.append(w)
        w = net.parent[w]
    return path, w


def fie_activation_paths(
    net: TreeNetwork, loads: Sequence[int], priority: Sequence[PathKind] = DEFAULT_PRIORITY
) -> ActivationPathSet:
    """Greedy maximal node-disjoint activation paths for one FIE ministep.

    Classes are filled in ``priority`` order; within a class the start
    nodes are scanned by ascending (distance to sink, id).  Flat paths are
    grown backward through unused height-1 children, smallest id first.
    """
    hts = _heights(net, loads)
    root = net.root
    used = [False] * net.n
    order = net.scan_order()
    paths: list[ActivationPath] = []

    def take(kind, nodes):
        for v in nodes:
            if v != root:
                used[v] = True
        paths.append(ActivationPath(kind, tuple(nodes)))

    for kind in priority:
        if kind is PathKind.FLAT:
            for u in order:
                if u == root or used[u] or hts[u] != 1:
                    continue
                body, term = _walk(net, u, hts, used)
                if term != root and (used[term] or hts[term] != 0):
                    continue
                # grow backward through unused height-1 children
                head = u
                prefix = []
                while True:
                    kids = [w for w in net.children[head] if not used[w] and hts[w] == 1]
                    if not kids:
                        break
                    head = min(kids)
                    prefix.append(head)
                take(kind, prefix[::-1] + body + [term])
            continue
        want_sink = kind is PathKind.DOWNHILL_TO_SINK
        for u in order:
            if u == root or used[u] or hts[u] < 2:
                continue
            body, term = _walk(net, u, hts, used)
            if want_sink and term == root:
                take(kind, body + [term])
            elif not want_sink and term != root and not used[term] and hts[term] == 0:
                take(kind, body + [term])
    on_paths = {v for p in paths for v in p.nodes if v != root}
    return ActivationPathSet(tuple(paths), root, frozenset(v for v in on_paths if loads[v] > 0))


def local_fie_decide(own: int, parent_load: Optional[int]) -> bool:
    """Forward iff nonempty and the parent is the sink (None) or empty."""
    return own > 0 and (parent_load is None or parent_load == 0)


def local_downhill_decide(own: int, parent_load: Optional[int]) -> bool:
    return own > 0 and (parent_load is None or parent_load < own)


def greedy_decide(own: int) -> bool:
    return own > 0


class Policy:
    name = "policy"

    def decide(self, net: TreeNetwork, loads: Sequence[int], k: int) -> frozenset[int]:
        raise NotImplementedError


class FIE(Policy):
    """Centralized Forward-If-Empty."""

    name = "fie"

    def __init__(self, priority: Sequence[PathKind] = DEFAULT_PRIORITY):
        self.priority = tuple(priority)

    def paths(self, net, loads) -> ActivationPathSet:
        return fie_activation_paths(net, loads, self.priority)

    def decide(self, net, loads, k):
        return self.paths(net, loads).activated


def fie_decide(net: TreeNetwork, loads: Sequence[int], k: int = 1) -> frozenset[int]:
    return FIE().decide(net, loads, k)


class _Local(Policy):
    rule = staticmethod(local_fie_decide)

    def decide(self, net, loads, k):
        root = net.root
        out = []
        for v in range(net.n):
            if v == root:
                continue
            p = net.parent[v]
            if self.rule(loads[v], None if p == root else loads[p]):
                out.append(v)
        return frozenset(out)


class LocalFIE(_Local):
    name = "local-fie"
    rule = staticmethod(local_fie_decide)


class LocalDownhill(_Local):
    name = "local-downhill"
    rule = staticmethod(local_downhill_decide)


class Greedy(Policy):
    name = "greedy"

    def decide(self, net, loads, k):
        return frozenset(v for v in range(net.n) if v != net.root and greedy_decide(loads[v]))


INVERTED_PRIORITY = tuple(reversed(DEFAULT_PRIORITY))

POLICIES = {
    "fie": FIE,
    "local-fie": LocalFIE,
    "local-downhill": LocalDownhill,
    "greedy": Greedy,
    # mutation fixture used to show the checkers can fail
    "fie-inverted": lambda: FIE(INVERTED_PRIORITY),
}


def get_policy(name: str) -> Policy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
