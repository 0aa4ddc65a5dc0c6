"""Brute-force reference computations.

These walk packet positions and enumerate subsets or paths directly and
share no code with ``analysis`` or ``policies``; they are only meant for
small networks.
"""
from __future__ import annotations

from itertools import combinations
from typing import Sequence

from .topology import TreeNetwork

NEG_INF = float("-inf")


def packet_levels(load: int, c: int) -> list[int]:
    levels = []
    for pos in range(1, load + 1):
        lvl = 1
        while lvl * c < pos:
            lvl += 1
        levels.append(lvl)
    return levels


def brute_height(net: TreeNetwork, loads: Sequence[int], v: int):
    if v == net.root:
        return NEG_INF
    return max(packet_levels(loads[v], net.capacity), default=0)


def _connected(net: TreeNetwork, nodes: frozenset[int]) -> bool:
    start = next(iter(nodes))
    seen = {start}
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for w in nodes:
            if w not in seen and (net.parent[w] == u or net.parent[u] == w):
                seen.add(w)
                frontier.append(w)
    return seen == nodes


def brute_plateaus(net: TreeNetwork, loads: Sequence[int], h: int) -> set[frozenset[int]]:
    """Maximal connected node sets where all hold a level h-1 packet and one a level h packet."""
    c = net.capacity
    cand = [v for v in range(net.n) if v != net.root]
    levels = {v: set(packet_levels(loads[v], c)) for v in cand}
    qualifying = []
    for size in range(1, len(cand) + 1):
        for combo in combinations(cand, size):
            s = frozenset(combo)
            if all(h - 1 in levels[v] for v in s) and any(h in levels[v] for v in s) and _connected(net, s):
                qualifying.append(s)
    return {s for s in qualifying if not any(s < t for t in qualifying)}


def brute_k_load(net: TreeNetwork, loads: Sequence[int], nodes, k: int) -> int:
    return sum(1 for v in nodes if v != net.root for lvl in packet_levels(loads[v], net.capacity) if lvl >= k)


def brute_exit_landing(net: TreeNetwork, loads: Sequence[int], nodes: frozenset[int], h: int):
    found = []
    for v in nodes:
        p = net.parent[v]
        if p is not None and p not in nodes and brute_height(net, loads, p) <= h - 2:
            found.append((v, p))
    return found


# -- activation paths ---------------------------------------------------------


def classify(net: TreeNetwork, loads: Sequence[int], nodes: Sequence[int]) -> set[str]:
    """Path types a node sequence (toward the root) satisfies."""
    hts = [brute_height(net, loads, v) for v in nodes]
    kinds = set()
    if len(nodes) < 2:
        return kinds
    first, last, middle = hts[0], hts[-1], hts[1:-1]
    last_is_sink = nodes[-1] == net.root
    if first > 1 and all(x == 1 for x in middle):
        if last_is_sink:
            kinds.add("downhill-to-sink")
        elif last == 0:
            kinds.add("downhill-to-empty")
    if (last_is_sink or last == 0) and all(x == 1 for x in hts[:-1]):
        kinds.add("flat")
    return kinds


def all_candidate_paths(net: TreeNetwork, loads: Sequence[int]) -> list[tuple[str, tuple[int, ...]]]:
    """Every (type, path) over all start/ancestor pairs."""
    out = []
    for u in range(net.n):
        if u == net.root:
            continue
        path = [u]
        while net.parent[path[-1]] is not None:
            path.append(net.parent[path[-1]])
            for kind in sorted(classify(net, loads, path)):
                out.append((kind, tuple(path)))
    return out


def _nonsink(net, nodes):
    return {v for v in nodes if v != net.root}


def activation_path_problems(net: TreeNetwork, loads: Sequence[int], ap, maximality: bool = True) -> list[str]:
    """Structural defects of an activation-path set against the FIE rules."""
    problems = []
    used: set[int] = set()
    for p in ap.paths:
        kinds = classify(net, loads, p.nodes)
        if p.kind.value not in kinds:
            problems.append(f"{p.kind.value} path {p.nodes} has types {sorted(kinds)}")
        for a, b in zip(p.nodes, p.nodes[1:]):
            if net.parent[a] != b:
                problems.append(f"path {p.nodes} does not follow tree edges")
        mine = _nonsink(net, p.nodes)
        if mine & used:
            problems.append(f"path {p.nodes} overlaps earlier paths at {sorted(mine & used)}")
        used |= mine
    for v in ap.activated:
        if loads[v] == 0:
            problems.append(f"activated node {v} is empty")
    if not maximality:
        return problems
    cands = all_candidate_paths(net, loads)
    by_kind = lambda *ks: _nonsink(net, (v for p in ap.paths if p.kind.value in ks for v in p.nodes))
    dts = by_kind("downhill-to-sink")
    down = by_kind("downhill-to-sink", "downhill-to-empty")
    for kind, path in cands:
        free = not (_nonsink(net, path) & used)
        if free:
            problems.append(f"addable {kind} path {path}")
        if kind == "downhill-to-sink" and not (_nonsink(net, path) & dts):
            problems.append(f"downhill-to-sink path {path} was free before lower classes ran")
        if kind in ("downhill-to-sink", "downhill-to-empty") and not (_nonsink(net, path) & down):
            problems.append(f"{kind} path {path} was free before flat paths ran")
    for p in ap.paths:
        if p.kind.value == "flat":
            for w in net.children[p.nodes[0]]:
                if w not in used and brute_height(net, loads, w) == 1:
                    problems.append(f"flat path {p.nodes} extends backward to {w}")
    return problems
