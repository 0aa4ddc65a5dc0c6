"""Plateaus, k-loads and the runtime checkers built on them.

Buffers are gap-free, so a node holds a packet at level L exactly when
its load is at least (L-1)*c + 1.  Everything here is computed from
per-node loads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .engine import SINK_HEIGHT, Checker, CheckEvent, Execution, height_of, level_of
from .topology import TreeNetwork


class MalformedPlateau(ValueError):
    pass


@dataclass(frozen=True)
class Plateau:
    nodes: frozenset[int]
    h: int
    ministep: Optional[int] = None

    def __contains__(self, v):
        return v in self.nodes

    def __len__(self):
        return len(self.nodes)


def has_level(load: int, level: int, c: int) -> bool:
    return load >= (level - 1) * c + 1


def node_height(net: TreeNetwork, loads: Sequence[int], v: int):
    if v == net.root:
        return SINK_HEIGHT
    return height_of(loads[v], net.capacity)


def find_plateaus(net: TreeNetwork, loads: Sequence[int], h: int, ministep: Optional[int] = None) -> list[Plateau]:
    """All h-plateaus, ordered by smallest member id."""
    if h < 2:
        raise ValueError(f"plateaus are defined for h >= 2, got {h}")
    c = net.capacity
    floor = [v != net.root and has_level(loads[v], h - 1, c) for v in range(net.n)]
    seen = [False] * net.n
    out = []
    for v in range(net.n):
        if not floor[v] or seen[v]:
            continue
        comp = []
        stack = [v]
        seen[v] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            nbrs = list(net.children[u])
            if net.parent[u] is not None:
                nbrs.append(net.parent[u])
            for w in nbrs:
                if floor[w] and not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if any(has_level(loads[u], h, c) for u in comp):
            out.append(Plateau(frozenset(comp), h, ministep))
    out.sort(key=lambda p: min(p.nodes))
    return out


def k_load(net: TreeNetwork, loads: Sequence[int], nodes: Iterable[int], k: int) -> int:
    """Packets at level k or higher within ``nodes``."""
    c = net.capacity
    return sum(max(0, loads[v] - (k - 1) * c) for v in nodes if v != net.root)


def total_two_load(net: TreeNetwork, loads: Sequence[int]) -> int:
    """Sum of 2-loads over all 2-plateaus."""
    return sum(k_load(net, loads, p.nodes, 2) for p in find_plateaus(net, loads, 2))


def exit_landing(net: TreeNetwork, loads: Sequence[int], plateau: Plateau) -> tuple[int, int]:
    """(exit node, landing node); the landing node may be the sink."""
    h = plateau.h
    exits = []
    for v in plateau.nodes:
        p = net.parent[v]
        if p is None:
            raise MalformedPlateau("the sink cannot belong to a plateau")
        if p not in plateau.nodes and node_height(net, loads, p) <= h - 2:
            exits.append(v)
    tops = [v for v in plateau.nodes if net.parent[v] not in plateau.nodes]
    if len(exits) != 1 or len(tops) != 1:
        raise MalformedPlateau(f"{sorted(plateau.nodes)} has exits {sorted(exits)}")
    return exits[0], net.parent[exits[0]]


def pre_image(end: Plateau, starts: Sequence[Plateau]) -> list[Plateau]:
    return [p for p in starts if p.h == end.h and p.nodes <= end.nodes]


def invariant_I_bound(injected_since_flat: int, rounds_since_flat: int, c: int) -> int:
    return injected_since_flat - c * rounds_since_flat


# -- checkers -----------------------------------------------------------------


def _fail(name, ex: Execution, detail: str):
    return [CheckEvent(name, ex.round, ex.ministep, "fail", detail)]


class InvariantI(Checker):
    """Sum of 2-loads of 2-plateaus <= totalinj(flat(s), s-1) - c*(round(s) - round(flat(s)))."""

    name = "invariant_I"

    def on_start(self, ex):
        self.flat_ministep = None
        self.flat_round = None
        self.injected = 0
        self.checks = 0
        self.worst_slack = math.inf

    def on_inject(self, ex, pid):
        self.injected += 1

    def on_boundary(self, ex):
        c = ex.c
        loads = ex.config.loads()
        if max(loads) <= c:
            self.flat_ministep, self.flat_round, self.injected = ex.ministep, ex.round, 0
            return None
        self.checks += 1
        lhs = total_two_load(ex.net, loads)
        rhs = invariant_I_bound(self.injected, ex.round - self.flat_round, c)
        self.worst_slack = min(self.worst_slack, rhs - lhs)
        if lhs > rhs:
            return _fail(
                self.name, ex,
                f"2-load {lhs} > {rhs} (injected {self.injected} since ministep {self.flat_ministep}, "
                f"{ex.round - self.flat_round} rounds)",
            )
        return None

    def on_finish(self, ex):
        return [CheckEvent(self.name, ex.round, ex.ministep, "pass", f"{self.checks} non-flat boundaries checked")]


class ForwardLose(Checker):
    """Each end-of-round 2-plateau lost at least c from its pre-image's 2-load.

    The start snapshot is the first forwarding ministep, after the round's
    injections, so injected packets are already counted on both sides.
    """

    name = "forward_lose"

    def on_start(self, ex):
        self.start_loads = None
        self.rounds_checked = 0
        self.empty_preimages = 0

    def on_forwarding_begins(self, ex):
        self.start_loads = ex.config.loads()

    def on_round_end(self, ex, report):
        if self.start_loads is None:
            return None
        out = check_forward_lose(ex.net, self.start_loads, report.loads)
        self.start_loads = None
        self.rounds_checked += 1
        events = []
        for verdict, detail in out:
            if verdict == "note":
                self.empty_preimages += 1
            events.append(CheckEvent(self.name, ex.round, ex.ministep, verdict, detail))
        return events

    def on_finish(self, ex):
        return [CheckEvent(self.name, ex.round, ex.ministep, "pass", f"{self.rounds_checked} rounds checked")]


def check_forward_lose(net: TreeNetwork, start: Sequence[int], end: Sequence[int]) -> list[tuple[str, str]]:
    """Problems found comparing a round's first-ministep loads with its end loads.

    Returns ("fail", detail) for a plateau that did not lose c, and
    ("note", detail) for an end plateau with an empty pre-image.
    """
    c = net.capacity
    starts = find_plateaus(net, start, 2)
    out = []
    for p in find_plateaus(net, end, 2):
        pre = pre_image(p, starts)
        if not pre:
            out.append(("note", f"2-plateau {sorted(p.nodes)} has an empty pre-image"))
            continue
        union = frozenset().union(*(q.nodes for q in pre))
        after = k_load(net, end, p.nodes, 2)
        before = k_load(net, start, union, 2)
        if after > before - c:
            out.append(("fail", f"2-plateau {sorted(p.nodes)}: 2-load {after} > {before} - {c}"))
    return out


class ExitForwards(Checker):
    """Per ministep: a 2-plateau's 2-load never grows, and drops when its exit forwards."""

    name = "exit_forwards"

    def on_start(self, ex):
        self.pending = None

    def on_forward(self, ex, k, loads, forwarders):
        pending = []
        for p in find_plateaus(ex.net, loads, 2):
            exit_node, _ = exit_landing(ex.net, loads, p)
            pending.append((p, k_load(ex.net, loads, p.nodes, 2), exit_node in forwarders))
        self.pending = pending

    def on_boundary(self, ex):
        if not self.pending:
            self.pending = None
            return None
        loads = ex.config.loads()
        events = []
        for p, before, activated in self.pending:
            after = k_load(ex.net, loads, p.nodes, 2)
            if after > before - (1 if activated else 0):
                events.append(CheckEvent(
                    self.name, ex.round, ex.ministep, "fail",
                    f"2-plateau {sorted(p.nodes)}: 2-load {before} -> {after}, exit activated={activated}",
                ))
        self.pending = None
        return events


class ArrivesAtOne(Checker):
    """Packets received at a round's end sit at level 1."""

    name = "arrives_at_one"

    def on_start(self, ex):
        self.sent = []

    def on_forward(self, ex, k, loads, forwarders):
        bufs = ex.config.buffers
        self.sent.extend(bufs[v][-1] for v in forwarders)

    def on_round_end(self, ex, report):
        net, c = ex.net, ex.c
        where = {pid: v for v, buf in enumerate(ex.config.buffers) for pid in buf}
        events = []
        for pid in self.sent:
            v = where.get(pid)
            if v is None:
                continue  # delivered
            lvl = level_of(ex.config.position(v, pid), c)
            if lvl != 1:
                events.append(CheckEvent(self.name, ex.round, ex.ministep, "fail", f"packet {pid} landed at level {lvl} in node {v}"))
        self.sent = []
        return events


class LevelMonotone(Checker):
    """No packet's level rises between consecutive boundaries."""

    name = "level_monotone"

    def on_start(self, ex):
        self.prev = {}

    def on_boundary(self, ex):
        c = ex.c
        now = {pid: level_of(i + 1, c) for buf in ex.config.buffers for i, pid in enumerate(buf)}
        events = []
        for pid, lvl in now.items():
            old = self.prev.get(pid)
            if old is not None and lvl > old:
                events.append(CheckEvent(self.name, ex.round, ex.ministep, "fail", f"packet {pid} rose from level {old} to {lvl}"))
        self.prev = now
        return events


class Conservation(Checker):
    """injected = buffered + in transit + delivered, and per-edge counters <= c."""

    name = "conservation"

    def on_boundary(self, ex):
        cfg = ex.config
        live = cfg.live_count() + len(cfg.delivered)
        if live != len(ex.packets):
            return _fail(self.name, ex, f"{len(ex.packets)} injected but {live} accounted for")
        if max(cfg.forwarded) > ex.c:
            return _fail(self.name, ex, f"edge counter {max(cfg.forwarded)} exceeds {ex.c}")
        return None


class LoadBound(Checker):
    """Every buffer stays at or below ``limit``."""

    name = "load_bound"

    def __init__(self, limit: int):
        self.limit = limit

    def on_boundary(self, ex):
        loads = ex.config.loads()
        top = max(loads)
        if top > self.limit:
            return _fail(self.name, ex, f"node {loads.index(top)} holds {top} > {self.limit}")
        return None


class ActivationPathAudit(Checker):
    """Re-derive the FIE paths each ministep and check them against brute-force enumeration."""

    name = "activation_paths"

    def __init__(self, exhaustive_limit: int = 12):
        self.exhaustive_limit = exhaustive_limit

    def on_forward(self, ex, k, loads, forwarders):
        from .oracles import activation_path_problems
        from .policies import FIE

        if not isinstance(ex.policy, FIE):
            return None
        ap = ex.policy.paths(ex.net, loads)
        problems = activation_path_problems(ex.net, loads, ap, maximality=ex.net.n <= self.exhaustive_limit)
        return [CheckEvent(self.name, ex.round, ex.ministep, "fail", p) for p in problems]


# -- LOCAL-DOWNHILL sequence --------------------------------------------------


class DownhillSequenceLog(Checker):
    """Records S_j, the loads right after round j's injections (S_0 is the empty start)."""

    name = "downhill_log"

    def on_start(self, ex):
        self.states: list[tuple[int, ...]] = [ex.config.loads()]

    def on_forwarding_begins(self, ex):
        self.states.append(ex.config.loads())


def init_segment(state: Sequence[int]) -> tuple[int, ...]:
    out = []
    for x in state:
        if x == 0:
            break
        out.append(x)
    return tuple(out)


def front(state: Sequence[int]) -> int:
    seg = init_segment(state)
    return seg[0] if seg else 0


def tail(state: Sequence[int]) -> tuple[int, ...]:
    return init_segment(state)[1:]


@dataclass
class DownhillReport:
    status: str  # "pass", "fail" or "inconclusive"
    f: dict[int, int] = field(default_factory=dict)
    delta: dict[int, int] = field(default_factory=dict)
    problems: list[str] = field(default_factory=list)
    max_k: int = 0


def downhill_metrics(states: Sequence[Sequence[int]], last_node: Optional[int] = None) -> DownhillReport:
    """f(k), Delta_k and the structural identities over S_0..S_R.

    ``last_node`` is the index of the node next to the sink; if any initial
    segment reaches it the line was too short and the result is inconclusive.
    """
    states = [tuple(s) for s in states]
    R = len(states) - 1
    if last_node is None:
        last_node = len(states[0]) - 2
    rep = DownhillReport("pass")
    for j in range(1, R + 1):
        seg = init_segment(states[j])
        if len(seg) > last_node:
            rep.status = "inconclusive"
            rep.problems.append(f"init(S_{j}) reaches node {last_node} next to the sink")
            return rep
    f = {0: 1} if R >= 1 else {}
    k = 1
    for j in range(1, R + 1):
        while states[j][0] >= k:
            f[k] = j
            k += 1
    rep.f = f
    rep.max_k = max(f) if f else 0
    K = rep.max_k
    rep.delta = {k: f[k] - f[k - 1] for k in range(1, K + 1)}
    for k in range(1, K + 1):
        if f[k] != k * k - k + 1:
            rep.problems.append(f"f({k}) = {f[k]}, expected {k * k - k + 1}")
    for k in range(1, K):
        if rep.delta[k + 1] != rep.delta[k] + 2:
            rep.problems.append(f"Delta_{k + 1} = {rep.delta[k + 1]} but Delta_{k} = {rep.delta[k]}")
        if tail(states[f[k + 1]]) != init_segment(states[f[k] - 1]):
            rep.problems.append(f"tail(S_f({k + 1})) != init(S_f({k})-1)")
        if tail(states[f[k + 1] - 1]) != init_segment(states[f[k]]):
            rep.problems.append(f"tail(S_f({k + 1})-1) != init(S_f({k}))")
    for j in range(1, R + 1):
        if len(init_segment(states[j])) > states[j][0] + 1:
            rep.problems.append(f"width(init(S_{j})) exceeds load(v1) + 1")
    if rep.problems:
        rep.status = "fail"
    return rep


CHECKERS = {
    "invariant_I": InvariantI,
    "forward_lose": ForwardLose,
    "exit_forwards": ExitForwards,
    "arrives_at_one": ArrivesAtOne,
    "level_monotone": LevelMonotone,
    "conservation": Conservation,
    "activation_paths": ActivationPathAudit,
}
