"""Injection patterns and the (rho, sigma) burstiness audit.

A pattern emits, per round, the list of source nodes of the packets it
injects (one entry per packet).  The audit counts, for every edge and
every window of whole rounds [t, t'), the injections whose route to the
sink crosses that edge, and compares against rho*(t'-t) + sigma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .topology import TreeNetwork

Number = Union[int, Fraction, str]


class AdaptivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class BurstinessBound:
    rho: Fraction
    sigma: Fraction

    def __init__(self, rho: Number, sigma: Number):
        rho, sigma = Fraction(rho), Fraction(sigma)
        if rho < 0 or sigma < 0:
            raise ValueError(f"rho and sigma must be non-negative, got ({rho}, {sigma})")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)

    def allowance(self, rounds: int) -> Fraction:
        return self.rho * rounds + self.sigma

    def __str__(self):
        return f"({self.rho},{self.sigma})"


@dataclass(frozen=True)
class Violation:
    edge: int  # child endpoint of the edge
    head: Optional[int]
    start: int  # window [start, end) in rounds
    end: int
    count: int
    bound: BurstinessBound

    @property
    def allowed(self) -> Fraction:
        return self.bound.allowance(self.end - self.start)

    def __str__(self):
        return (
            f"violation edge {self.edge}->{self.head} window [{self.start},{self.end}) "
            f"count {self.count} > {self.allowed} = {self.bound.rho}*{self.end - self.start}+{self.bound.sigma}"
        )


@njit(cache=True)
def _accumulate_subtrees(sub, leaves_first, parent, root):
    """In place: row v becomes the total over v's subtree (an edge carries its child's subtree)."""
    for v in leaves_first:
        p = parent[v]
        if p >= 0 and p != root:
            sub[p] += sub[v]


class InjectionTrace:
    """Per-round source lists.  Round t (1-based) lives at ``rounds[t-1]``.

    Traces built with ``from_arrays`` keep the flat (round, node) arrays and
    only materialize the per-round lists when ``rounds`` is first read.
    """

    def __init__(self, net: TreeNetwork, rounds: Optional[list[list[int]]] = None):
        self.net = net
        self._rounds: Optional[list[list[int]]] = [] if rounds is None else list(rounds)
        self._flat: Optional[tuple[int, np.ndarray, np.ndarray]] = None

    @classmethod
    def from_arrays(cls, net: TreeNetwork, horizon: int, rounds: np.ndarray, nodes: np.ndarray) -> "InjectionTrace":
        """Build from parallel (1-based round, node) arrays sorted by round."""
        tr = cls(net)
        tr._rounds = None
        tr._flat = (horizon, np.asarray(rounds, dtype=np.int64), np.asarray(nodes, dtype=np.int64))
        return tr

    @property
    def rounds(self) -> list[list[int]]:
        if self._rounds is None:
            horizon, rnd, nodes = self._flat
            cuts = np.searchsorted(rnd, np.arange(2, horizon + 1))
            self._rounds = [chunk.tolist() for chunk in np.split(nodes, cuts)] if horizon else []
            self._flat = None
        return self._rounds

    @property
    def horizon(self) -> int:
        return self._flat[0] if self._rounds is None else len(self._rounds)

    def total(self) -> int:
        if self._rounds is None:
            return int(self._flat[1].shape[0])
        return sum(len(r) for r in self._rounds)

    def __repr__(self) -> str:
        return f"InjectionTrace(n={self.net.n}, horizon={self.horizon}, total={self.total()})"

    def node_counts(self) -> np.ndarray:
        """``(T, n)`` injections per round and source."""
        n, T = self.net.n, self.horizon
        if self._rounds is None:
            rows, cols = self._flat[1] - 1, self._flat[2]
        else:
            lens = [len(srcs) for srcs in self._rounds]
            rows = np.repeat(np.arange(T), lens)
            cols = np.fromiter(chain.from_iterable(self._rounds), dtype=np.int64, count=sum(lens))
        return np.bincount(rows * n + cols, minlength=T * n).reshape(T, n).astype(np.int64, copy=False)

    def edge_major_counts(self) -> np.ndarray:
        """``(E, T)`` crossing counts, rows ordered as ``net.edges()``."""
        net = self.net
        sub = np.ascontiguousarray(self.node_counts().T)
        parent = np.array([-1 if p is None else p for p in net.parent], dtype=np.int64)
        _accumulate_subtrees(sub, np.array(net.scan_order()[::-1], dtype=np.int64), parent, net.root)
        return sub[net.edges()]

    def edge_counts(self) -> np.ndarray:
        """``(T, E)`` crossing counts, columns ordered as ``net.edges()``."""
        return self.edge_major_counts().T

    def lines(self) -> list[str]:
        return [f"{t},{v}" for t, srcs in enumerate(self.rounds, start=1) for v in srcs]


def _scaled(bound: BurstinessBound) -> tuple[int, int, int]:
    """Integers (k, r, s) with k*count <= r*len + s equivalent to the bound."""
    k = math.lcm(bound.rho.denominator, bound.sigma.denominator)
    return k, int(bound.rho * k), int(bound.sigma * k)


@njit(cache=True)
def _first_violating_row(counts, k, r, s):
    """Index of the first row with some window sum of k*count - r above s, else -1.

    One pass per row: the best window ending at b starts at the running
    minimum of the prefix sums before b.
    """
    E, T = counts.shape
    for i in range(E):
        acc = 0
        low = 0
        for t in range(T):
            acc += k * counts[i, t] - r
            if acc - low > s:
                return i
            if acc < low:
                low = acc
    return -1


def audit(trace: InjectionTrace, bound: BurstinessBound) -> Optional[Violation]:
    """First (edge, t, t') violation in lexicographic order, or None when compliant.

    Per edge this is linear in T: with A the prefix sums of k*count - r,
    the edge is violated iff some A(b) - A(a) > s with a < b.
    """
    if trace.horizon == 0:
        return None
    k, r, s = _scaled(bound)
    edges = trace.net.edges()
    if not edges:
        return None
    counts = trace.edge_major_counts()
    row = _first_violating_row(counts, k, r, s)
    if row < 0:
        return None
    a_vals = np.concatenate([[0], np.cumsum(counts[row] * k - r)])
    later_max = np.maximum.accumulate(a_vals[::-1])[::-1]  # max over b >= a
    for a in range(counts.shape[1]):
        if later_max[a + 1] - a_vals[a] > s:
            b = a + 1 + int(np.argmax(a_vals[a + 1:] - a_vals[a] > s))
            e = edges[row]
            count = int(counts[row, a:b].sum())
            return Violation(e, trace.net.parent[e], a + 1, b + 1, count, bound)
    raise AssertionError("slack scan and window scan disagree")


def audit_exhaustive(trace: InjectionTrace, bound: BurstinessBound) -> Optional[Violation]:
    """Reference audit: every edge, every window [t, t') with 1 <= t < t' <= T+1."""
    T = trace.horizon
    if T == 0:
        return None
    counts = trace.edge_counts()
    rn, rd = bound.rho.numerator, bound.rho.denominator
    sn, sd = bound.sigma.numerator, bound.sigma.denominator
    starts = np.arange(1, T + 1)[:, None]
    ends = np.arange(1, T + 2)[None, :]
    length = ends - starts
    # count <= rn/rd * len + sn/sd  <=>  count*rd*sd <= rn*sd*len + sn*rd
    rhs = rn * sd * length + sn * rd
    for col, e in enumerate(trace.net.edges()):
        prefix = np.concatenate([[0], np.cumsum(counts[:, col])])
        window = prefix[ends - 1] - prefix[starts - 1]
        mask = (length > 0) & (window * rd * sd > rhs)
        hits = np.argwhere(mask)
        if hits.size:
            i, j = hits[0]
            t, t2 = int(starts[i, 0]), int(ends[0, j])
            return Violation(e, trace.net.parent[e], t, t2, int(window[i, j]), bound)
    return None


# -- patterns -----------------------------------------------------------------


class InjectionPattern:
    adaptive = False
    kind = "pattern"

    def emit(self, round_no: int, loads: Optional[Sequence[int]] = None) -> list[int]:
        raise NotImplementedError


class NoInjections(InjectionPattern):
    kind = "none"

    def emit(self, round_no, loads=None):
        return []


@dataclass
class ConstantAtNode(InjectionPattern):
    node: int
    per_round: int = 1
    kind = "constant"

    def __post_init__(self):
        if self.per_round < 1:
            raise ValueError("per_round must be positive")

    def emit(self, round_no, loads=None):
        return [self.node] * self.per_round


def constant_at_node(v: int, per_round: int = 1) -> ConstantAtNode:
    return ConstantAtNode(v, per_round)


@dataclass
class TwoPhase(InjectionPattern):
    """Rounds 1..n/2 hit v_1, v_3, ...; rounds n/2+1..n hit v_{n-1} (line ids)."""

    n: int
    kind = "two-phase"

    def __post_init__(self):
        if self.n % 2 or self.n < 4:
            raise ValueError(f"two_phase needs an even n >= 4, got {self.n}")

    def emit(self, round_no, loads=None):
        half = self.n // 2
        if 1 <= round_no <= half:
            return [2 * round_no - 2]
        if half < round_no <= self.n:
            return [self.n - 2]
        return []


def two_phase(n: int) -> TwoPhase:
    return TwoPhase(n)


@dataclass
class AdaptiveMaxLoad(InjectionPattern):
    """Chase the heaviest buffer with c packets a round, then burst c + sigma once.

    Meant for a line with ids v_1..v_n = 0..n-1.  Ties go to the smallest id.
    """

    c: int
    sigma: int
    adaptive = True
    kind = "adaptive-max-load"
    done: bool = False
    burst_round: Optional[int] = None

    def emit(self, round_no, loads=None):
        if loads is None:
            raise AdaptivityError("adaptive_max_load needs the start-of-round configuration")
        if self.done:
            return []
        if round_no == 1:
            return [0] * self.c
        top = max(loads)
        target = loads.index(top)
        if top >= self.c:
            self.done = True
            self.burst_round = round_no
            return [target] * (self.c + self.sigma)
        return [target] * self.c


def adaptive_max_load(c: int, sigma: int) -> AdaptiveMaxLoad:
    return AdaptiveMaxLoad(c, sigma)


@dataclass
class Scripted(InjectionPattern):
    """Replays a fixed per-round source list; silent past its end."""

    rounds: list[list[int]]
    kind = "scripted"

    def emit(self, round_no, loads=None):
        if 1 <= round_no <= len(self.rounds):
            return list(self.rounds[round_no - 1])
        return []


class TokenBucketRandom(InjectionPattern):
    """Seeded random injections shaped by per-edge token buckets.

    Each edge holds a bucket of depth rho + sigma refilled by rho at every
    round start, so any window of w rounds spends at most rho*w + sigma
    tokens on that edge.  Requires integer rho.  With ``chase`` > 0 the
    pattern aims at the heaviest buffer with that probability (adaptive).
    """

    kind = "random"

    def __init__(self, net: TreeNetwork, rho: int, sigma: int, seed: int, chase: float = 0.0):
        self.net = net
        self.rho, self.sigma = int(rho), int(sigma)
        self.rng = np.random.default_rng(seed)
        self.chase = chase
        self.adaptive = chase > 0
        self.depth_cap = self.rho + self.sigma
        self.tokens = [self.depth_cap] * net.n
        self.routes = [self._route(v) for v in range(net.n)]
        self.targets = [v for v in range(net.n) if v != net.root]
        self.focus = self.targets[0] if self.targets else net.root

    def _route(self, v):
        out = []
        while self.net.parent[v] is not None:
            out.append(v)
            v = self.net.parent[v]
        return out

    def emit(self, round_no, loads=None):
        if not self.targets:
            return []
        rng = self.rng
        if round_no > 1:
            self.tokens = [min(t + self.rho, self.depth_cap) for t in self.tokens]
        if rng.random() < 0.3:
            return []
        if self.adaptive and loads is not None and rng.random() < self.chase:
            top = max(loads)
            self.focus = loads.index(top) if top > 0 else self.focus
        elif rng.random() < 0.2:
            self.focus = self.targets[int(rng.integers(len(self.targets)))]
        out = []
        for _ in range(int(rng.integers(1, 2 * self.rho + self.sigma + 1))):
            v = self.focus if rng.random() < 0.7 else self.targets[int(rng.integers(len(self.targets)))]
            route = self.routes[v]
            if all(self.tokens[e] >= 1 for e in route):
                for e in route:
                    self.tokens[e] -= 1
                out.append(v)
        return out
