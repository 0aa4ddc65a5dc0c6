"""Ministep-exact round semantics.

A round is zero or more injection ministeps followed by exactly ``c``
forwarding ministeps.  Forwarded packets are in transit until the round
ends, then land on top of their receiver's buffer.  Buffers are LIFO
stacks; a packet's position is its 1-based index in the stack.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Optional, Sequence

from .topology import TreeNetwork

if TYPE_CHECKING:
    from .adversary import InjectionTrace

SINK_HEIGHT = float("-inf")


class SimulationError(RuntimeError):
    pass


class PhaseError(SimulationError):
    pass


class PolicyError(SimulationError):
    pass


class CapacityError(SimulationError):
    pass


class CheckerViolation(SimulationError):
    def __init__(self, event: "CheckEvent"):
        super().__init__(
            f"{event.checker} failed at round {event.round}, ministep {event.ministep}: {event.detail}"
        )
        self.event = event


def level_of(pos: int, c: int) -> int:
    return -(-pos // c)


def height_of(load: int, c: int) -> int:
    """Height of a non-sink buffer holding ``load`` packets (0 when empty)."""
    return -(-load // c)


class Phase(enum.Enum):
    INJECTION = "inject"
    FORWARDING = "forward"
    END = "end"


@dataclass(frozen=True)
class Packet:
    id: int
    source: int
    injected_round: int


@dataclass(frozen=True)
class CheckEvent:
    checker: str
    round: int
    ministep: int
    verdict: str  # "pass", "fail" or "note"
    detail: str = ""


@dataclass(frozen=True)
class TraceRecord:
    round: int
    phase: str
    ministep: int
    node: Optional[int]
    loads: tuple[int, ...]
    in_transit: int
    delivered: int


@dataclass(frozen=True)
class RoundReport:
    round: int
    loads: tuple[int, ...]
    injected: int
    delivered: int
    delivered_total: int


class Configuration:
    """Buffers, in-transit packets and per-edge counters between ministeps."""

    def __init__(self, net: TreeNetwork):
        self.net = net
        # the sink's slot stays empty; it absorbs packets instead of storing them
        self.buffers: list[list[int]] = [[] for _ in range(net.n)]
        self.in_transit: list[tuple[int, int, int]] = []  # (sender, ministep k, packet id)
        self.delivered: list[int] = []
        self.forwarded = [0] * net.n

    def load(self, v: int) -> int:
        return len(self.buffers[v])

    def loads(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.buffers)

    def height(self, v: int):
        if v == self.net.root:
            return SINK_HEIGHT
        return height_of(len(self.buffers[v]), self.net.capacity)

    def position(self, v: int, pid: int) -> int:
        return self.buffers[v].index(pid) + 1

    def live_count(self) -> int:
        return sum(len(b) for b in self.buffers) + len(self.in_transit)


class Checker:
    """Observer hooks called synchronously by an Execution.

    Each hook may return an iterable of CheckEvents (or None).  Checkers
    must not mutate the execution.
    """

    name = "checker"

    def on_start(self, ex: "Execution"):
        return None

    def on_inject(self, ex: "Execution", pid: int):
        return None

    def on_forwarding_begins(self, ex: "Execution"):
        return None

    def on_forward(self, ex: "Execution", k: int, loads: tuple[int, ...], forwarders: frozenset[int]):
        return None

    def on_round_end(self, ex: "Execution", report: RoundReport):
        return None

    def on_boundary(self, ex: "Execution"):
        return None

    def on_finish(self, ex: "Execution"):
        return None


@dataclass
class ExecutionTrace:
    net: TreeNetwork
    records: list[TraceRecord] = field(default_factory=list)
    events: list[CheckEvent] = field(default_factory=list)
    injections: Optional["InjectionTrace"] = None
    peak: list[int] = field(default_factory=list)
    delivered: int = 0
    rounds: int = 0

    @property
    def global_peak(self) -> int:
        return max(self.peak) if self.peak else 0

    @property
    def failures(self) -> list[CheckEvent]:
        return [e for e in self.events if e.verdict == "fail"]


class Execution:
    """One run of a policy against an injection pattern on a tree."""

    def __init__(
        self,
        net: TreeNetwork,
        policy=None,
        pattern=None,
        checkers: Iterable[Checker] = (),
        record: bool = True,
        strict: bool = True,
    ):
        from .adversary import InjectionTrace

        self.net = net
        self.c = net.capacity
        self.policy = policy
        self.pattern = pattern
        self.checkers = list(checkers)
        self.record = record
        self.strict = strict
        self.config = Configuration(net)
        self.packets: list[Packet] = []
        self.round = 1
        self.phase = Phase.INJECTION
        self.k = 0  # forwarding ministeps done this round
        self.ministep = 1  # index of the next ministep
        self.injected_this_round = 0
        self.injection_trace = InjectionTrace(net, [])
        self.trace = ExecutionTrace(net, peak=[0] * net.n, injections=self.injection_trace)
        self._started = False

    # -- bookkeeping -------------------------------------------------------

    def _emit(self, events):
        if not events:
            return
        for ev in events:
            self.trace.events.append(ev)
            if ev.verdict == "fail" and self.strict:
                raise CheckerViolation(ev)

    def _notify(self, hook: str, *args):
        for ch in self.checkers:
            self._emit(getattr(ch, hook)(self, *args))

    def _boundary(self, phase: str, node: Optional[int] = None):
        if self.record:
            cfg = self.config
            self.trace.records.append(
                TraceRecord(
                    self.round, phase, self.ministep, node, cfg.loads(),
                    len(cfg.in_transit), len(cfg.delivered),
                )
            )
        self._notify("on_boundary")

    def start(self):
        if not self._started:
            self._started = True
            self._notify("on_start")
            self._boundary("init")

    # -- ministeps ---------------------------------------------------------

    def inject(self, node: int) -> int:
        self.start()
        if self.phase is not Phase.INJECTION:
            raise PhaseError(f"injection attempted during {self.phase.value} phase")
        if not 0 <= node < self.net.n:
            raise ValueError(f"unknown node {node}")
        pid = len(self.packets)
        self.packets.append(Packet(pid, node, self.round))
        while len(self.injection_trace.rounds) < self.round:
            self.injection_trace.rounds.append([])
        self.injection_trace.rounds[self.round - 1].append(node)
        if node == self.net.root:
            self.config.delivered.append(pid)
        else:
            buf = self.config.buffers[node]
            buf.append(pid)
            if len(buf) > self.trace.peak[node]:
                self.trace.peak[node] = len(buf)
        self.injected_this_round += 1
        self._notify("on_inject", pid)
        self.ministep += 1
        self._boundary("inject", node)
        return pid

    def forward_ministep(self, forwarders: Iterable[int]) -> None:
        self.start()
        if self.phase is Phase.INJECTION:
            self.phase = Phase.FORWARDING
            self._notify("on_forwarding_begins")
        cfg = self.config
        fw = frozenset(forwarders)
        if self.phase is not Phase.FORWARDING:
            # every ministep past the c-th would overrun some forwarder's edge
            for v in fw:
                if v != self.net.root and cfg.forwarded[v] >= self.c:
                    raise CapacityError(f"edge {v}->{self.net.parent[v]} exceeds capacity {self.c} this round")
            raise PhaseError(f"forwarding attempted during {self.phase.value} phase")
        for v in fw:
            if v == self.net.root:
                raise PolicyError("the sink cannot forward")
            if not cfg.buffers[v]:
                raise PolicyError(f"node {v} asked to forward from an empty buffer")
            if cfg.forwarded[v] + 1 > self.c:
                raise CapacityError(f"edge {v}->{self.net.parent[v]} exceeds capacity {self.c} this round")
        self.k += 1
        self._notify("on_forward", self.k, cfg.loads(), fw)
        for v in sorted(fw):
            pid = cfg.buffers[v].pop()
            cfg.in_transit.append((v, self.k, pid))
            cfg.forwarded[v] += 1
        self.ministep += 1
        if self.k == self.c:
            self.phase = Phase.END
        else:
            self._boundary("forward")

    def end_of_round(self) -> RoundReport:
        if self.phase is not Phase.END:
            raise PhaseError(f"round {self.round} ended after {self.k} of {self.c} forwarding ministeps")
        cfg = self.config
        before = len(cfg.delivered)
        peak = self.trace.peak
        for sender, _, pid in sorted(cfg.in_transit):
            dest = self.net.parent[sender]
            if dest == self.net.root:
                cfg.delivered.append(pid)
            else:
                buf = cfg.buffers[dest]
                buf.append(pid)
                if len(buf) > peak[dest]:
                    peak[dest] = len(buf)
        cfg.in_transit.clear()
        cfg.forwarded = [0] * self.net.n
        report = RoundReport(
            self.round, cfg.loads(), self.injected_this_round,
            len(cfg.delivered) - before, len(cfg.delivered),
        )
        while len(self.injection_trace.rounds) < self.round:
            self.injection_trace.rounds.append([])
        self._notify("on_round_end", report)
        self.trace.rounds = self.round
        self.trace.delivered = len(cfg.delivered)
        self.round += 1
        self.phase = Phase.INJECTION
        self.k = 0
        self.injected_this_round = 0
        self._boundary("end")
        return report

    # -- driver ------------------------------------------------------------

    def play_round(self) -> RoundReport:
        self.start()
        if self.pattern is not None:
            for v in self.pattern.emit(self.round, self.config.loads()):
                self.inject(v)
        for _ in range(self.c):
            loads = self.config.loads()
            self.forward_ministep(self.policy.decide(self.net, loads, self.k + 1))
        return self.end_of_round()

    def run(self, rounds: int, stop: Optional[Callable[["Execution"], bool]] = None) -> ExecutionTrace:
        """Play ``rounds`` full rounds (fewer if ``stop`` returns true after a round)."""
        if rounds < 0:
            raise ValueError("rounds must be >= 0")
        self.start()
        for _ in range(rounds):
            self.play_round()
            if stop is not None and stop(self):
                break
        self._notify("on_finish")
        return self.trace


def simulate(
    net: TreeNetwork, policy, pattern, rounds: int, checkers: Sequence[Checker] = (),
    stop: Optional[Callable[[Execution], bool]] = None, **kw,
) -> ExecutionTrace:
    return Execution(net, policy, pattern, checkers, **kw).run(rounds, stop)
