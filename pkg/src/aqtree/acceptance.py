"""The verification suite behind ``aqtree verify`` and tests/test_acceptance.py.

Each criterion returns a CriterionResult with observed and expected
values.  Scenario sizes default to the full published settings; the
keyword arguments exist so tests can exercise the machinery on smaller
instances (the acceptance test always uses the defaults).
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from . import oracles
from .adversary import (
    AdaptiveMaxLoad,
    BurstinessBound,
    InjectionTrace,
    TokenBucketRandom,
    audit,
    audit_exhaustive,
    constant_at_node,
    two_phase,
)
from .analysis import (
    DownhillSequenceLog,
    ForwardLose,
    InvariantI,
    downhill_metrics,
    exit_landing,
    find_plateaus,
    k_load,
)
from .engine import Execution
from .fastsim import fie_random_run
from .policies import (
    DEFAULT_PRIORITY,
    FIE,
    INVERTED_PRIORITY,
    Greedy,
    LocalDownhill,
    LocalFIE,
    fie_activation_paths,
)
from .topology import build_line, random_tree


@dataclass
class CriterionResult:
    number: int
    name: str
    status: str  # pass / fail / inconclusive
    observed: str
    expected: str
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        return (
            f"[{self.status.upper():>12}] {self.number}. {self.name}: observed {self.observed}; "
            f"expected {self.expected} ({self.seconds:.2f}s)"
        )


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- 1. FIE upper bound -------------------------------------------------------

SWEEP_TOPOLOGIES = (("line", 10), ("line", 50), ("tree", 50))
SWEEP_CAPACITIES = (1, 2, 3)
SWEEP_SIGMAS = (0, 1, 5)


def _sweep_setting(setting) -> dict:
    topo, n, c, sigma, patterns, rounds, priority = setting
    peak = reached = noncompliant = inv = fl = notes = 0
    for i in range(patterns):
        seed = 100_000 * n + 1000 * (10 * c + sigma) + i + (7 if topo == "tree" else 0)
        net = build_line(n, c) if topo == "line" else random_tree(n, c, np.random.default_rng(seed))
        res = fie_random_run(net, sigma, rounds, seed, chase=0.5, priority=priority)
        if audit(res.injections, BurstinessBound(c, sigma)) is not None:
            noncompliant += 1
        peak = max(peak, res.peak)
        reached += res.peak == sigma + 2 * c
        inv += res.invariant_failures
        fl += res.forward_lose_failures
        notes += res.empty_preimages
    return dict(topology=topo, n=n, c=c, sigma=sigma, peak=peak, bound=sigma + 2 * c,
                reached=reached, noncompliant=noncompliant, invariant_failures=inv,
                forward_lose_failures=fl, empty_preimages=notes)


@lru_cache(maxsize=None)
def fie_sweep(patterns: int, rounds: int, priority=DEFAULT_PRIORITY, workers: int | None = None):
    settings = [
        (topo, n, c, sigma, patterns, rounds, priority)
        for topo, n in SWEEP_TOPOLOGIES for c in SWEEP_CAPACITIES for sigma in SWEEP_SIGMAS
    ]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        return tuple(map(_sweep_setting, settings))
    # settings are independent and each run is single-threaded
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return tuple(pool.map(_sweep_setting, settings))


@_timed
def criterion_1(patterns: int = 50, rounds: int = 10_000, priority=DEFAULT_PRIORITY) -> CriterionResult:
    """FIE keeps every buffer at or below sigma + 2c under audited patterns.

    ``priority`` exists for the mutation fixture (inverted path classes).
    """
    rows = fie_sweep(patterns, rounds, tuple(priority))
    over = [r for r in rows if r["peak"] > r["bound"]]
    bad_patterns = sum(r["noncompliant"] for r in rows)
    ok = not over and bad_patterns == 0
    worst = max(rows, key=lambda r: r["peak"] - r["bound"])
    return CriterionResult(
        1, "FIE upper bound sigma+2c",
        "pass" if ok else "fail",
        f"{len(rows)} settings x {patterns} patterns x {rounds} rounds; {len(over)} settings over the bound, "
        f"{bad_patterns} non-compliant patterns; max (peak - bound) = {worst['peak'] - worst['bound']}; "
        f"{sum(r['reached'] for r in rows)} runs hit sigma+2c exactly",
        "max load <= sigma+2c in every run, every pattern (c,sigma)-compliant",
        details={"rows": rows},
    )


# -- 2. existential lower bound ----------------------------------------------


@lru_cache(maxsize=None)
def max_load_runs(n: int = 10, max_rounds: int = 1000):
    rows = []
    for policy_name in ("fie", "greedy"):
        for c in (1, 2, 3):
            for sigma in range(5):
                net = build_line(n, c)
                pattern = AdaptiveMaxLoad(c, sigma)
                policy = FIE() if policy_name == "fie" else Greedy()
                checkers = [InvariantI(), ForwardLose()] if policy_name == "fie" else []
                ex = Execution(net, policy, pattern, checkers, strict=False)
                trace = ex.run(max_rounds, stop=lambda e: pattern.done)
                starts = [rec.loads for rec in trace.records if rec.phase in ("init", "end")]
                chase_ok = all(
                    max(starts[i - 1]) >= math.ceil(sum(Fraction(c, 2 ** k) for k in range(1, i)))
                    for i in range(1, len(starts) + 1)
                    if i - 1 <= (pattern.burst_round or len(starts))
                )
                rows.append(dict(
                    policy=policy_name, c=c, sigma=sigma, peak=trace.global_peak, target=sigma + 2 * c,
                    burst_round=pattern.burst_round,
                    compliant=audit(trace.injections, BurstinessBound(c, sigma)) is None,
                    chase_bound=chase_ok,
                    checker_failures=len(trace.failures),
                ))
    return tuple(rows)


@_timed
def criterion_2() -> CriterionResult:
    """Adaptive max-load pattern forces sigma + 2c against FIE and GREEDY."""
    rows = max_load_runs()
    bad = [r for r in rows if not (r["burst_round"] and r["peak"] >= r["target"] and r["compliant"] and r["chase_bound"])]
    exact = sum(1 for r in rows if r["policy"] == "fie" and r["peak"] == r["target"])
    return CriterionResult(
        2, "existential lower bound sigma+2c",
        "pass" if not bad else "fail",
        f"{len(rows) - len(bad)}/{len(rows)} runs reach sigma+2c and audit (c,sigma)-compliant; "
        f"FIE peak equals sigma+2c in {exact}/15; latest burst round {max(r['burst_round'] or 0 for r in rows)}",
        "every run reaches >= sigma+2c within 1000 rounds with a compliant trace",
        details={"rows": rows},
    )


# -- 3. LOCAL-FIE buildup -----------------------------------------------------


@_timed
def criterion_3(horizons=(1, 2, 999, 1000)) -> CriterionResult:
    """LOCAL-FIE lets v1 accumulate ceil(R/2) packets under one packet a round."""
    seen = {}
    for R in horizons:
        net = build_line(5, 1)
        trace = Execution(net, LocalFIE(), constant_at_node(0, 1), record=False).run(R)
        seen[R] = trace.peak[0]
    want = {R: math.ceil(R / 2) for R in horizons}
    return CriterionResult(
        3, "LOCAL-FIE load(v1) = ceil(R/2)",
        "pass" if seen == want else "fail",
        f"load(v1) {seen}", f"{want}",
    )


# -- 4. LOCAL-DOWNHILL quadratic law -----------------------------------------


@_timed
def criterion_4(n: int = 35, rounds: int = 871, k_max: int = 30, time_limit: float = 1.0) -> CriterionResult:
    """f(k) = k^2 - k + 1 and the tail/init identities for LOCAL-DOWNHILL."""
    t0 = time.perf_counter()
    log = DownhillSequenceLog()
    Execution(build_line(n, 1), LocalDownhill(), constant_at_node(0, 1), [log], record=False).run(rounds)
    rep = downhill_metrics(log.states)
    elapsed = time.perf_counter() - t0
    if rep.status == "inconclusive":
        return CriterionResult(4, "LOCAL-DOWNHILL f(k)=k^2-k+1", "inconclusive",
                               "; ".join(rep.problems), f"n >= sqrt(R)+2 = {math.sqrt(rounds) + 2:.1f}")
    covered = rep.max_k >= k_max
    ok = rep.status == "pass" and covered and elapsed < time_limit
    return CriterionResult(
        4, "LOCAL-DOWNHILL f(k)=k^2-k+1",
        "pass" if ok else "fail",
        f"f(k) for k<={rep.max_k}: f(30)={rep.f.get(30)}, Delta_30={rep.delta.get(30)}, "
        f"{len(rep.problems)} identity failures, run {elapsed:.3f}s",
        f"f(k)=k^2-k+1 for k<={k_max}, Delta_(k+1)=Delta_k+2, tail/init identities, width<=load+1, < {time_limit}s",
        details={"f": rep.f, "problems": rep.problems},
    )


# -- 5. downhill vs greedy ----------------------------------------------------


@_timed
def criterion_5(sizes=(8, 20)) -> CriterionResult:
    """two_phase(n): GREEDY piles n/2 at v_{n-1}; local policies never exceed 1."""
    seen, want = {}, {}
    for n in sizes:
        net = build_line(n, 1)
        greedy = Execution(net, Greedy(), two_phase(n), record=False).run(n)
        seen[(n, "greedy")] = greedy.peak[n - 2]
        want[(n, "greedy")] = n // 2
        for pol in (LocalFIE(), LocalDownhill()):
            tr = Execution(net, pol, two_phase(n), record=False).run(2 * n)
            seen[(n, pol.name)] = tr.global_peak
            want[(n, pol.name)] = 1
    return CriterionResult(
        5, "downhill vs greedy separation",
        "pass" if seen == want else "fail",
        str({f"n={n} {p}": v for (n, p), v in seen.items()}),
        str({f"n={n} {p}": v for (n, p), v in want.items()}),
    )


# -- 6. checker soundness and sensitivity -------------------------------------


def _mutation_failures(seeds=range(4), rounds: int = 200) -> int:
    failures = 0
    for seed in seeds:
        for c in (1, 2):
            net = build_line(10, c)
            ex = Execution(
                net, FIE(INVERTED_PRIORITY), TokenBucketRandom(net, c, 1, seed, chase=0.5),
                [InvariantI(), ForwardLose()], record=False, strict=False,
            )
            failures += len(ex.run(rounds).failures)
    return failures


@_timed
def criterion_6(patterns: int = 50, rounds: int = 10_000) -> CriterionResult:
    """Invariant I and forward-lose hold on all FIE runs and catch the inverted-priority mutant."""
    sweep = fie_sweep(patterns, rounds, DEFAULT_PRIORITY)  # shares the criterion-1 cache
    chase = max_load_runs()
    sweep_fail = sum(r["invariant_failures"] + r["forward_lose_failures"] for r in sweep)
    chase_fail = sum(r["checker_failures"] for r in chase if r["policy"] == "fie")
    mutant = _mutation_failures()
    ok = sweep_fail == 0 and chase_fail == 0 and mutant > 0
    return CriterionResult(
        6, "Invariant I / forward-lose checkers",
        "pass" if ok else "fail",
        f"{sweep_fail} failures over criterion-1 runs, {chase_fail} over criterion-2 FIE runs, "
        f"{mutant} failures on the inverted-priority mutant",
        "0, 0, > 0",
    )


# -- 7. plateau oracle --------------------------------------------------------


def _random_config(rng, n_max, c_max, load_mult):
    n = int(rng.integers(2, n_max + 1))
    c = int(rng.integers(1, c_max + 1))
    net = random_tree(n, c, rng)
    loads = [0 if v == net.root else int(rng.integers(0, load_mult * c + 1)) for v in range(n)]
    return net, loads


@_timed
def criterion_7(samples: int = 200, seed: int = 7) -> CriterionResult:
    """find_plateaus, k_load and exit_landing agree with brute-force enumeration."""
    rng = np.random.default_rng(seed)
    mismatches = []
    compared = 0
    for i in range(samples):
        net, loads = _random_config(rng, 10, 2, 3)
        for h in range(2, 6):
            fast = find_plateaus(net, loads, h)
            brute = oracles.brute_plateaus(net, loads, h)
            compared += 1
            if {p.nodes for p in fast} != brute:
                mismatches.append((i, h, "plateaus"))
                continue
            for p in fast:
                for k in range(1, 6):
                    if k_load(net, loads, p.nodes, k) != oracles.brute_k_load(net, loads, p.nodes, k):
                        mismatches.append((i, h, "k_load"))
                found = oracles.brute_exit_landing(net, loads, p.nodes, h)
                if len(found) != 1 or exit_landing(net, loads, p) != found[0]:
                    mismatches.append((i, h, "exit_landing"))
        subset = [v for v in range(net.n) if rng.random() < 0.5]
        for k in range(1, 6):
            if k_load(net, loads, subset, k) != oracles.brute_k_load(net, loads, subset, k):
                mismatches.append((i, k, "k_load subset"))
    return CriterionResult(
        7, "plateau oracle equivalence",
        "pass" if not mismatches else "fail",
        f"{samples} configurations, {compared} (config, h) pairs, {len(mismatches)} mismatches",
        "0 mismatches",
        details={"mismatches": mismatches[:20]},
    )


# -- 8. activation-path maximality ---------------------------------------------


@_timed
def criterion_8(samples: int = 200, seed: int = 8) -> CriterionResult:
    """FIE paths are type-correct, disjoint, maximal and priority-sound (exhaustive check)."""
    rng = np.random.default_rng(seed)
    bad = []
    paths = 0
    for i in range(samples):
        net, loads = _random_config(rng, 12, 3, 3)
        # bias toward the interesting mix of empty, flat and hill nodes
        loads = [0 if v == net.root else int(rng.choice([0, 0, 1, net.capacity, net.capacity + 1, 2 * net.capacity + 1, x]))
                 for v, x in enumerate(loads)]
        ap = fie_activation_paths(net, loads)
        paths += len(ap.paths)
        problems = oracles.activation_path_problems(net, loads, ap, maximality=True)
        if problems:
            bad.append((i, problems[:3]))
    return CriterionResult(
        8, "activation-path maximality and priority",
        "pass" if not bad else "fail",
        f"{samples} ministeps, {paths} paths, {len(bad)} with defects",
        "0 defective ministeps",
        details={"bad": bad[:10]},
    )


# -- 9. auditor equivalence ---------------------------------------------------

AUDIT_BOUNDS = (
    BurstinessBound(Fraction(1, 2), 0),
    BurstinessBound(1, 1),
    BurstinessBound(Fraction(3, 2), 2),
    BurstinessBound(2, Fraction(1, 3)),
    BurstinessBound(Fraction(5, 4), Fraction(7, 2)),
)


@_timed
def criterion_9(traces: int = 100, horizon: int = 200, seed: int = 9) -> CriterionResult:
    """The linear-time auditor matches the exhaustive window scan."""
    rng = np.random.default_rng(seed)
    disagreements = []
    violations = 0
    for i in range(traces):
        n = int(rng.integers(2, 9))
        net = random_tree(n, 1, rng)
        rate = float(rng.uniform(0.2, 1.5))
        rounds = [[int(v) for v in rng.integers(0, n, size=rng.poisson(rate))] for _ in range(horizon)]
        tr = InjectionTrace(net, rounds)
        for b in AUDIT_BOUNDS:
            fast, slow = audit(tr, b), audit_exhaustive(tr, b)
            key = lambda v: None if v is None else (v.edge, v.start, v.end, v.count)
            violations += slow is not None
            if key(fast) != key(slow):
                disagreements.append((i, str(b), key(fast), key(slow)))
    return CriterionResult(
        9, "auditor equivalence",
        "pass" if not disagreements else "fail",
        f"{traces * len(AUDIT_BOUNDS)} audits ({violations} violations), {len(disagreements)} disagreements",
        "0 disagreements",
        details={"disagreements": disagreements[:10]},
    )


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def select(filter_: str | None = None) -> list[int]:
    if not filter_:
        return list(CRITERIA)
    out = []
    for num, fn in CRITERIA.items():
        doc = (fn.__doc__ or "").lower()
        if filter_ == str(num) or filter_.lower() in fn.__name__ or filter_.lower() in doc:
            out.append(num)
    return out
