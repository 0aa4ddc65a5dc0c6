"""Command-line front end: ``run``, ``audit`` and ``verify``.

Scenario files are INI-style with a single ``[scenario]`` section; see
README.md for the keys.  Exit codes: 0 pass, 1 usage or IO error,
2 property violation (checker failure, audit violation, failed or
inconclusive criterion).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np

from .adversary import (
    AdaptiveMaxLoad,
    BurstinessBound,
    InjectionTrace,
    NoInjections,
    Scripted,
    TokenBucketRandom,
    audit,
    constant_at_node,
    two_phase,
)
from .analysis import CHECKERS
from .engine import Execution, ExecutionTrace
from .policies import POLICIES, get_policy
from .topology import InvalidTopology, TreeNetwork, build_line, build_star, build_tree, random_tree

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2
TRACE_MAGIC = "#aqtree-trace v1"
PATTERNS = ("none", "constant", "two_phase", "adaptive_max_load", "token_bucket", "scripted")


class UsageError(Exception):
    """Bad scenario, bad flags or unreadable input (exit code 1)."""


def parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number or p/q rational: {text!r}") from None


@dataclass
class Scenario:
    net: TreeNetwork
    policy: str
    pattern: str
    rounds: int
    pattern_args: dict = field(default_factory=dict)
    bound: Optional[BurstinessBound] = None
    checkers: list[str] = field(default_factory=list)
    trace: Optional[Path] = None

    def build_pattern(self):
        a = self.pattern_args
        if self.pattern == "none":
            return NoInjections()
        if self.pattern == "constant":
            return constant_at_node(a["node"], a.get("per_round", 1))
        if self.pattern == "two_phase":
            return two_phase(a.get("two_phase_n", self.net.n))
        if self.pattern == "adaptive_max_load":
            return AdaptiveMaxLoad(self.net.capacity, a.get("sigma", 0))
        if self.pattern == "token_bucket":
            return TokenBucketRandom(self.net, a.get("rho", self.net.capacity), a.get("sigma", 0),
                                     a.get("seed", 0), a.get("chase", 0.0))
        return Scripted(a["script"])


def _node_ref(text: str, net: TreeNetwork) -> int:
    """``v3`` names the third line node (id 2); a bare integer is an id."""
    text = text.strip()
    try:
        v = int(text[1:]) - 1 if text.startswith("v") else int(text)
    except ValueError:
        raise UsageError(f"bad node reference {text!r}") from None
    if not 0 <= v < net.n:
        raise UsageError(f"node {text} does not exist (n={net.n})")
    if v == net.root:
        raise UsageError(f"node {text} is the sink")
    return v


def read_tree_file(path: Path, capacity: int) -> TreeNetwork:
    """One ``node parent`` pair per line, ``-`` for the sink; ``#`` starts a comment."""
    pairs = {}
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise UsageError(f"{path}: expected 'node parent', got {raw!r}")
        v, p = int(parts[0]), None if parts[1] == "-" else int(parts[1])
        pairs[v] = p
    if sorted(pairs) != list(range(len(pairs))):
        raise UsageError(f"{path}: node ids must be 0..n-1")
    return build_tree([pairs[v] for v in range(len(pairs))], capacity)


def _read_script(path: Path, net: TreeNetwork) -> list[list[int]]:
    rows: list[list[int]] = []
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            t, v = int(rec["round"]), _node_ref(rec["node"], net)
            while len(rows) < t:
                rows.append([])
            rows[t - 1].append(v)
    return rows


def load_scenario(path: Path) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from None
    if not cp.has_section("scenario"):
        raise UsageError(f"{path}: missing [scenario] section")
    sc = cp["scenario"]
    base = path.parent
    try:
        capacity = sc.getint("capacity", 1)
        topo = sc.get("topology", "line")
        if topo == "line":
            net = build_line(sc.getint("n"), capacity)
        elif topo == "star":
            net = build_star(sc.getint("n") - 1, capacity)
        elif topo == "random":
            net = random_tree(sc.getint("n"), capacity, np.random.default_rng(sc.getint("tree_seed", 0)))
        elif topo == "tree":
            net = read_tree_file(base / sc["tree_file"], capacity)
        else:
            raise UsageError(f"unknown topology {topo!r}")
        policy = sc.get("policy", "fie")
        if policy not in POLICIES:
            raise UsageError(f"unknown policy {policy!r}; choose from {sorted(POLICIES)}")
        pattern = sc.get("pattern", "none")
        if pattern not in PATTERNS:
            raise UsageError(f"unknown pattern {pattern!r}; choose from {list(PATTERNS)}")
        args: dict = {}
        if "node" in sc:
            args["node"] = _node_ref(sc["node"], net)
        for key in ("per_round", "seed", "two_phase_n"):
            if key in sc:
                args[key] = sc.getint(key)
        if "chase" in sc:
            args["chase"] = sc.getfloat("chase")
        if "pattern_sigma" in sc:
            args["sigma"] = sc.getint("pattern_sigma")
        if "pattern_rho" in sc:
            args["rho"] = sc.getint("pattern_rho")
        if pattern == "constant" and "node" not in args:
            raise UsageError("pattern=constant needs node")
        if pattern == "scripted":
            args["script"] = _read_script(base / sc["script_file"], net)
        bound = None
        if "rho" in sc or "sigma" in sc:
            bound = BurstinessBound(parse_number(sc.get("rho", "1")), parse_number(sc.get("sigma", "0")))
            # bounded patterns default to the audit bound
            args.setdefault("sigma", int(bound.sigma))
            args.setdefault("rho", int(bound.rho))
        checkers = [x.strip() for x in sc.get("checkers", "").split(",") if x.strip()]
        trace = base / sc["trace"] if "trace" in sc else None
        scen = Scenario(net, policy, pattern, sc.getint("rounds"), args, bound, checkers, trace)
        scen.build_pattern()  # type-check pattern parameters now
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: missing or bad key {exc}") from None
    except (ValueError, InvalidTopology) as exc:
        raise UsageError(f"{path}: {exc}") from None
    if scen.rounds is None or scen.rounds < 0:
        raise UsageError(f"{path}: rounds must be a non-negative integer")
    return scen


# -- trace files ---------------------------------------------------------------


def trace_columns(n: int) -> list[str]:
    return ["kind", "round", "phase", "ministep", "node", "in_transit", "delivered",
            "checker", "verdict", "detail"] + [f"load_{v}" for v in range(n)]


def write_trace(fh: TextIO, scen: Scenario, trace: ExecutionTrace) -> None:
    net = trace.net
    parents = ";".join("-" if p is None else str(p) for p in net.parent)
    fh.write(f"{TRACE_MAGIC} n={net.n} capacity={net.capacity} parents={parents} "
             f"rounds={trace.rounds} policy={scen.policy} pattern={scen.pattern}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(trace_columns(net.n))
    for r in trace.records:
        w.writerow(["state", r.round, r.phase, r.ministep, "" if r.node is None else r.node,
                    r.in_transit, r.delivered, "", "", ""] + list(r.loads))
    blank = [""] * net.n
    for e in trace.events:
        w.writerow(["event", e.round, "", e.ministep, "", "", "", e.checker, e.verdict, e.detail] + blank)


def read_trace_injections(path: Path) -> Optional[InjectionTrace]:
    """Injection records of a trace file; None for an empty file."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read trace {path}: {exc}") from None
    if not text.strip():
        return None
    lines = text.splitlines()
    if not lines[0].startswith(TRACE_MAGIC):
        raise UsageError(f"{path}: not an aqtree trace (missing '{TRACE_MAGIC}' line)")
    try:
        meta = dict(tok.split("=", 1) for tok in lines[0][len(TRACE_MAGIC):].split())
        parents = [None if x == "-" else int(x) for x in meta["parents"].split(";")]
        net = build_tree(parents, int(meta["capacity"]))
        horizon = int(meta["rounds"])
        rounds: list[list[int]] = [[] for _ in range(horizon)]
        for rec in csv.DictReader(lines[1:]):
            if rec["kind"] == "state" and rec["phase"] == "inject":
                rounds[int(rec["round"]) - 1].append(int(rec["node"]))
    except (KeyError, ValueError, IndexError, InvalidTopology) as exc:
        raise UsageError(f"{path}: malformed trace ({exc})") from None
    return InjectionTrace(net, rounds)


# -- commands ------------------------------------------------------------------


def _summary(out: TextIO, trace: ExecutionTrace, verdict: Optional[str]) -> None:
    net = trace.net
    out.write(f"rounds: {trace.rounds}\n")
    out.write("peak per node: " + " ".join(
        f"{v}:{trace.peak[v]}" for v in range(net.n) if v != net.root) + "\n")
    out.write(f"global peak: {trace.global_peak}\n")
    out.write(f"delivered: {trace.delivered}\n")
    fails = trace.failures
    out.write(f"checker failures: {len(fails)}\n")
    for e in fails[:10]:
        out.write(f"  {e.checker} round {e.round} ministep {e.ministep}: {e.detail}\n")
    if verdict is not None:
        out.write(f"audit: {verdict}\n")


def cmd_run(scenario: Path, trace_path: Optional[Path] = None, checkers: Optional[Sequence[str]] = None,
            out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    scen = load_scenario(scenario)
    names = list(checkers) if checkers is not None else scen.checkers
    unknown = [c for c in names if c not in CHECKERS]
    if unknown:
        raise UsageError(f"unknown checker(s) {unknown}; choose from {sorted(CHECKERS)}")
    ex = Execution(scen.net, get_policy(scen.policy), scen.build_pattern(),
                   [CHECKERS[c]() for c in names], strict=False)
    trace = ex.run(scen.rounds)
    violation = audit(trace.injections, scen.bound) if scen.bound is not None else None
    verdict = None if scen.bound is None else ("compliant" if violation is None else str(violation))
    path = trace_path or scen.trace or scenario.with_suffix(".trace.csv")
    try:
        with open(path, "w", newline="") as fh:
            write_trace(fh, scen, trace)
    except OSError as exc:
        raise UsageError(f"cannot write trace {path}: {exc}") from None
    out.write(f"trace: {path}\n")
    _summary(out, trace, verdict)
    return EXIT_VIOLATION if trace.failures or violation is not None else EXIT_OK


def cmd_audit(trace_path: Path, rho: Fraction, sigma: Fraction, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    tr = read_trace_injections(trace_path)
    if tr is None:
        out.write("compliant (empty trace)\n")
        return EXIT_OK
    v = audit(tr, BurstinessBound(rho, sigma))
    if v is None:
        out.write(f"compliant: {tr.total()} injections over {tr.horizon} rounds within ({rho},{sigma})\n")
        return EXIT_OK
    out.write(str(v) + "\n")
    return EXIT_VIOLATION


def cmd_verify(filter_: Optional[str] = None, out: Optional[TextIO] = None,
               overrides: Optional[dict[int, dict]] = None, report: Optional[Path] = None) -> int:
    """Run the acceptance suite; ``overrides`` maps criterion number to keyword arguments."""
    from . import acceptance

    out = out or sys.stdout
    chosen = acceptance.select(filter_)
    if not chosen:
        raise UsageError(f"no criterion matches {filter_!r}")
    results = []
    for num in chosen:
        res = acceptance.CRITERIA[num](**(overrides or {}).get(num, {}))
        results.append(res)
        out.write(res.line() + "\n")
        out.flush()
    passed = sum(r.passed for r in results)
    out.write(f"{passed}/{len(results)} criteria passed\n")
    if report is not None:
        report.write_text("".join(r.line() + "\n" for r in results))
    return EXIT_OK if passed == len(results) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aqtree", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate a scenario file and write its trace")
    r.add_argument("scenario", type=Path)
    r.add_argument("--trace", type=Path, help="trace output path (default: scenario key or <scenario>.trace.csv)")
    r.add_argument("--checkers", help="comma-separated checker names; overrides the scenario")
    a = sub.add_parser("audit", help="check a trace's injections against a (rho, sigma) bound")
    a.add_argument("trace", type=Path)
    a.add_argument("--rho", required=True)
    a.add_argument("--sigma", required=True)
    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--filter", help="criterion number or name fragment")
    v.add_argument("--report", type=Path, help="also write the report to this file")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage; we reserve 2 for violations
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "run":
            chk = None if args.checkers is None else [x.strip() for x in args.checkers.split(",") if x.strip()]
            return cmd_run(args.scenario, args.trace, chk)
        if args.command == "audit":
            return cmd_audit(args.trace, parse_number(args.rho), parse_number(args.sigma))
        return cmd_verify(args.filter, report=args.report)
    except UsageError as exc:
        print(f"aqtree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
