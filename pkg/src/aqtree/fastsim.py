"""Compiled load-level FIE simulator for long randomized sweeps.

FIE decisions depend only on buffer loads, so a run can be replayed on
integer arrays.  This kernel mirrors ``engine.Execution`` + ``policies.FIE``
boundary for boundary (see tests/test_fastsim.py for the equivalence
check) and evaluates Invariant I and the per-round forward-lose inequality
inline.  The adversary is a token-bucket random pattern that chases the
heaviest buffer with probability ``chase``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .adversary import InjectionTrace
from .policies import DEFAULT_PRIORITY, PathKind
from .topology import TreeNetwork

_KIND_CODE = {PathKind.DOWNHILL_TO_SINK: 0, PathKind.DOWNHILL_TO_EMPTY: 1, PathKind.FLAT: 2}


@njit(cache=True)
def _height(load, c):
    return (load + c - 1) // c


@njit(cache=True)
def _forwarders(parent, root, order, cptr, cidx, loads, c, prio, used, hts, path, fw, has_hills=True):
    n = parent.shape[0]
    for v in range(n):
        used[v] = False
        fw[v] = False
        hts[v] = _height(loads[v], c)
    for pi in range(3):
        kind = prio[pi]
        if kind != 2 and not has_hills:
            continue  # no start node of height >= 2 exists
        for oi in range(n):
            u = order[oi]
            if u == root or used[u]:
                continue
            if kind == 2:
                if hts[u] != 1:
                    continue
            elif hts[u] < 2:
                continue
            m = 0
            path[m] = u
            m += 1
            w = parent[u]
            while w != root and not used[w] and hts[w] == 1:
                path[m] = w
                m += 1
                w = parent[w]
            if kind == 0:
                ok = w == root
            elif kind == 1:
                ok = w != root and not used[w] and hts[w] == 0
            else:
                ok = w == root or (not used[w] and hts[w] == 0)
            if not ok:
                continue
            for i in range(m):
                used[path[i]] = True
            if w != root:
                used[w] = True
            if kind == 2:
                head = u
                while True:
                    nxt = -1
                    for j in range(cptr[head], cptr[head + 1]):
                        x = cidx[j]
                        if not used[x] and hts[x] == 1:
                            nxt = x
                            break
                    if nxt < 0:
                        break
                    used[nxt] = True
                    head = nxt
    for v in range(n):
        if used[v] and v != root and loads[v] > 0:
            fw[v] = True


@njit(cache=True)
def _two_load_total(loads, root, c):
    s = 0
    for v in range(loads.shape[0]):
        if v != root and loads[v] > c:
            s += loads[v] - c
    return s


@njit(cache=True)
def _components(parent, root, order, loads, comp):
    """Label connected groups of nonempty non-sink nodes; returns the label count."""
    n = parent.shape[0]
    nc = 0
    for oi in range(n):
        v = order[oi]
        comp[v] = -1
        if v == root or loads[v] == 0:
            continue
        p = parent[v]
        if p != root and loads[p] > 0:
            comp[v] = comp[p]
        else:
            comp[v] = nc
            nc += 1
    return nc


@njit(cache=True)
def _forward_lose(parent, root, order, start, end, c, comp_s, comp_e, scratch):
    """(failures, empty pre-images) for one round.  ``scratch`` is (7, n) int64."""
    n = parent.shape[0]
    ns = _components(parent, root, order, start, comp_s)
    ne = _components(parent, root, order, end, comp_e)
    s_peak, s_inside, s_target, s_load = scratch[0], scratch[1], scratch[2], scratch[3]
    e_peak, e_load, before = scratch[4], scratch[5], scratch[6]
    for k in range(ns):
        s_peak[k] = 0
        s_inside[k] = 1
        s_target[k] = -1
        s_load[k] = 0
    for v in range(n):
        k = comp_s[v]
        if k < 0:
            continue
        if start[v] > c:
            s_peak[k] = 1
            s_load[k] += start[v] - c
        if end[v] == 0:
            s_inside[k] = 0
        else:
            s_target[k] = comp_e[v]
    pre = comp_s  # labels are no longer needed; reuse as pre-image counts
    for k in range(ne):
        e_peak[k] = 0
        e_load[k] = 0
        before[k] = 0
        pre[k] = 0
    for v in range(n):
        k = comp_e[v]
        if k >= 0 and end[v] > c:
            e_peak[k] = 1
            e_load[k] += end[v] - c
    for k in range(ns):
        if s_peak[k] and s_inside[k]:
            before[s_target[k]] += s_load[k]
            pre[s_target[k]] += 1
    fails = 0
    notes = 0
    for k in range(ne):
        if not e_peak[k]:
            continue
        if pre[k] == 0:
            notes += 1
        elif e_load[k] > before[k] - c:
            fails += 1
    return fails, notes


@njit(cache=True)
def _excess(load, c):
    return load - c if load > c else 0


@njit(cache=True)
def _check(two, over, injected, r, flat_round, c):
    """Invariant I at one boundary: (flat_round, injected, slack, failed).

    ``over`` counts buffers above c, so the state is flat iff it is zero;
    ``two`` is the total 2-load, maintained incrementally by the caller.
    """
    if over == 0:
        return r, 0, 1 << 60, False
    bound = injected - c * (r - flat_round)
    return flat_round, injected, bound - two, two > bound


@njit(cache=True)
def _run(parent, root, order, cptr, cidx, c, sigma, rounds, seed, chase, prio, record):
    n = parent.shape[0]
    np.random.seed(seed)
    loads = np.zeros(n, dtype=np.int64)
    arrivals = np.zeros(n, dtype=np.int64)
    start = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    hts = np.zeros(n, dtype=np.int64)
    path = np.zeros(n, dtype=np.int64)
    fw = np.zeros(n, dtype=np.bool_)
    comp_s = np.zeros(n, dtype=np.int64)
    comp_e = np.zeros(n, dtype=np.int64)
    scratch = np.zeros((7, n), dtype=np.int64)
    cap = sigma + c
    tokens = np.full(n, cap, dtype=np.int64)
    targets = np.empty(n - 1 if n > 1 else 0, dtype=np.int64)
    t = 0
    for v in range(n):
        if v != root:
            targets[t] = v
            t += 1
    max_inj = 2 * c + sigma
    inj_round = np.zeros(rounds * max_inj, dtype=np.int64)
    inj_node = np.zeros(rounds * max_inj, dtype=np.int64)
    n_inj = 0
    hist_len = rounds * (max_inj + c) + 1 if record else 1
    hist = np.zeros((hist_len, n), dtype=np.int64)
    n_hist = 0
    peak = 0
    inv_fail = 0
    fl_fail = 0
    fl_note = 0
    worst_slack = 1 << 60
    # Invariant I state plus the incrementally kept 2-load total and over-c count
    flat_round = 1
    injected = 0
    two = 0
    over = 0
    focus = targets[0] if targets.shape[0] > 0 else root

    for r in range(1, rounds + 2):
        # boundary: start of round r (initial state when r == 1)
        if record:
            hist[n_hist, :] = loads
            n_hist += 1
        flat_round, injected, slack, bad = _check(two, over, injected, r, flat_round, c)
        worst_slack = min(worst_slack, slack)
        inv_fail += bad
        if r == rounds + 1:
            break
        # injections
        if r > 1:
            for v in range(n):
                tokens[v] = min(tokens[v] + c, cap)
        if np.random.random() >= 0.3 and targets.shape[0] > 0:
            if chase > 0.0 and np.random.random() < chase:
                top = 0
                for v in range(n):
                    if loads[v] > top:
                        top = loads[v]
                if top > 0:
                    for v in range(n):
                        if loads[v] == top:
                            focus = v
                            break
            elif np.random.random() < 0.2:
                focus = targets[np.random.randint(0, targets.shape[0])]
            attempts = np.random.randint(1, max_inj + 1)
            for _ in range(attempts):
                if np.random.random() < 0.7:
                    v = focus
                else:
                    v = targets[np.random.randint(0, targets.shape[0])]
                ok = True
                w = v
                while w != root:
                    if tokens[w] < 1:
                        ok = False
                        break
                    w = parent[w]
                if not ok:
                    continue
                w = v
                while w != root:
                    tokens[w] -= 1
                    w = parent[w]
                inj_round[n_inj] = r
                inj_node[n_inj] = v
                n_inj += 1
                injected += 1
                loads[v] += 1
                two += loads[v] > c
                over += loads[v] == c + 1
                if loads[v] > peak:
                    peak = loads[v]
                # boundary after the injection ministep
                if record:
                    hist[n_hist, :] = loads
                    n_hist += 1
                flat_round, injected, slack, bad = _check(two, over, injected, r, flat_round, c)
                worst_slack = min(worst_slack, slack)
                inv_fail += bad
        # forwarding ministeps
        start[:] = loads
        arrivals[:] = 0
        for k in range(1, c + 1):
            _forwarders(parent, root, order, cptr, cidx, loads, c, prio, used, hts, path, fw, over > 0)
            for v in range(n):
                if fw[v]:
                    two -= loads[v] > c
                    over -= loads[v] == c + 1
                    loads[v] -= 1
                    if parent[v] != root:
                        arrivals[parent[v]] += 1
            if k < c:
                if record:
                    hist[n_hist, :] = loads
                    n_hist += 1
                flat_round, injected, slack, bad = _check(two, over, injected, r, flat_round, c)
                worst_slack = min(worst_slack, slack)
                inv_fail += bad
        for v in range(n):
            a = arrivals[v]
            if a:
                old = loads[v]
                loads[v] = old + a
                two += _excess(old + a, c) - _excess(old, c)
                over += (old + a > c) - (old > c)
                if loads[v] > peak:
                    peak = loads[v]
        if over > 0:  # without a buffer above c there is no end-of-round 2-plateau
            f, nt = _forward_lose(parent, root, order, start, loads, c, comp_s, comp_e, scratch)
            fl_fail += f
            fl_note += nt
    return (peak, inv_fail, fl_fail, fl_note, worst_slack,
            inj_round[:n_inj].copy(), inj_node[:n_inj].copy(), hist[:n_hist].copy())


@dataclass
class SweepResult:
    peak: int
    invariant_failures: int
    forward_lose_failures: int
    empty_preimages: int
    worst_slack: int
    injections: InjectionTrace
    history: np.ndarray  # loads at every boundary (only when recorded)


def _arrays(net: TreeNetwork):
    parent = np.array([-1 if p is None else p for p in net.parent], dtype=np.int64)
    order = np.array(net.scan_order(), dtype=np.int64)
    cptr = np.zeros(net.n + 1, dtype=np.int64)
    kids = []
    for v in range(net.n):
        ch = sorted(net.children[v])
        kids.extend(ch)
        cptr[v + 1] = cptr[v] + len(ch)
    return parent, order, cptr, np.array(kids, dtype=np.int64)


def fie_random_run(
    net: TreeNetwork,
    sigma: int,
    rounds: int,
    seed: int,
    chase: float = 0.5,
    priority=DEFAULT_PRIORITY,
    record: bool = False,
) -> SweepResult:
    parent, order, cptr, cidx = _arrays(net)
    prio = np.array([_KIND_CODE[k] for k in priority], dtype=np.int64)
    peak, inv, fl, notes, slack, ir, inode, hist = _run(
        parent, net.root, order, cptr, cidx, net.capacity, sigma, rounds, seed, chase, prio, record
    )
    trace = InjectionTrace.from_arrays(net, rounds, ir, inode)
    return SweepResult(int(peak), int(inv), int(fl), int(notes), int(slack), trace, hist)
