from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqtree.adversary import (
    AdaptiveMaxLoad,
    AdaptivityError,
    BurstinessBound,
    InjectionTrace,
    TokenBucketRandom,
    audit,
    audit_exhaustive,
    constant_at_node,
    two_phase,
)
from aqtree.engine import simulate
from aqtree.policies import FIE
from aqtree.topology import build_line
from conftest import trees


def pattern_trace(net, pattern, rounds):
    return InjectionTrace(net, [pattern.emit(t) for t in range(1, rounds + 1)])


def test_bound_parses_rationals():
    b = BurstinessBound("1/2", "3")
    assert b.rho == Fraction(1, 2)
    assert b.allowance(4) == 5


def test_constant_unit_rate_is_compliant():
    net = build_line(6, 1)
    for T in (1, 10, 500):
        assert audit(pattern_trace(net, constant_at_node(0, 1), T), BurstinessBound(1, 0)) is None


def test_double_injection_violates_on_the_first_edge():
    net = build_line(4, 1)
    v = audit(InjectionTrace(net, [[0, 0]]), BurstinessBound(1, 0))
    assert (v.edge, v.head, v.start, v.end, v.count) == (0, 1, 1, 2, 2)


def test_empty_trace_is_compliant():
    net = build_line(4, 1)
    assert audit(InjectionTrace(net, []), BurstinessBound(0, 0)) is None
    assert audit(InjectionTrace(net, [[], []]), BurstinessBound(0, 0)) is None


def test_rate_two_is_not_unit_compliant():
    net = build_line(4, 1)
    assert audit(pattern_trace(net, constant_at_node(0, 2), 5), BurstinessBound(1, 0)) is not None


def test_two_phase_schedule():
    p = two_phase(8)
    assert [p.emit(t) for t in range(1, 9)] == [[0], [2], [4], [6], [6], [6], [6], [6]]
    assert p.emit(9) == []
    assert audit(pattern_trace(build_line(8, 1), p, 8), BurstinessBound(1, 0)) is None


def test_two_phase_needs_even_n():
    with pytest.raises(ValueError):
        two_phase(7)


def test_adaptive_max_load_targets_smallest_maximum():
    p = AdaptiveMaxLoad(1, 0)
    assert p.emit(1, (0, 0, 0)) == [0]
    p = AdaptiveMaxLoad(2, 0)
    p.emit(1, (0, 0, 0, 0))
    assert p.emit(2, (1, 1, 0, 0)) == [0, 0]


def test_adaptive_max_load_bursts_once_loaded():
    p = AdaptiveMaxLoad(1, 2)
    p.emit(1, (0, 0, 0))
    assert p.emit(2, (2, 2, 0)) == [0, 0, 0]
    assert p.done and p.burst_round == 2
    assert p.emit(3, (1, 1, 1)) == []


def test_adaptive_pattern_needs_loads():
    with pytest.raises(AdaptivityError):
        AdaptiveMaxLoad(1, 0).emit(2)


@pytest.mark.parametrize("c,sigma", [(1, 0), (2, 3), (3, 1)])
def test_max_load_run_is_compliant(c, sigma):
    p = AdaptiveMaxLoad(c, sigma)
    tr = simulate(build_line(10, c), FIE(), p, 100)
    assert p.done
    assert audit(tr.injections, BurstinessBound(c, sigma)) is None


@given(trees(min_n=2, max_n=8, max_c=3), st.integers(0, 3), st.integers(0, 10_000))
def test_token_bucket_stays_within_its_bound(net, sigma, seed):
    pat = TokenBucketRandom(net, net.capacity, sigma, seed, chase=0.5)
    tr = simulate(net, FIE(), pat, 60, record=False)
    assert audit(tr.injections, BurstinessBound(net.capacity, sigma)) is None


rationals = st.fractions(min_value=0, max_value=3, max_denominator=6)


@given(
    trees(min_n=2, max_n=6, max_c=1),
    st.lists(st.lists(st.integers(0, 5), max_size=4), max_size=30),
    rationals,
    rationals,
)
def test_linear_audit_matches_exhaustive(net, raw, rho, sigma):
    rounds = [[v % net.n for v in r] for r in raw]
    tr = InjectionTrace(net, rounds)
    b = BurstinessBound(rho, sigma)
    fast, slow = audit(tr, b), audit_exhaustive(tr, b)
    key = lambda v: None if v is None else (v.edge, v.start, v.end, v.count)
    assert key(fast) == key(slow)


@given(trees(min_n=2, max_n=8), st.lists(st.lists(st.integers(0, 7), max_size=3), max_size=20))
def test_edge_counts_sum_subtree_injections(net, raw):
    rounds = [[v % net.n for v in r] for r in raw]
    tr = InjectionTrace(net, rounds)
    counts = tr.edge_counts()
    m = net.subtree_matrix()
    for t, srcs in enumerate(rounds):
        for j, e in enumerate(net.edges()):
            assert counts[t, j] == sum(1 for u in srcs if m[u, e])
