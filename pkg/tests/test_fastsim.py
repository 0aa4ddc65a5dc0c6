import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqtree.adversary import InjectionTrace, Scripted
from aqtree.analysis import ForwardLose, InvariantI
from aqtree.engine import simulate
from aqtree.fastsim import fie_random_run
from aqtree.policies import DEFAULT_PRIORITY, FIE, INVERTED_PRIORITY
from aqtree.topology import build_line
from conftest import trees


def replay(net, res, priority, rounds):
    inv, fl = InvariantI(), ForwardLose()
    tr = simulate(net, FIE(priority), Scripted(res.injections.rounds), rounds, [inv, fl], strict=False)
    return tr, inv, fl


def assert_equivalent(net, sigma, seed, priority, rounds=80):
    res = fie_random_run(net, sigma, rounds, seed, chase=0.5, priority=priority, record=True)
    tr, inv, fl = replay(net, res, priority, rounds)
    states = np.array([r.loads for r in tr.records])
    np.testing.assert_array_equal(states, res.history)
    assert tr.global_peak == res.peak
    fails = tr.failures
    assert sum(e.checker == "invariant_I" for e in fails) == res.invariant_failures
    assert sum(e.checker == "forward_lose" for e in fails) == res.forward_lose_failures
    assert fl.empty_preimages == res.empty_preimages
    if inv.checks:
        assert inv.worst_slack == res.worst_slack


@settings(max_examples=40)
@given(trees(min_n=2, max_n=12, max_c=3), st.integers(0, 3), st.integers(0, 10_000))
def test_kernel_matches_engine(net, sigma, seed):
    assert_equivalent(net, sigma, seed, DEFAULT_PRIORITY)


@settings(max_examples=20)
@given(trees(min_n=2, max_n=12, max_c=2), st.integers(0, 2), st.integers(0, 10_000))
def test_kernel_matches_engine_for_the_mutant(net, sigma, seed):
    assert_equivalent(net, sigma, seed, INVERTED_PRIORITY)


def test_mutant_breaks_the_bound_in_the_kernel():
    res = fie_random_run(build_line(10, 1), 1, 2000, 3, priority=INVERTED_PRIORITY)
    assert res.peak > 1 + 2
    assert res.invariant_failures > 0


@pytest.mark.parametrize("c,sigma", [(1, 0), (2, 1), (3, 5)])
def test_kernel_run_respects_the_bound(c, sigma):
    res = fie_random_run(build_line(50, c), sigma, 3000, 17)
    assert res.peak <= sigma + 2 * c
    assert res.invariant_failures == res.forward_lose_failures == 0


def test_array_built_trace_matches_list_built():
    res = fie_random_run(build_line(8, 2), 1, 300, 5)
    tr = res.injections
    from_arrays = tr.node_counts(), tr.edge_counts(), tr.total(), tr.horizon
    plain = InjectionTrace(tr.net, [list(r) for r in tr.rounds])
    np.testing.assert_array_equal(from_arrays[0], plain.node_counts())
    np.testing.assert_array_equal(from_arrays[1], plain.edge_counts())
    assert from_arrays[2:] == (plain.total(), plain.horizon) == (tr.total(), 300)
