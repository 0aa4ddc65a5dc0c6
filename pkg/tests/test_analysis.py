import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqtree import oracles
from aqtree.adversary import AdaptiveMaxLoad, TokenBucketRandom, constant_at_node
from aqtree.analysis import (
    CHECKERS,
    DownhillSequenceLog,
    ForwardLose,
    InvariantI,
    MalformedPlateau,
    Plateau,
    check_forward_lose,
    downhill_metrics,
    exit_landing,
    find_plateaus,
    k_load,
    pre_image,
    total_two_load,
)
from aqtree.engine import Execution, simulate
from aqtree.policies import FIE, LocalDownhill
from aqtree.topology import build_line
from conftest import configurations, trees


def fie_round(loads, c=1):
    """Load the line v1..vn with ``loads`` and play one FIE round without new injections."""
    net = build_line(len(loads) + 1, c)
    ex = Execution(net, FIE())
    ex.start()
    for v, m in enumerate(loads):
        for _ in range(m):
            ex.inject(v)
    start = ex.config.loads()
    for k in range(1, c + 1):
        ex.forward_ministep(ex.policy.decide(net, ex.config.loads(), k))
    return net, start, ex.end_of_round().loads


def test_no_plateaus_when_everything_fits_level_one():
    net = build_line(5, 2)
    assert find_plateaus(net, [2, 1, 2, 0, 0], 2) == []


def test_plateau_height_must_be_at_least_two():
    with pytest.raises(ValueError):
        find_plateaus(build_line(3, 1), [1, 1, 0], 1)


def test_k_load_examples():
    net = build_line(5, 1)
    loads = [3, 1, 1, 0, 0]
    assert k_load(net, loads, {0, 1, 2}, 2) == 2
    assert k_load(net, loads, {0, 1, 2}, 1) == 5
    assert k_load(net, loads, set(), 3) == 0


def test_exit_and_landing_on_a_line():
    net = build_line(6, 1)
    loads = [2, 1, 1, 0, 0, 0]
    (p,) = find_plateaus(net, loads, 2)
    assert p.nodes == {0, 1, 2}
    assert exit_landing(net, loads, p) == (2, 3)


def test_landing_on_the_sink():
    net = build_line(3, 1)
    (p,) = find_plateaus(net, [1, 2, 0], 2)
    assert exit_landing(net, [1, 2, 0], p) == (1, 2)


def test_single_node_plateau():
    net = build_line(7, 1)
    loads = [0, 0, 0, 0, 2, 0, 0]
    (p,) = find_plateaus(net, loads, 2)
    assert exit_landing(net, loads, p) == (4, 5)


def test_malformed_plateau_is_reported():
    net = build_line(4, 1)
    with pytest.raises(MalformedPlateau):
        exit_landing(net, [2, 2, 0, 0], Plateau(frozenset({0}), 2))


def test_two_hills_merge_over_a_filled_gap():
    net, start, end = fie_round((3, 1, 1, 0, 2))
    (merged,) = find_plateaus(net, end, 2)
    pre = pre_image(merged, find_plateaus(net, start, 2))
    assert sorted(sorted(p.nodes) for p in pre) == [[0, 1, 2], [4]]


def test_unchanged_plateau_is_its_own_pre_image():
    net = build_line(4, 1)
    (p,) = find_plateaus(net, [2, 1, 0, 0], 2)
    assert pre_image(p, [p]) == [p]


def test_forward_lose_on_a_single_plateau():
    net, start, end = fie_round((3, 1, 0, 0))
    assert check_forward_lose(net, start, end) == []
    assert total_two_load(net, end) <= total_two_load(net, start) - 1


def test_forward_lose_vacuous_without_plateaus():
    net, start, end = fie_round((1, 0, 1))
    assert find_plateaus(net, end, 2) == []
    assert check_forward_lose(net, start, end) == []


def test_three_plateaus_merge_and_lose_c():
    net, start, end = fie_round((0, 0, 0, 2, 0, 2, 0, 3))
    (merged,) = find_plateaus(net, end, 2)
    pre = pre_image(merged, find_plateaus(net, start, 2))
    assert len(pre) == 3
    before = k_load(net, start, frozenset().union(*(p.nodes for p in pre)), 2)
    assert k_load(net, end, merged.nodes, 2) <= before - net.capacity


def test_invariant_holds_on_flat_runs():
    inv = InvariantI()
    tr = simulate(build_line(6, 1), FIE(), constant_at_node(0, 1), 30, [inv])
    assert not tr.failures
    assert inv.checks == 0


@pytest.mark.parametrize("c,sigma", [(1, 0), (1, 4), (2, 2), (3, 4)])
def test_invariant_holds_under_max_load(c, sigma):
    pat = AdaptiveMaxLoad(c, sigma)
    tr = simulate(build_line(10, c), FIE(), pat, 200, [InvariantI(), ForwardLose()], stop=lambda e: pat.done)
    assert pat.done
    assert not tr.failures


def test_invariant_catches_a_corrupted_state():
    c, sigma = 1, 1
    net = build_line(5, c)
    ex = Execution(net, FIE(), None, [InvariantI()], strict=False)
    ex.start()
    ex.config.buffers[1].extend(range(1000, 1000 + c + sigma + 1))  # bypasses the engine
    ex.inject(0)
    assert [e.checker for e in ex.trace.failures] == ["invariant_I"]


@given(configurations(max_n=8, max_c=2))
def test_plateaus_match_brute_force(case):
    net, loads = case
    for h in (2, 3, 4):
        fast = find_plateaus(net, loads, h)
        assert {p.nodes for p in fast} == oracles.brute_plateaus(net, loads, h)
        for p in fast:
            found = oracles.brute_exit_landing(net, loads, p.nodes, h)
            assert [exit_landing(net, loads, p)] == found


@given(configurations(max_n=8), st.sets(st.integers(0, 7)), st.integers(1, 5))
def test_k_load_matches_packet_count(case, nodes, k):
    net, loads = case
    nodes = {v for v in nodes if v < net.n}
    assert k_load(net, loads, nodes, k) == oracles.brute_k_load(net, loads, nodes, k)


@given(configurations(max_n=10))
def test_two_load_total_is_sum_over_two_plateaus(case):
    net, loads = case
    per_plateau = sum(k_load(net, loads, p.nodes, 2) for p in find_plateaus(net, loads, 2))
    assert total_two_load(net, loads) == per_plateau


@given(trees(min_n=2, max_n=9, max_c=3), st.integers(0, 3), st.integers(0, 1000))
def test_every_checker_passes_on_fie(net, sigma, seed):
    checkers = [cls() for cls in CHECKERS.values()]
    pat = TokenBucketRandom(net, net.capacity, sigma, seed, chase=0.5)
    tr = simulate(net, FIE(), pat, 40, checkers, strict=False, record=False)
    assert tr.failures == []
    assert tr.global_peak <= sigma + 2 * net.capacity


def downhill_states(n, rounds):
    log = DownhillSequenceLog()
    simulate(build_line(n, 1), LocalDownhill(), constant_at_node(0, 1), rounds, [log], record=False)
    return log.states


def test_downhill_quadratic_law():
    rep = downhill_metrics(downhill_states(35, 871))
    assert rep.status == "pass", rep.problems
    assert all(rep.f[k] == k * k - k + 1 for k in range(2, 31))
    assert rep.f[30] == 871


def test_downhill_short_line_is_inconclusive():
    assert downhill_metrics(downhill_states(10, 871)).status == "inconclusive"
