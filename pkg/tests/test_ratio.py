from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordratio.orders import lex_order, natural_order, order_from_sequence, random_order
from ordratio.ratio import (
    BudgetExceeded, breakpoint, bounded_width_sequences, order_ratio_exact, order_ratio_sampled,
    order_ratio_table, snake_search, snake_stats,
)
from ordratio.spaces import (circle_net, disjoint_union, grid_space, point_cloud,
                             shortest_path_metric, random_regular_graph)


def brute_or(space, order, k):
    """Independent OR(k): every subset, l_opt over every permutation."""
    best = 1.0
    for s in range(2, min(k + 1, space.n) + 1):
        for X in itertools.combinations(range(space.n), s):
            sub = space.sub(list(X))
            if not np.all(np.isfinite(sub)):
                continue
            seq = order.sort(list(X))
            lT = sum(space.d(a, b) for a, b in zip(seq[:-1], seq[1:]))
            lopt = min(sum(sub[p[i], p[i + 1]] for i in range(s - 1))
                       for p in itertools.permutations(range(s)))
            if lopt > 0:
                best = max(best, lT / lopt)
    return best


def test_one_point_convention():
    sp = point_cloud([[0.0]])
    assert order_ratio_exact(sp, natural_order(1), 3).value == 1


def test_circle_at_most_two():
    sp = circle_net(16)
    rep = order_ratio_exact(sp, natural_order(sp), 3)
    assert rep.exact and rep.value <= 2 + 1e-9


def test_exact_budget():
    sp = grid_space(2, 10, 1)
    with pytest.raises(BudgetExceeded):
        order_ratio_exact(sp, natural_order(sp), 6, budget=1e6)


def test_exact_skips_cross_component_subsets():
    a = point_cloud([[0.0], [1.0], [2.0]], p=1)
    u = disjoint_union([a, a])
    o = order_from_sequence([0, 3, 1, 4, 2, 5])
    assert order_ratio_exact(u, o, 3).value == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 10_000))
def test_exact_matches_brute(n, k, seed):
    rng = np.random.default_rng(seed)
    sp = point_cloud(rng.random((n, 2)))
    o = random_order(sp, seed)
    rep = order_ratio_exact(sp, o, k)
    assert rep.value == pytest.approx(brute_or(sp, o, k), abs=1e-9)
    assert 1 <= rep.value <= k + 1e-9
    # witness reproduces the value
    if rep.witness_points:
        lT = sum(sp.d(a, b) for a, b in zip(rep.witness_points[:-1], rep.witness_points[1:]))
        assert lT == pytest.approx(rep.l_T)
        assert rep.l_T / rep.l_opt == pytest.approx(rep.value)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 9), st.integers(0, 10_000))
def test_or_monotone_and_sampled_below_exact(n, seed):
    rng = np.random.default_rng(seed)
    sp = point_cloud(rng.integers(0, 8, size=(n, 2)), p=1)
    o = random_order(sp, seed)
    table = order_ratio_table(sp, o, 4)
    vals = [table[k] for k in range(1, 5)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    for k in (2, 3):
        assert order_ratio_sampled(sp, o, k, 200, seed).value <= table[k] + 1e-9


def test_sampled_zero_budget():
    sp = grid_space(2, 4, 1)
    rep = order_ratio_sampled(sp, random_order(sp, 0), 3, budget=0)
    assert rep.value == 1 and not rep.exact


def test_sampled_lex_grid():
    sp = grid_space(2, 16, 1)
    assert order_ratio_sampled(sp, lex_order(sp), 2, 2000, 0).value >= 1.8


# breakpoint -----------------------------------------------------------------------------------


def test_breakpoint_two_points():
    sp = point_cloud([[0.0], [1.0]], p=1)
    assert breakpoint(sp, natural_order(2), 3)["br"] == 2


def test_breakpoint_line():
    sp = grid_space(1, 8, 1)
    rep = breakpoint(sp, natural_order(sp), 4)
    assert rep["values"][1] == 1 and rep["br"] == 2


def test_breakpoint_circle():
    # OR(2) on circle_net(16) is 1.875 < 2 - 0.1, so the threshold is met at s = 2
    sp = circle_net(16)
    rep = breakpoint(sp, natural_order(sp), 4, eps=0.1)
    assert rep["values"][2] == pytest.approx(1.875)
    assert rep["br"] == 2


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.integers(0, 1000))
def test_breakpoint_at_least_two(n, seed):
    sp = point_cloud(np.random.default_rng(seed).random((n, 2)))
    rep = breakpoint(sp, random_order(sp, seed), 3)
    assert rep["lower_bound"] >= 2


# snakes ---------------------------------------------------------------------------------------


def test_snake_stats_example():
    sp = point_cloud([[0.0], [10.0], [1.0]], p=1)
    sn = snake_stats(sp, natural_order(3), [0, 1, 2])
    assert (sn.length_a, sn.width_b, sn.elongation) == (10, 1, 10)


def test_snake_two_points_infinite():
    sp = point_cloud([[0.0], [3.0]], p=1)
    assert math.isinf(snake_stats(sp, natural_order(2), [0, 1]).elongation)


def test_snake_alternating_balls():
    eps = 0.01
    sp = point_cloud([[0.0], [1.0], [eps], [1 - eps], [-eps]], p=1)
    sn = snake_stats(sp, natural_order(5), [0, 1, 2, 3, 4])
    assert sn.length_a == pytest.approx(1 + eps)
    assert sn.width_b == pytest.approx(2 * eps)


def test_snake_rejects_unordered():
    sp = point_cloud([[0.0], [1.0]], p=1)
    with pytest.raises(ValueError):
        snake_stats(sp, natural_order(2), [1, 0])


def test_lex_snake_witness():
    sp = grid_space(2, 16, 1)
    o = lex_order(sp)
    idx = {tuple(int(c) for c in sp.coords[p]): p for p in range(sp.n)}
    sn = snake_stats(sp, o, [idx[(0, 0)], idx[(0, 15)], idx[(1, 0)]])
    assert sn.elongation >= 15
    assert snake_search(sp, o, 3, "exact").elongation >= 15


def test_line_has_no_long_snakes():
    sp = grid_space(1, 32, 1)
    assert snake_search(sp, natural_order(sp), 3, "exact").elongation <= 2


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 30), st.integers(3, 4), st.sampled_from(["exact", "greedy", "sampled"]),
       st.integers(0, 1000))
def test_snake_search_self_consistent(n, s, mode, seed):
    sp = point_cloud(np.random.default_rng(seed).random((n, 2)))
    o = random_order(sp, seed)
    sn = snake_search(sp, o, s, mode, budget=None if mode == "exact" else 200, seed=seed)
    again = snake_stats(sp, o, list(sn.points))
    assert again.elongation == sn.elongation
    # the snake is a subset witness: OR(s-1) is at least its l_T / l_opt
    exact = order_ratio_exact(sp, o, s - 1).value
    sub = sp.sub(list(sn.points))
    lT = sum(sub[i, i + 1] for i in range(s - 1))
    lopt = min(sum(sub[p[i], p[i + 1]] for i in range(s - 1))
               for p in itertools.permutations(range(s)))
    assert exact >= lT / lopt - 1e-9


def test_snake_exact_budget():
    sp = grid_space(2, 20, 1)
    with pytest.raises(BudgetExceeded):
        snake_search(sp, natural_order(sp), 5, "exact", budget=1000)


def test_bounded_width_lex_grows():
    pairs = []
    for side in (8, 16, 32):
        g = grid_space(2, side, 1)
        pairs.append((g, lex_order(g)))
    rep = bounded_width_sequences(pairs, 3, 2)
    lengths = [r["length"] for r in rep]
    assert lengths == sorted(lengths) and lengths[-1] >= 31


def test_bounded_width_trivial_cases():
    g = grid_space(2, 4, 1)
    assert len(bounded_width_sequences([(g, lex_order(g))], 3, 2)) == 1
    assert bounded_width_sequences([], 3, 2) == []


def test_graph_metric_or_is_integer_safe():
    sp = shortest_path_metric(random_regular_graph(16, 3, 0))
    rep = order_ratio_exact(sp, natural_order(sp), 2)
    assert 1 <= rep.value <= 2


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(2, 6), st.sampled_from(["exact", "greedy", "sampled"]),
       st.integers(0, 1000))
def test_snake_search_always_finds_when_room(n, s, mode, seed):
    sp = point_cloud(np.random.default_rng(seed).random((n, 2)))
    sn = snake_search(sp, random_order(sp, seed), s, mode, budget=None if mode == "exact" else 50,
                      seed=seed)
    assert (sn is None) == (n < s)
    if sn is not None:
        assert len(sn.points) == s
