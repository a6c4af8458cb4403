from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordratio.filtration import partition_sets, tree_partition
from ordratio.orders import (
    OrderError, hierarchy_order, interleave_order, is_convex, is_convex_brute, lex_order,
    natural_order, order_from_sequence, pullback_order, random_order, spacefill_order,
    tree_f, tree_product_order, tree_word_sequence,
)
from ordratio.ratio import order_ratio_sampled
from ordratio.spaces import grid_space, point_cloud, tree_product_space


def coords_of(space, order):
    return [tuple(int(c) for c in space.coords[p]) for p in order.seq]


# lex ----------------------------------------------------------------------------------


def test_lex_2x2():
    g = grid_space(2, 2, 1)
    assert coords_of(g, lex_order(g)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_lex_line_is_natural():
    g = grid_space(1, 7, 1)
    assert lex_order(g) == natural_order(g)


def test_lex_rank_3x3():
    g = grid_space(2, 3, 1)
    o = lex_order(g)
    p = next(i for i in range(g.n) if tuple(g.coords[i]) == (1, 0))
    assert o.rank[p] == 3


def test_lex_rejects_duplicates():
    with pytest.raises(OrderError):
        lex_order(point_cloud([[0.0, 1.0], [0.0, 1.0]]))


# interleave --------------------------------------------------------------------------------


def test_interleave_definition_example():
    sp = point_cloud([[0.5, 0.0], [0.0, 0.5]])
    o = interleave_order(sp, bits=4)
    assert o.less(1, 0)


def test_interleave_d1_is_numeric():
    x = np.random.default_rng(3).random(50)
    o = interleave_order(point_cloud(x[:, None]), bits=30)
    assert np.array_equal(o.seq, np.argsort(x))


def _digit_string(x, bits):
    cols = [format(int(c * 2 ** bits), f"0{bits}b") for c in x]
    return "".join(cols[i][j] for j in range(bits) for i in range(len(cols)))


def test_interleave_comparator_transitive():
    pts = np.random.default_rng(0).random((64, 2))
    o = interleave_order(point_cloud(pts), bits=20)
    strings = [_digit_string(p, 20) for p in pts]
    for a, b, c in itertools.permutations(range(64), 3):
        if o.less(a, b) and o.less(b, c):
            assert o.less(a, c)
    for a, b in itertools.combinations(range(64), 2):
        assert o.less(a, b) == (strings[a] < strings[b])


def test_interleave_indistinguishable():
    with pytest.raises(OrderError):
        interleave_order(point_cloud([[0.1, 0.1], [0.11, 0.1]]), bits=2)


# space filling ------------------------------------------------------------------------------


def test_spacefill_quadrants():
    centres = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.75], [0.75, 0.25]]
    o = spacefill_order(point_cloud(centres), depth=1)
    assert o.seq.tolist() == [0, 1, 2, 3]


def test_spacefill_locality():
    g = grid_space(2, 16, 2)
    o = spacefill_order(g, 16, g.coords / 16)
    assert order_ratio_sampled(g, o, 2, 3000, seed=0).value <= 2 + 1e-9


def test_spacefill_single_point():
    o = spacefill_order(point_cloud([[0.3, 0.3]]))
    assert o.rank.tolist() == [0]


# hierarchy ------------------------------------------------------------------------------------


def test_hierarchy_whole_space_is_identity():
    assert hierarchy_order([range(6)], 6) == natural_order(6)


def test_hierarchy_dyadic_line():
    fam = [range(a, a + w) for w in (1, 2, 4, 8) for a in range(0, 8, w)]
    o = hierarchy_order(fam, 8)
    assert o == natural_order(8)
    assert all(is_convex(o, s) for s in fam)


def test_hierarchy_nested_pair():
    A, B = {5, 1}, {1, 5, 3, 0}
    o = hierarchy_order([A, B], 7)
    assert is_convex(o, A) and is_convex(o, B)


def test_hierarchy_rejects_overlap():
    with pytest.raises(OrderError):
        hierarchy_order([{0, 1}, {1, 2}], 3)


@st.composite
def laminar_families(draw):
    n = draw(st.integers(1, 24))
    sets = []
    stack = [list(range(n))]
    perm = draw(st.permutations(range(n)))
    stack = [list(perm)]
    while stack:
        s = stack.pop()
        sets.append(set(s))
        if len(s) > 1:
            cut = draw(st.integers(1, len(s) - 1))
            stack += [s[:cut], s[cut:]]
    return n, sets


@settings(max_examples=60, deadline=None)
@given(laminar_families())
def test_hierarchy_makes_every_set_convex(fam):
    n, sets = fam
    o = hierarchy_order(sets, n)
    assert all(is_convex(o, s) and is_convex_brute(o, s) for s in sets)


# product of trees ------------------------------------------------------------------------------


def test_tree_f_values():
    assert tree_f(5, 1) == 2
    assert tree_f(5, 0) == 5
    assert tree_f(3, 1) == 0


def test_tree_sequence_head():
    seq = tree_word_sequence("0110", "10", 6)
    assert seq[0] == "0110" and seq[1] == "10"


def test_tree_product_sets_convex():
    sp = tree_product_space(5)
    o = tree_product_order(sp)
    words = sp.meta["words"]
    W = len(words)
    ids = np.arange(sp.n)
    # the order's own level k corresponds to W_{2^(k+1)}; W_2 (finest) is excluded
    for j in range(2, 7):
        t = tree_partition(words, 2 ** j)
        lab = t[ids // W] * W + t[ids % W]
        assert all(is_convex(o, s) for s in partition_sets(lab)), j


# pullbacks, baselines, convexity ------------------------------------------------------------------


def test_pullback_identity_and_constant():
    base = random_order(6, seed=2)
    assert pullback_order(base, np.arange(6)) == base
    tb = random_order(6, seed=5)
    assert pullback_order(base, np.zeros(6, dtype=int), tie_break=tb) == tb


def test_pullback_two_to_one():
    base = order_from_sequence([2, 0, 3, 1])
    phi = np.array([0, 1, 2, 3, 0, 1, 2, 3])
    o = pullback_order(base, phi)
    for x, y in itertools.combinations(range(8), 2):
        if phi[x] != phi[y]:
            assert o.less(x, y) == base.less(phi[x], phi[y])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 10_000))
def test_pullback_respects_images(m, n, seed):
    rng = np.random.default_rng(seed)
    base = random_order(m, seed)
    phi = rng.integers(0, m, size=n)
    o = pullback_order(base, phi)
    for x, y in itertools.combinations(range(n), 2):
        if phi[x] != phi[y]:
            assert o.less(x, y) == base.less(phi[x], phi[y])


def test_random_and_natural():
    assert random_order(10, 4) == random_order(10, 4)
    assert natural_order(5).rank.tolist() == [0, 1, 2, 3, 4]
    assert sorted(random_order(30, 1).rank.tolist()) == list(range(30))


def test_is_convex_examples():
    o = natural_order(6)
    assert is_convex(o, [2, 3, 4])
    assert not is_convex(natural_order(4), [1, 3])
    assert is_convex(o, range(6))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 15), st.integers(0, 1000), st.sets(st.integers(0, 14)))
def test_is_convex_matches_definition(n, seed, subset):
    o = random_order(n, seed)
    sub = {x for x in subset if x < n}
    assert is_convex(o, sub) == is_convex_brute(o, sub)
