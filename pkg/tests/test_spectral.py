from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordratio.orders import is_convex, natural_order, random_order
from ordratio.ratio import snake_stats
from ordratio.spaces import (complete_graph, cycle_graph, disjoint_union_graphs, path_graph,
                             random_regular_graph, shortest_path_metric)
from ordratio.spectral import (
    SpectralError, add_loops, adjacency_spectrum, claim_snake, expansion_hypothesis,
    interval_partition, probe_params, random_walk, separation_failure_bound, snake_probe,
)


# spectra --------------------------------------------------------------------------------------


def test_k4_spectrum():
    rep = adjacency_spectrum(complete_graph(4))
    assert np.allclose(rep.eigenvalues, [3, -1, -1, -1], atol=1e-9)
    assert rep.delta == pytest.approx(4 / 3)


def test_c8_spectrum():
    rep = adjacency_spectrum(cycle_graph(8))
    circulant = sorted((2 * math.cos(2 * math.pi * j / 8) for j in range(8)), reverse=True)
    assert np.allclose(rep.eigenvalues, circulant, atol=1e-9)
    assert rep.eigenvalues[1] == pytest.approx(2 * math.cos(math.pi / 4))
    assert rep.delta == pytest.approx(1 - math.cos(math.pi / 4))


def test_disconnected_gap_zero():
    rep = adjacency_spectrum(disjoint_union_graphs([complete_graph(4), complete_graph(4)]))
    assert rep.eigenvalues[0] == pytest.approx(rep.eigenvalues[1])
    assert rep.delta == pytest.approx(0, abs=1e-9)


def test_spectrum_errors():
    with pytest.raises(SpectralError):
        adjacency_spectrum(path_graph(4))
    with pytest.raises(SpectralError):
        adjacency_spectrum(cycle_graph(10), cap=5)


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 30).map(lambda n: 2 * n), st.sampled_from([3, 4]), st.integers(0, 1000))
def test_regular_spectrum_invariants(n, d, seed):
    g = random_regular_graph(n, d, seed)
    rep = adjacency_spectrum(g)
    assert np.all(np.diff(rep.eigenvalues) <= 1e-9)
    if g.is_connected():
        assert rep.eigenvalues[0] == pytest.approx(d, abs=1e-6)


# loops ---------------------------------------------------------------------------------------------


def test_k4_with_loops():
    g = add_loops(complete_graph(4), 3)
    rep = adjacency_spectrum(g)
    assert rep.d == 6
    assert np.allclose(rep.eigenvalues, [6, 2, 2, 2], atol=1e-9)


def test_zero_loops_identity():
    g = cycle_graph(5)
    assert add_loops(g, 0) is g


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 20).map(lambda n: 2 * n), st.integers(0, 4), st.integers(0, 1000))
def test_shift_law(n, c, seed):
    g = random_regular_graph(n, 3, seed)
    base, shifted = adjacency_spectrum(g), adjacency_spectrum(add_loops(g, c))
    assert np.allclose(shifted.eigenvalues, base.eigenvalues + c, atol=1e-6)
    if c == 3:
        assert shifted.delta == pytest.approx(base.delta / 2)


# parameters --------------------------------------------------------------------------------------


def test_probe_params_examples():
    p = probe_params(10 ** 6, 3, 0.5, 3)
    assert p.t == 358
    assert p.N == 12
    assert p.m_full == 221 and p.m == 221


def test_probe_params_proof_variant():
    p = probe_params(10 ** 6, 3, 0.5, 3, "proof")
    assert p.t == math.ceil(12 * 3 * (math.log(3) + math.log(2)) / 0.5)


def test_probe_params_flags():
    p = probe_params(1024, 3, 0.1, 3)
    assert not p.feasible and "too small" in p.note
    capped = probe_params(10 ** 6, 3, 0.05, 5, m_cap=100)
    assert capped.m == 100 and capped.m_full > 100 and "capped" in capped.note
    with pytest.raises(SpectralError):
        probe_params(100, 3, 0.0, 3)
    with pytest.raises(SpectralError):
        probe_params(100, 2, 0.5, 3)


def test_separation_failure_bound():
    assert separation_failure_bound(2, 3, 1, 100) == pytest.approx(4 * 3 * 2 / 100)


# walks -----------------------------------------------------------------------------------------------


def test_walk_zero_steps():
    assert random_walk(cycle_graph(6), 4, 0, 0).tolist() == [4]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 50), st.integers(0, 10_000))
def test_walk_diameter_and_edges(t, seed):
    g = random_regular_graph(40, 3, 7)
    sp = shortest_path_metric(g)
    tr = random_walk(g, seed % 40, t, seed)
    assert tr.size == t + 1
    assert all(sp.d(a, b) == 1 for a, b in zip(tr[:-1], tr[1:]))
    assert sp.diameter(np.unique(tr)) <= t
    assert np.array_equal(tr, random_walk(g, seed % 40, t, seed))


def test_walk_k4_frequencies():
    g = complete_graph(4)
    rng = np.random.default_rng(0)
    samples = 100_000
    counts = np.zeros(4)
    for _ in range(samples // 1000):
        for _ in range(1000):
            counts[random_walk(g, 0, 1, rng)[1]] += 1
    assert counts[0] == 0
    p = 1 / 3
    sigma = math.sqrt(samples * p * (1 - p))
    assert np.all(np.abs(counts[1:] - samples * p) <= 3 * sigma)


def test_walk_loops_are_self_steps():
    g = add_loops(complete_graph(4), 3)
    tr = random_walk(g, 0, 2000, 1)
    stay = np.mean(tr[1:] == tr[:-1])
    assert 0.4 < stay < 0.6


# intervals -------------------------------------------------------------------------------------------


def test_interval_sizes():
    o = natural_order(10)
    assert np.bincount(interval_partition(o, 10, 2)).tolist() == [5, 5]
    assert np.bincount(interval_partition(o, 10, 3)).tolist() == [4, 3, 3]
    with pytest.raises(SpectralError):
        interval_partition(o, 10, 11)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 1000))
def test_intervals_convex(n, N, seed):
    N = min(N, n)
    o = random_order(n, seed)
    lab = interval_partition(o, n, N)
    sizes = np.bincount(lab, minlength=N)
    assert sizes.max() - sizes.min() <= 1
    assert all(is_convex(o, np.flatnonzero(lab == b)) for b in range(N))


# snakes from trajectories ---------------------------------------------------------------------------


def test_claim_snake_exact_k():
    g = path_graph(12)
    sp = shortest_path_metric(g)
    o = natural_order(12)
    lab = interval_partition(o, 12, 4)
    a = np.array([1, 2, 3, 4])
    b = np.array([0, 1, 2, 3, 4, 5])
    pts = claim_snake(o, a, b, lab, 2)
    assert pts.size == 3
    assert np.all(np.diff(o.rank[pts]) > 0)
    assert snake_stats(sp, o, pts).width_b <= 5


def test_probe_disconnected():
    g = disjoint_union_graphs([complete_graph(4), complete_graph(4)])
    with pytest.raises(SpectralError):
        snake_probe(g, natural_order(8), 3, 0)


def test_probe_expander():
    g = random_regular_graph(1024, 3, 0)
    rep = snake_probe(g, random_order(1024, 0), 3, 0, runs=20)
    assert rep.success_rate >= 0.5
    t = rep.params.t
    for r in rep.per_run:
        if r["success"]:
            assert r["snake"]["width"] <= t
            assert r["length_ok"] and r["width_ok"]
            assert r["shared_intervals"] >= 3
    assert rep.best is not None
    assert rep.to_json()["kind"] == "probe"


def test_expansion_hypothesis_rows():
    rows = expansion_hypothesis([(10 ** 3, 3, 0.1), (10 ** 6, 3, 0.1)])
    assert rows[1]["ratio"] < rows[0]["ratio"]
    assert math.isinf(expansion_hypothesis([(100, 3, 0.0)])[0]["ratio"])
