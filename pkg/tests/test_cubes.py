from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordratio.cubes import (
    CubeError, CubeMap, apply_walk, audit_wreath_pairs, boundary_simplices, circle_cube_map,
    circle_lemma_snake, constant_cube_map, cube_or_witness, cube_points, identity_grid_map,
    l1_ball, minop_maxne, omega_sets, sphere_antipodal_snake, toggle_walk, wreath_cube_map,
)
from ordratio.orders import lex_order, natural_order, random_order
from ordratio.ratio import snake_search, snake_stats
from ordratio.spaces import circle_net, grid_space, sphere_net, tripod_product_space


def brute_minop_maxne(space, d, n, f):
    """Reference over explicit dicts of cube points."""
    pts = list(itertools.product(range(-n, n + 1), repeat=d))
    op = min(space.d(f[p], f[tuple(-c for c in p)]) for p in pts if max(map(abs, p)) == n)
    ne = 0.0
    for p in pts:
        for i in range(d):
            q = list(p)
            q[i] += 1
            if q[i] <= n:
                ne = max(ne, space.d(f[p], f[tuple(q)]))
    return op, ne


# minop / maxne ---------------------------------------------------------------------------------


@pytest.mark.parametrize("d,n", [(1, 8), (2, 5), (3, 2)])
def test_identity_map(d, n):
    sp, cm = identity_grid_map(d, n)
    rep = minop_maxne(sp, cm)
    assert (rep.minop, rep.maxne) == (2 * n, 1)
    assert rep.ratio == 2 * n


def test_constant_map():
    sp = grid_space(2, 3, 1)
    rep = minop_maxne(sp, constant_cube_map(2, 1, point=4))
    assert rep.minop == 0 and rep.maxne == 0 and math.isnan(rep.ratio)


def test_circle_map():
    sp = circle_net(64)
    n = 4
    rep = minop_maxne(sp, circle_cube_map(sp, n))
    f = {(int(p[0]),): int(v) for p, v in zip(cube_points(1, n), circle_cube_map(sp, n).image)}
    assert (rep.minop, rep.maxne) == pytest.approx(brute_minop_maxne(sp, 1, n, f))
    # x -> x/n radians: antipodes sit 2 radians apart, neighbours 1/n apart
    assert rep.minop == pytest.approx(2.0, abs=2 * math.pi / 64)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 10_000))
def test_minop_maxne_matches_brute(d, n, seed):
    sp = grid_space(2, 6, 1)
    pts = cube_points(d, n)
    img = np.random.default_rng(seed).integers(0, sp.n, size=pts.shape[0])
    cm = CubeMap(d, n, pts, img)
    f = {tuple(int(c) for c in p): int(v) for p, v in zip(pts, img)}
    rep = minop_maxne(sp, cm)
    assert (rep.minop, rep.maxne) == brute_minop_maxne(sp, d, n, f)


def test_cube_map_json_round_trip():
    _, cm = identity_grid_map(2, 2)
    back = CubeMap.from_json(json.loads(json.dumps(cm.to_json())))
    assert np.array_equal(back.image, cm.image) and np.array_equal(back.points, cm.points)
    bad = cm.to_json()
    bad["entries"] = bad["entries"][:-1]
    with pytest.raises(CubeError):
        CubeMap.from_json(bad)


# omega sets and the wreath map ---------------------------------------------------------------------


def test_l1_ball_size():
    for n in (0, 1, 5):
        assert l1_ball(n).shape[0] == 2 * n * n + 2 * n + 1


def test_omega_144_3():
    om = omega_sets(144, 3)
    w = om["omega"]
    assert w.shape == (3, 144, 2)
    assert len({tuple(p) for p in w.reshape(-1, 2).tolist()}) == 3 * 144
    for i in range(3):
        dm = np.abs(w[i][:, None] - w[i][None]).sum(axis=2)
        np.fill_diagonal(dm, 10 ** 9)
        assert dm.min() >= 2
        assert (144 - 1) * dm.min() >= (144 - 1) * math.sqrt(144) / 6


def test_omega_single_set():
    om = omega_sets(9, 1)
    assert om["omega"].shape == (1, 9, 2)


def test_omega_capacity_error():
    with pytest.raises(CubeError):
        omega_sets(4, 5)


@pytest.mark.parametrize("n,d", [(64, 2), (144, 3)])
def test_wreath_certificates(n, d):
    wm = wreath_cube_map(n, d)
    c = wm.certificates()
    assert c["upper_ok"] and c["lower_ok"]
    assert c["maxne_upper"] <= 2 * n + 1
    assert c["minop_lower"] >= (n - 1) * math.sqrt(n) / 6
    assert c["ratio_lower"] >= ((n - 1) * math.sqrt(n) / 6) / (2 * n + 1)
    rep = wm.report()
    assert not rep.minop_exact and not rep.maxne_exact


def test_wreath_ratio_grows():
    r = [wreath_cube_map(n, 2).certificates()["ratio_lower"] for n in (36, 64, 144)]
    assert r == sorted(r)


def test_wreath_walk_audit():
    rep = audit_wreath_pairs(wreath_cube_map(64, 2), 100, seed=0)
    assert rep["neighbour_walks_ok"] and rep["antipodal_walks_ok"] and rep["omega_covered"]
    assert rep["min_upper_minus_lower"] >= 0


def test_apply_walk_toggles():
    lamps, pos = apply_walk(set(), toggle_walk([(1, 0), (0, 2)]))
    assert lamps == {(1, 0), (0, 2)} and pos == (0, 0)


# antipodal snakes on spheres ---------------------------------------------------------------------


def test_circle_lemma_snake():
    sp = circle_net(16)
    for seed in range(10):
        o = random_order(sp, seed)
        sn = circle_lemma_snake(sp, o)
        assert len(sn.points) == 3
        assert np.all(np.diff(o.rank[list(sn.points)]) > 0)


def test_sphere_d1_many_orders():
    eps = 0.25
    sp = sphere_net(1, eps, seed=0)
    for seed in range(50):
        rep = sphere_antipodal_snake(sp, random_order(sp, seed), eps, probes=500, seed=seed)
        assert rep["found"], seed
        sn = rep["snake"]
        assert len(sn.points) == 3
        c = np.array(rep["centre"])
        P = sp.coords[list(sn.points)]
        assert np.all(np.linalg.norm(P[0::2] - c, axis=1) <= eps + 1e-9)
        assert np.all(np.linalg.norm(P[1::2] + c, axis=1) <= eps + 1e-9)
        assert rep["width_ok"] and rep["length_ok"]


def test_sphere_d2_orders():
    eps = 0.3
    sp = sphere_net(2, eps, seed=0)
    for seed in range(20):
        rep = sphere_antipodal_snake(sp, random_order(sp, seed), eps, probes=2000, seed=seed)
        assert rep["found"] and len(rep["snake"].points) == 4
        assert rep["snake"].width_b <= 2 * eps + 1e-9
        assert rep["snake"].length_a >= 2 - 2 * eps - 1e-9


# cube witnesses ------------------------------------------------------------------------------------


def test_boundary_simplex_count():
    # 2d faces, (2n)^(d-1) unit cubes each, (d-1)! simplices per cube
    for d, n in [(1, 3), (2, 3), (3, 2)]:
        assert len(boundary_simplices(d, n)) == 2 * d * (2 * n) ** (d - 1) * math.factorial(d - 1)


def test_cube_witness_lex_grows():
    els = []
    for n in (2, 4, 8):
        sp, cm = identity_grid_map(2, n)
        rec = cube_or_witness(sp, [cm], lex_order(sp))[0]
        assert not rec["degenerate"]
        sn = rec["snake"]
        assert len(sn["points"]) == 3
        again = snake_stats(sp, lex_order(sp), sn["points"])
        assert again.elongation == pytest.approx(sn["elongation"])
        if rec["proof_bound"] > 0:
            assert rec["meets_bound"]
        els.append(sn["elongation"])
    assert els == sorted(els) and els[-1] > els[0]


def test_cube_witness_constant_degenerate():
    sp = grid_space(2, 3, 1)
    rec = cube_or_witness(sp, [constant_cube_map(2, 1)], natural_order(sp))[0]
    assert rec["degenerate"] and rec["snake"] is None


# products of tripods ---------------------------------------------------------------------------------


def test_tripod_orders_have_long_snakes():
    sp = tripod_product_space(1, 64)
    orders = [natural_order(sp)] + [random_order(sp, s) for s in range(3)]
    for o in orders:
        assert snake_search(sp, o, 3, "exact").elongation >= 8
