"""Experiment runners behind the CLI.

Each runner takes a parameter dict, a seed and an enumeration budget and
returns ``(results, checks, tables)``: a JSON-ready result dict, a mapping of
check names to booleans, and CSV tables ``name -> (header, rows)``. Runners
are deterministic given their inputs; wall-clock data never enters results.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .cubes import (identity_grid_map, minop_maxne, omega_sets, sphere_antipodal_snake,
                    wreath_cube_map, audit_wreath_pairs, circle_lemma_snake)
from .filtration import (filtration_for, verify_filtration, or_bound_constant,
                         snake_elongation_bound, wreath_partition, set_diameters)
from .gap import divide_path, gap_certificate, interleave_snake_bound_check, random_subsets
from .orders import (hierarchy_order, interleave_order, is_convex, lex_order, natural_order,
                     random_order, spacefill_order, tree_product_order, Order)
from .ratio import (BudgetExceeded, order_ratio_exact, order_ratio_sampled,
                    order_ratio_table, snake_search, snake_stats)
from .spaces import (FiniteMetricSpace, circle_net, complete_graph,
                     cycle_graph, grid_space, lamplighter_space, point_cloud,
                     random_regular_graph, shortest_path_metric, sphere_net, tree_product_space,
                     tree_space, tripod_product_space)
from .spectral import adjacency_spectrum, add_loops, snake_probe
from .tsp import brute_matrix, held_karp_matrix

TOL = 1e-9


# builders -----------------------------------------------------------------------------------


def build_space(spec: dict) -> FiniteMetricSpace:
    """Space from a ``{"type": ..., **params}`` dict."""
    p = dict(spec)
    kind = p.pop("type", None)
    if kind == "grid":
        return grid_space(int(p["d"]), int(p["n"]), p.get("p", 1))
    if kind == "line":
        return grid_space(1, int(p["n"]), 1)
    if kind == "circle_net":
        return circle_net(int(p["n"]))
    if kind == "sphere_net":
        return sphere_net(int(p["d"]), float(p["eps"]), int(p.get("seed", 0)))
    if kind == "tree":
        return tree_space(int(p["depth"]))
    if kind == "tree_product":
        return tree_product_space(int(p["depth"]))
    if kind == "lamplighter":
        return lamplighter_space(int(p["i"]))
    if kind == "tripod_product":
        return tripod_product_space(int(p["d"]), int(p["arm"]))
    if kind == "random_regular":
        g = random_regular_graph(int(p["n"]), int(p["d"]), int(p.get("seed", 0)))
        return shortest_path_metric(g)
    if kind == "points":
        return point_cloud(p["coords"], p.get("p", 2))
    if kind == "file":
        from .io import read_space
        return read_space(p["path"])
    raise ValueError(f"unknown space type {kind!r}")


def build_order(space: FiniteMetricSpace, spec: dict) -> Order:
    p = dict(spec)
    kind = p.pop("type", "natural")
    if kind == "natural":
        return natural_order(space)
    if kind == "random":
        return random_order(space, int(p.get("seed", 0)))
    if kind == "lex":
        return lex_order(space)
    if kind == "interleave":
        return interleave_order(space, int(p.get("bits", 20)), _unit_coords(space))
    if kind == "spacefill":
        return spacefill_order(space, int(p.get("depth", 16)), _unit_coords(space))
    if kind == "hierarchy":
        return hierarchy_order(filtration_for(space), space.n)
    if kind == "tree_product":
        return tree_product_order(space)
    if kind == "file":
        from .io import read_order
        return read_order(p["path"])
    raise ValueError(f"unknown order type {kind!r}")


def _unit_coords(space: FiniteMetricSpace) -> np.ndarray:
    """Grid coordinates scaled into [0, 1) by the grid side."""
    c = np.asarray(space.coords, dtype=np.float64)
    if space.meta.get("type") == "grid":
        return c / space.meta["params"]["n"]
    lo, hi = c.min(axis=0), c.max(axis=0)
    return (c - lo) / np.where(hi > lo, (hi - lo) * (1 + 1e-9), 1.0)


def _table_rows(table: dict) -> list[tuple]:
    return [(k, v) for k, v in sorted(table.items())]


# generic operation ---------------------------------------------------------------------------


def run_ratio(params: dict, seed: int, budget: float, space: dict, order: dict):
    """Exact OR(k) table for k = 2..kmax on a space and order built from specs."""
    sp = build_space(space)
    o = build_order(sp, order)
    kmax = int(params.get("kmax", 4))
    table = order_ratio_table(sp, o, kmax, budget)
    limit = params.get("limit")
    checks = {}
    if limit is not None:
        checks["or_below_limit"] = all(table[k] <= float(limit) + TOL for k in range(2, kmax + 1))
    res = {"n": sp.n, "order": o.provenance, "or": {str(k): table[k] for k in range(2, kmax + 1)}}
    return res, checks, {"or": (["k", "or"], _table_rows({k: table[k] for k in range(2, kmax + 1)}))}


# criterion runners ---------------------------------------------------------------------------


def run_oracle(params: dict, seed: int, budget: float, **_):
    """Held-Karp against brute force on random integer and real metrics."""
    rng = np.random.default_rng(seed)
    count, size = int(params.get("instances", 200)), int(params.get("points", 7))
    mismatches, worst = 0, 0.0
    for t in range(count):
        if t % 2 == 0:
            pts = rng.integers(0, 20, size=(size, 2))
            sub = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(np.float64)
        else:
            pts = rng.random((size, 3))
            sub = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        hk, _ = held_karp_matrix(sub)
        bf = brute_matrix(sub)
        err = abs(float(hk) - bf)
        worst = max(worst, err)
        if (err != 0.0) if t % 2 == 0 else err > 1e-9:
            mismatches += 1
    res = {"instances": count, "points": size, "mismatches": mismatches, "max_abs_error": worst}
    return res, {"heldkarp_equals_brute": mismatches == 0}, {}


def run_circle(params: dict, seed: int, budget: float, **_):
    n, k = int(params.get("n", 16)), int(params.get("k", 5))
    sp = circle_net(n)
    o = natural_order(sp)
    table = order_ratio_table(sp, o, k, budget)
    ors = {kk: table[kk] for kk in range(2, k + 1)}
    step = 2 * math.pi / n
    snakes, width_ok, length_ok = [], True, True
    for t in range(int(params.get("orders", 20))):
        sn = circle_lemma_snake(sp, random_order(sp, seed + t))
        snakes.append(sn.to_json())
        width_ok &= sn.width_b <= 2 * step + TOL
        length_ok &= sn.length_a >= math.pi - 2 * step - TOL
    checks = {"or_at_most_2": all(v <= 2 + 1e-9 for v in ors.values()),
              "snake_width": bool(width_ok), "snake_length": bool(length_ok)}
    res = {"n": n, "or": {str(kk): v for kk, v in ors.items()}, "snakes": snakes}
    return res, checks, {"or": (["k", "or"], _table_rows(ors))}


def run_lex(params: dict, seed: int, budget: float, **_):
    side = int(params.get("side", 16))
    p = params.get("p", 1)
    sp = grid_space(2, side, p)
    o = lex_order(sp)
    rep = order_ratio_exact(sp, o, 2, budget)
    wit = snake_stats(sp, o, list(rep.witness_points))
    growth = []
    for s in params.get("sides", [8, 16, 32]):
        g = grid_space(2, int(s), p)
        sn = snake_search(g, lex_order(g), 3, "exact")
        growth.append({"side": int(s), "elongation": sn.elongation, "snake": sn.to_json()})
    els = [g["elongation"] for g in growth]
    checks = {"or2_at_least_1.8": rep.value >= 1.8, "witness_elongation_15": wit.elongation >= 15,
              "elongation_monotone": all(a < b for a, b in zip(els, els[1:]))}
    res = {"side": side, "or2": rep.to_json(), "witness_snake": wit.to_json(), "growth": growth}
    return res, checks, {"growth": (["side", "elongation"], [(g["side"], g["elongation"])
                                                             for g in growth])}


def run_interleave(params: dict, seed: int, budget: float, **_):
    dims = params.get("d", [1, 2])
    dims = [dims] if isinstance(dims, int) else list(dims)
    bits, proposals = int(params.get("bits", 10)), int(params.get("proposals", 1_000_000))
    out, checks = [], {}
    for d in dims:
        r = interleave_snake_bound_check(int(d), bits, proposals, seed)
        out.append(r)
        checks[f"d{d}_within_8sqrt_d"] = r["max_elongation"] <= r["bound"] + TOL
    rows = [(r["d"], r["bits"], r["proposals"], r["max_elongation"], r["bound"]) for r in out]
    return ({"runs": out}, checks,
            {"interleave": (["d", "bits", "proposals", "max_elongation", "bound"], rows)})


def _pipeline_space(name: str, params: dict) -> FiniteMetricSpace:
    if name == "line":
        return grid_space(1, int(params.get("line_n", 64)), 1)
    if name == "tree_product":
        return tree_product_space(int(params.get("tree_depth", 5)))
    if name == "lamplighter":
        return lamplighter_space(int(params.get("lamplighter_i", 8)))
    raise ValueError(f"unknown pipeline space {name!r}")


def run_filtration(params: dict, seed: int, budget: float, **_):
    """Filtration, hierarchy order, OR bound and snake bound on each listed space.

    OR(k) is exact wherever the enumeration fits the budget. Beyond it the
    sampled lower bound is reported and the bound is certified by OR(k) <= k,
    which holds for every order.
    """
    kmax = int(params.get("kmax", 6))
    proposals = int(params.get("snake_proposals", 20_000))
    out, checks, rows = {}, {}, []
    for name in params.get("spaces", ["line", "tree_product", "lamplighter"]):
        sp = _pipeline_space(name, params)
        fam = filtration_for(sp)
        ver = verify_filtration(sp, fam)
        o = hierarchy_order(fam, sp.n)
        convex = all(is_convex(o, s) for s in fam.all_sets())
        C = or_bound_constant(fam.params)
        per_size, exact_k = {}, 1
        for k in range(kmax, 1, -1):
            try:
                per_size = order_ratio_exact(sp, o, k, budget).per_size
                exact_k = k
                break
            except BudgetExceeded:
                continue
        values = {}
        run = 1.0
        for k in range(2, kmax + 1):
            if k <= exact_k:
                run = max(run, per_size.get(k + 1, 1.0))
                values[k] = {"value": run, "exact": True, "upper": run}
            else:
                lo = order_ratio_sampled(sp, o, k, 2000, seed).value
                values[k] = {"value": max(lo, run), "exact": False, "upper": float(k)}
        or_ok = all(v["upper"] <= C * math.log(k) + TOL for k, v in values.items())
        s = 2 * fam.params.m + 3
        try:
            sn, mode = snake_search(sp, o, s, "exact"), "exact"
        except BudgetExceeded:
            sn, mode = snake_search(sp, o, s, "sampled", proposals, seed), "sampled"
        bound = snake_elongation_bound(fam.params)
        el = 0.0 if sn is None else sn.elongation
        out[name] = {"n": sp.n, "params": fam.params.to_json(), "verify": ver["ok"],
                     "levels": {str(j): r for j, r in ver["levels"].items()},
                     "convex": convex, "or_constant": C,
                     "or": {str(k): v for k, v in values.items()},
                     "snake_points": s, "snake_mode": mode,
                     "snake": None if sn is None else sn.to_json(), "snake_bound": bound}
        checks[f"{name}_verify"] = bool(ver["ok"])
        checks[f"{name}_convex"] = bool(convex)
        checks[f"{name}_or_bound"] = bool(or_ok)
        checks[f"{name}_snake_bound"] = el <= bound + TOL
        rows += [(name, k, v["value"], v["exact"], v["upper"], C * math.log(k))
                 for k, v in values.items()]
    return out, checks, {"or": (["space", "k", "or", "exact", "upper", "bound"], rows)}


def run_wreath(params: dict, seed: int, budget: float, **_):
    rng = np.random.default_rng(seed)
    samples = int(params.get("samples", 1000))
    rows, diam_ok, ball_ok = [], True, True
    for i in range(int(params.get("i_min", 2)), int(params.get("i_max", 10)) + 1):
        sp = lamplighter_space(i)
        for r in params.get("radii", [1, 2, 3, 4]):
            lab = wreath_partition(i, r)
            dmax = float(set_diameters(sp, lab).max())
            meets = 0
            for x in rng.integers(0, sp.n, size=samples):
                row = sp.row(int(x))
                meets = max(meets, int(np.unique(lab[row <= r / 2 + TOL]).size))
            diam_ok &= dmax <= 9 * r
            ball_ok &= meets <= 2
            rows.append((i, r, dmax, meets))
    res = {"rows": [{"i": i, "r": r, "max_diameter": dm, "max_ball_meets": m}
                    for i, r, dm, m in rows]}
    return (res, {"diameter_at_most_9r": bool(diam_ok), "balls_meet_at_most_2": bool(ball_ok)},
            {"wreath": (["i", "r", "max_diameter", "max_ball_meets"], rows)})


def _random_budgets(rng, L: int, parts: int) -> list[Fraction]:
    w = rng.integers(1, 100, size=parts)
    total = int(w.sum())
    a = [Fraction(int(x) * L, total) for x in w]
    a[-1] = L - sum(a[:-1], Fraction(0))
    return a


def run_gap(params: dict, seed: int, budget: float, **_):
    side = int(params.get("side", 32))
    sp = grid_space(2, side, 1)
    o = interleave_order(sp, int(params.get("bits", 5)), _unit_coords(sp))
    subs = random_subsets(sp, int(params.get("subsets", 200)), int(params.get("max_size", 40)),
                          seed)
    rep = gap_certificate(sp, o, subs, int(params.get("s0", 8)), float(params.get("eps", 1.0)),
                          seed=seed)
    rng = np.random.default_rng(seed + 1)
    path_ok, paths = True, int(params.get("paths", 1000))
    for _ in range(paths):
        seq = rng.integers(0, sp.n, size=int(rng.integers(2, 30)))
        L = int(sp.pairs(seq[:-1], seq[1:]).sum())
        if L == 0:
            continue
        a = _random_budgets(rng, L, int(rng.integers(1, 8)))
        parts = divide_path(sp, seq, a)
        for part, aj in zip(parts, a):
            if part.size > 1 and Fraction(int(sp.sub(part).max())) > aj:
                path_ok = False
    checks = {"certificate": rep.all_pass, "n_empirical_finite": math.isfinite(rep.N_empirical),
              "divide_path_postcondition": bool(path_ok)}
    res = {"side": side, "report": rep.to_json(), "paths": paths}
    return res, checks, {"gap": (["size", "ratio", "ceil_log2"], rep.csv_rows())}


def _shift_law(g, name: str, c: int, expect) -> dict:
    base = adjacency_spectrum(g).eigenvalues
    looped = adjacency_spectrum(add_loops(g, c)).eigenvalues
    err = float(np.max(np.abs(looped - (base + c))))
    exp_err = float(np.max(np.abs(base[: len(expect)] - np.asarray(expect))))
    return {"graph": name, "loops": c, "shift_error": err, "known_spectrum_error": exp_err,
            "ok": err <= 1e-6 and exp_err <= 1e-6}


def run_expander(params: dict, seed: int, budget: float, **_):
    n, d, k = int(params.get("n", 1024)), int(params.get("d", 3)), int(params.get("k", 3))
    g = random_regular_graph(n, d, seed)
    order = random_order(n, seed) if params.get("order") == "random" else natural_order(n)
    rep = snake_probe(g, order, k, seed, runs=int(params.get("runs", 20)))
    t = rep.params.t
    seps = [r["min_start_separation"] for r in rep.per_run
            if r["min_start_separation"] is not None]
    min_sep = min(seps) if seps else 0.0
    ok_w = ok_l = True
    for r in rep.per_run:
        if r["success"]:
            ok_w &= r["snake"]["width"] <= t
            ok_l &= r["snake"]["length"] >= min_sep - 2 * t
            ok_l &= r["length_ok"]
    laws = [_shift_law(complete_graph(4), "K4", 3, [3, -1, -1, -1]),
            _shift_law(cycle_graph(8), "C8", 2, [2, 2 * math.cos(math.pi / 4)])]
    checks = {"success_rate_half": rep.success_rate >= 0.5, "width_at_most_t": bool(ok_w),
              "length_at_least_sep_minus_2t": bool(ok_l),
              "shift_law": all(x["ok"] for x in laws)}
    res = {"n": n, "d": d, "seed": seed, "probe": rep.to_json(),
           "min_start_separation": min_sep, "shift_law": laws}
    return (res, checks, {"probe": (["n", "d", "delta", "t", "L", "success_rate", "best_width",
                                     "best_length"], [rep.csv_row(n, d)])})


def run_sphere(params: dict, seed: int, budget: float, **_):
    cases = params.get("cases", [{"d": 1, "eps": 0.25}, {"d": 2, "eps": 0.3}])
    orders = int(params.get("orders", 20))
    out, checks, rows = [], {}, []
    for case in cases:
        d, eps = int(case["d"]), float(case["eps"])
        sp = sphere_net(d, eps, seed)
        found = w_ok = l_ok = 0
        for t in range(orders):
            r = sphere_antipodal_snake(sp, random_order(sp, seed + t), eps,
                                       int(params.get("probes", 2000)), seed + t)
            if r["found"]:
                found += 1
                w_ok += bool(r["width_ok"])
                l_ok += bool(r["length_ok"])
        out.append({"d": d, "eps": eps, "n": sp.n, "orders": orders, "found": found,
                    "width_ok": w_ok, "length_ok": l_ok})
        checks[f"d{d}_all_found"] = found == orders
        checks[f"d{d}_width_length"] = w_ok == orders and l_ok == orders
        rows.append((d, eps, sp.n, orders, found))
    return {"cases": out}, checks, {"sphere": (["d", "eps", "n", "orders", "found"], rows)}


def run_cubes(params: dict, seed: int, budget: float, **_):
    ident, id_ok = [], True
    for d, n in params.get("identity", [[1, 8], [2, 5], [3, 2]]):
        sp, cm = identity_grid_map(int(d), int(n))
        rep = minop_maxne(sp, cm)
        ok = rep.minop == 2 * n and rep.maxne == 1
        id_ok &= ok
        ident.append({"d": d, "n": n, "minop": rep.minop, "maxne": rep.maxne, "ok": ok})
    wreath, cert_ok, sep_ok, audit_ok = [], True, True, True
    for n in params.get("wreath_n", [64, 144]):
        for d in params.get("wreath_d", [2, 3]):
            om = omega_sets(int(n), int(d))
            wm = wreath_cube_map(int(n), int(d), om)
            c = wm.certificates()
            au = audit_wreath_pairs(wm, int(params.get("audit_samples", 50)), seed)
            sep_ok &= min(om["separation"]) >= math.sqrt(n) / 6 - TOL
            cert_ok &= c["upper_ok"] and c["lower_ok"]
            audit_ok &= au["neighbour_walks_ok"] and au["antipodal_walks_ok"] and au["omega_covered"]
            wreath.append({"n": n, "d": d, "separation": om["separation"], "certificates": c,
                           "audit": au})
    checks = {"identity_exact": bool(id_ok), "wreath_certificates": bool(cert_ok),
              "omega_separation": bool(sep_ok), "wreath_audit": bool(audit_ok)}
    rows = [(w["n"], w["d"], w["certificates"]["minop_lower"], w["certificates"]["maxne_upper"],
             w["certificates"]["ratio_lower"]) for w in wreath]
    return ({"identity": ident, "wreath": wreath}, checks,
            {"cubes": (["n", "d", "minop_lower", "maxne_upper", "ratio_lower"], rows)})


RUNNERS = {
    "ratio": run_ratio,
    "oracle": run_oracle,
    "circle": run_circle,
    "lex": run_lex,
    "interleave": run_interleave,
    "filtration": run_filtration,
    "wreath": run_wreath,
    "gap": run_gap,
    "expander": run_expander,
    "sphere": run_sphere,
    "cubes": run_cubes,
}
