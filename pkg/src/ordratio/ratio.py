"""Order ratio function, order breakpoint and snakes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .orders import Order
from .spaces import FiniteMetricSpace
from .tsp import held_karp_matrix

WORK_BUDGET = 2e10
SNAKE_BUDGET = 5e8
GREEDY_RESTARTS = 64


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class Snake:
    points: tuple[int, ...]
    length_a: float
    width_b: float
    elongation: float

    def to_json(self) -> dict:
        return {"points": list(self.points), "length": self.length_a,
                "width": self.width_b, "elongation": _num(self.elongation)}


@dataclass(frozen=True)
class RatioReport:
    k: int
    value: float
    exact: bool
    witness_points: tuple[int, ...]
    l_T: float
    l_opt: float
    per_size: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        return {"kind": "ratio", "k": self.k, "value": self.value, "exact": self.exact,
                "witness_points": list(self.witness_points), "l_T": self.l_T,
                "l_opt": self.l_opt, "note": self.note}


def _num(x: float):
    return "inf" if math.isinf(x) else x


# snakes ----------------------------------------------------------------------


def snake_stats(space: FiniteMetricSpace, order: Order, points) -> Snake:
    """Length (diameter), width (max same-parity distance) and elongation."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.size < 2:
        raise ValueError("a snake needs at least 2 points")
    r = order.rank[pts]
    if np.any(np.diff(r) <= 0):
        raise ValueError("snake points are not strictly increasing in the order")
    sub = space.sub(pts)
    a = float(sub.max())
    par = np.arange(pts.size) % 2
    same = par[:, None] == par[None, :]
    b = float(sub[same].max())
    el = math.inf if b == 0 else a / b
    return Snake(tuple(int(p) for p in pts), a, b, el)


def _ranked(space: FiniteMetricSpace, order: Order, ids=None):
    """Ids sorted by rank and their distance matrix in that order."""
    ids = np.arange(space.n) if ids is None else np.asarray(ids, dtype=np.int64)
    seq = order.sort(ids)
    return seq, np.ascontiguousarray(space.sub(seq), dtype=np.float64)


def _component_ids(space: FiniteMetricSpace) -> list[np.ndarray]:
    lab = space.components()
    return [np.flatnonzero(lab == c) for c in np.unique(lab)]


def snake_search(space: FiniteMetricSpace, order: Order, s: int, mode: str = "exact",
                 budget: float | int | None = None, seed: int = 0) -> Snake | None:
    """Snake on ``s`` points of maximal elongation found by the chosen mode.

    ``exact`` enumerates every increasing s-tuple (raises BudgetExceeded when
    C(n, s) is above ``budget``); ``greedy`` extends far pairs by nearest
    later points; ``sampled`` scans alternations between random ball pairs.
    """
    if s < 2:
        raise ValueError("s must be >= 2")
    best: Snake | None = None
    for comp in _component_ids(space):
        if comp.size < s:
            continue
        if mode == "exact":
            cap = SNAKE_BUDGET if budget is None else budget
            if math.comb(comp.size, s) > cap:
                raise BudgetExceeded(f"C({comp.size},{s}) exceeds snake budget {cap:g}")
            seq, M = _ranked(space, order, comp)
            el, wit = K.snake_enumerate(M, s)
            cand = snake_stats(space, order, seq[wit])
        elif mode == "greedy":
            cand = _greedy_snake(space, order, comp, s,
                                 GREEDY_RESTARTS if budget is None else int(budget), seed)
        elif mode == "sampled":
            cand = _sampled_snake(space, order, comp, s,
                                  20_000 if budget is None else int(budget), seed)
        else:
            raise ValueError(f"unknown mode {mode}")
        if cand is not None and (best is None or cand.elongation > best.elongation):
            best = cand
    return best


def _greedy_snake(space, order, comp, s, restarts, seed):
    rng = np.random.default_rng(seed)
    seq, M = _ranked(space, order, comp)
    n = len(seq)
    far = np.unravel_index(np.argmax(M), M.shape)
    starts = [(int(far[0]), int(far[1]))]
    for _ in range(max(0, restarts - 1)):
        x = int(rng.integers(n))
        starts.append((x, int(np.argmax(M[x]))))
    best = None
    for x, y in starts:
        # keep room for the remaining s - 2 points after b
        b = min(max(x, y), n - s + 1)
        a = min(min(x, y), b - 1)
        pts = [a, b]
        while len(pts) < s:
            last = pts[-1]
            anchor = pts[0] if len(pts) % 2 == 0 else pts[1]
            cand = np.arange(last + 1, n - (s - len(pts) - 1))
            pts.append(int(cand[np.argmin(M[anchor, cand])]))
        sn = snake_stats(space, order, seq[pts])
        if best is None or sn.elongation > best.elongation:
            best = sn
    return best


def _sampled_snake(space, order, comp, s, proposals, seed):
    rng = np.random.default_rng(seed)
    seq, M = _ranked(space, order, comp)
    n = len(seq)
    xs = rng.integers(0, n, size=proposals)
    ys = rng.integers(0, n, size=proposals)
    dxy = M[xs, ys]
    frac = np.exp(rng.uniform(np.log(1e-3), np.log(0.5), size=proposals))
    rads = frac * dxy
    keep = dxy > 0
    xs, ys, rads = xs[keep], ys[keep], rads[keep]
    if xs.size == 0:
        return None
    el, wit, hits = K.alternation_best(M, xs, ys, rads, s)
    if el < 0:
        return _greedy_snake(space, order, comp, s, 8, seed)
    return snake_stats(space, order, seq[wit])


def alternation_snake(space: FiniteMetricSpace, order: Order, A, B, s: int) -> Snake | None:
    """Best window of ``s`` alternating runs when scanning A and B in order."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    ids = np.concatenate([A, B])
    lab = np.concatenate([np.zeros(len(A), np.int64), np.ones(len(B), np.int64)])
    o = np.argsort(order.rank[ids], kind="stable")
    ids, lab = ids[o], lab[o]
    starts = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
    if starts.size < s:
        return None
    best = None
    for w in range(starts.size - s + 1):
        sn = snake_stats(space, order, ids[starts[w:w + s]])
        if best is None or sn.elongation > best.elongation:
            best = sn
    return best


def bounded_width_sequences(pairs: Sequence[tuple[FiniteMetricSpace, Order]], s: int,
                            width_cap: float, proposals: int = 20_000, seed: int = 0
                            ) -> list[dict]:
    """Per space, the largest snake length found on ``s`` points with width <= cap.

    Candidates alternate between balls of radius cap/2, so every candidate
    has width at most cap by the triangle inequality.
    """
    out = []
    for space, order in pairs:
        rng = np.random.default_rng(seed)
        seq, M = _ranked(space, order)
        n = len(seq)
        best_len, best_pts = 0.0, None
        if n * n <= proposals:
            xs, ys = np.divmod(np.arange(n * n), n)
        else:
            xs = rng.integers(0, n, size=proposals)
            ys = rng.integers(0, n, size=proposals)
        keep = M[xs, ys] > width_cap
        xs, ys = xs[keep], ys[keep]
        if xs.size:
            rads = np.full(xs.size, width_cap / 2.0)
            best_len, wit = K.alternation_longest(M, xs, ys, rads, s, width_cap)
            if best_len > 0:
                sn = snake_stats(space, order, seq[wit])
                best_len, best_pts = sn.length_a, sn.points
        out.append({"n": space.n, "length": best_len,
                    "points": list(best_pts) if best_pts else []})
    return out


# order ratio ---------------------------------------------------------------------


def enumeration_work(n: int, smax: int) -> float:
    """Cost model of ``or_enumerate`` (inner-loop steps) for subsets up to size smax."""
    if smax <= 1 or n < 2:
        return 0.0
    if smax == 3:
        return float(math.comb(n, 3)) + float(math.comb(n, 2))
    work = 0.0
    for s in range(2, smax + 1):
        per = (2 ** (s - 1)) * (s if s == smax else s * s)
        work += math.comb(n, s) * per
    return work


def _tour(sub: np.ndarray) -> tuple[float, float]:
    l_T = float(sub[np.arange(len(sub) - 1), np.arange(1, len(sub))].sum())
    l_opt, _ = held_karp_matrix(sub)
    return l_T, float(l_opt)


def order_ratio_exact(space: FiniteMetricSpace, order: Order, k: int,
                      budget: float = WORK_BUDGET) -> RatioReport:
    """Exact sup of l_T / l_opt over subsets of 2..k+1 points with finite distances."""
    if k < 1:
        raise ValueError("k must be >= 1")
    smax = k + 1
    comps = [c for c in _component_ids(space) if c.size >= 2]
    work = sum(enumeration_work(c.size, min(smax, c.size)) for c in comps)
    if work > budget:
        raise BudgetExceeded(f"exact OR({k}) needs about {work:.3g} steps, budget {budget:.3g}")
    per_size = {s: 1.0 for s in range(2, smax + 1)}
    best_val, best_wit = 1.0, ()
    for comp in comps:
        seq, M = _ranked(space, order, comp)
        sm = min(smax, comp.size)
        if sm == 3:
            val, wit = K.or_triples(M)
            vals = {3: val}
            wits = {3: wit}
        else:
            b, w = K.or_enumerate(M, sm)
            vals = {s: float(b[s]) for s in range(2, sm + 1)}
            wits = {s: w[s, :s] for s in range(2, sm + 1)}
        for s, val in vals.items():
            if val > per_size[s]:
                per_size[s] = val
            if val > best_val and wits[s][0] >= 0:
                best_val, best_wit = val, tuple(int(x) for x in seq[wits[s]])
    if best_wit:
        l_T, l_opt = _tour(space.sub(np.array(best_wit)))
    else:
        best_wit, l_T, l_opt = _diameter_pair(space)
    if best_wit and l_opt > 0:
        best_val = l_T / l_opt
    return RatioReport(k=k, value=best_val, exact=True, witness_points=best_wit,
                       l_T=l_T, l_opt=l_opt, per_size=per_size)


def _diameter_pair(space: FiniteMetricSpace):
    if space.n < 2:
        return (), 0.0, 0.0
    for comp in _component_ids(space):
        if comp.size >= 2:
            M = space.sub(comp)
            a, b = np.unravel_index(np.argmax(M), M.shape)
            x, y = sorted((int(comp[a]), int(comp[b])))
            dd = float(M[a, b])
            return (x, y), dd, dd
    return (), 0.0, 0.0


def order_ratio_sampled(space: FiniteMetricSpace, order: Order, k: int, budget: int = 2000,
                        seed: int = 0) -> RatioReport:
    """Lower bound on OR(k) from uniform subsets and snake-guided proposals."""
    rng = np.random.default_rng(seed)
    wit, l_T, l_opt = _diameter_pair(space)
    if not wit:
        return RatioReport(k=k, value=1.0, exact=False, witness_points=(), l_T=0.0, l_opt=0.0)
    best = (1.0, tuple(order.sort(wit).tolist()), l_T, l_opt)
    comps = [c for c in _component_ids(space) if c.size >= 2]
    sizes = np.array([c.size for c in comps], dtype=np.float64)
    for t in range(budget):
        comp = comps[int(rng.choice(len(comps), p=sizes / sizes.sum()))]
        s = int(rng.integers(2, min(k + 1, comp.size) + 1))
        if t % 2 == 0:
            pts = rng.choice(comp, size=s, replace=False)
        else:
            pts = _snake_proposal(space, order, comp, s, rng)
            if pts is None:
                continue
        pts = order.sort(pts)
        sub = space.sub(pts)
        lt, lo = _tour(sub)
        r = lt / lo if lo > 0 else 1.0
        if r > best[0]:
            best = (r, tuple(int(p) for p in pts), lt, lo)
    return RatioReport(k=k, value=best[0], exact=False, witness_points=best[1],
                       l_T=best[2], l_opt=best[3])


def _snake_proposal(space, order, comp, s, rng):
    x, y = rng.choice(comp, size=2, replace=False)
    dxy = space.d(int(x), int(y))
    rad = dxy * float(np.exp(rng.uniform(np.log(1e-3), np.log(0.5))))
    rx, ry = space.row(int(x))[comp], space.row(int(y))[comp]
    A = comp[rx <= rad]
    B = comp[(ry <= rad) & (rx > rad)]
    ids = np.concatenate([A, B])
    lab = np.concatenate([np.zeros(len(A), np.int64), np.ones(len(B), np.int64)])
    o = np.argsort(order.rank[ids], kind="stable")
    ids, lab = ids[o], lab[o]
    starts = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
    if starts.size < s:
        return None
    w = int(rng.integers(0, starts.size - s + 1))
    return ids[starts[w:w + s]]


def order_ratio(space: FiniteMetricSpace, order: Order, k: int, budget: float = WORK_BUDGET,
                sample_budget: int = 2000, seed: int = 0) -> RatioReport:
    """Exact report when the budget allows, otherwise the sampled lower bound."""
    try:
        return order_ratio_exact(space, order, k, budget)
    except BudgetExceeded as exc:
        rep = order_ratio_sampled(space, order, k, sample_budget, seed)
        return RatioReport(k=rep.k, value=rep.value, exact=False,
                           witness_points=rep.witness_points, l_T=rep.l_T, l_opt=rep.l_opt,
                           note=f"sampled lower bound: {exc}")


def order_ratio_table(space: FiniteMetricSpace, order: Order, kmax: int,
                      budget: float = WORK_BUDGET) -> dict[int, float]:
    """Exact OR(k) for k = 1..kmax from one enumeration (cumulative max over sizes)."""
    if space.n < 2:
        return {k: 1.0 for k in range(1, kmax + 1)}
    rep = order_ratio_exact(space, order, kmax, budget)
    out, run = {1: 1.0}, 1.0
    for k in range(2, kmax + 1):
        run = max(run, rep.per_size.get(k + 1, 1.0))
        out[k] = run
    return out


def breakpoint(space: FiniteMetricSpace, order: Order, s_max: int, eps: float = 1e-6,
               budget: float = WORK_BUDGET) -> dict:
    """Smallest s <= s_max with OR(s) <= s - eps, with every OR(s) reported.

    ``br`` is None when no such s exists up to s_max (then Br >= s_max + 1).
    A one-point space has Br = 1 by convention.
    """
    if space.n < 2:
        return {"br": 1, "values": {}, "eps": eps, "s_max": s_max}
    table = order_ratio_table(space, order, s_max, budget)
    br = next((s for s in range(2, s_max + 1) if table[s] <= s - eps), None)
    return {"br": br, "values": {s: table[s] for s in range(1, s_max + 1)}, "eps": eps,
            "s_max": s_max, "lower_bound": br if br is not None else s_max + 1}
