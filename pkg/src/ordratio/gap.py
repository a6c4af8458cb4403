"""Doubling estimates, jump counts, path division and the logarithmic gap certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from .orders import Order, interleave_keys
from .ratio import snake_search, BudgetExceeded
from .spaces import FiniteMetricSpace
from .tsp import held_karp_matrix, mst_weight

EXACT_LOPT_CAP = 12
TOL = 1e-9


# doubling ------------------------------------------------------------------------------


def greedy_ball_cover(space: FiniteMetricSpace, x: int, r: float) -> list[int]:
    """Centres of r-balls covering B(x, 2r), chosen by greedy set cover."""
    rowx = space.row(x)
    target = np.flatnonzero(rowx <= 2 * r + TOL)
    cands = np.flatnonzero(rowx <= 3 * r + TOL)
    cover = space.cross(cands, target) <= r + TOL
    left = np.ones(target.size, dtype=bool)
    centres = []
    while left.any():
        gain = cover[:, left].sum(axis=1)
        c = int(np.argmax(gain))
        centres.append(int(cands[c]))
        left &= ~cover[c]
    return centres


def doubling_constant(space: FiniteMetricSpace, sample_centers=None, radii=None,
                      seed: int = 0, samples: int = 64) -> dict:
    """Max greedy cover count of B(x, 2r) by r-balls over the sampled (x, r).

    Each count is attained by an explicit cover, so the result bounds the
    doubling constant restricted to the sample from above.
    """
    rng = np.random.default_rng(seed)
    if sample_centers is None:
        sample_centers = rng.choice(space.n, size=min(samples, space.n), replace=False)
    if radii is None:
        diam = space.diameter()
        radii = [diam / 2 ** k for k in range(1, 8) if diam / 2 ** k > 0]
    best, where = 1, None
    for x in sample_centers:
        for r in radii:
            c = len(greedy_ball_cover(space, int(x), float(r)))
            if c > best:
                best, where = c, (int(x), float(r))
    return {"D": best, "witness": where}


# path division ------------------------------------------------------------------------------


def divide_path(space: FiniteMetricSpace, seq, budgets: Sequence) -> list[np.ndarray]:
    """Split a point sequence into len(budgets) consecutive parts, diam(part j) <= a_j.

    Each step takes the longest prefix whose path length is at most the next
    budget. Budgets may be Fractions; on integer spaces the arithmetic is then
    exact. The budgets must sum to the path length.
    """
    seq = np.asarray(seq, dtype=np.int64)
    exact = space.integer and all(isinstance(a, (int, Fraction)) for a in budgets)
    steps = space.pairs(seq[:-1], seq[1:]) if seq.size > 1 else np.zeros(0)
    steps = [Fraction(int(s)) for s in steps] if exact else [float(s) for s in steps]
    L = sum(steps, Fraction(0) if exact else 0.0)
    total = sum(budgets, Fraction(0) if exact else 0.0)
    if any(a <= 0 for a in budgets):
        raise ValueError("budgets must be positive")
    if (total != L) if exact else abs(float(total) - float(L)) > TOL * max(1.0, float(L)):
        raise ValueError(f"budgets sum to {total}, path length is {L}")
    parts = []
    start = 0
    for j, a in enumerate(budgets):
        if j == len(budgets) - 1:
            end = seq.size
        else:
            end, run = start, 0
            while end < seq.size - 1 and run + steps[end] <= (a if exact else a + TOL):
                run += steps[end]
                end += 1
            end = min(end + 1, seq.size) if start < seq.size else start
        part = seq[start:end]
        if part.size > 1:
            dm = space.diameter(part)
            if dm > (float(a) + TOL):
                raise AssertionError(f"part {j} has diameter {dm} above budget {a}")
        parts.append(part)
        start = end
    return parts


# jump counts ------------------------------------------------------------------------------


def ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


def lopt_or_lower_bound(sub: np.ndarray) -> tuple[float, bool]:
    """Exact l_opt for small sets, otherwise the MST weight (a lower bound)."""
    if sub.shape[0] <= EXACT_LOPT_CAP:
        return float(held_karp_matrix(sub)[0]), True
    return mst_weight(sub), False


def band_counts(gaps: np.ndarray, L: float, n: int) -> np.ndarray:
    """D_0..D_k with k = ceil(log2 n): D_i counts gaps in (L/2^{i+1}, L/2^i], D_k the rest."""
    k = ceil_log2(n)
    out = np.zeros(k + 1, dtype=np.int64)
    for g in gaps:
        i = 0
        while i < k and g <= L / 2 ** (i + 1) + TOL * L:
            i += 1
        out[i] += 1
    return out


def jump_counts(space: FiniteMetricSpace, order: Order, subset, L: float | None = None
                ) -> np.ndarray:
    """Histogram of consecutive T-gaps of ``subset`` in dyadic bands of l_opt."""
    ids = order.sort(subset)
    if ids.size < 2:
        return np.zeros(1, dtype=np.int64)
    if L is None:
        L, _ = lopt_or_lower_bound(space.sub(ids))
    gaps = space.pairs(ids[:-1], ids[1:])
    if not np.all(np.isfinite(gaps)):
        raise ValueError("subset contains an infinite distance")
    return band_counts(gaps, L, ids.size)


# certificate ----------------------------------------------------------------------------


def allowed_elongation(s0: int, eps: float) -> float:
    """Largest snake elongation on s0+1 points compatible with OR(s0) <= s0 - eps.

    A snake of elongation E has l_T >= s0 (a - 2b) and l_opt <= a + (s0 - 1) b,
    so l_T / l_opt >= s0 (E - 2) / (E + s0 - 1).
    """
    if not 0 < eps < s0:
        raise ValueError("need 0 < eps < s0")
    return ((s0 - eps) * (s0 - 1) + 2 * s0) / eps


def proof_N(D: float, s0: int, lam: float) -> float:
    """s0 D^{k+3} with the least k such that 2^k > lambda."""
    k = math.floor(math.log2(lam)) + 1 if lam >= 1 else 0
    return float(s0) * float(D) ** (k + 3)


@dataclass
class GapReport:
    s0: int
    eps: float
    lambda_bound: float
    lambda_allowed: float
    N_empirical: float
    certified: bool
    all_pass: bool
    ratios: list[dict] = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        return {"kind": "gap", "s0": self.s0, "eps": self.eps,
                "lambda_bound": _num(self.lambda_bound), "lambda_allowed": self.lambda_allowed,
                "N_empirical": _num(self.N_empirical), "certified": self.certified,
                "all_pass": self.all_pass, "note": self.note, "subsets": self.ratios}

    def csv_rows(self) -> list[tuple]:
        return [(r["size"], r["ratio"], r["ceil_log2"]) for r in self.ratios]


def _num(x: float):
    return "inf" if math.isinf(x) else x


def random_subsets(space: FiniteMetricSpace, count: int, max_size: int, seed: int = 0
                   ) -> list[np.ndarray]:
    """Alternately uniform subsets and subsets drawn from a random ball."""
    rng = np.random.default_rng(seed)
    out = []
    for t in range(count):
        size = int(rng.integers(2, min(max_size, space.n) + 1))
        if t % 2 == 0:
            out.append(np.sort(rng.choice(space.n, size=size, replace=False)))
            continue
        x = int(rng.integers(space.n))
        row = space.row(x)
        near = np.argsort(row, kind="stable")[: max(size, int(rng.integers(size, 4 * size + 1)))]
        out.append(np.sort(rng.choice(near, size=size, replace=False)))
    return out


def gap_certificate(space: FiniteMetricSpace, order: Order, subsets, s0: int, eps: float,
                    snake_mode: str = "sampled", snake_budget: int | None = None,
                    seed: int = 0) -> GapReport:
    """Empirical form of the logarithmic bound l_T <= N l_opt ceil(log2 |X|).

    lambda_bound is the largest snake elongation on s0+1 points found by
    ``snake_search``; if it exceeds ``allowed_elongation(s0, eps)`` the order
    has OR(s0) > s0 - eps and no certificate is issued. Otherwise every
    subset's band counts give the least N with D_i <= N 2^i, and l_T <=
    N_empirical l_opt ceil(log2 |X|) is checked for every subset. For sets
    above EXACT_LOPT_CAP points l_opt is replaced by the MST weight, a lower
    bound, which only makes the check stricter.
    """
    try:
        sn = snake_search(space, order, s0 + 1, mode=snake_mode, budget=snake_budget, seed=seed)
    except BudgetExceeded:
        sn = snake_search(space, order, s0 + 1, mode="sampled", budget=snake_budget, seed=seed)
    lam = 0.0 if sn is None else sn.elongation
    allowed = allowed_elongation(s0, eps)
    rows = []
    N = 0.0
    for X in subsets:
        ids = order.sort(X)
        if ids.size < 2:
            continue
        L, exact = lopt_or_lower_bound(space.sub(ids))
        gaps = space.pairs(ids[:-1], ids[1:])
        counts = band_counts(gaps, L, ids.size)
        need = float(max(c / 2 ** i for i, c in enumerate(counts)))
        N = max(N, need)
        l_T = float(gaps.sum())
        rows.append({"size": int(ids.size), "l_T": l_T, "l_opt": L, "l_opt_exact": exact,
                     "ratio": l_T / L, "ceil_log2": ceil_log2(ids.size),
                     "bands": counts.tolist(), "N_needed": need})
    all_pass = True
    for r in rows:
        r["pass"] = bool(r["l_T"] <= N * r["l_opt"] * r["ceil_log2"] * (1 + TOL))
        all_pass = all_pass and r["pass"]
    certified = lam <= allowed and math.isfinite(N)
    note = "" if lam <= allowed else (f"no gap certificate: snake elongation {lam:.4g} "
                                      f"exceeds {allowed:.4g}")
    return GapReport(s0=s0, eps=eps, lambda_bound=lam, lambda_allowed=allowed, N_empirical=N,
                     certified=certified, all_pass=all_pass and certified, ratios=rows,
                     note=note)


# separated pairs in balls -----------------------------------------------------------------


def max_separated_pairs(space: FiniteMetricSpace, order: Order, ids, R: float) -> int:
    """Max count of pairs x_1 < x_2 < ... < x_{2N} (in T) with d(x_{2i-1}, x_{2i}) >= R.

    Interval scheduling on ranks: scanning right ends in T-order and closing a
    pair as soon as some unused earlier point is R-far is optimal.
    """
    seq = order.sort(ids)
    sub = space.sub(seq)
    count, lo = 0, 0
    for b in range(seq.size):
        if b > lo and np.any(sub[lo:b, b] >= R - TOL):
            count += 1
            lo = b + 1
    return count


def separated_pairs_audit(space: FiniteMetricSpace, order: Order, samples: int, seed: int = 0
                          ) -> dict:
    """Largest pair count inside sampled balls B(x, 4R)."""
    rng = np.random.default_rng(seed)
    diam = space.diameter()
    worst, where = 0, None
    for _ in range(samples):
        x = int(rng.integers(space.n))
        R = diam * float(np.exp(rng.uniform(np.log(1e-2), np.log(0.5))))
        ball = np.flatnonzero(space.row(x) <= 4 * R + TOL)
        c = max_separated_pairs(space, order, ball, R)
        if c > worst:
            worst, where = c, (x, R)
    return {"max_pairs": worst, "witness": where}


# interleave snakes on the cube ------------------------------------------------------------


@njit(cache=True)
def _best_alternation(keys, pts, lab, s):
    """Best elongation among windows of s alternating runs; rows are proposals."""
    P, m = keys.shape
    best = -1.0
    bw = np.zeros((s, pts.shape[2]))
    for t in range(P):
        o = np.argsort(keys[t])
        starts = np.empty(m, dtype=np.int64)
        runs = 0
        last = -1
        prevkey = -1
        for q in range(m):
            j = o[q]
            if keys[t, j] == prevkey:
                continue
            prevkey = keys[t, j]
            if lab[t, j] == last:
                continue
            starts[runs] = j
            runs += 1
            last = lab[t, j]
        for w in range(runs - s + 1):
            dm = 0.0
            wd = 0.0
            for a in range(s):
                pa = pts[t, starts[w + a]]
                for b in range(a + 1, s):
                    pb = pts[t, starts[w + b]]
                    dd = 0.0
                    for c in range(pa.shape[0]):
                        dd += (pa[c] - pb[c]) ** 2
                    dd = np.sqrt(dd)
                    if dd > dm:
                        dm = dd
                    if (b - a) % 2 == 0 and dd > wd:
                        wd = dd
            if wd == 0.0:
                continue
            el = dm / wd
            if el > best:
                best = el
                for a in range(s):
                    bw[a] = pts[t, starts[w + a]]
    return best, bw


def _ball_pair_proposals(rng, P, d, bits, per_ball):
    """Integer points in two boxes per proposal, with run labels.

    A third of the proposals use uniform centres, a third put the centres on
    either side of a dyadic corner, and a third draw all points from one box
    with every point its own run (plain windows of the order).
    """
    side = 1 << bits
    kind = np.arange(P) % 3
    c1 = rng.integers(0, side, size=(P, 1, d))
    c2 = rng.integers(0, side, size=(P, 1, d))
    level = rng.integers(1, bits, size=P)
    cell = (1 << (bits - level))[:, None, None]
    corner = (rng.integers(0, 1 << 30, size=(P, 1, d)) % (side // cell)) * cell
    jitter = np.rint(rng.uniform(-0.25, 0.25, size=(P, 2, d)) * cell)
    dyad = kind == 1
    c1[dyad] = (corner + jitter[:, :1])[dyad]
    c2[dyad] = (corner + cell * rng.choice([-1, 1], size=(P, 1, d)) // 2 + jitter[:, 1:])[dyad]
    single = kind == 2
    c2[single] = c1[single]
    gap = np.sqrt(((c1 - c2) ** 2).sum(axis=2))[:, :, None]
    gap[single] = (side * np.exp(rng.uniform(np.log(1e-3), 0, size=(P, 1, 1))))[single]
    rad = np.maximum(gap * np.exp(rng.uniform(np.log(1e-3), np.log(0.5), size=(P, 1, 1))), 1.0)
    off1 = np.rint(rng.uniform(-1, 1, size=(P, per_ball, d)) * rad)
    off2 = np.rint(rng.uniform(-1, 1, size=(P, per_ball, d)) * rad)
    ints = np.clip(np.concatenate([c1 + off1, c2 + off2], axis=1), 0, side - 1).astype(np.int64)
    lab = np.repeat(np.array([[0] * per_ball + [1] * per_ball]), P, axis=0)
    lab[single] = np.arange(2 * per_ball)
    return ints, lab


def interleave_snake_bound_check(d: int, bits: int, budget: int, seed: int,
                                 per_ball: int = 32, batch: int = 20_000) -> dict:
    """Largest elongation found on 2^{d+1}+1 points of the grid {c / 2^bits} under the interleave order.

    Each proposal is a small point set (see ``_ball_pair_proposals``) sorted
    by interleave key; windows of s alternating runs are scored with the
    Euclidean metric. Returns the best snake and its stats.
    """
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    s = 2 ** (d + 1) + 1
    side = 1 << bits
    rng = np.random.default_rng(seed)
    best, best_pts = -1.0, None
    done = 0
    while done < budget:
        P = min(batch, budget - done)
        ints, lab = _ball_pair_proposals(rng, P, d, bits, per_ball)
        keys = interleave_keys(ints, bits)
        el, pts = _best_alternation(keys, ints.astype(np.float64) / side, lab, s)
        if el > best:
            best, best_pts = el, pts.copy()
        done += P
    out = {"d": d, "bits": bits, "points_per_snake": s, "proposals": budget, "seed": seed,
           "max_elongation": best, "bound": 8 * math.sqrt(d)}
    if best_pts is not None:
        out["snake"] = best_pts.tolist()
    return out
