"""Numba kernels for exhaustive subset enumeration.

Every kernel takes a dense distance matrix whose rows are already arranged in
ascending order rank, so an increasing index tuple is a T-increasing tuple.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def or_enumerate(M, smax):
    """Max of l_T / l_opt over all subsets of size 2..smax, per size.

    l_opt is maintained incrementally: when the point at depth s joins, only
    the DP entries of masks containing bit s are recomputed. At the deepest
    level the new point v is either a path end or splits the optimal path in
    two, so l_opt = min(g[P], min over A + B = P of g[A] + g[B]) with
    g[A] = min over a in A of dp[A, a] + d(a, v).
    Returns (best[s], witness[s, :s]) with ratio 1 for sizes never reached.
    """
    n = M.shape[0]
    best = np.ones(smax + 1)
    wit = np.full((smax + 1, smax), -1, dtype=np.int64)
    dp = np.full((1 << smax, smax), np.inf)
    g = np.full(1 << smax, np.inf)
    idx = np.full(smax, -1, dtype=np.int64)
    lT = np.zeros(smax)
    depth = 0
    idx[0] = -1
    while depth >= 0:
        idx[depth] += 1
        v = idx[depth]
        if v >= n:
            depth -= 1
            continue
        leaf = depth == smax - 1
        lopt = np.inf
        if leaf and depth > 0:
            prev = (1 << depth) - 1
            for A in range(1, prev + 1):
                val = np.inf
                for a in range(depth):
                    if (A >> a) & 1:
                        c = dp[A, a] + M[idx[a], v]
                        if c < val:
                            val = c
                g[A] = val
            lopt = g[prev]
            for A in range(1, prev):
                c = g[A] + g[prev ^ A]
                if c < lopt:
                    lopt = c
        else:
            bit = 1 << depth
            dp[bit, depth] = 0.0
            for mask in range(bit + 1, bit << 1):
                for e in range(depth + 1):
                    if not (mask >> e) & 1:
                        continue
                    pm = mask ^ (1 << e)
                    val = np.inf
                    ve = idx[e]
                    for p in range(depth + 1):
                        if (pm >> p) & 1:
                            c = dp[pm, p] + M[idx[p], ve]
                            if c < val:
                                val = c
                    dp[mask, e] = val
            full = (1 << (depth + 1)) - 1
            for e in range(depth + 1):
                if dp[full, e] < lopt:
                    lopt = dp[full, e]
        if depth > 0:
            lT[depth] = lT[depth - 1] + M[idx[depth - 1], v]
            size = depth + 1
            r = lT[depth] / lopt if lopt > 0.0 else 1.0
            if r > best[size]:
                best[size] = r
                for j in range(size):
                    wit[size, j] = idx[j]
        if not leaf and v + 1 < n:
            depth += 1
            idx[depth] = v
    return best, wit


@njit(cache=True)
def or_triples(M):
    """Max of l_T / l_opt over increasing triples, in closed form."""
    n = M.shape[0]
    best = 1.0
    wa, wb, wc = -1, -1, -1
    for a in range(n):
        for b in range(a + 1, n):
            ab = M[a, b]
            for c in range(b + 1, n):
                bc = M[b, c]
                ac = M[a, c]
                mx = ab
                if bc > mx:
                    mx = bc
                if ac > mx:
                    mx = ac
                den = ab + bc + ac - mx
                if den <= 0.0:
                    continue
                r = (ab + bc) / den
                if r > best:
                    best = r
                    wa, wb, wc = a, b, c
    return best, np.array([wa, wb, wc], dtype=np.int64)


@njit(cache=True)
def snake_enumerate(M, s):
    """Max elongation over increasing s-tuples; returns (elongation, tuple)."""
    n = M.shape[0]
    idx = np.full(s, -1, dtype=np.int64)
    diam = np.zeros(s)
    width = np.zeros(s)
    best = -1.0
    wit = np.full(s, -1, dtype=np.int64)
    depth = 0
    while depth >= 0:
        idx[depth] += 1
        v = idx[depth]
        if v > n - (s - depth):
            depth -= 1
            continue
        dm = 0.0
        wd = 0.0
        if depth > 0:
            dm = diam[depth - 1]
            wd = width[depth - 1]
        for j in range(depth):
            x = M[idx[j], v]
            if x > dm:
                dm = x
            if (depth - j) % 2 == 0 and x > wd:
                wd = x
        diam[depth] = dm
        width[depth] = wd
        if depth == s - 1:
            el = np.inf if wd == 0.0 else dm / wd
            if el > best:
                best = el
                for j in range(s):
                    wit[j] = idx[j]
        else:
            depth += 1
            idx[depth] = v
    return best, wit


@njit(cache=True)
def alternation_best(M, xs, ys, rads, s):
    """Snakes alternating between two balls, scanned in rank order.

    For each (x, y, rad), points within rad of x are labelled 0 and the
    others within rad of y are labelled 1. The first point of every run of
    equal labels is kept; among windows of s consecutive runs the one of
    largest elongation is retained. Returns best elongation, its tuple and
    the number of pairs that produced at least s runs.
    """
    n = M.shape[0]
    best = -1.0
    wit = np.full(s, -1, dtype=np.int64)
    starts = np.empty(n, dtype=np.int64)
    hits = 0
    for t in range(xs.shape[0]):
        x = xs[t]
        y = ys[t]
        rad = rads[t]
        runs = 0
        last = -1
        for p in range(n):
            lab = -1
            if M[x, p] <= rad:
                lab = 0
            elif M[y, p] <= rad:
                lab = 1
            if lab < 0 or lab == last:
                continue
            starts[runs] = p
            runs += 1
            last = lab
        if runs < s:
            continue
        hits += 1
        for w in range(runs - s + 1):
            dm = 0.0
            wd = 0.0
            for a in range(s):
                pa = starts[w + a]
                for b in range(a + 1, s):
                    dd = M[pa, starts[w + b]]
                    if dd > dm:
                        dm = dd
                    if (b - a) % 2 == 0 and dd > wd:
                        wd = dd
            el = np.inf if wd == 0.0 else dm / wd
            if el > best:
                best = el
                for a in range(s):
                    wit[a] = starts[w + a]
    return best, wit, hits


@njit(cache=True)
def alternation_longest(M, xs, ys, rads, s, width_cap):
    """Like ``alternation_best`` but maximises length subject to width <= width_cap."""
    n = M.shape[0]
    best = 0.0
    wit = np.full(s, -1, dtype=np.int64)
    starts = np.empty(n, dtype=np.int64)
    for t in range(xs.shape[0]):
        x = xs[t]
        y = ys[t]
        if M[x, y] + 2 * rads[t] <= best:
            continue
        runs = 0
        last = -1
        for p in range(n):
            lab = -1
            if M[x, p] <= rads[t]:
                lab = 0
            elif M[y, p] <= rads[t]:
                lab = 1
            if lab < 0 or lab == last:
                continue
            starts[runs] = p
            runs += 1
            last = lab
        for w in range(runs - s + 1):
            dm = 0.0
            wd = 0.0
            for a in range(s):
                pa = starts[w + a]
                for b in range(a + 1, s):
                    dd = M[pa, starts[w + b]]
                    if dd > dm:
                        dm = dd
                    if (b - a) % 2 == 0 and dd > wd:
                        wd = dd
            if wd <= width_cap and dm > best:
                best = dm
                for a in range(s):
                    wit[a] = starts[w + a]
    return best, wit


@njit(cache=True)
def max_alternation(labels):
    """Number of runs in a 0/1/-1 label sequence, ignoring -1 entries."""
    runs = 0
    last = -1
    for lab in labels:
        if lab < 0 or lab == last:
            continue
        runs += 1
        last = lab
    return runs
