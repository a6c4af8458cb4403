"""Open-path TSP oracles: length in a given order, Held-Karp and brute force."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

from .orders import Order
from .spaces import FiniteMetricSpace

HELD_KARP_CAP = 20
BRUTE_CAP = 9
REAL_TOL = 1e-9


class TspError(ValueError):
    pass


@dataclass(frozen=True)
class TourStats:
    l_T: float
    l_opt: float
    ratio: float
    witness_order: tuple[int, ...]


def _finite_sub(space: FiniteMetricSpace, subset) -> tuple[np.ndarray, np.ndarray]:
    ids = np.asarray(subset, dtype=np.int64)
    if ids.size < 2:
        raise TspError("subset needs at least 2 points")
    if np.unique(ids).size != ids.size:
        raise TspError("subset has repeated points")
    sub = space.sub(ids)
    if not np.all(np.isfinite(sub)):
        raise TspError("subset contains an infinite distance")
    return ids, sub


def path_length(sub: np.ndarray, seq) -> float:
    seq = np.asarray(seq, dtype=np.int64)
    return float(sub[seq[:-1], seq[1:]].sum())


def path_length_in_order(space: FiniteMetricSpace, order: Order, subset) -> float:
    """l_T: sum of consecutive distances after sorting ``subset`` by ``order``."""
    ids, _ = _finite_sub(space, subset)
    seq = ids[np.argsort(order.rank[ids], kind="stable")]
    return float(space.pairs(seq[:-1], seq[1:]).sum())


@njit(cache=True)
def _held_karp(sub):
    s = sub.shape[0]
    full = (1 << s) - 1
    dp = np.full((1 << s, s), np.inf)
    parent = np.full((1 << s, s), -1, dtype=np.int64)
    for v in range(s):
        dp[1 << v, v] = 0.0
    for mask in range(1, full + 1):
        for e in range(s):
            if not (mask >> e) & 1:
                continue
            cur = dp[mask, e]
            if cur == np.inf:
                continue
            for w in range(s):
                if (mask >> w) & 1:
                    continue
                nm = mask | (1 << w)
                val = cur + sub[e, w]
                if val < dp[nm, w]:
                    dp[nm, w] = val
                    parent[nm, w] = e
    best = np.inf
    end = -1
    for e in range(s):
        if dp[full, e] < best:
            best = dp[full, e]
            end = e
    path = np.empty(s, dtype=np.int64)
    mask = full
    for k in range(s - 1, -1, -1):
        path[k] = end
        prev = parent[mask, end]
        mask ^= 1 << end
        end = prev
    return best, path


def held_karp_matrix(sub: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact open-path optimum of a finite distance matrix and a witness sequence."""
    s = sub.shape[0]
    if s == 1:
        return 0.0, np.zeros(1, dtype=np.int64)
    if s > HELD_KARP_CAP:
        raise TspError(f"Held-Karp cap {HELD_KARP_CAP} exceeded")
    return _held_karp(np.ascontiguousarray(sub, dtype=np.float64))


def opt_path_heldkarp(space: FiniteMetricSpace, subset, cap: int = HELD_KARP_CAP
                      ) -> tuple[float, tuple[int, ...]]:
    """Minimum open-path length over ``subset`` by subset DP, with witness (point ids)."""
    ids, sub = _finite_sub(space, subset)
    if ids.size > cap:
        raise TspError(f"subset of {ids.size} points exceeds Held-Karp cap {cap}")
    best, path = held_karp_matrix(sub)
    return float(best), tuple(int(x) for x in ids[path])


def brute_matrix(sub: np.ndarray) -> float:
    s = sub.shape[0]
    best = np.inf
    for perm in itertools.permutations(range(s)):
        if perm[0] > perm[-1]:
            continue
        val = 0.0
        for a, b in zip(perm[:-1], perm[1:]):
            val += sub[a, b]
        best = min(best, val)
    return float(best)


def opt_path_brute(space: FiniteMetricSpace, subset) -> float:
    """Minimum open-path length by enumerating undirected permutations."""
    ids, sub = _finite_sub(space, subset)
    if ids.size > BRUTE_CAP:
        raise TspError(f"brute force cap {BRUTE_CAP} exceeded")
    return brute_matrix(sub)


def tour_stats(space: FiniteMetricSpace, order: Order, subset) -> TourStats:
    l_T = path_length_in_order(space, order, subset)
    l_opt, wit = opt_path_heldkarp(space, subset)
    return TourStats(l_T=l_T, l_opt=l_opt, ratio=l_T / l_opt if l_opt > 0 else 1.0,
                     witness_order=wit)


def mst_weight(sub: np.ndarray) -> float:
    """Minimum spanning tree weight of a dense finite matrix (a lower bound on l_opt)."""
    s = sub.shape[0]
    if s < 2:
        return 0.0
    inside = np.zeros(s, dtype=bool)
    best = sub[0].copy()
    inside[0] = True
    total = 0.0
    for _ in range(s - 1):
        cand = np.where(inside, np.inf, best)
        v = int(np.argmin(cand))
        total += cand[v]
        inside[v] = True
        best = np.minimum(best, sub[v])
    return float(total)
