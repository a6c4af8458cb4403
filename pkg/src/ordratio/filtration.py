"""Assouad-Nagata machinery: covering and partition audits, filtrations, wreath partitions.

Partitions are label arrays: ``labels[p]`` is the part of point p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .spaces import FiniteMetricSpace, lamplighter_space

TOL = 1e-9


class FiltrationError(ValueError):
    pass


@dataclass(frozen=True)
class ANParams:
    m: int
    lam: float
    D: float
    delta: float

    def __post_init__(self):
        if self.m < 0 or self.lam <= 1 or self.D <= 0 or self.delta <= 0:
            raise FiltrationError("need m >= 0, lambda > 1, D > 0, delta > 0")

    def to_json(self) -> dict:
        return {"m": self.m, "lambda": self.lam, "D": self.D, "delta": self.delta}


@dataclass(frozen=True)
class CoveringFamily:
    r: float
    sets: tuple[tuple[int, ...], ...]
    K: float
    m: int


@dataclass(eq=False)
class LaminarFamily:
    """Nested partitions V_j for j in [j_min, j_max], stored where they change.

    Below ``j_min`` every level is the partition into points; above ``j_max``
    it equals level ``j_max``.
    """

    n: int
    levels: dict[int, np.ndarray]
    params: ANParams
    meta: dict = field(default_factory=dict)

    @property
    def j_min(self) -> int:
        return min(self.levels)

    @property
    def j_max(self) -> int:
        return max(self.levels)

    def level(self, j: int) -> np.ndarray:
        if j < self.j_min:
            return np.arange(self.n)
        key = max(k for k in self.levels if k <= j)
        return self.levels[key]

    def sets_at(self, j: int) -> list[np.ndarray]:
        return partition_sets(self.level(j))

    def all_sets(self) -> list[np.ndarray]:
        out = []
        for j in sorted(self.levels):
            out.extend(partition_sets(self.levels[j]))
        return out

    def to_json(self) -> dict:
        return {"kind": "laminar_family", "n": self.n, "params": self.params.to_json(),
                "levels": [{"j": j, "sets": [s.tolist() for s in partition_sets(self.levels[j])]}
                           for j in sorted(self.levels)]}

    @classmethod
    def from_json(cls, obj: dict) -> "LaminarFamily":
        p = obj["params"]
        n = int(obj["n"])
        levels = {}
        for lev in obj["levels"]:
            lab = np.full(n, -1, dtype=np.int64)
            for k, s in enumerate(lev["sets"]):
                lab[np.asarray(s, dtype=np.int64)] = k
            if np.any(lab < 0):
                raise FiltrationError(f"level {lev['j']} does not cover every point")
            levels[int(lev["j"])] = lab
        return cls(n, levels, ANParams(int(p["m"]), float(p["lambda"]), float(p["D"]),
                                       float(p["delta"])))


def canonical_labels(labels) -> np.ndarray:
    """Relabel parts 0, 1, ... in order of their minimal point."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[inv.ravel()].astype(np.int64)


def partition_sets(labels) -> list[np.ndarray]:
    labels = canonical_labels(labels)
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, cuts)


def labels_from_sets(n: int, sets) -> np.ndarray:
    lab = np.full(n, -1, dtype=np.int64)
    for k, s in enumerate(sets):
        s = np.asarray(list(s), dtype=np.int64)
        if np.any(lab[s] >= 0):
            raise FiltrationError("sets overlap; not a partition")
        lab[s] = k
    if np.any(lab < 0):
        raise FiltrationError("sets do not cover the space")
    return lab


def _as_labels(space: FiniteMetricSpace, partition) -> np.ndarray:
    if isinstance(partition, np.ndarray) and partition.ndim == 1 and partition.size == space.n:
        return canonical_labels(partition)
    return canonical_labels(labels_from_sets(space.n, partition))


def set_diameters(space: FiniteMetricSpace, labels) -> np.ndarray:
    return np.array([space.diameter(s) if s.size > 1 else 0.0
                     for s in partition_sets(labels)])


def _ball_meets(space: FiniteMetricSpace, labels: np.ndarray, radius: float):
    """Max number of distinct parts met by a closed ball of the given radius."""
    worst, where = 0, -1
    for x in range(space.n):
        k = np.unique(labels[space.row(x) <= radius + TOL]).size
        if k > worst:
            worst, where = k, x
    return worst, where


# audits -------------------------------------------------------------------------


def verify_covering(space: FiniteMetricSpace, family: CoveringFamily) -> dict:
    """Diameter <= K r, every r-ball inside one set, multiplicity <= m + 1."""
    sets = [np.asarray(s, dtype=np.int64) for s in family.sets]
    mult = np.zeros(space.n, dtype=np.int64)
    for s in sets:
        mult[s] += 1
    out = {"covers": bool(np.all(mult > 0)), "diameter": True, "balls": True,
           "multiplicity": bool(mult.max(initial=0) <= family.m + 1), "witnesses": {}}
    for k, s in enumerate(sets):
        dm = space.diameter(s) if s.size > 1 else 0.0
        if dm > family.K * family.r + TOL:
            out["diameter"] = False
            out["witnesses"].setdefault("diameter", (k, dm))
    member = np.zeros((len(sets), space.n), dtype=bool)
    for k, s in enumerate(sets):
        member[k, s] = True
    for x in range(space.n):
        ball = space.row(x) <= family.r + TOL
        if not np.any(np.all(member[:, ball], axis=1)):
            out["balls"] = False
            out["witnesses"].setdefault("balls", x)
            break
    if not out["multiplicity"]:
        out["witnesses"]["multiplicity"] = int(np.argmax(mult))
    out["ok"] = out["covers"] and out["diameter"] and out["balls"] and out["multiplicity"]
    return out


def verify_partition_def(space: FiniteMetricSpace, partition, r: float, K: float,
                         m: int) -> dict:
    """Parts have diameter <= K r and every r-ball meets at most m + 1 parts."""
    labels = _as_labels(space, partition)
    diams = set_diameters(space, labels)
    meets, where = _ball_meets(space, labels, r)
    out = {"diameter": bool(diams.max(initial=0) <= K * r + TOL),
           "balls": meets <= m + 1, "max_diameter": float(diams.max(initial=0)),
           "max_meets": int(meets), "witnesses": {}}
    if not out["diameter"]:
        out["witnesses"]["diameter"] = int(np.argmax(diams))
    if not out["balls"]:
        out["witnesses"]["balls"] = int(where)
    out["ok"] = out["diameter"] and out["balls"]
    return out


def verify_filtration(space: FiniteMetricSpace, family: LaminarFamily) -> dict:
    """Per level j: diameter <= lambda^j D, lambda^j delta balls need <= m + 1 sets, nesting."""
    p = family.params
    levels = {}
    ok = True
    prev = None
    for j in range(family.j_min, family.j_max + 1):
        lab = family.level(j)
        diams = set_diameters(space, lab)
        meets, where = _ball_meets(space, lab, p.lam ** j * p.delta)
        nested = True
        if prev is not None:
            pairs = np.unique(np.stack([prev, lab], axis=1), axis=0)
            nested = np.unique(pairs[:, 0]).size == pairs.shape[0]
        rec = {"diameter": bool(diams.max(initial=0) <= p.lam ** j * p.D + TOL),
               "cover": meets <= p.m + 1, "nesting": bool(nested),
               "max_diameter": float(diams.max(initial=0)), "max_meets": int(meets)}
        if not rec["cover"]:
            rec["witness"] = int(where)
        if not nested:
            bad = pairs[np.flatnonzero(np.diff(pairs[:, 0]) == 0)[0], 0]
            rec["nesting_witness"] = int(np.flatnonzero(prev == bad)[0])
        ok = ok and rec["diameter"] and rec["cover"] and rec["nesting"]
        levels[j] = rec
        prev = lab
    return {"ok": ok, "levels": levels}


# construction ------------------------------------------------------------------------


def min_distance(space: FiniteMetricSpace) -> float:
    best = math.inf
    for x in range(space.n):
        row = space.row(x)
        row = row[(row > 0) & np.isfinite(row)]
        if row.size:
            best = min(best, float(row.min()))
    return best


PartitionSource = Callable[[float], np.ndarray] | Mapping[int, np.ndarray]


def build_filtration(space: FiniteMetricSpace, partitions: PartitionSource, K: float, m: int,
                     check_inputs: bool = True, max_levels: int = 64) -> LaminarFamily:
    """Group points into an AN-filtration with parameters (m, 4K, 2K, 1/2).

    ``partitions`` maps a scale r (callable) or a level j (mapping, r = (4K)^j)
    to a partition W_r with parts of diameter <= K r and r-balls meeting at
    most m + 1 parts. Level j_min = k0 is the maximal k with 2K(4K)^k below the
    minimal distance and consists of singletons; level k+1 merges the level-k
    sets A that share the part of W_{(4K)^{k+1}} containing min(A).
    """
    lam = 4.0 * K
    c = min_distance(space)
    if not math.isfinite(c):
        k0 = 0
    else:
        k0 = math.floor(math.log(c / (2 * K), lam))
        while 2 * K * lam ** (k0 + 1) < c:
            k0 += 1
        while 2 * K * lam ** k0 >= c:
            k0 -= 1

    def W(j: int) -> np.ndarray:
        part = partitions(lam ** j) if callable(partitions) else partitions[j]
        lab = _as_labels(space, part)
        if check_inputs:
            rep = verify_partition_def(space, lab, lam ** j, K, m)
            if not rep["ok"]:
                raise FiltrationError(f"input partition at scale {lam ** j:g} fails: {rep}")
        return lab

    ncomp = np.unique(space.components()).size
    cur = np.arange(space.n, dtype=np.int64)
    levels = {k0: cur}
    j = k0
    while np.unique(cur).size > ncomp and j - k0 < max_levels:
        j += 1
        w = W(j)
        sets = partition_sets(cur)
        nxt = np.empty(space.n, dtype=np.int64)
        for A in sets:
            nxt[A] = w[A.min()]
        nxt = canonical_labels(nxt)
        if not np.array_equal(nxt, canonical_labels(cur)) or j == k0 + 1:
            levels[j] = nxt
        cur = nxt
    last = max(levels)
    if last != j:
        levels[j] = cur
    return LaminarFamily(space.n, levels, ANParams(m, lam, 2.0 * K, 0.5),
                         {"K": K, "k0": k0, "min_distance": c})


# wreath partitions ------------------------------------------------------------------------


def wreath_partition(i: int, r: float) -> np.ndarray:
    """Partition of Z/i wr Z/2 (point q * 2^i + g) into layer cells.

    For r >= i there is one set. Otherwise positions are cut into intervals of
    r positions (the last one takes the remainder, length in [r, 2r)); two
    points of a layer share a set when their lamp masks agree outside the
    window of positions within r/2 of the interval.
    """
    size = i << i
    if r >= i:
        return np.zeros(size, dtype=np.int64)
    if r <= 0:
        raise FiltrationError("r must be positive")
    pos = np.arange(i)
    count = max(1, int(math.floor(i / r)))
    layer = np.minimum(np.floor(pos / r).astype(np.int64), count - 1)
    window = np.zeros(count, dtype=np.int64)
    for k in range(count):
        members = pos[layer == k]
        gap = np.abs(pos[:, None] - members[None, :])
        gap = np.minimum(gap, i - gap).min(axis=1)
        inside = pos[gap <= r / 2.0 + TOL]
        window[k] = int(np.sum(1 << inside))
    full = (1 << i) - 1
    idx = np.arange(size, dtype=np.int64)
    q, g = idx >> i, idx & full
    lay = layer[q]
    outside = g & (full ^ window[lay])
    return canonical_labels(lay * (1 << i) + outside)


def lamplighter_partition_source(i: int) -> Callable[[float], np.ndarray]:
    """Scale-rho partitions of Z/i wr Z/2 for build_filtration: W_rho = A_{2 rho} (K = 18, m = 1)."""
    return lambda rho: wreath_partition(i, 2.0 * rho)


# explicit constants ------------------------------------------------------------------------


def _floor_log(x: float, base: float) -> int:
    v = math.log(x, base)
    f = math.floor(v + 1e-12)
    return f


def or_bound_constant(p: ANParams) -> float:
    """C = 2 (1/ln lambda + 1)(m + 1)(lambda^[log_lambda D + 3] / delta + 1), [.] = floor."""
    e = _floor_log(p.D, p.lam) + 3
    return 2.0 * (1.0 / math.log(p.lam) + 1.0) * (p.m + 1) * (p.lam ** e / p.delta + 1.0)


def snake_elongation_bound(p: ANParams) -> float:
    """lambda (D / delta + 2): bound on elongations of snakes on 2m + 3 points."""
    return p.lam * (p.D / p.delta + 2.0)


# block and tree partitions ------------------------------------------------------------------


def tree_partition(words, r: float) -> np.ndarray:
    """W_r: same layer floor(|u|/r) and common prefix of length >= (layer - 1/2) r."""
    keys = {}
    out = np.empty(len(words), dtype=np.int64)
    for p, u in enumerate(words):
        k = int(math.floor(len(u) / r + TOL))
        t = max(0, math.ceil((k - 0.5) * r - TOL))
        out[p] = keys.setdefault((k, u[:t]), len(keys))
    return out


def dyadic_partitions(space: FiniteMetricSpace, lam: float, j: int, K: float = 2.0) -> np.ndarray:
    """Partition at scale r = lam^j for lines, grids, trees and tree products.

    Grids and lines get axis-aligned blocks of side K r. Trees use W_{2r}
    (diameter <= 6r, r-balls meet <= 2 parts); tree products take products
    of those. Lamplighters use the wreath partition A_{2r}.
    """
    r = lam ** j
    kind = space.meta.get("type")
    if kind in ("grid", "points"):
        if space.coords is None:
            raise FiltrationError("grid partition needs coordinates")
        block = np.floor(space.coords / (K * r) + TOL).astype(np.int64)
        _, lab = np.unique(block, axis=0, return_inverse=True)
        return canonical_labels(lab.ravel())
    if kind == "tree":
        return canonical_labels(tree_partition(space.meta["words"], 2 * r))
    if kind == "tree_product":
        words = space.meta["words"]
        t = tree_partition(words, 2 * r)
        W = len(words)
        return canonical_labels(t[np.arange(space.n) // W] * W + t[np.arange(space.n) % W])
    if kind == "lamplighter":
        return wreath_partition(space.meta["params"]["i"], 2 * r)
    raise FiltrationError(f"no block partition for space type {kind!r}")


def partition_constants(space: FiniteMetricSpace, K_grid: float = 2.0) -> tuple[float, int]:
    """(K, m) that ``dyadic_partitions`` satisfies on the given space type."""
    kind = space.meta.get("type")
    if kind in ("grid", "points"):
        d = space.coords.shape[1]
        # an r-ball spans 2r per axis; against blocks of side K r it meets
        # 2/K + 1 of them when 2/K is whole, else ceil(2/K) + 1
        q = 2.0 / K_grid
        per_axis = (round(q) if abs(q - round(q)) < TOL else math.ceil(q)) + 1
        return K_grid * (1.0 if space.meta.get("params", {}).get("p") == "inf" or d == 1
                         else d), per_axis ** d - 1
    if kind == "tree":
        return 6.0, 1
    if kind == "tree_product":
        return 6.0, 3
    if kind == "lamplighter":
        return 18.0, 1
    raise FiltrationError(f"no known constants for space type {kind!r}")


def filtration_for(space: FiniteMetricSpace, K_grid: float = 2.0) -> LaminarFamily:
    """build_filtration with the matching block partitions of ``space``."""
    K, m = partition_constants(space, K_grid)
    # lam = r, j = 1 evaluates the block partition at scale r exactly
    return build_filtration(space, lambda r: dyadic_partitions(space, r, 1, K_grid), K, m)
