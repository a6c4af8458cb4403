"""Finite metric spaces, graphs and the generators used by the experiments.

Distances are float64 with ``np.inf`` as the dedicated value for points in
different components. Small spaces carry a dense matrix; large group spaces
(lamplighters past the dense cap) carry a vectorised pair function instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import cdist

INF = np.inf
DENSE_CAP = 4096
GRID_CAP = 4096
LAMPLIGHTER_CAP = 14


class SpaceError(ValueError):
    """Invalid parameters for a space or graph generator."""


PairFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Points ``0..n-1`` with a symmetric distance that may take the value inf.

    Exactly one of ``matrix`` and ``pair_fn`` is set. ``integer`` marks metrics
    whose finite values are integers so that comparisons can be exact.
    """

    n: int
    matrix: np.ndarray | None = None
    pair_fn: PairFn | None = None
    labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = None
    antipode: np.ndarray | None = None
    integer: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.matrix is None) == (self.pair_fn is None):
            raise SpaceError("exactly one of matrix and pair_fn must be given")
        for arr in (self.matrix, self.coords, self.antipode):
            if arr is not None:
                arr.setflags(write=False)
        if self.antipode is not None:
            a = self.antipode
            idx = np.arange(self.n)
            if a.shape != (self.n,) or np.any(a[a] != idx) or np.any(a == idx):
                raise SpaceError("antipode must be a fixed-point-free involution")

    @property
    def dense(self) -> bool:
        return self.matrix is not None

    def d(self, i: int, j: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[i, j])
        return float(self.pair_fn(np.array([i]), np.array([j]))[0])

    def pairs(self, a, b) -> np.ndarray:
        """Elementwise distances between index arrays ``a`` and ``b``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[a, b]
        a, b = np.broadcast_arrays(a, b)
        return self.pair_fn(a.ravel(), b.ravel()).reshape(a.shape)

    def row(self, i: int) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[i]
        return self.pair_fn(np.full(self.n, i, dtype=np.int64), np.arange(self.n))

    def sub(self, ids) -> np.ndarray:
        """Distance matrix restricted to ``ids`` (in the given order)."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[np.ix_(ids, ids)]
        a, b = np.meshgrid(ids, ids, indexing="ij")
        return self.pair_fn(a.ravel(), b.ravel()).reshape(len(ids), len(ids))

    def cross(self, a, b) -> np.ndarray:
        """Distance block with rows ``a`` and columns ``b``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[np.ix_(a, b)]
        x, y = np.meshgrid(a, b, indexing="ij")
        return self.pair_fn(x.ravel(), y.ravel()).reshape(len(a), len(b))

    def full_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        if self.n > DENSE_CAP:
            raise SpaceError(f"space of {self.n} points exceeds dense cap {DENSE_CAP}")
        return self.sub(np.arange(self.n))

    def components(self) -> np.ndarray:
        """Component label per point (points at finite distance share a label)."""
        cached = self.meta.get("_components")
        if cached is not None:
            return cached
        if self.matrix is not None:
            finite = np.isfinite(self.matrix)
            _, lab = connected_components(coo_matrix(finite), directed=False)
        else:
            lab = np.zeros(self.n, dtype=np.int64)
        lab = np.asarray(lab, dtype=np.int64)
        lab.setflags(write=False)
        self.meta["_components"] = lab
        return lab

    def diameter(self, ids=None) -> float:
        if ids is None:
            if self.matrix is not None:
                return float(self.matrix.max()) if self.n else 0.0
            if self.meta.get("vertex_transitive"):
                return float(self.row(0).max())
            return float(max(self.row(i).max() for i in range(self.n)))
        m = self.sub(ids)
        return float(m.max()) if m.size else 0.0

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def public_meta(self) -> dict:
        return {k: v for k, v in self.meta.items() if not k.startswith("_")}


def from_matrix(mat, *, integer: bool | None = None, **kw) -> FiniteMetricSpace:
    m = np.array(mat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SpaceError("distance matrix must be square")
    if integer is None:
        fin = m[np.isfinite(m)]
        integer = bool(np.all(fin == np.round(fin)))
    return FiniteMetricSpace(n=m.shape[0], matrix=m, integer=integer, **kw)


def audit_metric(space: FiniteMetricSpace, samples: int = 100_000, seed: int = 0,
                 tol: float = 1e-9) -> dict:
    """Check zero diagonal, symmetry, inf consistency and sampled triangle inequality."""
    rng = np.random.default_rng(seed)
    n = space.n
    tol = 0.0 if space.integer else tol
    out = {"ok": True, "violations": []}
    if n == 0:
        return out
    idx = np.arange(n)
    if np.any(space.pairs(idx, idx) != 0):
        out["ok"] = False
        out["violations"].append("nonzero diagonal")
    if n * n <= 4_000_000 and space.dense:
        m = space.matrix
        if not np.array_equal(m, m.T):
            out["ok"] = False
            out["violations"].append("asymmetric")
        if np.any(m < 0):
            out["ok"] = False
            out["violations"].append("negative distance")
        if n ** 3 <= samples:
            a, b, c = np.meshgrid(idx, idx, idx, indexing="ij")
            a, b, c = a.ravel(), b.ravel(), c.ravel()
        else:
            a, b, c = rng.integers(0, n, size=(3, samples))
    else:
        a, b, c = rng.integers(0, n, size=(3, samples))
        if np.any(space.pairs(a, b) != space.pairs(b, a)):
            out["ok"] = False
            out["violations"].append("asymmetric")
    ab, bc, ac = space.pairs(a, b), space.pairs(b, c), space.pairs(a, c)
    fin = np.isfinite(ab) & np.isfinite(bc)
    if np.any(~np.isfinite(ac[fin])):
        out["ok"] = False
        out["violations"].append("inf not component-consistent")
    bad = fin & (ac > ab + bc + tol)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        out["ok"] = False
        out["violations"].append(f"triangle ({a[k]},{b[k]},{c[k]})")
    return out


# graphs ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected multigraph; ``edges`` is an (m, 2) array and loops count once."""

    n: int
    edges: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = self.edges
        if e.ndim != 2 or e.shape[1] != 2:
            raise SpaceError("edges must have shape (m, 2)")
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise SpaceError("edge endpoint out of range")
        e.setflags(write=False)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degree(self) -> np.ndarray:
        e = self.edges
        loops = e[:, 0] == e[:, 1]
        deg = np.bincount(e[:, 0], minlength=self.n) + np.bincount(e[~loops, 1], minlength=self.n)
        return deg.astype(np.int64)

    def regular_degree(self) -> int:
        deg = self.degree
        if self.n == 0 or np.any(deg != deg[0]):
            raise SpaceError("graph is not regular")
        return int(deg[0])

    def adjacency(self) -> np.ndarray:
        """Dense adjacency; a loop adds one to its diagonal entry."""
        a = np.zeros((self.n, self.n), dtype=np.float64)
        u, v = self.edges[:, 0], self.edges[:, 1]
        np.add.at(a, (u, v), 1.0)
        off = u != v
        np.add.at(a, (v[off], u[off]), 1.0)
        return a

    def incidence_lists(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (offsets, targets); each loop appears once as a self target."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        off = u != v
        src = np.concatenate([u, v[off]])
        dst = np.concatenate([v, u[off]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        return np.cumsum(offsets), dst.astype(np.int64)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return graph_components(self)[0] == 1


def make_graph(n: int, edges, meta: dict | None = None) -> Graph:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return Graph(n=int(n), edges=e.copy(), meta=dict(meta or {}))


def graph_components(g: Graph) -> tuple[int, np.ndarray]:
    e = g.edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(g.n, g.n))
    k, lab = connected_components(adj, directed=False)
    return int(k), lab


def shortest_path_metric(g: Graph) -> FiniteMetricSpace:
    """Unweighted shortest-path metric; unreachable pairs get inf."""
    e = g.edges
    keep = e[:, 0] != e[:, 1]
    e = e[keep]
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(g.n, g.n)).tocsr()
    dist = shortest_path(adj, directed=False, unweighted=True)
    return from_matrix(dist, integer=True, meta={"type": "graph", "params": {"n": g.n, "m": g.m}})


def scale_graph(g: Graph, l: int) -> Graph:
    """Replace each edge by a chain of ``l`` edges; new vertices get loops to stay regular."""
    if l < 1:
        raise SpaceError("l must be >= 1")
    d = g.regular_degree()
    if l == 1:
        return make_graph(g.n, g.edges, {**g.meta, "scaled": 1})
    edges = []
    nxt = g.n
    for u, v in g.edges.tolist():
        chain = [u] + list(range(nxt, nxt + l - 1)) + [v]
        nxt += l - 1
        edges.extend(zip(chain[:-1], chain[1:]))
    for w in range(g.n, nxt):
        edges.extend([(w, w)] * (d - 2))
    return make_graph(nxt, edges, {**g.meta, "scaled": l})


def random_regular_graph(n: int, d: int, seed: int, max_tries: int = 10_000,
                         connected: bool = True) -> Graph:
    """Simple d-regular graph from the pairing model with rejection."""
    if d < 3 or (n * d) % 2 or d >= n:
        raise SpaceError("need d >= 3, d < n and n*d even")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for attempt in range(1, max_tries + 1):
        perm = rng.permutation(stubs).reshape(-1, 2)
        u, v = perm.min(axis=1), perm.max(axis=1)
        if np.any(u == v):
            continue
        key = u * n + v
        if np.unique(key).size != key.size:
            continue
        order = np.argsort(key)
        g = make_graph(n, np.stack([u[order], v[order]], axis=1),
                       {"type": "random_regular", "params": {"n": n, "d": d}, "seed": seed,
                        "attempts": attempt})
        if connected and not g.is_connected():
            continue
        g.meta["connected"] = g.is_connected()
        return g
    raise SpaceError(f"rejection budget of {max_tries} pairings exhausted")


def complete_graph(n: int) -> Graph:
    iu = np.triu_indices(n, 1)
    return make_graph(n, np.stack(iu, axis=1), {"type": "complete", "params": {"n": n}})


def cycle_graph(n: int) -> Graph:
    u = np.arange(n)
    return make_graph(n, np.stack([u, (u + 1) % n], axis=1), {"type": "cycle", "params": {"n": n}})


def path_graph(n: int) -> Graph:
    u = np.arange(n - 1)
    return make_graph(n, np.stack([u, u + 1], axis=1), {"type": "path", "params": {"n": n}})


def disjoint_union_graphs(graphs: Sequence[Graph]) -> Graph:
    edges, off = [], 0
    for g in graphs:
        edges.append(g.edges + off)
        off += g.n
    e = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    return make_graph(off, e, {"type": "union", "params": {"parts": len(graphs)}})


# geometric spaces ---------------------------------------------------------------


def circle_net(n: int) -> FiniteMetricSpace:
    """``n`` equally spaced points of the unit circle with arc-length distance."""
    if n < 3:
        raise SpaceError("circle_net needs n >= 3")
    idx = np.arange(n)
    k = np.abs(idx[:, None] - idx[None, :])
    k = np.minimum(k, n - k)
    mat = k * (2.0 * math.pi / n)
    ang = 2.0 * math.pi * idx / n
    coords = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    anti = (idx + n // 2) % n if n % 2 == 0 else None
    return FiniteMetricSpace(n=n, matrix=mat, coords=coords, antipode=anti,
                             meta={"type": "circle_net", "params": {"n": n}})


_NORMS = {1: "cityblock", 2: "euclidean", math.inf: "chebyshev"}


def grid_space(d: int, n: int, p=1, cap: int = GRID_CAP) -> FiniteMetricSpace:
    """Integer points of [0, n-1]^d under the l_p norm, p in {1, 2, inf}."""
    if d < 1 or n < 2:
        raise SpaceError("grid needs d >= 1 and n >= 2")
    p = math.inf if p in ("inf", math.inf, float("inf")) else int(p)
    if p not in _NORMS:
        raise SpaceError("p must be 1, 2 or inf")
    size = n ** d
    if size > cap:
        raise SpaceError(f"grid of {size} points exceeds cap {cap}")
    coords = np.indices((n,) * d).reshape(d, -1).T.astype(np.float64)
    mat = cdist(coords, coords, metric=_NORMS[p])
    labels = tuple(str(tuple(int(c) for c in row)) for row in coords)
    return FiniteMetricSpace(n=size, matrix=mat, coords=coords, labels=labels,
                             integer=p != 2,
                             meta={"type": "grid", "params": {"d": d, "n": n,
                                                              "p": "inf" if p == math.inf else p}})


def point_cloud(coords, p=2) -> FiniteMetricSpace:
    c = np.asarray(coords, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    p = math.inf if p in ("inf", math.inf) else int(p)
    mat = cdist(c, c, metric=_NORMS[p])
    fin = mat.ravel()
    return FiniteMetricSpace(n=len(c), matrix=mat, coords=c,
                             integer=bool(np.all(fin == np.round(fin))) and p != 2,
                             meta={"type": "points", "params": {"p": "inf" if p == math.inf else p}})


def _sphere_points(rng, count: int, d: int) -> np.ndarray:
    x = rng.standard_normal((count, d + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sphere_net(d: int, eps: float, seed: int = 0, max_rounds: int = 50,
               audit_size: int | None = None) -> FiniteMetricSpace:
    """Centrally symmetric eps-net of the unit sphere S^d in R^{d+1}.

    Points come in (+x, -x) pairs; ids 2j and 2j+1 are antipodal. Candidates
    are thinned greedily at radius 0.9*eps; every round audits a fresh random
    probe set and adds the uncovered probes until all lie within eps.
    """
    if d < 1 or not 0 < eps < 1:
        raise SpaceError("sphere_net needs d >= 1 and 0 < eps < 1")
    rng = np.random.default_rng(seed)
    thin = 0.9 * eps
    if audit_size is None:
        audit_size = int(min(200_000, 40 * (4.0 / eps) ** d))
    pts = np.zeros((0, d + 1))

    def add(cands):
        nonlocal pts
        for c in cands:
            if pts.shape[0] and np.min(np.linalg.norm(pts - c, axis=1)) <= thin:
                continue
            pts = np.vstack([pts, c, -c])

    add(_sphere_points(rng, max(64, audit_size // 20), d))
    for _ in range(max_rounds):
        probes = _sphere_points(rng, audit_size, d)
        gap = _cover_gap(pts, probes)
        miss = probes[gap > eps]
        if miss.size == 0:
            break
        add(miss)
    else:
        raise SpaceError("sphere_net failed to reach eps density within the round budget")
    mat = cdist(pts, pts)
    n = pts.shape[0]
    idx = np.arange(n)
    anti = idx ^ 1
    mat[idx, anti] = 2.0
    np.fill_diagonal(mat, 0.0)
    mat = np.minimum(mat, 2.0)
    return FiniteMetricSpace(n=n, matrix=mat, coords=pts, antipode=anti,
                             meta={"type": "sphere_net",
                                   "params": {"d": d, "eps": eps}, "seed": seed})


def _cover_gap(pts: np.ndarray, probes: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Distance from each probe to the nearest point of ``pts``."""
    out = np.empty(len(probes))
    for s in range(0, len(probes), chunk):
        out[s:s + chunk] = cdist(probes[s:s + chunk], pts).min(axis=1)
    return out


def tripod_metric(arm: int) -> np.ndarray:
    """Graph metric of three arms of ``arm`` unit edges glued at a centre (id 0)."""
    pts = [(0, 0)] + [(a, t) for a in range(3) for t in range(1, arm + 1)]
    arm_id = np.array([p[0] for p in pts])
    pos = np.array([p[1] for p in pts], dtype=np.float64)
    same = (arm_id[:, None] == arm_id[None, :]) | (pos[:, None] == 0) | (pos[None, :] == 0)
    return np.where(same, np.abs(pos[:, None] - pos[None, :]), pos[:, None] + pos[None, :])


def _sup_product(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros((1, 1))
    for m in mats:
        k = m.shape[0]
        out = np.maximum(np.repeat(np.repeat(out, k, axis=0), k, axis=1),
                         np.tile(m, (out.shape[0], out.shape[1])))
    return out


def tripod_product_space(d: int, arm: int, cap: int = DENSE_CAP) -> FiniteMetricSpace:
    """Product of ``d`` tripods under the sup metric."""
    if d < 1 or arm < 1:
        raise SpaceError("need d >= 1 and arm >= 1")
    size = (3 * arm + 1) ** d
    if size > cap:
        raise SpaceError(f"tripod product of {size} points exceeds cap {cap}")
    t = tripod_metric(arm)
    mat = _sup_product([t] * d)
    return FiniteMetricSpace(n=size, matrix=mat, integer=True,
                             meta={"type": "tripod_product", "params": {"d": d, "arm": arm}})


def binary_words(depth: int) -> list[str]:
    """All binary words of length <= depth, shortlex order."""
    words = [""]
    for L in range(1, depth + 1):
        words.extend(format(v, f"0{L}b") for v in range(2 ** L))
    return words


def tree_metric(words: Sequence[str]) -> np.ndarray:
    lens = np.array([len(w) for w in words])
    n = len(words)
    lcp = np.zeros((n, n), dtype=np.int64)
    for i, u in enumerate(words):
        for j in range(i + 1, n):
            v = words[j]
            k = 0
            m = min(len(u), len(v))
            while k < m and u[k] == v[k]:
                k += 1
            lcp[i, j] = lcp[j, i] = k
    np.fill_diagonal(lcp, lens)
    return (lens[:, None] + lens[None, :] - 2 * lcp).astype(np.float64)


def tree_space(depth: int, cap: int = DENSE_CAP) -> FiniteMetricSpace:
    """Rooted binary tree truncated at ``depth``; point j is ``words[j]``."""
    if depth < 1:
        raise SpaceError("depth must be >= 1")
    if 2 ** (depth + 1) - 1 > cap:
        raise SpaceError("tree exceeds cap")
    words = binary_words(depth)
    labels = tuple(w or "e" for w in words)
    return FiniteMetricSpace(n=len(words), matrix=tree_metric(words), integer=True,
                             labels=labels,
                             meta={"type": "tree", "params": {"depth": depth}, "words": words})


def tree_product_space(depth: int, cap: int = DENSE_CAP) -> FiniteMetricSpace:
    """Pairs of binary words of length <= depth with the max of the two tree metrics.

    Point ``a * W + b`` is ``(words[a], words[b])`` with ``W = 2^(depth+1) - 1``.
    """
    if depth < 1:
        raise SpaceError("depth must be >= 1")
    size = (2 ** (depth + 1) - 1) ** 2
    if size > cap:
        raise SpaceError(f"tree product of {size} points exceeds cap {cap}")
    words = binary_words(depth)
    t = tree_metric(words)
    mat = _sup_product([t, t])
    labels = tuple(f"({u or 'e'},{v or 'e'})" for u in words for v in words)
    return FiniteMetricSpace(n=size, matrix=mat, integer=True, labels=labels,
                             meta={"type": "tree_product", "params": {"depth": depth},
                                   "words": words})


def tree_product_words(space: FiniteMetricSpace) -> list[tuple[str, str]]:
    words = space.meta.get("words")
    if words is None or space.meta.get("type") != "tree_product":
        raise SpaceError("space was not built by tree_product_space")
    W = len(words)
    return [(words[x // W], words[x % W]) for x in range(space.n)]


# lamplighter -------------------------------------------------------------------


def _bit_tables(i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    masks = np.arange(1 << i, dtype=np.int64)
    low = np.full(1 << i, i, dtype=np.int64)
    high = np.full(1 << i, -1, dtype=np.int64)
    pop = np.zeros(1 << i, dtype=np.int64)
    for b in range(i):
        has = (masks >> b) & 1 == 1
        low = np.where(has & (low == i), b, low)
        high = np.where(has, b, high)
        pop += has
    return low, high, pop


def _rotr(mask: np.ndarray, s, i: int) -> np.ndarray:
    """Rotate i-bit masks right by s: bit x moves to bit (x - s) mod i."""
    full = (1 << i) - 1
    s = np.asarray(s) % i
    return ((mask >> s) | (mask << ((i - s) % i))) & full


def lamplighter_identity_row(i: int) -> np.ndarray:
    """Word length of every element (q, g) of Z/i wr Z/2, shape (i, 2^i).

    The walk from position 0 to q must visit every lit lamp of g. Either it
    skips some cycle edge, and then it is a walk on a path (cut there), or it
    uses every edge, which costs i + min(q, i - q) (i when q = 0).
    """
    low, high, pop = _bit_tables(i)
    g = np.arange(1 << i, dtype=np.int64)
    q = np.arange(i, dtype=np.int64)[:, None]
    best = np.where(q == 0, i, i + np.minimum(q, i - q)).astype(np.int64) + 0 * g[None, :]
    for s in range(i):
        # cut the edge (s-1, s): position x becomes x - s mod i on a path 0..i-1
        r = _rotr(g, s, i)
        lo, hi = low[r][None, :], high[r][None, :]
        p2 = (0 - s) % i
        q2 = (q - s) % i
        left = np.minimum(np.minimum(lo, p2), q2)
        right = np.maximum(np.maximum(hi, p2), q2)
        c1 = (p2 - left) + (right - left) + (right - q2)
        c2 = (right - p2) + (right - left) + (q2 - left)
        best = np.minimum(best, np.minimum(c1, c2))
    return best + pop[None, :]


def lamplighter_space(i: int, cap: int = LAMPLIGHTER_CAP,
                      dense_cap: int = DENSE_CAP) -> FiniteMetricSpace:
    """Cayley graph metric of Z/i wr Z/2 for generators {move +-1, toggle here}.

    Point ``q * 2^i + g`` is the walker at position q with lamp mask g.
    """
    if i < 2 or i > cap:
        raise SpaceError(f"cycle size must lie in [2, {cap}]")
    row0 = lamplighter_identity_row(i).astype(np.float64)
    size = i << i
    mask_all = (1 << i) - 1

    def pair_fn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        pa, fa = a >> i, a & mask_all
        pb, fb = b >> i, b & mask_all
        rel_q = (pb - pa) % i
        rel_g = _rotr(fa ^ fb, pa, i)
        return row0[rel_q, rel_g]

    labels = None
    meta = {"type": "lamplighter", "params": {"i": i}, "vertex_transitive": True}
    if size <= dense_cap:
        idx = np.arange(size, dtype=np.int64)
        a, b = np.meshgrid(idx, idx, indexing="ij")
        mat = pair_fn(a.ravel(), b.ravel()).reshape(size, size)
        return FiniteMetricSpace(n=size, matrix=mat, integer=True, labels=labels, meta=meta)
    return FiniteMetricSpace(n=size, pair_fn=pair_fn, integer=True, labels=labels, meta=meta)


def lamplighter_cayley_graph(i: int) -> Graph:
    """Explicit Cayley graph (move +1 and toggle; move -1 is the reverse edge)."""
    size = i << i
    idx = np.arange(size, dtype=np.int64)
    q, g = idx >> i, idx & ((1 << i) - 1)
    move = (((q + 1) % i) << i) | g
    toggle = (q << i) | (g ^ (1 << q))
    edges = np.concatenate([np.stack([idx, move], 1),
                            np.stack([idx, toggle], 1)[idx < toggle]])
    return make_graph(size, edges, {"type": "lamplighter_cayley", "params": {"i": i}})


# nets and unions ---------------------------------------------------------------


def epsilon_net(space: FiniteMetricSpace, eps: float, delta: float) -> np.ndarray:
    """Greedy net in id order: a point joins when it is farther than eps from the net.

    Every point ends within eps of the net and net points are more than
    eps >= delta apart.
    """
    if delta > eps:
        raise SpaceError("delta must not exceed eps")
    net: list[int] = []
    near = np.full(space.n, np.inf)
    for p in range(space.n):
        if near[p] > eps:
            net.append(p)
            near = np.minimum(near, space.row(p))
    return np.array(net, dtype=np.int64)


def verify_net(space: FiniteMetricSpace, net, eps: float, delta: float, tol: float = 1e-9) -> bool:
    net = np.asarray(net, dtype=np.int64)
    if net.size == 0:
        return space.n == 0
    sub = space.sub(net)
    sep = sub[~np.eye(len(net), dtype=bool)]
    cover = np.min(np.stack([space.row(int(p)) for p in net]), axis=0)
    return bool((sep.size == 0 or sep.min() >= delta - tol) and cover.max() <= eps + tol)


def disjoint_union(spaces: Sequence[FiniteMetricSpace]) -> FiniteMetricSpace:
    """Block-diagonal union with inf between blocks."""
    n = sum(s.n for s in spaces)
    mat = np.full((n, n), np.inf)
    off = 0
    labels = []
    for k, s in enumerate(spaces):
        mat[off:off + s.n, off:off + s.n] = s.full_matrix()
        labels.extend(f"{k}:{s.label(i)}" for i in range(s.n))
        off += s.n
    return FiniteMetricSpace(n=n, matrix=mat, labels=tuple(labels),
                             integer=all(s.integer for s in spaces),
                             meta={"type": "union", "params": {"parts": len(spaces)}})


def restrict(space: FiniteMetricSpace, ids) -> FiniteMetricSpace:
    ids = np.asarray(ids, dtype=np.int64)
    return FiniteMetricSpace(
        n=len(ids), matrix=np.array(space.sub(ids)), integer=space.integer,
        coords=None if space.coords is None else space.coords[ids].copy(),
        labels=None if space.labels is None else tuple(space.labels[i] for i in ids),
        meta={"type": "restriction", "params": {"parent": space.meta.get("type")}})
