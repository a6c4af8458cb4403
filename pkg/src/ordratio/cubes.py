"""Cube maps, their minop/maxne ratios, wreath-product cubes and antipodal snakes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .orders import Order, pullback_order
from .ratio import Snake, snake_stats
from .spaces import FiniteMetricSpace

TOL = 1e-9


class CubeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CubeMap:
    """``image[j]`` is the point of ``points[j]``, an integer point of [-n, n]^d."""

    d: int
    n: int
    points: np.ndarray
    image: np.ndarray

    def __post_init__(self):
        side = 2 * self.n + 1
        if self.points.shape != (side ** self.d, self.d):
            raise CubeError("points must list every integer point of the cube")

    def index(self, x) -> int:
        """Row of the integer point x in ``points``."""
        idx = 0
        for c in x:
            idx = idx * (2 * self.n + 1) + int(c) + self.n
        return idx

    def to_json(self) -> dict:
        return {"kind": "cube_map", "d": self.d, "n": self.n,
                "entries": [[*map(int, p), int(v)] for p, v in zip(self.points, self.image)]}

    @classmethod
    def from_json(cls, obj: dict) -> "CubeMap":
        d, n = int(obj["d"]), int(obj["n"])
        ent = np.asarray(obj["entries"], dtype=np.int64).reshape(-1, d + 1)
        cm = cube_points(d, n)
        image = np.full(cm.shape[0], -1, dtype=np.int64)
        for row in ent:
            image[_cube_index(row[:d], n)] = row[d]
        if np.any(image < 0):
            raise CubeError("cube map file misses some points")
        return cls(d, n, cm, image)


@dataclass(frozen=True)
class EmbedReport:
    minop: float
    maxne: float
    minop_exact: bool = True
    maxne_exact: bool = True
    witnesses: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.maxne == 0:
            return math.inf if self.minop > 0 else math.nan
        return self.minop / self.maxne

    def to_json(self) -> dict:
        r = self.ratio
        return {"kind": "embed", "minop": self.minop, "maxne": self.maxne,
                "minop_exact": self.minop_exact, "maxne_exact": self.maxne_exact,
                "ratio": "inf" if math.isinf(r) else (None if math.isnan(r) else r),
                "witnesses": self.witnesses}


def _cube_index(x, n: int) -> int:
    idx = 0
    for c in x:
        idx = idx * (2 * n + 1) + int(c) + n
    return idx


def cube_points(d: int, n: int) -> np.ndarray:
    """Integer points of [-n, n]^d, first coordinate major."""
    side = 2 * n + 1
    return (np.indices((side,) * d).reshape(d, -1).T - n).astype(np.int64)


def boundary_mask(points: np.ndarray, n: int) -> np.ndarray:
    return np.abs(points).max(axis=1) == n


def minop_maxne(space: FiniteMetricSpace, cm: CubeMap) -> EmbedReport:
    """minop over antipodal boundary pairs and maxne over l1-neighbour pairs."""
    pts, img, n = cm.points, cm.image, cm.n
    bnd = np.flatnonzero(boundary_mask(pts, n))
    anti = np.array([cm.index(-pts[j]) for j in bnd], dtype=np.int64)
    dop = space.pairs(img[bnd], img[anti])
    side = 2 * n + 1
    a_list, b_list = [], []
    for i in range(cm.d):
        step = side ** (cm.d - 1 - i)
        ok = np.flatnonzero(pts[:, i] < n)
        a_list.append(ok)
        b_list.append(ok + step)
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    dne = space.pairs(img[a], img[b]) if a.size else np.zeros(0)
    if not (np.all(np.isfinite(dop)) and np.all(np.isfinite(dne))):
        raise CubeError("cube map meets an infinite distance")
    j = int(np.argmin(dop))
    w = {"minop_pair": [pts[bnd[j]].tolist(), pts[anti[j]].tolist()]}
    maxne = 0.0
    if dne.size:
        q = int(np.argmax(dne))
        maxne = float(dne[q])
        w["maxne_pair"] = [pts[a[q]].tolist(), pts[b[q]].tolist()]
    return EmbedReport(float(dop[j]), maxne, witnesses=w)


def identity_grid_map(d: int, n: int, space: FiniteMetricSpace | None = None
                      ) -> tuple[FiniteMetricSpace, CubeMap]:
    """Identity of [-n, n]^d into the l1 grid of side 2n+1 (grid point = x + n)."""
    from .spaces import grid_space
    if space is None:
        space = grid_space(d, 2 * n + 1, 1)
    pts = cube_points(d, n)
    side = 2 * n + 1
    image = np.zeros(pts.shape[0], dtype=np.int64)
    for i in range(d):
        image = image * side + (pts[:, i] + n)
    return space, CubeMap(d, n, pts, image)


def circle_cube_map(space: FiniteMetricSpace, n: int) -> CubeMap:
    """d = 1 map x -> nearest point of a circle net at angle x / n."""
    pts = cube_points(1, n)
    m = space.n
    image = np.rint((pts[:, 0] / n) * m / (2 * math.pi)).astype(np.int64) % m
    return CubeMap(1, n, pts, image)


def constant_cube_map(d: int, n: int, point: int = 0) -> CubeMap:
    pts = cube_points(d, n)
    return CubeMap(d, n, pts, np.full(pts.shape[0], point, dtype=np.int64))


# antipodal snakes ----------------------------------------------------------------------------


def circle_lemma_snake(space: FiniteMetricSpace, order: Order) -> Snake:
    """Three-point antipodal snake on an even circle net from a small/large boundary.

    A point x is small when x < antipode(x). Two cyclically adjacent points
    s1 (small) and s2 (large) exist; the snake is s1 < anti(s1) < s2 if
    anti(s1) < s2, and anti(s2) < s2 < anti(s1) otherwise.
    """
    anti = space.antipode
    if anti is None:
        raise CubeError("space has no antipode map")
    n = space.n
    small = order.rank < order.rank[anti]
    for x in range(n):
        y = (x + 1) % n
        if small[x] != small[y]:
            s1, s2 = (x, y) if small[x] else (y, x)
            break
    else:
        raise CubeError("no small/large boundary; the antipode map is inconsistent")
    a1, a2 = int(anti[s1]), int(anti[s2])
    if order.rank[a1] < order.rank[s2]:
        pts = [s1, a1, s2]
    else:
        pts = [a2, s2, a1]
    return snake_stats(space, order, pts)


def _sphere_probes(space: FiniteMetricSpace, probes: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d1 = space.coords.shape[1]
    extra = rng.standard_normal((probes, d1))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([space.coords, extra])


def sphere_antipodal_snake(space: FiniteMetricSpace, order: Order, eps: float,
                           probes: int = 2000, seed: int = 0) -> dict:
    """Snake on d+2 points alternating between eps-balls around c and -c.

    Centres c run over the net points and random probe points of the sphere.
    For each centre, points of the two balls are scanned in T-order and the
    first points of the label runs are kept; the longest run sequence that
    starts in ball(c) is recorded. Returns the first centre reaching d+2 runs.
    """
    if space.coords is None or space.antipode is None:
        raise CubeError("sphere_antipodal_snake needs a symmetric net with coordinates")
    d = space.coords.shape[1] - 1
    need = d + 2
    seq = order.seq
    pts = space.coords[seq]
    best_runs = 0
    for c in _sphere_probes(space, probes, seed):
        near = np.linalg.norm(pts - c, axis=1) <= eps + TOL
        far = np.linalg.norm(pts + c, axis=1) <= eps + TOL
        lab = np.where(near, 0, np.where(far, 1, -1))
        keep = np.flatnonzero(lab >= 0)
        lab = lab[keep]
        start = np.flatnonzero(lab == 0)
        if start.size == 0:
            continue
        lab, keep = lab[start[0]:], keep[start[0]:]
        heads = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
        runs = int(K.max_alternation(lab))
        best_runs = max(best_runs, runs)
        if runs >= need:
            snake = snake_stats(space, order, seq[keep[heads[:need]]])
            return {"found": True, "centre": c.tolist(), "runs": runs, "snake": snake,
                    "width_ok": snake.width_b <= 2 * eps + TOL,
                    "length_ok": snake.length_a >= 2 - 2 * eps - TOL}
    return {"found": False, "runs": best_runs, "snake": None}


# boundary triangulation ------------------------------------------------------------------------


def boundary_simplices(d: int, n: int) -> list[np.ndarray]:
    """Kuhn simplices of the unit (d-1)-faces on the boundary of [-n, n]^d.

    Each simplex is a (d, d) array of vertices. Faces with x_i = +-n are
    split along every permutation of the free coordinates.
    """
    if d < 1 or d > 3:
        raise CubeError("boundary triangulation is implemented for d <= 3")
    out = []
    for i in range(d):
        free = [j for j in range(d) if j != i]
        for sign in (-n, n):
            for base in itertools.product(range(-n, n), repeat=d - 1):
                b = np.zeros(d, dtype=np.int64)
                b[i] = sign
                b[free] = base
                for perm in itertools.permutations(free):
                    verts = [b.copy()]
                    for j in perm:
                        v = verts[-1].copy()
                        v[j] += 1
                        verts.append(v)
                    out.append(np.array(verts))
    return out


def cube_or_witness(space: FiniteMetricSpace, cube_maps, order: Order) -> list[dict]:
    """Best snake on d+1 points alternating between images of antipodal boundary simplices.

    The order is pulled back to the cube through each map. Points of a
    simplex and of its negative are scanned in pulled-back order; a window
    of d+1 label runs gives a snake whose image is checked in the target
    space. The elongation is compared with (minop - 2(d-1) maxne) / maxne.
    """
    out = []
    for cm in cube_maps:
        d = cm.d
        emb = minop_maxne(space, cm)
        pulled = pullback_order(order, cm.image)
        bound = ((emb.minop - 2 * (d - 1) * emb.maxne) / emb.maxne
                 if emb.maxne > 0 else math.inf)
        best, best_pair = None, None
        seen = set()
        for simp in boundary_simplices(d, cm.n):
            ia = np.array([cm.index(v) for v in simp])
            ib = np.array([cm.index(-v) for v in simp])
            key = tuple(sorted((tuple(sorted(ia)), tuple(sorted(ib)))))
            if key in seen:
                continue
            seen.add(key)
            ids = np.concatenate([ia, ib])
            lab = np.r_[np.zeros(ia.size, np.int64), np.ones(ib.size, np.int64)]
            o = np.argsort(pulled.rank[ids], kind="stable")
            ids, lab = ids[o], lab[o]
            heads = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
            for w in range(heads.size - d):
                img = cm.image[ids[heads[w:w + d + 1]]]
                if np.any(np.diff(order.rank[img]) <= 0):
                    continue
                sn = snake_stats(space, order, img)
                if best is None or sn.elongation > best.elongation:
                    best, best_pair = sn, (simp.tolist(), (-simp).tolist())
        rec = {"d": d, "n": cm.n, "embed": emb.to_json(), "proof_bound": bound,
               "snake": None if best is None else best.to_json(),
               "simplices": best_pair, "degenerate": best is None}
        if best is not None:
            rec["meets_bound"] = bool(best.elongation >= bound - TOL)
        out.append(rec)
    return out


# wreath products over Z^2 ---------------------------------------------------------------------


def l1_ball(n: int) -> np.ndarray:
    """Integer points of the l1 ball of radius n in Z^2, by l1 norm then lexicographically."""
    r = np.arange(-n, n + 1)
    x, y = np.meshgrid(r, r, indexing="ij")
    keep = np.abs(x) + np.abs(y) <= n
    x, y = x[keep], y[keep]
    o = np.lexsort((y, x, np.abs(x) + np.abs(y)))
    return np.stack([x[o], y[o]], axis=1)


def omega_sets(n: int, d: int) -> dict:
    """d disjoint n-point subsets of the l1 ball B(n) in Z^2, each sqrt(n)/6-separated.

    A greedy (sqrt(n)/2)-net of B(n) is built scanning points outward from the
    origin (a point joins when it is farther than sqrt(n)/2 from every earlier
    net point), which also fixes the net enumeration.
    Around each of the first n net points, d distinct points of B(n) within
    sqrt(n)/6 are chosen (nearest first, ties lexicographic); Omega_i holds
    the i-th choices. Cardinality and separation are asserted.
    """
    if n < 1 or d < 1:
        raise CubeError("need n >= 1 and d >= 1")
    eps = math.sqrt(n) / 2
    ball = l1_ball(n)
    net = np.empty_like(ball)
    size = 0
    for p in ball:
        if size == 0 or np.min(np.abs(net[:size] - p).sum(axis=1)) > eps:
            net[size] = p
            size += 1
    net = net[:size]
    if net.shape[0] < n:
        raise CubeError(f"net of B({n}) has {net.shape[0]} points, fewer than n")
    net = net[:n]
    rad = math.sqrt(n) / 6
    omega = np.zeros((d, n, 2), dtype=np.int64)
    for j, c in enumerate(net):
        dist = np.abs(ball - c).sum(axis=1)
        cand = np.flatnonzero(dist <= rad + TOL)
        cand = cand[np.lexsort((cand, dist[cand]))]
        if cand.size < d:
            raise CubeError(f"only {cand.size} points within sqrt(n)/6 of a net point; need {d}")
        omega[:, j] = ball[cand[:d]]
    seps = []
    for i in range(d):
        w = omega[i]
        dm = np.abs(w[:, None, :] - w[None, :, :]).sum(axis=2).astype(np.float64)
        np.fill_diagonal(dm, np.inf)
        seps.append(float(dm.min()) if n > 1 else math.inf)
    flat = {tuple(p) for i in range(d) for p in omega[i].tolist()}
    if len(flat) != d * n:
        raise CubeError("omega sets are not disjoint")
    if any(s < rad - TOL for s in seps):
        raise CubeError("omega separation below sqrt(n)/6")
    return {"n": n, "d": d, "net": net, "omega": omega, "separation": seps,
            "radius": rad, "max_norm": int(np.abs(omega).sum(axis=2).max())}


@dataclass
class WreathCubeMap:
    """z in [0, n]^d lights the first z_i lamps of each Omega_i; the walker stays at 0."""

    n: int
    d: int
    omega: np.ndarray

    def lamps(self, z) -> set[tuple[int, int]]:
        out = set()
        for i, zi in enumerate(z):
            out.update(map(tuple, self.omega[i, : int(zi)].tolist()))
        return out

    def neighbour_upper(self, z, i: int) -> int:
        """Length of the explicit walk from rho(z) to rho(z + e_i): out to the lamp, toggle, back."""
        x = self.omega[i, int(z[i])]
        return 2 * int(np.abs(x).sum()) + 1

    def certificates(self) -> dict:
        """Certified maxne <= max 2|x|_1 + 1 <= 2n + 1 and minop >= (n-1) sqrt(n)/6."""
        norms = np.abs(self.omega).sum(axis=2)
        upper = int(2 * norms.max() + 1)
        seps = []
        for i in range(self.d):
            w = self.omega[i]
            dm = np.abs(w[:, None, :] - w[None, :, :]).sum(axis=2).astype(np.float64)
            np.fill_diagonal(dm, np.inf)
            seps.append(float(dm.min()))
        lower = (self.n - 1) * min(seps)
        return {"maxne_upper": upper, "maxne_formula": 2 * self.n + 1,
                "minop_lower": lower, "minop_formula": (self.n - 1) * math.sqrt(self.n) / 6,
                "upper_ok": upper <= 2 * self.n + 1,
                "lower_ok": lower >= (self.n - 1) * math.sqrt(self.n) / 6 - TOL,
                "ratio_lower": lower / upper}

    def report(self) -> EmbedReport:
        c = self.certificates()
        return EmbedReport(c["minop_lower"], c["maxne_upper"], minop_exact=False,
                           maxne_exact=False)


def wreath_cube_map(n: int, d: int, omega: dict | None = None) -> WreathCubeMap:
    om = omega_sets(n, d) if omega is None else omega
    return WreathCubeMap(n, d, om["omega"])


def apply_walk(lamps: set, moves: list[str]) -> tuple[set, tuple[int, int]]:
    """Run generator moves (R, L, U, D, T = toggle) from the origin."""
    pos = (0, 0)
    lamps = set(lamps)
    step = {"R": (1, 0), "L": (-1, 0), "U": (0, 1), "D": (0, -1)}
    for mv in moves:
        if mv == "T":
            lamps ^= {pos}
        else:
            dx, dy = step[mv]
            pos = (pos[0] + dx, pos[1] + dy)
    return lamps, pos


def _moves_between(a, b) -> list[str]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    return ["R"] * max(dx, 0) + ["L"] * max(-dx, 0) + ["U"] * max(dy, 0) + ["D"] * max(-dy, 0)


def toggle_walk(targets) -> list[str]:
    """Moves visiting the targets in the given order, toggling each, then returning to 0."""
    moves = []
    pos = (0, 0)
    for t in targets:
        t = tuple(t)
        moves += _moves_between(pos, t) + ["T"]
        pos = t
    return moves + _moves_between(pos, (0, 0))


def audit_wreath_pairs(wm: WreathCubeMap, samples: int, seed: int = 0) -> dict:
    """Check the certificates against explicit walks on sampled pairs.

    Neighbour pairs: the out-toggle-back walk turns rho(z) into rho(z + e_i)
    with length 2|x|_1 + 1. Antipodal boundary pairs (z, n - z): the lamps
    that differ contain a whole Omega_i, and a nearest-neighbour toggling
    walk gives an upper bound that must not fall below the certified lower
    bound.
    """
    rng = np.random.default_rng(seed)
    cert = wm.certificates()
    n, d = wm.n, wm.d
    ne_ok = op_ok = cover_ok = True
    worst_gap = math.inf
    for _ in range(samples):
        z = rng.integers(0, n + 1, size=d)
        i = int(rng.integers(d))
        if z[i] == n:
            z[i] = n - 1
        z2 = z.copy()
        z2[i] += 1
        diff = wm.lamps(z) ^ wm.lamps(z2)
        moves = toggle_walk(sorted(diff))
        got, pos = apply_walk(wm.lamps(z), moves)
        ne_ok &= got == wm.lamps(z2) and pos == (0, 0) and len(moves) == wm.neighbour_upper(z, i)
        ne_ok &= len(moves) <= cert["maxne_upper"]
        # antipodal boundary pair
        b = rng.integers(0, n + 1, size=d)
        j = int(rng.integers(d))
        b[j] = n if rng.random() < 0.5 else 0
        bd = n - b
        diff = wm.lamps(b) ^ wm.lamps(bd)
        cover_ok &= any({tuple(p) for p in wm.omega[k].tolist()} <= diff for k in range(d)
                        if {b[k], bd[k]} == {0, n})
        route = _nearest_route(sorted(diff))
        moves = toggle_walk(route)
        got, pos = apply_walk(wm.lamps(b), moves)
        op_ok &= got == wm.lamps(bd) and pos == (0, 0)
        op_ok &= len(moves) >= cert["minop_lower"] - TOL
        worst_gap = min(worst_gap, len(moves) - cert["minop_lower"])
    return {"neighbour_walks_ok": bool(ne_ok), "antipodal_walks_ok": bool(op_ok),
            "omega_covered": bool(cover_ok), "min_upper_minus_lower": worst_gap}


def _nearest_route(points) -> list[tuple[int, int]]:
    left = [tuple(p) for p in points]
    pos = (0, 0)
    route = []
    while left:
        j = min(range(len(left)), key=lambda q: abs(left[q][0] - pos[0]) + abs(left[q][1] - pos[1]))
        pos = left.pop(j)
        route.append(pos)
    return route
