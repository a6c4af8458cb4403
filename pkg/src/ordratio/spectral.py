"""Graph spectra, loop augmentation, random walks and the expander snake prober."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from numba import njit
from scipy.linalg import eigh

from .orders import Order
from .ratio import Snake, snake_stats
from .spaces import FiniteMetricSpace, Graph, make_graph, shortest_path_metric, SpaceError

EIG_CAP = 4000
M_CAP = 10_000
START_RETRIES = 100


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    d: int
    delta: float

    @property
    def lambda_n(self) -> float:
        return float(self.eigenvalues[-1])

    def to_json(self) -> dict:
        return {"kind": "spectrum", "d": self.d, "delta": self.delta,
                "lambda_1": float(self.eigenvalues[0]),
                "lambda_2": float(self.eigenvalues[1]) if self.eigenvalues.size > 1 else None,
                "lambda_n": self.lambda_n}


def adjacency_spectrum(g: Graph, cap: int = EIG_CAP) -> SpectrumReport:
    """Eigenvalues in decreasing order and delta = (lambda_1 - lambda_2) / d."""
    if g.n > cap:
        raise SpectralError(f"{g.n} vertices exceed the dense eigensolver cap {cap}")
    try:
        d = g.regular_degree()
    except SpaceError as exc:
        raise SpectralError(str(exc)) from exc
    ev = eigh(g.adjacency(), eigvals_only=True)[::-1].copy()
    ev.setflags(write=False)
    delta = float((ev[0] - ev[1]) / d) if g.n > 1 else 1.0
    return SpectrumReport(ev, d, delta)


def add_loops(g: Graph, c: int) -> Graph:
    """Add ``c`` loops at every vertex; the degree and every eigenvalue grow by c."""
    if c < 0:
        raise SpectralError("c must be non-negative")
    if c == 0:
        return g
    loops = np.repeat(np.arange(g.n), c)
    edges = np.concatenate([g.edges, np.stack([loops, loops], axis=1)])
    return make_graph(g.n, edges, {**g.meta, "loops_added": c})


# parameters -----------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeParams:
    k: int
    N: int
    t: int
    L: int
    m: int
    m_full: int
    variant: str
    feasible: bool
    note: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def probe_params(n: int, d: int, delta: float, k: int, variant: str = "statement",
                 m_cap: int = M_CAP) -> ProbeParams:
    """Walk length t, separation L, interval count N and trajectory count m.

    ``statement`` uses 24k and ln(2/delta) for a graph of any spectrum;
    ``proof`` uses 12k and ln(1/delta) for a non-negative spectrum. L is
    floor((ln n - 4 - 2k ln 2k - 2k ln(c/delta)) / ln(d-1)) - 1 with the
    matching c. N = ceil(2k / delta) and m = C(N, k) + 1, capped at m_cap.
    """
    if delta <= 0:
        raise SpectralError("delta must be positive")
    if k < 2 or d < 3:
        raise SpectralError("need k >= 2 and d >= 3")
    if variant == "statement":
        coef, c = 24, 2.0
    elif variant == "proof":
        coef, c = 12, 1.0
    else:
        raise SpectralError(f"unknown variant {variant}")
    t = math.ceil(coef * k * (math.log(k) + math.log(c / delta)) / delta)
    num = math.log(n) - 4 - 2 * k * math.log(2 * k) - 2 * k * math.log(c / delta)
    L = math.floor(num / math.log(d - 1)) - 1
    N = math.ceil(2 * k / delta)
    m_full = math.comb(N, k) + 1
    m = min(m_full, m_cap)
    notes = []
    if L <= 0:
        notes.append("graph too small for target k: L <= 0")
    if m < m_full:
        notes.append(f"m capped at {m_cap} (full value {m_full}), so the success guarantee is weakened")
    return ProbeParams(k=k, N=N, t=t, L=L, m=m, m_full=m_full, variant=variant,
                       feasible=L > 0, note="; ".join(notes))


def separation_failure_bound(m: int, d: int, L: int, n: int) -> float:
    """m^2 d (d-1)^L / ((d-2) n): bound on P(two of m uniform starts within L)."""
    return m * m * d * float(d - 1) ** max(L, 0) / ((d - 2) * n)


# walks and intervals -----------------------------------------------------------------------


@njit(cache=True)
def _walk(offsets, targets, start, steps, choices):
    out = np.empty(steps + 1, dtype=np.int64)
    v = start
    out[0] = v
    for s in range(steps):
        deg = offsets[v + 1] - offsets[v]
        v = targets[offsets[v] + int(choices[s] * deg)]
        out[s + 1] = v
    return out


def random_walk(g: Graph, start: int, t: int, seed: int | np.random.Generator) -> np.ndarray:
    """Simple random walk of t steps: each step follows a uniform incident edge."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    offsets, targets = g.incidence_lists()
    if np.any(np.diff(offsets) == 0):
        raise SpectralError("graph has an isolated vertex")
    return _walk(offsets, targets, int(start), int(t), rng.random(int(t)))


def interval_partition(order: Order, n: int, N: int) -> np.ndarray:
    """Label per point of N consecutive rank blocks with sizes differing by at most one."""
    if N > n or N < 1:
        raise SpectralError("need 1 <= N <= n")
    sizes = np.full(N, n // N)
    sizes[: n % N] += 1
    block_of_rank = np.repeat(np.arange(N), sizes)
    return block_of_rank[order.rank]


# the prober --------------------------------------------------------------------------------


@dataclass
class ProbeReport:
    params: ProbeParams
    delta: float
    delta_walked: float
    lazy: bool
    runs: int
    successes: int
    best: Snake | None
    per_run: list[dict] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs if self.runs else 0.0

    def to_json(self) -> dict:
        return {"kind": "probe", "params": self.params.to_json(), "delta": self.delta,
                "delta_walked": self.delta_walked, "lazy": self.lazy, "runs": self.runs,
                "successes": self.successes, "success_rate": self.success_rate,
                "best": None if self.best is None else self.best.to_json(),
                "per_run": self.per_run}

    def csv_row(self, n: int, d: int) -> tuple:
        b = self.best
        return (n, d, self.delta, self.params.t, self.params.L, self.success_rate,
                None if b is None else b.width_b, None if b is None else b.length_a)


def claim_snake(order: Order, traj_a: np.ndarray, traj_b: np.ndarray, labels: np.ndarray,
                k: int) -> np.ndarray | None:
    """Snake on k+1 points alternating between two trajectories across shared intervals.

    With shared intervals I_1 < ... < I_k (in T), both trajectories give a
    point in I_1, ordered so that the first one comes first; then I_j for
    j >= 2 contributes a point of the first trajectory if j is even and of
    the second if j is odd.
    """
    ia, ib = np.unique(labels[traj_a]), np.unique(labels[traj_b])
    shared = np.intersect1d(ia, ib)

    def first(traj, interval, above=-1):
        pts = np.unique(traj[labels[traj] == interval])
        pts = pts[order.rank[pts] > above]
        return int(pts[np.argmin(order.rank[pts])]) if pts.size else None

    for p in range(shared.size - k + 1):
        head = shared[p]
        a1, b1 = first(traj_a, head), first(traj_b, head)
        A, B = traj_a, traj_b
        if order.rank[b1] < order.rank[a1]:
            A, B, a1, b1 = traj_b, traj_a, b1, a1
        if a1 == b1:
            b1 = first(B, head, order.rank[a1])
            if b1 is None:
                A, B = B, A
                b1 = first(B, head, order.rank[a1])
            if b1 is None:
                continue
        pts = [a1, b1]
        for j in range(2, k + 1):
            pts.append(first(A if j % 2 == 0 else B, shared[p + j - 1]))
        return np.array(pts, dtype=np.int64)
    return None


def snake_probe(g: Graph, order: Order, k: int, seed: int, runs: int = 1,
                variant: str = "statement", overrides: dict | None = None,
                metric: FiniteMetricSpace | None = None, m_cap: int = M_CAP) -> ProbeReport:
    """Search for snakes of bounded width via random walks on convex intervals.

    If the spectrum has a negative eigenvalue the walk runs on the graph with
    d loops per vertex (a lazy walk), whose gap is delta / 2; snakes are
    measured in the original graph metric. Each run draws up to m starts
    (resampling a start within L of an earlier one, up to START_RETRIES
    times), walks t steps from each and stops at the first two trajectories
    whose sets of touched intervals share at least k intervals.
    """
    if not g.is_connected():
        raise SpectralError("graph must be connected")
    spec = adjacency_spectrum(g)
    d = spec.d
    lazy = spec.lambda_n < -1e-9
    walk_graph = add_loops(g, d) if lazy else g
    delta_w = spec.delta / 2 if lazy else spec.delta
    if variant == "statement":
        tl = probe_params(g.n, d, spec.delta, k, "statement", m_cap)
    else:
        tl = probe_params(g.n, d, delta_w, k, "proof", m_cap)
    nm = probe_params(g.n, d, delta_w, k, "proof", m_cap)
    notes = [x for x in (tl.note.split("; ")[0] if not tl.feasible else "",
                         nm.note.split("; ")[-1] if nm.m < nm.m_full else "") if x]
    fields = {"k": k, "N": min(nm.N, g.n), "t": tl.t, "L": tl.L, "m": nm.m,
              "m_full": nm.m_full, "variant": variant, "feasible": tl.feasible,
              "note": "; ".join(notes)}
    fields.update(overrides or {})
    params = ProbeParams(**fields)
    space = metric if metric is not None else shortest_path_metric(g)
    labels = interval_partition(order, g.n, params.N)
    offsets, targets = walk_graph.incidence_lists()
    rng = np.random.default_rng(seed)
    per_run, best, successes = [], None, 0
    for r in range(runs):
        starts, trajs, touched = [], [], []
        found = None
        min_sep = math.inf
        discarded = 0
        for _ in range(params.m):
            x = int(rng.integers(g.n))
            tries = 0
            while starts and space.row(x)[starts].min() < params.L and tries < START_RETRIES:
                x = int(rng.integers(g.n))
                tries += 1
            discarded += tries
            if starts:
                min_sep = min(min_sep, float(space.row(x)[starts].min()))
            tr = _walk(offsets, targets, x, params.t, rng.random(params.t))
            iv = np.unique(labels[tr])
            for j, other in enumerate(touched):
                if np.intersect1d(iv, other).size >= k:
                    found = j
                    break
            starts.append(x)
            trajs.append(tr)
            touched.append(iv)
            if found is not None:
                break
        rec = {"run": r, "starts": len(starts), "discarded_starts": discarded,
               "min_start_separation": None if math.isinf(min_sep) else min_sep,
               "success": False}
        if found is not None:
            a, b = trajs[found], trajs[-1]
            pts = claim_snake(order, a, b, labels, k)
            if pts is not None:
                sn = snake_stats(space, order, pts)
                sep = float(space.d(starts[found], starts[-1]))
                rec.update({"success": True, "snake": sn.to_json(), "pair_separation": sep,
                            "width_ok": sn.width_b <= params.t,
                            "length_ok": sn.length_a >= sep - 2 * params.t,
                            "shared_intervals": int(np.intersect1d(touched[found],
                                                                   touched[-1]).size)})
                successes += 1
                if best is None or sn.elongation > best.elongation:
                    best = sn
        per_run.append(rec)
    return ProbeReport(params=params, delta=spec.delta, delta_walked=delta_w, lazy=lazy,
                       runs=runs, successes=successes, best=best, per_run=per_run)


def expansion_hypothesis(family) -> list[dict]:
    """Compare 1/delta_i with log_d(n_i) / ln log_d(n_i) for (n, d, delta) triples.

    A diagnostic for the infinite-breakpoint condition 1/delta = o(...): the
    ratio column should tend to zero along a family satisfying it.
    """
    out = []
    for n, d, delta in family:
        ld = math.log(n) / math.log(d)
        scale = ld / math.log(ld) if ld > 1 else math.nan
        inv = math.inf if delta <= 0 else 1.0 / delta
        out.append({"n": n, "d": d, "delta": delta, "inv_delta": inv, "scale": scale,
                    "ratio": inv / scale if scale and math.isfinite(scale) else math.inf})
    return out
