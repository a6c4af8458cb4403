"""Total orders on finite spaces, stored as explicit rank arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .spaces import FiniteMetricSpace, tree_product_words


class OrderError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Order:
    """``rank[p]`` is the position of point p; ``provenance`` records the constructor."""

    rank: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        r = self.rank
        n = r.shape[0]
        if r.ndim != 1 or not np.array_equal(np.sort(r), np.arange(n)):
            raise OrderError("rank is not a bijection onto 0..n-1")
        r.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.rank.shape[0])

    @property
    def seq(self) -> np.ndarray:
        """Points in ascending order."""
        s = np.empty(self.n, dtype=np.int64)
        s[self.rank] = np.arange(self.n)
        return s

    def less(self, a: int, b: int) -> bool:
        return bool(self.rank[a] < self.rank[b])

    def sort(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        return ids[np.argsort(self.rank[ids], kind="stable")]

    def __eq__(self, other) -> bool:
        return isinstance(other, Order) and np.array_equal(self.rank, other.rank)

    __hash__ = None


def order_from_sequence(seq, provenance: dict | None = None) -> Order:
    seq = np.asarray(seq, dtype=np.int64)
    rank = np.empty(seq.size, dtype=np.int64)
    if not np.array_equal(np.sort(seq), np.arange(seq.size)):
        raise OrderError("sequence is not a permutation of 0..n-1")
    rank[seq] = np.arange(seq.size)
    return Order(rank, dict(provenance or {"constructor": "sequence"}))


def order_from_keys(keys: Sequence, provenance: dict) -> Order:
    seq = sorted(range(len(keys)), key=lambda p: keys[p])
    return order_from_sequence(seq, provenance)


def natural_order(space: FiniteMetricSpace | int) -> Order:
    n = space if isinstance(space, int) else space.n
    return Order(np.arange(n, dtype=np.int64), {"constructor": "natural"})


def random_order(space: FiniteMetricSpace | int, seed: int) -> Order:
    n = space if isinstance(space, int) else space.n
    rng = np.random.default_rng(seed)
    return order_from_sequence(rng.permutation(n), {"constructor": "random", "seed": seed})


def _coords(space: FiniteMetricSpace) -> np.ndarray:
    if space.coords is None:
        raise OrderError("space has no coordinates")
    return space.coords


def lex_order(space: FiniteMetricSpace) -> Order:
    """Lexicographic order on coordinate tuples (first coordinate major)."""
    c = _coords(space)
    if np.unique(c, axis=0).shape[0] != c.shape[0]:
        raise OrderError("duplicate coordinate tuples")
    seq = np.lexsort(c.T[::-1])
    return order_from_sequence(seq, {"constructor": "lex"})


def digits(x: np.ndarray, bits: int) -> np.ndarray:
    """Integer truncation floor(x * 2^bits) of coordinates in [0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x >= 1):
        raise OrderError("coordinates must lie in [0, 1)")
    return np.floor(x * (1 << bits)).astype(np.int64)


def interleave_keys(ints: np.ndarray, bits: int) -> np.ndarray:
    """Keys whose binary digits are a_{jd+i} = j-th digit of x_i, x_1 most significant.

    ``ints`` has shape (..., d) and holds floor(x * 2^bits). Requires d*bits <= 63.
    """
    ints = np.asarray(ints, dtype=np.int64)
    d = ints.shape[-1]
    if d * bits > 63:
        raise OrderError("d * bits must not exceed 63")
    key = np.zeros(ints.shape[:-1], dtype=np.int64)
    for j in range(bits - 1, -1, -1):
        for i in range(d):
            key = (key << 1) | ((ints[..., i] >> j) & 1)
    return key


def interleave_order(space: FiniteMetricSpace, bits: int = 20, coords=None) -> Order:
    """Lexicographic order on the interleaved binary digits of coordinates in [0,1)^d."""
    c = _coords(space) if coords is None else np.asarray(coords, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    ints = digits(c, bits)
    keys = interleave_keys(ints, bits)
    if np.unique(keys).size != keys.size:
        raise OrderError(f"points are indistinguishable at {bits} bits")
    return order_from_sequence(np.argsort(keys, kind="stable"),
                               {"constructor": "interleave", "bits": bits})


def hilbert_index(x: np.ndarray, y: np.ndarray, depth: int) -> np.ndarray:
    """Position along the Hilbert curve of side 2^depth (cells (x, y) as integers)."""
    side = 1 << depth
    x = np.array(x, dtype=np.int64)
    y = np.array(y, dtype=np.int64)
    d = np.zeros_like(x)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, side - 1 - x, x)
        y = np.where(flip, side - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s >>= 1
    return d


def spacefill_order(space: FiniteMetricSpace, depth: int = 16, coords=None) -> Order:
    """Order by Hilbert-curve index of points in the unit square."""
    c = _coords(space) if coords is None else np.asarray(coords, dtype=np.float64)
    if c.shape[1] != 2:
        raise OrderError("spacefill_order needs planar coordinates")
    ints = digits(c, depth)
    keys = hilbert_index(ints[:, 0], ints[:, 1], depth)
    if np.unique(keys).size != keys.size:
        raise OrderError(f"depth {depth} does not separate the points")
    return order_from_sequence(np.argsort(keys, kind="stable"),
                               {"constructor": "hilbert", "depth": depth})


def _family_sets(family) -> list[frozenset]:
    if hasattr(family, "all_sets"):
        raw = family.all_sets()
    else:
        raw = family
    seen = {}
    for s in raw:
        fs = frozenset(int(x) for x in s)
        if fs:
            seen[fs] = None
    return list(seen)


def laminar_chains(n: int, sets: Iterable[frozenset]) -> list[list[frozenset]]:
    """Per point, the sets containing it from largest to smallest.

    Raises OrderError when two sets overlap without nesting.
    """
    chains: list[list[frozenset]] = [[] for _ in range(n)]
    for s in sets:
        for p in s:
            if p < 0 or p >= n:
                raise OrderError(f"set element {p} out of range")
            chains[p].append(s)
    checked = set()
    for ch in chains:
        ch.sort(key=lambda s: (-len(s), min(s)))
        for big, small in zip(ch[:-1], ch[1:]):
            key = (id(big), id(small))
            if key in checked:
                continue
            if not small <= big:
                raise OrderError(f"family is not laminar: sets with min ids {min(big)} "
                                 f"and {min(small)} overlap without nesting")
            checked.add(key)
    return chains


def hierarchy_order(family, n: int | None = None, tie_break: str = "min_id") -> Order:
    """Order in which every set of a laminar family occupies consecutive ranks.

    Children of a node (sets and loose points) are placed by their minimal
    point id, so the order is built by recursive interval assignment.
    """
    if tie_break != "min_id":
        raise OrderError("only the min_id tie break is implemented")
    if n is None:
        n = family.n
    sets = _family_sets(family)
    chains = laminar_chains(n, sets)
    keys = [tuple(min(s) for s in chains[p]) + (p,) for p in range(n)]
    return order_from_keys(keys, {"constructor": "hierarchy", "tie_break": tie_break,
                                  "sets": len(sets)})


def tree_f(l: int, k: int) -> int:
    """f(l, k) = max(floor(l / 2^{k+1}) 2^{k+1} - 2^k, 0) for k >= 1, and f(l, 0) = l."""
    if k == 0:
        return l
    return max((l >> (k + 1)) * (1 << (k + 1)) - (1 << k), 0)


def tree_word_sequence(u1: str, u2: str, length: int) -> list[str]:
    """v_0..v_{length-1}: v_{2k} a prefix of u1, v_{2k+1} a prefix of u2."""
    out = []
    for i in range(length):
        k, side = divmod(i, 2)
        u = u1 if side == 0 else u2
        out.append(u[: tree_f(len(u), k)])
    return out


def tree_product_order(space: FiniteMetricSpace) -> Order:
    """Order comparing word sequences at the largest index where they differ.

    Words compare lexicographically with a proper prefix counting as smaller.
    """
    pts = tree_product_words(space)
    depth = space.meta["params"]["depth"]
    length = 2 * (depth.bit_length() + 2)
    keys = [tuple(reversed(tree_word_sequence(u1, u2, length))) for u1, u2 in pts]
    return order_from_keys(keys, {"constructor": "tree_product"})


def pullback_order(order_m: Order, phi, tie_break: Order | None = None) -> Order:
    """Order on N with phi(x) < phi(y) in M implying x < y; ties by tie_break or id."""
    phi = np.asarray(phi, dtype=np.int64)
    img = order_m.rank[phi]
    tb = np.arange(phi.size) if tie_break is None else tie_break.rank
    seq = np.lexsort((tb, img))
    return order_from_sequence(seq, {"constructor": "pullback",
                                     "tie_break": "id" if tie_break is None else "order"})


def is_convex(order: Order, subset) -> bool:
    """True iff the ranks of ``subset`` form one contiguous block."""
    ids = np.unique(np.asarray(list(subset), dtype=np.int64))
    if ids.size <= 1:
        return True
    r = order.rank[ids]
    return int(r.max() - r.min() + 1) == ids.size


def is_convex_brute(order: Order, subset) -> bool:
    """Definition check: x < y < z with x, z inside forces y inside."""
    inside = set(int(x) for x in subset)
    seq = order.seq.tolist()
    pos = [i for i, p in enumerate(seq) if p in inside]
    if not pos:
        return True
    return all(seq[i] in inside for i in range(pos[0], pos[-1] + 1))
