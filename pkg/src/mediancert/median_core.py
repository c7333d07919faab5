"""Median graphs and their interval algebra.

Vertices are integers 0..n-1.  A graph is *median* when every triple
(x, y, z) has exactly one vertex lying simultaneously on geodesics
between each pair; all operations here assume that property and raise
MedianViolation where a computation witnesses its failure.

Distances come from an all-pairs BFS table computed once at
construction.  Vertex sets are fixed-width bitsets so interval and hull
computations reduce to word-parallel integer arithmetic.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import BudgetExceeded, MedianViolation, NotFound, ReductionFailure

# Dense per-pair tables (medians, packed intervals) are only built for
# graphs up to this size; everything else computes rows on demand.
TABLE_LIMIT = 256


def _pack_mask(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


class VertexSet:
    """Immutable subset of 0..n-1 backed by an int bitmask."""

    __slots__ = ("n", "mask")

    def __init__(self, n: int, mask: int = 0):
        self.n = n
        self.mask = mask

    @classmethod
    def of(cls, n: int, members) -> "VertexSet":
        m = 0
        for v in members:
            m |= 1 << int(v)
        return cls(n, m)

    @classmethod
    def full(cls, n: int) -> "VertexSet":
        return cls(n, (1 << n) - 1)

    def __contains__(self, v: int) -> bool:
        return (self.mask >> int(v)) & 1 == 1

    def __iter__(self):
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        return isinstance(other, VertexSet) and self.mask == other.mask and self.n == other.n

    def __hash__(self) -> int:
        return hash((self.n, self.mask))

    def __and__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.n, self.mask & other.mask)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.n, self.mask | other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.n, self.mask & ~other.mask)

    def __le__(self, other: "VertexSet") -> bool:
        return self.mask & ~other.mask == 0

    def issubset(self, other: "VertexSet") -> bool:
        return self <= other

    def members(self) -> list[int]:
        return list(self)

    def __repr__(self) -> str:
        return f"VertexSet({sorted(self)})"


class MedianGraph:
    """Connected simple graph with cached BFS distances.

    The constructor checks shape (ids in range, no loops, symmetry,
    connectivity) but not the median property itself; run
    harness_cli.is_median_graph on untrusted input.
    """

    def __init__(self, vertex_count: int, edges):
        if vertex_count <= 0:
            raise ValueError("vertex_count must be positive")
        self.n = int(vertex_count)
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range")
            seen.add((min(u, v), max(u, v)))
        self.edges: list[tuple[int, int]] = sorted(seen)
        self.adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            self.adj[u].append(v)
            self.adj[v].append(u)
        for nbrs in self.adj:
            nbrs.sort()
        self.dist = self._all_pairs()
        self._interval_cache: dict[tuple[int, int], int] = {}
        self._median_table: np.ndarray | None = None
        self._packed_intervals: np.ndarray | None = None
        self._hyperplanes = None  # filled by cube_complex
        self._rank: int | None = None

    def _all_pairs(self) -> np.ndarray:
        if not self.edges:
            if self.n > 1:
                raise ValueError("graph is not connected")
            return np.zeros((1, 1), dtype=np.int32)
        if self.n <= 64:
            # scipy's sparse machinery costs more than the walk itself here
            dist = np.full((self.n, self.n), -1, dtype=np.int32)
            for s in range(self.n):
                row = dist[s]
                row[s] = 0
                frontier = [s]
                d = 0
                while frontier:
                    d += 1
                    nxt = []
                    for u in frontier:
                        for v in self.adj[u]:
                            if row[v] < 0:
                                row[v] = d
                                nxt.append(v)
                    frontier = nxt
            if dist.min() < 0:
                raise ValueError("graph is not connected")
            return dist
        rows = [u for u, v in self.edges] + [v for u, v in self.edges]
        cols = [v for u, v in self.edges] + [u for u, v in self.edges]
        g = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(self.n, self.n))
        ncomp, _ = connected_components(g, directed=False)
        if ncomp != 1:
            raise ValueError("graph is not connected")
        d = shortest_path(g, method="D", unweighted=True, directed=False)
        return d.astype(np.int32)

    def distance(self, x: int, y: int) -> int:
        return int(self.dist[x, y])

    def ball(self, x: int, r: int) -> VertexSet:
        return VertexSet(self.n, _pack_mask(self.dist[x] <= r))

    def interval_row(self, a: int, b: int) -> np.ndarray:
        """Boolean row of vertices on some geodesic from a to b."""
        return self.dist[a] + self.dist[b] == self.dist[a, b]

    def interval(self, a: int, b: int) -> VertexSet:
        key = (a, b) if a <= b else (b, a)
        m = self._interval_cache.get(key)
        if m is None:
            m = _pack_mask(self.interval_row(a, b))
            self._interval_cache[key] = m
        return VertexSet(self.n, m)

    def median(self, x: int, y: int, z: int) -> int:
        t = self._median_table
        if t is not None:
            return int(t[x, y, z])
        row = (
            self.interval_row(x, y)
            & self.interval_row(y, z)
            & self.interval_row(z, x)
        )
        hits = np.flatnonzero(row)
        if len(hits) != 1:
            raise MedianViolation(
                f"triple ({x},{y},{z}) has {len(hits)} geodesic meeting points",
                triple=(int(x), int(y), int(z)),
                candidates=[int(h) for h in hits],
            )
        return int(hits[0])

    def packed_intervals(self) -> np.ndarray:
        """uint8 array (n, n, ceil(n/8)): bit c of row (a, b) marks
        c on a geodesic between a and b.  Small graphs only."""
        if self._packed_intervals is None:
            if self.n > TABLE_LIMIT:
                raise BudgetExceeded(f"interval table disabled above {TABLE_LIMIT} vertices", n=self.n)
            d = self.dist
            p = np.empty((self.n, self.n, (self.n + 7) // 8), dtype=np.uint8)
            for a in range(self.n):
                rows = d[a][None, :] + d - d[a][:, None] == 0
                p[a] = np.packbits(rows, axis=1, bitorder="little")
            self._packed_intervals = p
        return self._packed_intervals

    def median_table(self) -> np.ndarray:
        """int16 array (n, n, n) of all medians; raises MedianViolation
        on the first triple without a unique one.  Small graphs only."""
        if self._median_table is None:
            if self.n > TABLE_LIMIT:
                raise BudgetExceeded(f"median table disabled above {TABLE_LIMIT} vertices", n=self.n)
            p = self.packed_intervals()
            tab = np.empty((self.n, self.n, self.n), dtype=np.int16)
            for x in range(self.n):
                # meet[y, z, :] packs I(x,y) & I(x,z) & I(y,z)
                meet = p[x][:, None, :] & p[x][None, :, :] & p
                bits = np.unpackbits(meet, axis=2, bitorder="little", count=self.n)
                counts = bits.sum(axis=2)
                bad = np.argwhere(counts != 1)
                if len(bad):
                    y, z = (int(v) for v in bad[0])
                    raise MedianViolation(
                        f"triple ({x},{y},{z}) has {int(counts[y, z])} geodesic meeting points",
                        triple=(x, y, z),
                        candidates=[int(c) for c in np.flatnonzero(bits[y, z])],
                    )
                tab[x] = bits.argmax(axis=2)
            self._median_table = tab
        return self._median_table


def median(g: MedianGraph, x: int, y: int, z: int) -> int:
    return g.median(x, y, z)


def interval(g: MedianGraph, a: int, b: int) -> VertexSet:
    return g.interval(a, b)


def join(g: MedianGraph, a: VertexSet) -> VertexSet:
    """Union of intervals over all pairs from ``a`` (pairs include
    singletons, so the result contains ``a``)."""
    mask = 0
    mem = a.members()
    for i, u in enumerate(mem):
        for v in mem[i:]:
            mask |= g.interval(u, v).mask
    return VertexSet(g.n, mask)


def hull(g: MedianGraph, a: VertexSet) -> VertexSet:
    """Smallest interval-closed superset, by iterating ``join``."""
    if not a:
        return a
    cur = a
    while True:
        nxt = join(g, cur)
        if nxt == cur:
            return cur
        cur = nxt


def iterated_median(g: MedianGraph, xs, b: int) -> int:
    """Fold the points of ``xs`` into ``b``-directed medians: start at
    the first point, then repeatedly take the median with the next
    point and ``b``.  Value is independent of the order of ``xs``."""
    xs = list(xs)
    if not xs:
        raise ValueError("iterated_median needs at least one point")
    acc = int(xs[0])
    for x in xs[1:]:
        acc = g.median(acc, int(x), b)
    return acc


def reduce_generators(g: MedianGraph, xs, b: int, d: int) -> list[int]:
    """Greedily drop points whose removal keeps iterated_median(xs, b)
    fixed.  On a graph of rank <= d the survivor list has at most d
    points whenever d >= 2 or all of xs lie in one interval ending at
    b; raises ReductionFailure otherwise.  (On rank-1 graphs two
    scattered points straddling b really can both be essential: path
    0-1-2-3-4 with xs={0,4}, b=2 folds to 2, which no single
    generator reproduces.)"""
    xs = [int(x) for x in xs]
    target = iterated_median(g, xs, b)
    changed = True
    while changed and len(xs) > 1:
        changed = False
        for i in range(len(xs)):
            rest = xs[:i] + xs[i + 1:]
            if iterated_median(g, rest, b) == target:
                xs = rest
                changed = True
                break
    if len(xs) > d:
        raise ReductionFailure(
            f"greedy reduction stalled at {len(xs)} generators (rank bound {d})",
            survivors=xs, bound=d,
        )
    return xs


def deep_point_exact(g: MedianGraph, a: int, b: int, c: VertexSet, d: int) -> int:
    """Point of the form iterated_median([h_1..h_d], b), h_i drawn from
    ``c``, whose interval from ``a`` swallows all of ``c``.

    Requires c nonempty, c inside interval(a, b), and |c| <= 64.  The
    witness comes from greedy reduction of the full fold; an ordered
    exhaustive tuple search remains as fallback.  Any witness g* also
    satisfies distance(a, g*) <= 3**d * max distance(a, h_i), which the
    caller may re-check.
    """
    if not c:
        raise NotFound("candidate set is empty", a=a, b=b)
    if len(c) > 64:
        raise BudgetExceeded("candidate set above the 64-point cap", size=len(c))
    if not c <= g.interval(a, b):
        stray = next(v for v in c if v not in g.interval(a, b))
        raise NotFound(
            f"candidate {stray} is not between {a} and {b}",
            a=a, b=b, stray=stray,
        )
    mem = c.members()
    try:
        ys = reduce_generators(g, mem, b, d)
    except ReductionFailure:
        ys = None
    if ys is not None:
        point = iterated_median(g, ys, b)
        if c <= g.interval(a, point):
            return point
    # Fallback: scan d-tuples, farthest-from-a first.
    if len(mem) ** d > 1 << 20:
        raise BudgetExceeded("tuple fallback too large", size=len(mem), arity=d)
    ranked = sorted(mem, key=lambda h: -g.distance(a, h))
    best = None
    for tup in sorted(
        itertools.product(ranked, repeat=d),
        key=lambda t: -min(g.distance(a, h) for h in t),
    ):
        point = iterated_median(g, tup, b)
        if c <= g.interval(a, point):
            best = point
            break
    if best is None:
        raise NotFound("no covering tuple exists", a=a, b=b)
    return best
