"""Walls of a median graph and greedy cube paths across them.

A wall is an equivalence class of edges under the relation
(a,b) ~ (c,d)  iff  d(a,c) + d(b,d) != d(a,d) + d(b,c),
which on median graphs is transitive and splits the vertices into two
convex half-spaces per class.  Cube paths walk from a vertex toward a
target, at each step crossing every wall that is dual to an edge at the
current vertex and still separates it from the target; those walls
pairwise cross, so the step lands on the opposite corner of a cube.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import CornerFailure, NotMedian
from .median_core import TABLE_LIMIT, MedianGraph, VertexSet, _pack_mask

CONVEXITY_SAMPLE = 4000


@dataclass(frozen=True)
class Hyperplane:
    """One wall: its dual edge class and the two vertex sides."""

    index: int
    edges: frozenset[tuple[int, int]]
    minus_side: VertexSet
    plus_side: VertexSet

    def side_of(self, v: int) -> int:
        return -1 if v in self.minus_side else 1

    def separates(self, x: int, y: int) -> bool:
        return ((self.minus_side.mask >> x) ^ (self.minus_side.mask >> y)) & 1 == 1


def _edge_relation(g: MedianGraph) -> np.ndarray:
    ea = np.fromiter((e[0] for e in g.edges), dtype=np.int32)
    eb = np.fromiter((e[1] for e in g.edges), dtype=np.int32)
    d = g.dist
    lhs = d[ea[:, None], ea[None, :]] + d[eb[:, None], eb[None, :]]
    rhs = d[ea[:, None], eb[None, :]] + d[eb[:, None], ea[None, :]]
    return lhs != rhs


def _check_convex(g: MedianGraph, side: np.ndarray, wall_index: int) -> None:
    """Convexity of one side, exact on small graphs, sampled above."""
    idx = np.flatnonzero(side)
    if g.n <= TABLE_LIMIT:
        packed = g.packed_intervals()
        own = np.packbits(side, bitorder="little")
        sub = packed[np.ix_(idx, idx)]
        if np.any(sub & ~own[None, None, :]):
            raise NotMedian(
                f"side of wall {wall_index} is not interval-closed",
                wall=wall_index,
            )
        return
    rng = random.Random(97 + wall_index)
    for _ in range(min(CONVEXITY_SAMPLE, len(idx) * len(idx))):
        u = int(idx[rng.randrange(len(idx))])
        v = int(idx[rng.randrange(len(idx))])
        if np.any(g.interval_row(u, v) & ~side):
            raise NotMedian(
                f"side of wall {wall_index} is not interval-closed",
                wall=wall_index, pair=(u, v),
            )


def hyperplanes(g: MedianGraph) -> list[Hyperplane]:
    """All walls, in order of their smallest dual edge.  Raises
    NotMedian when the edge relation is intransitive, a class fails to
    split the graph in two, or a side fails the convexity check."""
    if g._hyperplanes is not None:
        return g._hyperplanes
    if not g.edges:
        g._hyperplanes = []
        g._edge_to_wall = {}
        return []
    color = g.dist[0] % 2
    for u, v in g.edges:
        if color[u] == color[v]:
            raise NotMedian("graph has an odd cycle", edge=(u, v))
    rel = _edge_relation(g)
    m = len(g.edges)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in np.argwhere(np.triu(rel, 1)):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    classes: dict[int, list[int]] = {}
    for i in range(m):
        classes.setdefault(find(i), []).append(i)
    walls = []
    edge_to_wall: dict[tuple[int, int], int] = {}
    d = g.dist
    for index, root in enumerate(sorted(classes)):
        members = classes[root]
        sub = rel[np.ix_(members, members)]
        if not sub.all():
            i, j = np.argwhere(~sub)[0]
            raise NotMedian(
                "edge relation is not transitive",
                edges=(g.edges[members[int(i)]], g.edges[members[int(j)]]),
            )
        a, b = g.edges[members[0]]
        near_a = d[:, a] < d[:, b]
        near_b = d[:, b] < d[:, a]
        if not np.array_equal(near_a, ~near_b):
            tie = int(np.flatnonzero(near_a == near_b)[0])
            raise NotMedian("wall does not split the graph", wall=index, vertex=tie)
        for ei in members:
            u, v = g.edges[ei]
            if near_a[u] == near_a[v]:
                raise NotMedian("dual edge fails to cross its wall", wall=index, edge=(u, v))
            edge_to_wall[(u, v)] = index
        _check_convex(g, near_a, index)
        _check_convex(g, near_b, index)
        walls.append(
            Hyperplane(
                index=index,
                edges=frozenset(g.edges[ei] for ei in members),
                minus_side=VertexSet(g.n, _pack_mask(near_a)),
                plus_side=VertexSet(g.n, _pack_mask(near_b)),
            )
        )
    g._hyperplanes = walls
    g._edge_to_wall = edge_to_wall
    return walls


def crosses(h1: Hyperplane, h2: Hyperplane) -> bool:
    """Two walls cross when all four side intersections are inhabited."""
    m1, p1 = h1.minus_side.mask, h1.plus_side.mask
    m2, p2 = h2.minus_side.mask, h2.plus_side.mask
    return bool(m1 & m2 and m1 & p2 and p1 & m2 and p1 & p2)


def rank(g: MedianGraph) -> int:
    """Largest pairwise-crossing wall set (= top cube dimension)."""
    if g._rank is not None:
        return g._rank
    hs = hyperplanes(g)
    n = len(hs)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if crosses(hs[i], hs[j]):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    best = 0

    def grow(cand: int, size: int) -> None:
        nonlocal best
        if size > best:
            best = size
        while cand:
            if size + cand.bit_count() <= best:
                return
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            grow(cand & adj[v], size + 1)

    grow((1 << n) - 1, 0)
    g._rank = best
    return best


def separators(g: MedianGraph, x: int, y: int) -> frozenset[int]:
    """Indices of walls with x and y on opposite sides."""
    return frozenset(h.index for h in hyperplanes(g) if h.separates(x, y))


@dataclass(frozen=True)
class NormalCubePath:
    """Greedy cube path; vertices[i] is reached after i cube steps and
    steps[i] is the wall-index set crossed by step i."""

    source: int
    target: int
    vertices: tuple[int, ...]
    steps: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.steps)

    def vertex_after(self, j: int) -> int:
        """Vertex after j steps, held at the target once the path ends."""
        return self.vertices[min(j, len(self.vertices) - 1)]


def _cross_walls(g: MedianGraph, start: int, wall_ids, walls) -> int:
    v = start
    for wid in wall_ids:
        nxt = None
        for u in g.adj[v]:
            if g._edge_to_wall[(min(u, v), max(u, v))] == wid:
                nxt = u
                break
        if nxt is None:
            raise CornerFailure(
                f"no edge dual to wall {wid} at vertex {v}",
                vertex=v, wall=wid,
            )
        v = nxt
    return v


def normal_cube_path(g: MedianGraph, x: int, target: int) -> NormalCubePath:
    """Walk from x to target, greedily crossing at each vertex every
    separating wall dual to an incident edge.  Step walls must pairwise
    cross and the crossing order must not matter; violations raise."""
    cache = getattr(g, "_ncp_cache", None)
    if cache is None:
        cache = g._ncp_cache = {}
    hit = cache.get((x, target))
    if hit is not None:
        return hit
    walls = hyperplanes(g)
    d = g.dist
    v = x
    vertices = [x]
    steps = []
    while v != target:
        step = sorted(
            {
                g._edge_to_wall[(min(u, v), max(u, v))]
                for u in g.adj[v]
                if d[u, target] < d[v, target]
            }
        )
        for i in range(len(step)):
            for j in range(i + 1, len(step)):
                if not crosses(walls[step[i]], walls[step[j]]):
                    raise NotMedian(
                        "step walls do not pairwise cross",
                        walls=(step[i], step[j]), vertex=v,
                    )
        corner = _cross_walls(g, v, step, walls)
        shuffled = list(step)
        random.Random(1000003 * x + 31 * target + len(steps)).shuffle(shuffled)
        if _cross_walls(g, v, shuffled, walls) != corner:
            raise CornerFailure(
                "cube corner depends on crossing order",
                vertex=v, step=tuple(step),
            )
        steps.append(frozenset(step))
        vertices.append(corner)
        v = corner
    path = NormalCubePath(
        source=x, target=target, vertices=tuple(vertices), steps=tuple(steps)
    )
    cache[(x, target)] = path
    return path


def ncp_vertex(g: MedianGraph, y: int, target: int, j: int) -> int:
    """Vertex after j cube steps on the path from y to target."""
    return normal_cube_path(g, y, target).vertex_after(j)


def witness_sets_cat0(g: MedianGraph, x0: int, x: int, k: int, l: int) -> VertexSet:
    """Witness set at center x, radius index k, scale l: collect the
    vertex reached after 3l cube steps toward the basepoint x0 from
    every y within distance k of x."""
    if not (1 <= k <= 3 * l):
        raise ValueError(f"radius index {k} outside 1..{3 * l}")
    return VertexSet.of(
        g.n, (ncp_vertex(g, y, x0, 3 * l) for y in g.ball(x, k))
    )
