"""Exact certificates that witness-set families average to flatness.

A provider exposes finite point sets S(x, k, l) around each center x.
For level n we form xi_n(x), the average over k in n+1..2n of the
normalized indicators of S(x, k, n), and certify that the l1 variation
between nearby centers is controlled by set-size ratios alone:

  var <= (1/n) * sum_k ||chi_x,k - chi_y,k||
      <= 2*(1 - (1/n) * sum_k |S(x,k-m)| / |S(x,k+m)|)
      <= 2*(1 - p**(-2m/n))

with p the largest set size seen.  Every inequality is decided in exact
rational arithmetic; the fractional power in the last bound is only
evaluated in floating point for display, with the comparison done on
integer powers after clearing denominators.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cube_complex import normal_cube_path
from .errors import ConditionViolation, EmptySet
from .median_core import MedianGraph, VertexSet


class SparseL1Vector:
    """Finitely supported map point -> nonnegative rational."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict[int, Fraction]):
        self.entries = {k: v for k, v in entries.items() if v != 0}
        for v in self.entries.values():
            if v < 0:
                raise ValueError("negative entry")

    def __getitem__(self, k: int) -> Fraction:
        return self.entries.get(k, Fraction(0))

    def support(self):
        return self.entries.keys()

    def l1_norm(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def l1_distance(self, other: "SparseL1Vector") -> Fraction:
        total = Fraction(0)
        for k in self.entries.keys() | other.entries.keys():
            total += abs(self[k] - other[k])
        return total


def chi(a) -> SparseL1Vector:
    """Indicator of ``a`` scaled to unit l1 norm."""
    size = len(a)
    if size == 0:
        raise EmptySet("cannot normalize the empty set")
    w = Fraction(1, size)
    return SparseL1Vector({int(v): w for v in a})


def chi_l1_identity(a, b) -> tuple[Fraction, Fraction]:
    """Both sides of ||chi_A - chi_B|| = 2*(1 - |A&B| / max(|A|,|B|))."""
    lhs = chi(a).l1_distance(chi(b))
    inter = len(set(a) & set(b))
    rhs = 2 * (1 - Fraction(inter, max(len(a), len(b))))
    return lhs, rhs


class Cat0WitnessProvider:
    """Witness sets on a median graph: S(x, k, l) collects the vertex
    reached after 3l cube steps toward the basepoint from each y within
    distance k of x."""

    name = "cat0"

    def __init__(self, graph: MedianGraph, basepoint: int):
        self.graph = graph
        self.basepoint = int(basepoint)
        self._endpoints: dict[int, np.ndarray] = {}
        self._sets: dict[tuple[int, int, int], VertexSet] = {}

    @property
    def point_count(self) -> int:
        return self.graph.n

    def distance(self, x: int, y: int) -> int:
        return self.graph.distance(x, y)

    def _endpoint_row(self, l: int) -> np.ndarray:
        row = self._endpoints.get(l)
        if row is None:
            row = np.fromiter(
                (
                    normal_cube_path(self.graph, y, self.basepoint).vertex_after(3 * l)
                    for y in range(self.graph.n)
                ),
                dtype=np.int32,
                count=self.graph.n,
            )
            self._endpoints[l] = row
        return row

    def sets(self, x: int, k: int, l: int) -> VertexSet:
        if not (1 <= k <= 3 * l):
            raise ValueError(f"radius index {k} outside 1..{3 * l}")
        key = (x, k, l)
        s = self._sets.get(key)
        if s is None:
            inside = np.flatnonzero(self.graph.dist[x] <= k)
            s = VertexSet.of(self.graph.n, np.unique(self._endpoint_row(l)[inside]))
            self._sets[key] = s
        return s


def xi(provider, x: int, n: int) -> SparseL1Vector:
    """Average of the normalized indicators of S(x, k, n) over
    k = n+1 .. 2n."""
    acc: dict[int, Fraction] = {}
    for k in range(n + 1, 2 * n + 1):
        s = provider.sets(x, k, n)
        if len(s) == 0:
            raise EmptySet(f"S({x},{k},{n}) is empty")
        w = Fraction(1, n * len(s))
        for z in s:
            acc[z] = acc.get(z, Fraction(0)) + w
    return SparseL1Vector(acc)


def variation(provider, x: int, y: int, n: int) -> Fraction:
    return xi(provider, x, n).l1_distance(xi(provider, y, n))


def _pair_distance(provider, x: int, y: int) -> int | None:
    d = provider.distance(x, y)
    if d != int(d):
        return None
    return int(d)


@dataclass
class ConditionReport:
    n: int
    sample_size: int
    support_radius: int
    p_n: int
    p_by_k: dict[int, int]
    pairs_checked: int
    saturated_sets: int


def verify_conditions(provider, n: int, sample, max_pairs: int | None = None) -> ConditionReport:
    """Check the three structural conditions over a center sample:
    (i) every member of S(x, k, n) stays within a radius that depends
    only on n, (ii) for centers at distance d <= n the sets nest,
    S(x, k-d, n) inside S(x,k,n) & S(y,k,n) and
    S(x,k,n) | S(y,k,n) inside S(x, k+d, n), and (iii) set sizes are
    bounded; the maxima are reported, violations raise."""
    sample = [int(x) for x in sample]
    radius = 0
    p_n = 0
    p_by_k: dict[int, int] = {}
    saturated = 0
    base = provider.basepoint
    for x in sample:
        for k in range(1, 3 * n + 1):
            s = provider.sets(x, k, n)
            if len(s) == 0:
                raise ConditionViolation(f"S({x},{k},{n}) is empty", x=x, k=k, n=n)
            far = max(math.ceil(provider.distance(x, z)) for z in s)
            radius = max(radius, far)
            p_n = max(p_n, len(s))
            p_by_k[k] = max(p_by_k.get(k, 0), len(s))
            if len(s) == 1 and base in s:
                saturated += 1
    pairs = []
    for i, x in enumerate(sample):
        for y in sample[i + 1:]:
            d = _pair_distance(provider, x, y)
            if d is not None and 1 <= d <= n:
                pairs.append((x, y, d))
    if max_pairs is not None and len(pairs) > max_pairs:
        step = len(pairs) / max_pairs
        pairs = [pairs[int(i * step)] for i in range(max_pairs)]
    for x, y, d in pairs:
        for k in range(n + 1, 2 * n + 1):
            sx, sy = provider.sets(x, k, n), provider.sets(y, k, n)
            for c, far in ((x, y), (y, x)):
                sc, sf = (sx, sy) if c == x else (sy, sx)
                inner = provider.sets(c, k - d, n)
                outer = provider.sets(c, k + d, n)
                if not inner <= (sc & sf):
                    raise ConditionViolation(
                        "inner witness set escapes the intersection",
                        x=c, y=far, k=k, n=n, d=d,
                    )
                if not (sc | sf) <= outer:
                    raise ConditionViolation(
                        "witness union escapes the outer set",
                        x=c, y=far, k=k, n=n, d=d,
                    )
    return ConditionReport(
        n=n,
        sample_size=len(sample),
        support_radius=radius,
        p_n=p_n,
        p_by_k=p_by_k,
        pairs_checked=len(pairs),
        saturated_sets=saturated,
    )


@dataclass
class CertificateRow:
    m: int
    sup_variation: Fraction
    amgm_bound: Fraction
    p_bound_float: float
    pair_count: int


@dataclass
class PropACertificate:
    provider: str
    basepoint: int
    n: int
    support_radius: int
    p_n: int
    rows: list[CertificateRow] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "provider": self.provider,
            "basepoint": self.basepoint,
            "support_radius": self.support_radius,
            "p_n": self.p_n,
            "rows": [
                {
                    "m": r.m,
                    "sup_variation": f"{r.sup_variation.numerator}/{r.sup_variation.denominator}",
                    "amgm_bound": f"{r.amgm_bound.numerator}/{r.amgm_bound.denominator}",
                    "p_bound_float": r.p_bound_float,
                }
                for r in self.rows
            ],
        }

    def csv_rows(self) -> list[list]:
        return [
            [
                self.provider,
                self.n,
                r.m,
                r.sup_variation.numerator,
                r.sup_variation.denominator,
                r.amgm_bound.numerator,
                r.amgm_bound.denominator,
                self.p_n,
                r.p_bound_float,
                self.support_radius,
            ]
            for r in self.rows
        ]


CSV_HEADER = [
    "provider", "n", "m",
    "sup_variation_num", "sup_variation_den",
    "amgm_num", "amgm_den",
    "p_n", "p_bound_float", "support_radius",
]


def _check_pair_chain(provider, x, y, m, n, p_n, xis) -> tuple[Fraction, Fraction]:
    """Exact inequality chain for one center pair; returns the measured
    variation and the rational ratio bound."""
    var = xis[x].l1_distance(xis[y])
    sum_norm = Fraction(0)
    ratios = []
    for k in range(n + 1, 2 * n + 1):
        sx, sy = provider.sets(x, k, n), provider.sets(y, k, n)
        inner = provider.sets(x, k - m, n)
        outer = provider.sets(x, k + m, n)
        if not (inner <= (sx & sy) and (sx | sy) <= outer):
            raise ConditionViolation(
                "nesting failed inside the certificate chain",
                x=x, y=y, k=k, n=n, m=m,
            )
        norm = 2 * (1 - Fraction(len(sx & sy), max(len(sx), len(sy))))
        sum_norm += norm
        ratio = Fraction(len(inner), len(outer))
        ratios.append(ratio)
        if norm > 2 * (1 - ratio):
            raise ConditionViolation(
                "per-radius norm exceeds its ratio bound",
                x=x, y=y, k=k, n=n, m=m,
            )
    mean = sum(ratios, Fraction(0)) / n
    bound = 2 * (1 - mean)
    if var > sum_norm / n or sum_norm / n > bound:
        raise ConditionViolation(
            "variation chain is out of order", x=x, y=y, n=n, m=m,
        )
    prod = math.prod(ratios)
    if mean**n < prod:
        raise ConditionViolation(
            "mean-vs-product inequality failed", x=x, y=y, n=n, m=m,
        )
    if 2 * m <= n:
        head = math.prod(
            Fraction(len(provider.sets(x, j, n))) for j in range(n + 1 - m, n + m + 1)
        )
        tail = math.prod(
            Fraction(len(provider.sets(x, j, n))) for j in range(2 * n + 1 - m, 2 * n + m + 1)
        )
        if prod != head / tail:
            raise ConditionViolation(
                "ratio product failed to telescope", x=x, y=y, n=n, m=m,
            )
    if prod * p_n ** (2 * m) < 1:
        raise ConditionViolation(
            "ratio product undershoots the size bound", x=x, y=y, n=n, m=m,
        )
    return var, bound


def certify(provider, n_list, m_list, sample) -> list[PropACertificate]:
    """One certificate per level n; each certificate has a row per
    center-pair distance m with the sup of the measured variation, the
    sup of the rational ratio bound, and the float display of the size
    bound 2*(1 - p**(-2m/n)).  All orderings are verified exactly."""
    sample = [int(x) for x in sample]
    certs = []
    for n in n_list:
        report = verify_conditions(provider, n, sample)
        p_n = report.p_n
        xis = {x: xi(provider, x, n) for x in sample}
        cert = PropACertificate(
            provider=provider.name,
            basepoint=provider.basepoint,
            n=n,
            support_radius=report.support_radius,
            p_n=p_n,
        )
        for m in m_list:
            pairs = [
                (x, y)
                for i, x in enumerate(sample)
                for y in sample[i + 1:]
                if _pair_distance(provider, x, y) == m
            ] if m <= n else []
            sup_var = Fraction(0)
            sup_bound = Fraction(0)
            for x, y in pairs:
                var, bound = _check_pair_chain(provider, x, y, m, n, p_n, xis)
                sup_var = max(sup_var, var)
                sup_bound = max(sup_bound, bound)
            # sup_var <= sup_bound <= 2*(1 - p**(-2m/n)), the last
            # comparison done on integer powers.
            if sup_var > sup_bound:
                raise ConditionViolation("row ordering failed", n=n, m=m)
            if (1 - sup_bound / 2) ** n * p_n ** (2 * m) < 1:
                raise ConditionViolation(
                    "ratio bound exceeds the size bound", n=n, m=m,
                )
            cert.rows.append(
                CertificateRow(
                    m=m,
                    sup_variation=sup_var,
                    amgm_bound=sup_bound,
                    p_bound_float=2.0 * (1.0 - p_n ** (-2.0 * m / n)),
                    pair_count=len(pairs),
                )
            )
        certs.append(cert)
    return certs


def eligible_sample(provider, n_max: int, min_distance: int | None = None,
                    limit: int | None = None, seed: int = 0) -> list[int]:
    """Centers far enough from the basepoint that level-n_max sets have
    room; falls back to all points when the margin empties the space."""
    if min_distance is None:
        min_distance = 3 * n_max + 1
    pts = [
        x for x in range(provider.point_count)
        if provider.distance(x, provider.basepoint) >= min_distance
    ]
    if not pts:
        pts = list(range(provider.point_count))
    if limit is not None and len(pts) > limit:
        pts = sorted(random.Random(seed).sample(pts, limit))
    return pts
