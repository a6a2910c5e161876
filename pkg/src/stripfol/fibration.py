"""Cross sections, parallel towers and trivializing charts over the leaf space.

A chart is built in three steps.  A cross section through a leaf picks one
point on every leaf near it; a tower of pairwise parallel sections
``gamma_i`` (``i`` an integer) marches off to both ends of all those leaves;
the chart ``Phi(i + tau, u)`` then fills each block between ``gamma_i`` and
``gamma_{i+1}`` affinely in leaf coordinates.

Base coordinates ``u`` of a chart:

* edge base: ``u`` is the strip height;
* arc vertex: ``u`` in ``(-eps, eps)``; ``u < 0`` is side ``a`` at depth ``-u``,
  ``u = 0`` the arc leaf, ``u > 0`` side ``b`` at depth ``u``;
* boundary vertex: ``u`` in ``[0, eps)`` is the depth from the boundary line.

Points are handled in *frame* coordinates: arc ``a`` coordinates for an arc
vertex (side ``b`` strip coordinates are reached through the gluing map),
strip coordinates otherwise.  Everything is exact rational arithmetic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .extrat import IDENTITY, AffineMap, ExtRat, format_extrat, is_finite, parse_extrat
from .leafspace import EdgePoint, YPoint, build_leaf_space, special_points
from .model import (
    BOTTOM,
    BOUNDARY,
    ONE,
    TOP,
    ZERO,
    ArcLeaf,
    ArcNbhd,
    BoundaryLeaf,
    BoundaryNbhd,
    InStrip,
    Interior,
    LeafDescriptor,
    ModelError,
    ModelPoint,
    OnArc,
    OnBoundary,
    SaturatedSet,
    StripModel,
    affine_gluing_map,
    base_point,
    check_leaf,
    default_collar,
    depth_of,
    format_model,
    height_at,
    is_properly_embedded,
    leaf_domain,
    leaf_from_dict,
    leaf_of,
    leaf_to_dict,
    parse_model,
    proper_parameter,
    require_valid,
    sample_points,
    saturate_basic,
)
from .numeric import EmbeddingEvaluator, GridReport, check_fibered_homeo, invert_monotone

# -- section bases -------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeBase:
    """Open height interval ``(lo, hi)`` of one strip."""

    strip: str
    lo: Fraction
    hi: Fraction

    kind = "edge"
    closed_lo = False

    def contains(self, u: Fraction) -> bool:
        return self.lo < u < self.hi

    def depth(self, u: Fraction) -> Optional[Fraction]:
        return None

    def leaf_over(self, u: Fraction) -> LeafDescriptor:
        return Interior(self.strip, u)

    def point(self, u: Fraction, w: Fraction) -> ModelPoint:
        return InStrip(self.strip, w, u)

    def locate(self, pt: ModelPoint) -> Optional[tuple[Fraction, Fraction]]:
        if isinstance(pt, InStrip) and pt.strip == self.strip and self.contains(pt.y):
            return pt.y, pt.x
        return None

    def y_point(self, u: Fraction) -> YPoint:
        return EdgePoint(self.strip, u)

    def u_of(self, y: YPoint) -> Optional[Fraction]:
        if isinstance(y, EdgePoint) and y.strip == self.strip and self.contains(y.y):
            return y.y
        return None

    def edge_intervals(self) -> list[tuple[str, Fraction, Fraction]]:
        return [(self.strip, self.lo, self.hi)]

    def saturation(self, m: StripModel) -> SaturatedSet:
        return SaturatedSet.build({self.strip: [(self.lo, self.hi)]})

    def to_dict(self) -> dict:
        return {"kind": "edge", "strip": self.strip, "lo": format_extrat(self.lo), "hi": format_extrat(self.hi)}


@dataclass(frozen=True)
class ArcBase:
    """An arc vertex with collars of depth ``eps`` on both glued sides."""

    gluing: int
    strip_a: str
    side_a: str
    strip_b: str
    side_b: str
    phi: AffineMap
    eps: Fraction
    lo: ExtRat
    hi: ExtRat

    kind = "arc"
    closed_lo = False

    @property
    def vertex(self) -> str:
        return f"g{self.gluing}"

    def contains(self, u: Fraction) -> bool:
        return -self.eps < u < self.eps

    def depth(self, u: Fraction) -> Fraction:
        return abs(u)

    def leaf_over(self, u: Fraction) -> LeafDescriptor:
        if u < 0:
            return Interior(self.strip_a, height_at(self.side_a, -u))
        if u > 0:
            return Interior(self.strip_b, height_at(self.side_b, u))
        return ArcLeaf(self.gluing)

    def point(self, u: Fraction, w: Fraction) -> ModelPoint:
        if u < 0:
            return InStrip(self.strip_a, w, height_at(self.side_a, -u))
        if u > 0:
            return InStrip(self.strip_b, self.phi(w), height_at(self.side_b, u))
        return OnArc(self.gluing, w)

    def locate(self, pt: ModelPoint) -> Optional[tuple[Fraction, Fraction]]:
        if isinstance(pt, OnArc):
            return (ZERO, pt.x) if pt.gluing == self.gluing else None
        if not isinstance(pt, InStrip):
            return None
        if pt.strip == self.strip_a and 0 < depth_of(self.side_a, pt.y) < self.eps:
            return -depth_of(self.side_a, pt.y), pt.x
        if pt.strip == self.strip_b and 0 < depth_of(self.side_b, pt.y) < self.eps:
            return depth_of(self.side_b, pt.y), self.phi.inverse()(pt.x)
        return None

    def y_point(self, u: Fraction) -> YPoint:
        if u < 0:
            return EdgePoint(self.strip_a, height_at(self.side_a, -u))
        if u > 0:
            return EdgePoint(self.strip_b, height_at(self.side_b, u))
        return self.vertex

    def u_of(self, y: YPoint) -> Optional[Fraction]:
        if isinstance(y, str):
            return ZERO if y == self.vertex else None
        if y.strip == self.strip_a and 0 < depth_of(self.side_a, y.y) < self.eps:
            return -depth_of(self.side_a, y.y)
        if y.strip == self.strip_b and 0 < depth_of(self.side_b, y.y) < self.eps:
            return depth_of(self.side_b, y.y)
        return None

    def edge_intervals(self) -> list[tuple[str, Fraction, Fraction]]:
        out = []
        for sid, side in ((self.strip_a, self.side_a), (self.strip_b, self.side_b)):
            lo, hi = (ZERO, self.eps) if side == BOTTOM else (1 - self.eps, ONE)
            out.append((sid, lo, hi))
        return out

    def saturation(self, m: StripModel) -> SaturatedSet:
        x0 = base_point(m.arc(m.gluing(self.gluing).a))
        r = ONE
        if is_finite(self.lo):
            r = min(r, (x0 - self.lo) / 2)
        if is_finite(self.hi):
            r = min(r, (self.hi - x0) / 2)
        return saturate_basic(m, ArcNbhd(self.gluing, x0 - r, x0 + r, self.eps, self.eps))

    def to_dict(self) -> dict:
        return {"kind": "arc", "gluing": self.gluing, "eps": format_extrat(self.eps)}


@dataclass(frozen=True)
class BoundaryBase:
    """A boundary vertex with a one-sided collar ``[0, eps)``."""

    strip: str
    side: str
    eps: Fraction

    kind = "boundary"
    closed_lo = True
    lo = -math.inf
    hi = math.inf

    @property
    def vertex(self) -> str:
        return f"{self.strip}.{self.side}"

    def contains(self, u: Fraction) -> bool:
        return 0 <= u < self.eps

    def depth(self, u: Fraction) -> Fraction:
        return u

    def leaf_over(self, u: Fraction) -> LeafDescriptor:
        if u == 0:
            return BoundaryLeaf(self.strip, self.side)
        return Interior(self.strip, height_at(self.side, u))

    def point(self, u: Fraction, w: Fraction) -> ModelPoint:
        if u == 0:
            return OnBoundary(self.strip, self.side, w)
        return InStrip(self.strip, w, height_at(self.side, u))

    def locate(self, pt: ModelPoint) -> Optional[tuple[Fraction, Fraction]]:
        if isinstance(pt, OnBoundary):
            return (ZERO, pt.x) if (pt.strip, pt.side) == (self.strip, self.side) else None
        if isinstance(pt, InStrip) and pt.strip == self.strip and depth_of(self.side, pt.y) < self.eps:
            return depth_of(self.side, pt.y), pt.x
        return None

    def y_point(self, u: Fraction) -> YPoint:
        return self.vertex if u == 0 else EdgePoint(self.strip, height_at(self.side, u))

    def u_of(self, y: YPoint) -> Optional[Fraction]:
        if isinstance(y, str):
            return ZERO if y == self.vertex else None
        if y.strip == self.strip and depth_of(self.side, y.y) < self.eps:
            return depth_of(self.side, y.y)
        return None

    def edge_intervals(self) -> list[tuple[str, Fraction, Fraction]]:
        lo, hi = (ZERO, self.eps) if self.side == BOTTOM else (1 - self.eps, ONE)
        return [(self.strip, lo, hi)]

    def saturation(self, m: StripModel) -> SaturatedSet:
        return saturate_basic(m, BoundaryNbhd(self.strip, self.side, Fraction(-1), ONE, self.eps))

    def to_dict(self) -> dict:
        return {"kind": "boundary", "strip": self.strip, "side": self.side, "eps": format_extrat(self.eps)}


SectionBase = Union[EdgeBase, ArcBase, BoundaryBase]


def base_through(m: StripModel, leaf: LeafDescriptor, collar: Optional[Fraction] = None) -> SectionBase:
    """The canonical base for a section through ``leaf``."""
    check_leaf(m, leaf)
    eps = default_collar(m) if collar is None else Fraction(collar)
    if not 0 < eps <= Fraction(1, 2):
        raise ValueError(f"collar must lie in (0, 1/2], got {eps}")
    if isinstance(leaf, Interior):
        return EdgeBase(leaf.strip, max(ZERO, leaf.y - eps), min(ONE, leaf.y + eps))
    if isinstance(leaf, ArcLeaf):
        g = m.gluing(leaf.gluing)
        arc = m.arc(g.a)
        return ArcBase(leaf.gluing, g.a.strip, g.a.side, g.b.strip, g.b.side, affine_gluing_map(m, g), eps, arc.lo, arc.hi)
    return BoundaryBase(leaf.strip, leaf.side, eps)


def base_from_dict(m: StripModel, d: dict) -> SectionBase:
    kind = d["kind"]
    if kind == "edge":
        return EdgeBase(d["strip"], Fraction(d["lo"]), Fraction(d["hi"]))
    if kind == "arc":
        return base_through(m, ArcLeaf(int(d["gluing"])), Fraction(d["eps"]))
    if kind == "boundary":
        return base_through(m, BoundaryLeaf(d["strip"], d["side"]), Fraction(d["eps"]))
    raise ModelError(f"unknown base kind {kind!r}")


def base_grid(base: SectionBase, n: int) -> list[Fraction]:
    """About ``n`` rational base coordinates spread over the base, vertex included."""
    if isinstance(base, EdgeBase):
        return [base.lo + (base.hi - base.lo) * Fraction(k + 1, n + 1) for k in range(n)]
    if isinstance(base, BoundaryBase):
        return [base.eps * Fraction(k, n) for k in range(n)]
    # Symmetric about the vertex, which is always on the grid (an even n gains one point).
    half = n // 2
    return [base.eps * Fraction(k - half, half + 1) for k in range(2 * half + 1)]


# -- cross sections ------------------------------------------------------------------


@dataclass(frozen=True)
class CrossSection:
    """``u -> base.point(u, coord(u))``: one point on each leaf over the base."""

    base: SectionBase
    coord: Callable[[Fraction], Fraction]

    def __call__(self, u) -> ModelPoint:
        u = Fraction(u)
        if not self.base.contains(u):
            raise ValueError(f"base coordinate {u} outside the section base")
        return self.base.point(u, self.coord(u))

    def leaf_point(self, leaf: LeafDescriptor) -> Optional[ModelPoint]:
        """The section's point on ``leaf``, if it meets it."""
        for u in self._candidates(leaf):
            if self.base.contains(u) and self.base.leaf_over(u) == leaf:
                return self(u)
        return None

    def _candidates(self, leaf: LeafDescriptor) -> list[Fraction]:
        if isinstance(leaf, Interior):
            if isinstance(self.base, EdgeBase):
                return [leaf.y]
            return [self.base.u_of(EdgePoint(leaf.strip, leaf.y))] if self.base.u_of(EdgePoint(leaf.strip, leaf.y)) is not None else []
        return [ZERO] if not isinstance(self.base, EdgeBase) else []


def constant_coord(x0: Fraction) -> Callable[[Fraction], Fraction]:
    return lambda u: x0


def cross_section_through(
    m: StripModel, leaf: LeafDescriptor, x0: Optional[Fraction] = None, collar: Optional[Fraction] = None
) -> CrossSection:
    """A straight transversal through ``leaf`` at frame coordinate ``x0``."""
    require_valid(m)
    if not is_properly_embedded(m, leaf):
        raise ModelError(f"{leaf} is not properly embedded")
    base = base_through(m, leaf, collar)
    if x0 is None:
        x0 = base_point(m.arc(m.gluing(leaf.gluing).a)) if isinstance(leaf, ArcLeaf) else ZERO
    x0 = Fraction(x0)
    if isinstance(base, ArcBase) and not (base.lo < x0 < base.hi):
        raise ValueError(f"x0 = {x0} outside the arc")
    return CrossSection(base, constant_coord(x0))


def check_section(m: StripModel, sec: CrossSection, samples: int = 41) -> list[str]:
    """Problems with ``sec`` as a cross section: empty when p o sec is injective, boundary-compatible and continuous."""
    issues = []
    us = base_grid(sec.base, samples)
    leaves = [leaf_of(m, sec(u)) for u in us]
    if len(set(leaves)) != len(leaves):
        issues.append("p o section is not injective on the grid")
    for u, leaf in zip(us, leaves):
        if leaf != sec.base.leaf_over(u):
            issues.append(f"section point at u = {u} lies on {leaf}, expected {sec.base.leaf_over(u)}")
        if isinstance(sec.base, BoundaryBase) and u == 0 and not isinstance(leaf, BoundaryLeaf):
            issues.append("boundary base point not sent into the boundary")
    if not isinstance(sec.base, EdgeBase):
        c0 = sec.coord(ZERO)
        sides = (-1, 1) if isinstance(sec.base, ArcBase) else (1,)
        for sign in sides:
            gaps = [abs(sec.coord(sign * sec.base.eps / 2**k) - c0) for k in range(1, 40, 6)]
            if not (gaps[-1] < Fraction(1, 10**6) and all(b <= a for a, b in zip(gaps, gaps[1:]))):
                issues.append(f"one-sided limit from {'a' if sign < 0 else 'b'} misses the vertex image")
    return issues


# -- half-leaf tails ---------------------------------------------------------------


@dataclass(frozen=True)
class HalfLeafTail:
    """Closed half-leaf beyond ``cutoff``: ``(.., cutoff]`` for Left, ``[cutoff, ..)`` for Right."""

    leaf: LeafDescriptor
    side: str
    cutoff: Fraction

    def contains(self, x: Fraction) -> bool:
        return x <= self.cutoff if self.side == "left" else x >= self.cutoff


def half_leaf_tails(
    m: StripModel, sections: list[CrossSection], leaf: LeafDescriptor, margin: Fraction = ONE
) -> tuple[HalfLeafTail, HalfLeafTail]:
    """The two closed tails of ``leaf`` beyond every section point, ``margin`` past the extremes.

    The margin is clipped to half the distance to a finite end of the leaf.
    """
    hits = []
    for sec in sections:
        pt = sec.leaf_point(leaf)
        if pt is not None:
            hits.append(pt.x)
    if not hits:
        raise ValueError(f"no section meets {leaf}")
    lo, hi = leaf_domain(m, leaf)
    first, last = min(hits), max(hits)
    left = margin if not is_finite(lo) else min(margin, (first - lo) / 2)
    right = margin if not is_finite(hi) else min(margin, (hi - last) / 2)
    return HalfLeafTail(leaf, "left", first - left), HalfLeafTail(leaf, "right", last + right)


# -- towers --------------------------------------------------------------------------


def interval_sigmoid(lo: ExtRat, hi: ExtRat, x0: Fraction, spacing: Fraction, i):
    """Increasing bijection ``R -> (lo, hi)`` with ``0 -> x0``; affine rays toward infinite ends."""
    i = Fraction(i)
    if is_finite(lo) and is_finite(hi):
        return lo + (hi - lo) * (Fraction(1, 2) + i / (2 * (1 + abs(i))))
    if i >= 0:
        return x0 + spacing * i if not is_finite(hi) else x0 + (hi - x0) * i / (1 + i)
    return x0 + spacing * i if not is_finite(lo) else x0 + (x0 - lo) * i / (1 - i)


def interval_sigmoid_inverse(lo: ExtRat, hi: ExtRat, x0: Fraction, spacing: Fraction, x):
    if is_finite(lo) and is_finite(hi):
        s = (x - lo) / (hi - lo) - Fraction(1, 2)
        return 2 * s / (1 - 2 * abs(s))
    d = x - x0
    if d >= 0:
        return d / spacing if not is_finite(hi) else d / (hi - x0 - d)
    return d / spacing if not is_finite(lo) else d / (x0 - lo + d)


@dataclass(frozen=True)
class SectionTower:
    """``gamma_i(u)`` has frame coordinate ``c_i(t) = (1 - t/eps) g(i) + (t/eps)(x0 + M i)``, ``t`` the depth of ``u``."""

    base: SectionBase
    x0: Fraction
    spacing: Fraction
    swap: Optional[tuple[int, int]] = None

    def g(self, i) -> Fraction:
        return interval_sigmoid(self.base.lo, self.base.hi, self.x0, self.spacing, i)

    # Grid checks and inverse searches revisit the same (i, u) many times.
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def coord(self, i: int, u: Fraction) -> Fraction:
        key = (i, u.numerator, u.denominator)
        value = self._cache.get(key)
        if value is None:
            if len(self._cache) > 1 << 17:
                self._cache.clear()
            value = self._cache[key] = self._coord(i, u)
        return value

    def _coord(self, i: int, u: Fraction) -> Fraction:
        if self.swap is not None and i in self.swap:
            i = self.swap[1] if i == self.swap[0] else self.swap[0]
        line = self.x0 + self.spacing * i
        t = self.base.depth(u)
        if t is None:
            return line
        w = t / self.base.eps
        return (1 - w) * self.g(i) + w * line

    def section(self, i: int) -> CrossSection:
        return CrossSection(self.base, lambda u, i=i: self.coord(i, u))

    def bracket(self, u: Fraction, w: Fraction) -> int:
        """The index ``i`` with ``c_i(u) <= w < c_{i+1}(u)``."""
        c = lambda i: self.coord(i, u)
        lo, hi = -1, 1
        while c(lo) > w:
            lo *= 2
        while c(hi) <= w:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if c(mid) <= w:
                lo = mid
            else:
                hi = mid
        return lo


def parallel_tower(
    m: StripModel, seed: CrossSection, spacing: Fraction = ONE, collar: Optional[Fraction] = None
) -> SectionTower:
    """The blended tower through a straight seed section."""
    spacing = Fraction(spacing)
    if spacing <= 0:
        raise ValueError("tower spacing must be positive")
    if collar is not None and Fraction(collar) <= 0:
        raise ValueError("collar must be positive")
    base = seed.base
    if collar is not None and not isinstance(base, EdgeBase):
        base = replace(base, eps=Fraction(collar))
    x0 = seed.coord(ZERO if not isinstance(base, EdgeBase) else (base.lo + base.hi) / 2)
    return SectionTower(base, Fraction(x0), spacing)


# -- charts -------------------------------------------------------------------------


@dataclass(frozen=True)
class TrivChart:
    """``Phi(i + tau, u)`` is the point at fraction ``tau`` between ``gamma_i(u)`` and ``gamma_{i+1}(u)``."""

    leaf: LeafDescriptor
    tower: SectionTower
    saturation: SaturatedSet

    @property
    def base(self) -> SectionBase:
        return self.tower.base

    @property
    def y_chart(self) -> str:
        return "R+" if isinstance(self.base, BoundaryBase) else "R"

    def frame(self, s, u) -> Fraction:
        s, u = Fraction(s), Fraction(u)
        i = math.floor(s)
        tau = s - i
        lo = self.tower.coord(i, u)
        if tau == 0:
            return lo
        return lo + tau * (self.tower.coord(i + 1, u) - lo)

    def __call__(self, s, u) -> ModelPoint:
        u = Fraction(u)
        if not self.base.contains(u):
            raise ValueError(f"base coordinate {u} outside the chart")
        return self.base.point(u, self.frame(s, u))

    def inverse(self, pt: ModelPoint) -> tuple[Fraction, Fraction]:
        found = self.base.locate(pt)
        if found is None:
            raise ValueError(f"{pt} is not in the chart")
        u, w = found
        i = self.tower.bracket(u, w)
        lo, hi = self.tower.coord(i, u), self.tower.coord(i + 1, u)
        return i + (w - lo) / (hi - lo), u

    def leaf_coord(self, s, u) -> Fraction:
        return self(s, u).x

    def section(self, s) -> CrossSection:
        return section_from_chart(self, s)


def section_from_chart(chart: TrivChart, s) -> CrossSection:
    if isinstance(s, float) and not math.isfinite(s):
        raise ValueError("fiber value must be finite")
    s = Fraction(s)
    return CrossSection(chart.base, lambda u: chart.frame(s, u))


def trivialize_leaf_neighborhood(
    m: StripModel, leaf: LeafDescriptor, spacing: Fraction = ONE, collar: Optional[Fraction] = None
) -> TrivChart:
    """Section through ``leaf``, its tower and the block-filling chart over the section base."""
    seed = cross_section_through(m, leaf, collar=collar)
    tower = parallel_tower(m, seed, spacing)
    return TrivChart(leaf, tower, tower.base.saturation(m))


def strip_chart(m: StripModel, sid: str, lo: Fraction, hi: Fraction, spacing: Fraction = ONE) -> TrivChart:
    base = EdgeBase(sid, Fraction(lo), Fraction(hi))
    return TrivChart(Interior(sid, (base.lo + base.hi) / 2), SectionTower(base, ZERO, Fraction(spacing)), base.saturation(m))


def corrupt_chart(chart: TrivChart, i: int = 0, j: int = 1) -> TrivChart:
    """The same chart with sections ``gamma_i`` and ``gamma_j`` exchanged."""
    return replace(chart, tower=replace(chart.tower, swap=(i, j), _cache={}))


# -- verification ---------------------------------------------------------------------

ESCAPE_BOUND = 1000


def fiber_grid(n: int, half_width: int = 10) -> list[Fraction]:
    return [Fraction(-half_width) + Fraction(2 * half_width * j, n - 1) for j in range(n)]


def _escapes(m: StripModel, chart: TrivChart, u: Fraction, bound: int) -> bool:
    """Both fiber ends leave ``[-bound, bound]`` in proper leaf coordinates, toward opposite ends."""
    leaf = chart.base.leaf_over(u)
    lo, hi = leaf_domain(m, leaf)
    for k in range(0, 64):
        ahead = proper_parameter(lo, hi, chart(2**k, u).x)
        behind = proper_parameter(lo, hi, chart(-(2**k), u).x)
        if min(ahead, behind) < -bound and max(ahead, behind) > bound:
            return True
    return False


def verify_trivialization(m: StripModel, chart: TrivChart, grid: int = 101, half_width: int = 10) -> GridReport:
    """Grid certificate that ``chart`` is a fibered bijection onto its declared saturation.

    Checks: image in the saturation, one leaf per fiber line, strict
    monotonicity along fibers, injectivity, exact inverse round trip,
    escape past +-1000 in proper leaf coordinates along each sampled fiber,
    and preimages for sampled points of the saturation.
    """
    report = GridReport(samples=grid * grid)
    for name in ("in_saturation", "fiber_leaf", "monotone", "injective", "round_trip", "exhaustion", "onto"):
        report.run(name)
    ss = fiber_grid(grid, half_width)
    us = base_grid(chart.base, grid)
    seen: dict[ModelPoint, tuple] = {}
    for u in us:
        pts = [chart(s, u) for s in ss]
        try:
            leaves = {leaf_of(m, p) for p in pts}
        except ModelError as exc:
            report.fail("fiber_leaf", str(u), f"fiber line leaves the model: {exc}")
            continue
        if leaves != {chart.base.leaf_over(u)}:
            report.fail("fiber_leaf", str(u), "fiber line leaves its leaf")
        xs = [p.x for p in pts]
        steps = [b - a for a, b in zip(xs, xs[1:])]
        increasing = sum(d > 0 for d in steps) >= sum(d < 0 for d in steps)
        bad = next((k for k, d in enumerate(steps) if (d <= 0 if increasing else d >= 0)), None)
        if bad is not None:
            report.fail("monotone", (str(ss[bad + 1]), str(u)), "fiber line not strictly monotone")
        for s, p in zip(ss, pts):
            if not chart.saturation.contains_point(m, p):
                report.fail("in_saturation", (str(s), str(u)), "image outside the declared saturation")
            if p in seen:
                report.fail("injective", (str(s), str(u), *seen[p]), "two grid points share an image")
            seen[p] = (str(s), str(u))
            try:
                back = chart.inverse(p)
            except ValueError as exc:
                report.fail("round_trip", (str(s), str(u)), str(exc))
                continue
            if back != (s, u):
                report.fail("round_trip", (str(s), str(u)), f"inverse gave ({back[0]}, {back[1]})")
    for u in us[:: max(1, grid // 10)] + ([ZERO] if chart.base.contains(ZERO) else []):
        if not _escapes(m, chart, u, ESCAPE_BOUND):
            report.fail("exhaustion", str(u), f"fiber does not escape past +-{ESCAPE_BOUND}")
    rng = random.Random(0)
    for pt in sample_points(m, chart.saturation, 60, rng):
        try:
            s, u = chart.inverse(pt)
        except ValueError as exc:
            report.fail("onto", str(pt), str(exc))
            continue
        if chart(s, u) != pt:
            report.fail("onto", str(pt), "chart misses a point of its saturation")
    report.residual("round_trip", 0.0)
    return report


# -- atlas -------------------------------------------------------------------------

ATLAS_SCHEMA = "stripfol.atlas/1"


@dataclass(frozen=True)
class TrivAtlas:
    model: StripModel
    charts: tuple[TrivChart, ...]
    collar: Fraction
    spacing: Fraction

    def to_dict(self) -> dict:
        return {
            "schema": ATLAS_SCHEMA,
            "model": format_model(self.model),
            "params": {"collar": format_extrat(self.collar), "spacing": format_extrat(self.spacing)},
            "charts": [
                {
                    "leaf": leaf_to_dict(c.leaf),
                    "base": c.base.to_dict(),
                    "y_chart": c.y_chart,
                    "x0": format_extrat(c.tower.x0),
                    "saturation": c.saturation.to_dict(),
                }
                for c in self.charts
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrivAtlas:
        if d.get("schema") != ATLAS_SCHEMA:
            raise ModelError(f"expected schema {ATLAS_SCHEMA}, got {d.get('schema')!r}")
        m = parse_model(d["model"])
        spacing = Fraction(d["params"]["spacing"])
        charts = []
        for cd in d["charts"]:
            base = base_from_dict(m, cd["base"])
            x0 = parse_extrat(cd["x0"])
            if not is_finite(x0) or (isinstance(base, ArcBase) and not base.lo < x0 < base.hi):
                raise ModelError(f"chart seed x0 = {cd['x0']} does not lie on its leaf")
            tower = SectionTower(base, x0, spacing)
            charts.append(TrivChart(leaf_from_dict(cd["leaf"]), tower, SaturatedSet.from_dict(cd["saturation"])))
        return cls(m, tuple(charts), Fraction(d["params"]["collar"]), spacing)


def build_atlas(m: StripModel, spacing: Fraction = ONE, collar: Optional[Fraction] = None) -> TrivAtlas:
    """One chart per strip interior and one per vertex of the leaf space."""
    require_valid(m)
    eps = default_collar(m) if collar is None else Fraction(collar)
    gY = build_leaf_space(m)
    charts = []
    for sid in m.strip_ids:
        # Sides without vertices are open ends of the edge: the strip chart runs to them.
        lo = eps / 2 if gY.attached((sid, BOTTOM)) else ZERO
        hi = 1 - eps / 2 if gY.attached((sid, TOP)) else ONE
        charts.append(strip_chart(m, sid, lo, hi, spacing))
    for v in gY.vertices:
        charts.append(trivialize_leaf_neighborhood(m, v.leaf, spacing, eps))
    return TrivAtlas(m, tuple(charts), eps, Fraction(spacing))


def atlas_coverage(atlas: TrivAtlas) -> list[str]:
    """Y points outside every chart base: uncovered height gaps and vertices."""
    m = atlas.model
    gY = build_leaf_space(m)
    problems = []
    pieces: dict[str, list[tuple[Fraction, Fraction]]] = {sid: [] for sid in m.strip_ids}
    for c in atlas.charts:
        for sid, lo, hi in c.base.edge_intervals():
            pieces[sid].append((lo, hi))
    for sid, ivs in pieces.items():
        reach = ZERO
        for lo, hi in sorted(ivs):
            if lo >= reach and reach > 0 or lo > reach:
                break
            reach = max(reach, hi)
        if reach < 1:
            problems.append(f"edge {sid} uncovered from height {format_extrat(reach)}")
    vertices = {c.base.vertex for c in atlas.charts if not isinstance(c.base, EdgeBase)}
    problems += [f"vertex {v} outside every chart base" for v in gY.vertex_ids if v not in vertices]
    return problems


def verify_transition(m: StripModel, c1: TrivChart, c2: TrivChart, report: GridReport, prefix: str, samples: int = 21) -> None:
    """On the common base: fibers of ``c1`` land in single fibers of ``c2`` over the same Y point, monotonically."""
    ss = fiber_grid(samples)
    for u1 in base_grid(c1.base, samples):
        y = c1.base.y_point(u1)
        u2 = c2.base.u_of(y)
        if u2 is None:
            continue
        report.samples += len(ss)
        images = []
        for s in ss:
            s2, v = c2.inverse(c1(s, u1))
            if v != u2:
                report.fail(prefix + "fiber_preserving", (str(s), str(u1)), f"base moved from {u2} to {v}")
            images.append(s2)
        steps = [b - a for a, b in zip(images, images[1:])]
        if not (all(d > 0 for d in steps) or all(d < 0 for d in steps)):
            report.fail(prefix + "fiber_preserving", str(u1), "transition not monotone along the fiber")


def verify_atlas(atlas: TrivAtlas, grid: int = 101) -> GridReport:
    m = atlas.model
    report = GridReport()
    report.run("coverage")
    for problem in atlas_coverage(atlas):
        report.fail("coverage", problem)
    for k, c in enumerate(atlas.charts):
        report.merge(verify_trivialization(m, c, grid), prefix=f"chart{k}.")
        if c.saturation != c.base.saturation(m):
            report.fail(f"chart{k}.saturation", str(c.leaf), "declared saturation differs from the section saturation")
    report.run("transitions.fiber_preserving")
    for i, c1 in enumerate(atlas.charts):
        for j, c2 in enumerate(atlas.charts):
            if i != j:
                verify_transition(m, c1, c2, report, "transitions.")
    return report


# -- Kaplan decomposition ---------------------------------------------------------


@dataclass(frozen=True)
class KaplanComponent:
    """A chain of strips joined across non-special arc leaves.

    ``strips[k] = (sid, reversed)``: chart heights in ``(k, k + 1)`` run down
    the strip when ``reversed``.  ``joins[k]`` is the gluing between strips
    ``k`` and ``k + 1``; ``ends`` says how each end of the chain closes off.
    """

    strips: tuple[tuple[str, bool], ...]
    joins: tuple[int, ...]
    ends: tuple[str, str]
    shape: str


@dataclass(frozen=True)
class KaplanDecomposition:
    special_leaves: tuple[LeafDescriptor, ...]
    components: tuple[KaplanComponent, ...]


def _other(side: str) -> str:
    return TOP if side == BOTTOM else BOTTOM


def kaplan_decomposition(m: StripModel) -> KaplanDecomposition:
    """Cut along the special leaves; what remains are chains of strips."""
    require_valid(m)
    gY = build_leaf_space(m)
    special = set(special_points(gY))
    links: dict[tuple[str, str], tuple[int, tuple[str, str]]] = {}
    for gi, g in enumerate(m.gluings):
        if f"g{gi}" in special:
            continue
        ea, eb = (g.a.strip, g.a.side), (g.b.strip, g.b.side)
        links[ea] = (gi, eb)
        links[eb] = (gi, ea)

    def end_kind(end: tuple[str, str]) -> str:
        return "boundary" if m.side(*end).kind == BOUNDARY else "open"

    done: set[str] = set()
    components = []
    starts = [sid for sid in m.strip_ids if (sid, BOTTOM) not in links or (sid, TOP) not in links]
    for sid in starts + list(m.strip_ids):
        if sid in done:
            continue
        cyclic = sid not in starts
        # Enter through a free side when there is one, so the chain runs away from it.
        entry = BOTTOM if cyclic or (sid, BOTTOM) not in links else TOP
        strips, joins = [], []
        first_end = (sid, entry)
        cur, side_in = sid, entry
        while True:
            done.add(cur)
            strips.append((cur, side_in == TOP))
            out = (cur, _other(side_in))
            if out not in links:
                last_end = out
                break
            gi, (nxt, nside) = links[out]
            if nxt in done:
                last_end = out
                joins.append(gi)
                break
            joins.append(gi)
            cur, side_in = nxt, nside
        if cyclic:
            components.append(KaplanComponent(tuple(strips), tuple(joins), ("cycle", "cycle"), "annulus"))
            continue
        ends = (end_kind(first_end), end_kind(last_end))
        shape = {("open", "open"): "open-strip", ("boundary", "boundary"): "closed-strip"}.get(ends, "half-strip")
        components.append(KaplanComponent(tuple(strips), tuple(joins), ends, shape))
    specials = tuple(v.leaf for v in gY.vertices if v.id in special)
    return KaplanDecomposition(specials, tuple(components))


def _strip_frames(m: StripModel, comp: KaplanComponent) -> list[AffineMap]:
    """Affine maps from the chain coordinate to each strip's x coordinate, continuous across joins."""
    frames = [IDENTITY]
    for k, gi in enumerate(comp.joins[: len(comp.strips) - 1]):
        g = m.gluing(gi)
        phi = affine_gluing_map(m, g)
        step = phi if g.a.strip == comp.strips[k][0] and g.a.side == (BOTTOM if comp.strips[k][1] else TOP) else phi.inverse()
        frames.append(step.compose(frames[-1]))
    return frames


def component_chart(
    m: StripModel, comp: KaplanComponent, collar: Optional[Fraction] = None, t_range=(-10.0, 10.0), margin: float = 1e-3
) -> EmbeddingEvaluator:
    """Floating chart ``(t, u) -> (x, u)`` of a chain component; ``u`` in ``(k, k+1)`` is strip ``k``.

    Away from the joins ``x`` is the chain frame; within ``eps`` of a join
    it blends into a sigmoid parametrization of the (bounded or half-bounded) arc.
    """
    if comp.shape == "annulus":
        raise ValueError("cyclic components have no product chart")
    eps = float(default_collar(m) if collar is None else collar)
    frames = _strip_frames(m, comp)
    n = len(comp.strips)
    # For each join: the arc on the lower strip's outgoing side, in that strip's coordinates.
    joins = []
    for k, gi in enumerate(comp.joins):
        sid, rev = comp.strips[k]
        side = BOTTOM if rev else TOP
        g = m.gluing(gi)
        ref = g.a if (g.a.strip, g.a.side) == (sid, side) else g.b
        arc = m.arc(ref)
        joins.append((frames[k], arc, base_point(arc)))
    scale = [float(f.scale) for f in frames]
    shift = [float(f.shift) for f in frames]

    def arc_point(j: int, t):
        frame, arc, x0 = joins[j]
        sign = 1.0 if frame.scale > 0 else -1.0
        lo, hi = float(arc.lo), float(arc.hi)
        tt = sign * t
        if math.isfinite(lo) and math.isfinite(hi):
            return lo + (hi - lo) * (0.5 + tt / (2 * (1 + np.abs(tt))))
        x0f = float(x0)
        pos = x0f + tt if not math.isfinite(hi) else x0f + (hi - x0f) * tt / (1 + np.abs(tt))
        neg = x0f + tt if not math.isfinite(lo) else x0f + (x0f - lo) * tt / (1 + np.abs(tt))
        return np.where(tt >= 0, pos, neg)

    def forward(t, u):
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float))
        k = np.clip(np.floor(u).astype(int), 0, n - 1)
        x = np.empty_like(t)
        for kk in range(n):
            sel = k == kk
            if not np.any(sel):
                continue
            tt, r = t[sel], u[sel] - kk
            line = scale[kk] * tt + shift[kk]
            val = line
            if kk < len(joins):
                w = np.clip((1 - r) / eps, 0, 1)
                val = w * val + (1 - w) * arc_point(kk, tt)
            if kk > 0:
                prev = arc_point(kk - 1, tt)
                frame = frames[kk].compose(frames[kk - 1].inverse())
                w = np.clip(r / eps, 0, 1)
                val = w * val + (1 - w) * (float(frame.scale) * prev + float(frame.shift))
            x[sel] = val
        return x, u.copy()

    def inverse(x, z):
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        span = max(abs(t_range[0]), abs(t_range[1])) + 1
        t = invert_monotone(lambda tt: forward(tt, z)[0], -span, span, x)
        return t, z.copy()

    u0 = 0.0 if comp.ends[0] == "boundary" else margin
    u1 = float(n) if comp.ends[1] == "boundary" else n - margin

    def to_model(t: float, u: float) -> ModelPoint:
        x = float(forward(np.array(t), np.array(u))[0])
        k = min(int(math.floor(u)), n - 1)
        r = u - k
        sid, rev = comp.strips[k]
        if 0 < r < 1 or (r == 0 and k == 0) or (r == 1 and k == n - 1):
            if r in (0, 1):
                side = (BOTTOM if r == 0 else TOP) if not rev else (TOP if r == 0 else BOTTOM)
                return OnBoundary(sid, side, Fraction(x))
            y = Fraction(1 - r if rev else r)
            return InStrip(sid, Fraction(x), y)
        gi = comp.joins[k - 1]
        g = m.gluing(gi)
        # x is in strip k coordinates, on strip k's incoming side.
        side_in = TOP if rev else BOTTOM
        if (g.a.strip, g.a.side) == (sid, side_in):
            return OnArc(gi, Fraction(x))
        return OnArc(gi, affine_gluing_map(m, g).inverse()(Fraction(x)))

    return EmbeddingEvaluator(forward, inverse, tuple(t_range), (u0, u1), to_model=to_model, model=m)


def certify_component(m: StripModel, comp: KaplanComponent, grid: int = 101) -> GridReport:
    return check_fibered_homeo(component_chart(m, comp), grid)
