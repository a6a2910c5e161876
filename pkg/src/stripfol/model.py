"""Striped models of foliated surfaces.

A model is a finite set of strips ``R x (0,1)``, each foliated by the horizontal
lines ``R x {y}``.  Each strip side is either removed (``open``), kept as a
boundary line of the surface (``boundary``), or carries a sorted list of
pairwise disjoint open arcs (``arcs``).  Every arc is glued to exactly one arc
on another side by an affine identification; the glued arc becomes a leaf and
the points of a glued side outside its arcs are removed from the surface.

All coordinates are exact: :class:`fractions.Fraction` with ``-inf``/``+inf``.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Union

from .extrat import (
    IDENTITY,
    NEG_INF,
    POS_INF,
    AffineMap,
    ExtRat,
    as_extrat,
    format_extrat,
    is_finite,
    parse_extrat,
)

BOTTOM = "bottom"
TOP = "top"
SIDES = (BOTTOM, TOP)

OPEN = "open"
BOUNDARY = "boundary"
ARCS = "arcs"

KEEP = "keep"
FLIP = "flip"

ZERO = Fraction(0)
ONE = Fraction(1)

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_~\-]*$")


class ModelError(ValueError):
    """Raised for malformed model text or references to missing objects."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# -- combinatorial data ------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    lo: ExtRat
    hi: ExtRat

    @property
    def end_type(self) -> str:
        """One of ``finite``, ``left`` (-inf, a), ``right`` (a, +inf), ``full``."""
        if is_finite(self.lo) and is_finite(self.hi):
            return "finite"
        if not is_finite(self.lo) and not is_finite(self.hi):
            return "full"
        return "left" if not is_finite(self.lo) else "right"

    def contains(self, x: ExtRat) -> bool:
        return self.lo < x < self.hi

    def __str__(self) -> str:
        return f"({format_extrat(self.lo)},{format_extrat(self.hi)})"


@dataclass(frozen=True)
class SideSpec:
    kind: str = OPEN
    arcs: tuple[Arc, ...] = ()


@dataclass(frozen=True)
class Strip:
    id: str
    bottom: SideSpec = SideSpec()
    top: SideSpec = SideSpec()

    def side(self, side: str) -> SideSpec:
        return self.bottom if side == BOTTOM else self.top


@dataclass(frozen=True, order=True)
class ArcRef:
    strip: str
    side: str
    index: int

    def __str__(self) -> str:
        return f"{self.strip}.{self.side}.{self.index}"

    @classmethod
    def parse(cls, text: str) -> ArcRef:
        parts = text.split(".")
        if len(parts) != 3 or parts[1] not in SIDES or not parts[2].isdigit():
            raise ModelError(f"malformed arc reference {text!r}")
        return cls(parts[0], parts[1], int(parts[2]))


@dataclass(frozen=True)
class Gluing:
    a: ArcRef
    b: ArcRef
    orientation: str = KEEP


@dataclass(frozen=True)
class StripModel:
    strips: tuple[Strip, ...]
    gluings: tuple[Gluing, ...] = ()

    @cached_property
    def _strip_index(self) -> dict[str, Strip]:
        return {s.id: s for s in self.strips}

    @cached_property
    def _arc_owner(self) -> dict[ArcRef, int]:
        owner: dict[ArcRef, int] = {}
        for gi, g in enumerate(self.gluings):
            owner.setdefault(g.a, gi)
            owner.setdefault(g.b, gi)
        return owner

    @property
    def strip_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.strips)

    def strip(self, sid: str) -> Strip:
        try:
            return self._strip_index[sid]
        except KeyError:
            raise ModelError(f"unknown strip {sid!r}") from None

    def side(self, sid: str, side: str) -> SideSpec:
        return self.strip(sid).side(side)

    def arc(self, ref: ArcRef) -> Arc:
        spec = self.side(ref.strip, ref.side)
        if not 0 <= ref.index < len(spec.arcs):
            raise ModelError(f"unknown arc {ref}")
        return spec.arcs[ref.index]

    def gluing(self, gi: int) -> Gluing:
        if not 0 <= gi < len(self.gluings):
            raise ModelError(f"unknown gluing g{gi}")
        return self.gluings[gi]

    def gluing_of(self, ref: ArcRef) -> int:
        try:
            return self._arc_owner[ref]
        except KeyError:
            raise ModelError(f"arc {ref} is not glued") from None

    def arc_refs(self) -> Iterator[ArcRef]:
        for s in self.strips:
            for side in SIDES:
                for i in range(len(s.side(side).arcs)):
                    yield ArcRef(s.id, side, i)

    def boundary_sides(self) -> list[tuple[str, str]]:
        return [(s.id, side) for s in self.strips for side in SIDES if s.side(side).kind == BOUNDARY]


# -- parsing and serialization ----------------------------------------------

_PAIR = re.compile(r"\(\s*([^(),\s]+)\s*,\s*([^(),\s]+)\s*\)")


def _check_ident(name: str, line: int) -> str:
    if not _IDENT.match(name):
        raise ModelError(f"invalid identifier {name!r}", line)
    return name


def _parse_arcs(text: str, line: int) -> tuple[Arc, ...]:
    arcs = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _PAIR.match(text, pos)
        if not m:
            raise ModelError(f"syntax error in arc list near {text[pos:]!r}", line)
        try:
            arcs.append(Arc(parse_extrat(m.group(1)), parse_extrat(m.group(2))))
        except ValueError as exc:
            raise ModelError(str(exc), line) from None
        pos = m.end()
    if not arcs:
        raise ModelError("'arcs' needs at least one interval", line)
    return tuple(arcs)


def parse_model(text: str) -> StripModel:
    """Parse the line-oriented model format.

    Only syntax and references are checked here (plus the same-side rule, which
    no later stage can repair); run :func:`validate_model` for the rest.
    """
    strip_order: list[str] = []
    sides: dict[tuple[str, str], SideSpec] = {}
    glue_lines: list[tuple[int, str, str, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "strip":
            parts = rest.split(None, 1)
            if not parts:
                raise ModelError("syntax error: 'strip' needs an identifier", lineno)
            sid = _check_ident(parts[0], lineno)
            if sid in strip_order:
                raise ModelError(f"duplicate strip {sid!r}", lineno)
            if len(parts) == 2:
                # Optional transversal interval; strips are normalized to (0,1).
                m = _PAIR.fullmatch(parts[1].strip())
                if not m:
                    raise ModelError("syntax error in strip transversal", lineno)
                try:
                    lo, hi = parse_extrat(m.group(1)), parse_extrat(m.group(2))
                except ValueError as exc:
                    raise ModelError(str(exc), lineno) from None
                if not (is_finite(lo) and is_finite(hi) and lo < hi):
                    raise ModelError("strip transversal must be a finite interval (a,b), a < b", lineno)
            strip_order.append(sid)
        elif keyword == "side":
            parts = rest.split(None, 2)
            if len(parts) < 3:
                raise ModelError("syntax error: expected 'side <id> <bottom|top> <spec>'", lineno)
            sid, side, spec = parts
            if sid not in strip_order:
                raise ModelError(f"unknown strip {sid!r}", lineno)
            if side not in SIDES:
                raise ModelError(f"syntax error: side must be bottom or top, got {side!r}", lineno)
            if (sid, side) in sides:
                raise ModelError(f"side {sid}.{side} declared twice", lineno)
            kind, _, arcs_text = spec.partition(" ")
            if kind in (OPEN, BOUNDARY):
                if arcs_text.strip():
                    raise ModelError(f"syntax error: trailing text after {kind!r}", lineno)
                sides[(sid, side)] = SideSpec(kind)
            elif kind == ARCS:
                sides[(sid, side)] = SideSpec(ARCS, _parse_arcs(arcs_text, lineno))
            else:
                raise ModelError(f"syntax error: unknown side kind {kind!r}", lineno)
        elif keyword == "glue":
            parts = rest.split()
            if len(parts) != 3:
                raise ModelError("syntax error: expected 'glue <arc> <arc> <keep|flip>'", lineno)
            if parts[2] not in (KEEP, FLIP):
                raise ModelError(f"syntax error: orientation must be keep or flip, got {parts[2]!r}", lineno)
            glue_lines.append((lineno, parts[0], parts[1], parts[2]))
        else:
            raise ModelError(f"syntax error: unknown keyword {keyword!r}", lineno)

    strips = tuple(
        Strip(sid, sides.get((sid, BOTTOM), SideSpec()), sides.get((sid, TOP), SideSpec()))
        for sid in strip_order
    )
    model = StripModel(strips)
    gluings = []
    for lineno, ta, tb, orient in glue_lines:
        try:
            a, b = ArcRef.parse(ta), ArcRef.parse(tb)
            model.arc(a)
            model.arc(b)
        except ModelError as exc:
            raise ModelError(exc.message, lineno) from None
        if (a.strip, a.side) == (b.strip, b.side):
            raise ModelError("same-side gluing", lineno)
        gluings.append(Gluing(a, b, orient))
    return StripModel(strips, tuple(gluings))


def _format_side(spec: SideSpec) -> str:
    if spec.kind == ARCS:
        return "arcs " + " ".join(str(a) for a in spec.arcs)
    return spec.kind


def format_model(m: StripModel) -> str:
    """Canonical text form; ``parse_model(format_model(m)) == m``."""
    lines = [f"strip {s.id}" for s in m.strips]
    for s in m.strips:
        for side in SIDES:
            lines.append(f"side {s.id} {side} {_format_side(s.side(side))}")
    for g in m.gluings:
        lines.append(f"glue {g.a} {g.b} {g.orientation}")
    return "\n".join(lines) + "\n"


def model_to_dict(m: StripModel) -> dict:
    def side_dict(spec: SideSpec) -> dict:
        d: dict = {"kind": spec.kind}
        if spec.kind == ARCS:
            d["arcs"] = [[format_extrat(a.lo), format_extrat(a.hi)] for a in spec.arcs]
        return d

    return {
        "strips": [{"id": s.id, "bottom": side_dict(s.bottom), "top": side_dict(s.top)} for s in m.strips],
        "gluings": [{"a": str(g.a), "b": str(g.b), "orientation": g.orientation} for g in m.gluings],
    }


def model_from_dict(d: dict) -> StripModel:
    def side_spec(sd: dict) -> SideSpec:
        arcs = tuple(Arc(as_extrat(lo), as_extrat(hi)) for lo, hi in sd.get("arcs", ()))
        return SideSpec(sd["kind"], arcs)

    try:
        strips = tuple(Strip(s["id"], side_spec(s["bottom"]), side_spec(s["top"])) for s in d["strips"])
        gluings = tuple(
            Gluing(ArcRef.parse(g["a"]), ArcRef.parse(g["b"]), g["orientation"]) for g in d.get("gluings", ())
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed model document: {exc}") from None
    return StripModel(strips, gluings)


# -- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __contains__(self, needle: str) -> bool:
        return any(needle in issue for issue in self.issues)

    def __str__(self) -> str:
        return "\n".join(self.issues) if self.issues else "ok"


_COMPATIBLE = {
    ("finite", "finite"): (KEEP, FLIP),
    ("left", "left"): (KEEP,),
    ("right", "right"): (KEEP,),
    ("left", "right"): (FLIP,),
    ("right", "left"): (FLIP,),
    ("full", "full"): (KEEP, FLIP),
}


def validate_model(m: StripModel) -> ValidationReport:
    """Collect every violated structural invariant of ``m``."""
    report = ValidationReport()
    issues = report.issues
    seen: set[str] = set()
    for s in m.strips:
        if not _IDENT.match(s.id):
            issues.append(f"invalid strip identifier {s.id!r}")
        if s.id in seen:
            issues.append(f"duplicate strip {s.id!r}")
        seen.add(s.id)
        for side in SIDES:
            spec = s.side(side)
            where = f"{s.id}.{side}"
            if spec.kind not in (OPEN, BOUNDARY, ARCS):
                issues.append(f"unknown side kind {spec.kind!r} on {where}")
                continue
            if spec.kind == BOUNDARY and spec.arcs:
                issues.append(f"boundary side with arcs on {where}")
            if spec.kind == OPEN and spec.arcs:
                issues.append(f"open side with arcs on {where}")
            if spec.kind == ARCS and not spec.arcs:
                issues.append(f"arcs side without arcs on {where}")
            for i, arc in enumerate(spec.arcs):
                if not arc.lo < arc.hi:
                    issues.append(f"empty arc {arc} at {where}.{i}")
            for i in range(len(spec.arcs) - 1):
                left, right = spec.arcs[i], spec.arcs[i + 1]
                if right.lo < left.lo:
                    issues.append(f"unsorted arcs at {where}.{i} and {where}.{i + 1}")
                if right.lo < left.hi and left.lo < right.hi:
                    issues.append(f"overlapping arcs {left} and {right} on {where}")

    use: dict[ArcRef, int] = {}
    for gi, g in enumerate(m.gluings):
        arcs = []
        for ref in (g.a, g.b):
            if ref.strip not in seen:
                issues.append(f"gluing g{gi} refers to unknown strip {ref.strip!r}")
                continue
            spec = m.side(ref.strip, ref.side) if ref.side in SIDES else None
            if spec is None or not 0 <= ref.index < len(spec.arcs):
                issues.append(f"gluing g{gi} refers to unknown arc {ref}")
                continue
            use[ref] = use.get(ref, 0) + 1
            arcs.append(spec.arcs[ref.index])
        if g.orientation not in (KEEP, FLIP):
            issues.append(f"gluing g{gi} has unknown orientation {g.orientation!r}")
        if (g.a.strip, g.a.side) == (g.b.strip, g.b.side):
            issues.append(f"same-side gluing g{gi} ({g.a}, {g.b})")
        if len(arcs) == 2:
            allowed = _COMPATIBLE.get((arcs[0].end_type, arcs[1].end_type), ())
            if g.orientation not in allowed:
                issues.append(
                    f"incompatible endpoint types in g{gi}: {arcs[0]} and {arcs[1]} under {g.orientation}"
                )
    for ref in m.arc_refs():
        n = use.get(ref, 0)
        if n == 0:
            issues.append(f"unmatched arc {ref}")
        elif n > 1:
            issues.append(f"arc {ref} glued {n} times")
    return report


def require_valid(m: StripModel) -> None:
    report = validate_model(m)
    if not report.ok:
        raise ModelError("invalid model: " + "; ".join(report.issues))


# -- gluing geometry -------------------------------------------------------------


def affine_gluing_map(m: StripModel, g: Gluing | int) -> AffineMap:
    """Affine identification from arc ``a`` coordinates to arc ``b`` coordinates."""
    if isinstance(g, int):
        g = m.gluing(g)
    A, B = m.arc(g.a), m.arc(g.b)
    kinds = (A.end_type, B.end_type)
    if g.orientation not in _COMPATIBLE.get(kinds, ()):
        raise ModelError(f"incompatible endpoint types {A} and {B} under {g.orientation}")
    if kinds == ("finite", "finite"):
        ratio = (B.hi - B.lo) / (A.hi - A.lo)
        if g.orientation == KEEP:
            return AffineMap(ratio, B.lo - A.lo * ratio)
        return AffineMap(-ratio, B.hi + A.lo * ratio)
    if kinds == ("full", "full"):
        return IDENTITY if g.orientation == KEEP else AffineMap(-ONE, ZERO)
    if kinds == ("left", "left"):
        return AffineMap(ONE, B.hi - A.hi)
    if kinds == ("right", "right"):
        return AffineMap(ONE, B.lo - A.lo)
    if kinds == ("left", "right"):
        return AffineMap(-ONE, A.hi + B.lo)
    return AffineMap(-ONE, A.lo + B.hi)


def height_at(side: str, depth: Fraction) -> Fraction:
    """Height of the leaf at distance ``depth`` from the given strip side."""
    return depth if side == BOTTOM else 1 - depth


def depth_of(side: str, y: Fraction) -> Fraction:
    return y if side == BOTTOM else 1 - y


def default_collar(m: StripModel) -> Fraction:
    """Half the minimum of 1 and every positive gap between finite endpoints on a side."""
    smallest = ONE
    for s in m.strips:
        for side in SIDES:
            pts = sorted({p for a in s.side(side).arcs for p in (a.lo, a.hi) if is_finite(p)})
            for left, right in zip(pts, pts[1:]):
                smallest = min(smallest, right - left)
    return smallest / 2


# -- leaves and points -------------------------------------------------------------


@dataclass(frozen=True)
class Interior:
    strip: str
    y: Fraction

    def __str__(self) -> str:
        return f"Interior({self.strip}, {format_extrat(self.y)})"


@dataclass(frozen=True)
class ArcLeaf:
    gluing: int

    def __str__(self) -> str:
        return f"ArcLeaf(g{self.gluing})"


@dataclass(frozen=True)
class BoundaryLeaf:
    strip: str
    side: str

    def __str__(self) -> str:
        return f"BoundaryLeaf({self.strip}, {self.side})"


LeafDescriptor = Union[Interior, ArcLeaf, BoundaryLeaf]


@dataclass(frozen=True)
class InStrip:
    strip: str
    x: Fraction
    y: Fraction


@dataclass(frozen=True)
class OnArc:
    gluing: int
    x: Fraction


@dataclass(frozen=True)
class OnBoundary:
    strip: str
    side: str
    x: Fraction


ModelPoint = Union[InStrip, OnArc, OnBoundary]


def leaf_to_str(leaf: LeafDescriptor) -> str:
    return str(leaf)


def leaf_to_dict(leaf: LeafDescriptor) -> dict:
    if isinstance(leaf, Interior):
        return {"kind": "interior", "strip": leaf.strip, "y": format_extrat(leaf.y)}
    if isinstance(leaf, ArcLeaf):
        return {"kind": "arc", "gluing": leaf.gluing}
    return {"kind": "boundary", "strip": leaf.strip, "side": leaf.side}


def leaf_from_dict(d: dict) -> LeafDescriptor:
    kind = d["kind"]
    if kind == "interior":
        return Interior(d["strip"], Fraction(d["y"]))
    if kind == "arc":
        return ArcLeaf(int(d["gluing"]))
    if kind == "boundary":
        return BoundaryLeaf(d["strip"], d["side"])
    raise ModelError(f"unknown leaf kind {kind!r}")


def check_leaf(m: StripModel, leaf: LeafDescriptor) -> None:
    if isinstance(leaf, Interior):
        m.strip(leaf.strip)
        if not 0 < leaf.y < 1:
            raise ModelError(f"interior height {leaf.y} outside (0,1)")
    elif isinstance(leaf, ArcLeaf):
        m.gluing(leaf.gluing)
    elif isinstance(leaf, BoundaryLeaf):
        if m.side(leaf.strip, leaf.side).kind != BOUNDARY:
            raise ModelError(f"{leaf.strip}.{leaf.side} is not a boundary side")
    else:
        raise TypeError(f"not a leaf descriptor: {leaf!r}")


def check_point(m: StripModel, pt: ModelPoint) -> None:
    if isinstance(pt, InStrip):
        m.strip(pt.strip)
        if not 0 < pt.y < 1:
            raise ModelError(f"height {pt.y} outside (0,1)")
    elif isinstance(pt, OnArc):
        g = m.gluing(pt.gluing)
        if not m.arc(g.a).contains(pt.x):
            raise ModelError(f"coordinate {pt.x} outside arc {m.arc(g.a)}")
    elif isinstance(pt, OnBoundary):
        if m.side(pt.strip, pt.side).kind != BOUNDARY:
            raise ModelError(f"{pt.strip}.{pt.side} is not a boundary side")
    else:
        raise TypeError(f"not a model point: {pt!r}")


def leaf_of(m: StripModel, pt: ModelPoint) -> LeafDescriptor:
    check_point(m, pt)
    if isinstance(pt, InStrip):
        return Interior(pt.strip, pt.y)
    if isinstance(pt, OnArc):
        return ArcLeaf(pt.gluing)
    return BoundaryLeaf(pt.strip, pt.side)


def leaf_domain(m: StripModel, leaf: LeafDescriptor) -> tuple[ExtRat, ExtRat]:
    """Parameter interval of the canonical parametrization of ``leaf``."""
    if isinstance(leaf, ArcLeaf):
        arc = m.arc(m.gluing(leaf.gluing).a)
        return arc.lo, arc.hi
    return NEG_INF, POS_INF


def leaf_coordinate(pt: ModelPoint) -> Fraction:
    return pt.x


def point_on_leaf(leaf: LeafDescriptor, x: Fraction) -> ModelPoint:
    if isinstance(leaf, Interior):
        return InStrip(leaf.strip, x, leaf.y)
    if isinstance(leaf, ArcLeaf):
        return OnArc(leaf.gluing, x)
    return OnBoundary(leaf.strip, leaf.side, x)


def proper_parameter(lo: ExtRat, hi: ExtRat, x: Fraction) -> Fraction:
    """Increasing proper map ``(lo, hi) -> R``; escapes to +-inf at the ends."""
    value = Fraction(x)
    if is_finite(hi):
        value += 1 / (hi - x)
    if is_finite(lo):
        value -= 1 / (x - lo)
    if is_finite(lo) and is_finite(hi):
        value -= x
    return value


# -- saturations -----------------------------------------------------------------


@dataclass(frozen=True)
class Rect:
    """Open rectangle ``(x_lo, x_hi) x (y_lo, y_hi)`` inside one strip."""

    strip: str
    x_lo: Fraction
    x_hi: Fraction
    y_lo: Fraction
    y_hi: Fraction


@dataclass(frozen=True)
class ArcNbhd:
    """Sub-arc ``(x_lo, x_hi)`` of a glued arc (arc ``a`` coordinates) with collars on both sides."""

    gluing: int
    x_lo: ExtRat
    x_hi: ExtRat
    eps_a: Fraction
    eps_b: Fraction


@dataclass(frozen=True)
class BoundaryNbhd:
    """Half-disc ``(x_lo, x_hi) x [0, eps)`` at a boundary side."""

    strip: str
    side: str
    x_lo: Fraction
    x_hi: Fraction
    eps: Fraction


Box = Union[Rect, ArcNbhd, BoundaryNbhd]

Interval = tuple[Fraction, Fraction]


def _merge(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    out: list[list[Fraction]] = []
    for lo, hi in sorted(intervals):
        if lo >= hi:
            continue
        if out and lo < out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class SaturatedSet:
    """Saturated subset of X: open height intervals per strip plus whole arc and boundary leaves."""

    heights: tuple[tuple[str, tuple[Interval, ...]], ...] = ()
    arcs: frozenset[int] = frozenset()
    boundaries: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def build(cls, heights=None, arcs=(), boundaries=()) -> SaturatedSet:
        pieces: dict[str, list[Interval]] = {}
        for sid, ivs in (heights or {}).items():
            pieces.setdefault(sid, []).extend(ivs)
        norm = tuple(
            (sid, merged) for sid in sorted(pieces) if (merged := _merge(pieces[sid]))
        )
        return cls(norm, frozenset(arcs), frozenset(boundaries))

    def intervals(self, sid: str) -> tuple[Interval, ...]:
        for s, ivs in self.heights:
            if s == sid:
                return ivs
        return ()

    def union(self, other: SaturatedSet) -> SaturatedSet:
        heights: dict[str, list[Interval]] = {}
        for s, ivs in self.heights + other.heights:
            heights.setdefault(s, []).extend(ivs)
        return SaturatedSet.build(heights, self.arcs | other.arcs, self.boundaries | other.boundaries)

    def is_empty(self) -> bool:
        return not (self.heights or self.arcs or self.boundaries)

    def intersects(self, other: SaturatedSet) -> bool:
        if self.arcs & other.arcs or self.boundaries & other.boundaries:
            return True
        for sid, ivs in self.heights:
            for lo, hi in ivs:
                for olo, ohi in other.intervals(sid):
                    if max(lo, olo) < min(hi, ohi):
                        return True
        return False

    def has_height(self, sid: str, y: Fraction) -> bool:
        return any(lo < y < hi for lo, hi in self.intervals(sid))

    def contains_leaf(self, leaf: LeafDescriptor) -> bool:
        if isinstance(leaf, Interior):
            return self.has_height(leaf.strip, leaf.y)
        if isinstance(leaf, ArcLeaf):
            return leaf.gluing in self.arcs
        return (leaf.strip, leaf.side) in self.boundaries

    def contains_point(self, m: StripModel, pt: ModelPoint) -> bool:
        return self.contains_leaf(leaf_of(m, pt))

    def issubset(self, other: SaturatedSet) -> bool:
        if not (self.arcs <= other.arcs and self.boundaries <= other.boundaries):
            return False
        for sid, ivs in self.heights:
            for lo, hi in ivs:
                if not any(olo <= lo and hi <= ohi for olo, ohi in other.intervals(sid)):
                    return False
        return True

    def collar_depth(self, sid: str, side: str) -> Fraction:
        """Largest ``e`` such that the collar of depth ``e`` at the side lies in the set (0 if none)."""
        for lo, hi in self.intervals(sid):
            if side == TOP and hi == 1:
                return 1 - lo
            if side == BOTTOM and lo == 0:
                return hi
        return ZERO

    def to_dict(self) -> dict:
        return {
            "heights": {s: [[format_extrat(lo), format_extrat(hi)] for lo, hi in ivs] for s, ivs in self.heights},
            "arcs": sorted(self.arcs),
            "boundaries": [list(b) for b in sorted(self.boundaries)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> SaturatedSet:
        heights = {s: [(Fraction(lo), Fraction(hi)) for lo, hi in ivs] for s, ivs in d["heights"].items()}
        return cls.build(heights, d["arcs"], [tuple(b) for b in d["boundaries"]])


def collar_interval(side: str, depth: Fraction) -> Interval:
    depth = min(depth, ONE)
    return (ZERO, depth) if side == BOTTOM else (1 - depth, ONE)


def check_box(m: StripModel, box: Box) -> None:
    if isinstance(box, Rect):
        m.strip(box.strip)
        if not (box.x_lo < box.x_hi and 0 <= box.y_lo < box.y_hi <= 1):
            raise ModelError(f"degenerate box {box}")
    elif isinstance(box, ArcNbhd):
        arc = m.arc(m.gluing(box.gluing).a)
        if not (arc.lo <= box.x_lo < box.x_hi <= arc.hi):
            raise ModelError(f"degenerate box {box}: sub-arc outside {arc}")
        if not (0 < box.eps_a <= 1 and 0 < box.eps_b <= 1):
            raise ModelError(f"degenerate box {box}: collars must lie in (0,1]")
    elif isinstance(box, BoundaryNbhd):
        if m.side(box.strip, box.side).kind != BOUNDARY:
            raise ModelError(f"{box.strip}.{box.side} is not a boundary side")
        if not (box.x_lo < box.x_hi and 0 < box.eps <= 1):
            raise ModelError(f"degenerate box {box}")
    else:
        raise TypeError(f"not a basic open set: {box!r}")


def saturate_basic(m: StripModel, box: Box) -> SaturatedSet:
    """Union of all leaves meeting the basic open set ``box``."""
    check_box(m, box)
    if isinstance(box, Rect):
        return SaturatedSet.build({box.strip: [(box.y_lo, box.y_hi)]})
    if isinstance(box, ArcNbhd):
        g = m.gluing(box.gluing)
        heights: dict[str, list[Interval]] = {}
        heights.setdefault(g.a.strip, []).append(collar_interval(g.a.side, box.eps_a))
        heights.setdefault(g.b.strip, []).append(collar_interval(g.b.side, box.eps_b))
        return SaturatedSet.build(heights, arcs=[box.gluing])
    return SaturatedSet.build(
        {box.strip: [collar_interval(box.side, box.eps)]}, boundaries=[(box.strip, box.side)]
    )


def saturate(m: StripModel, boxes: Iterable[Box]) -> SaturatedSet:
    out = SaturatedSet()
    for box in boxes:
        out = out.union(saturate_basic(m, box))
    return out


def box_contains(m: StripModel, box: Box, pt: ModelPoint) -> bool:
    if isinstance(box, Rect):
        return isinstance(pt, InStrip) and pt.strip == box.strip and box.x_lo < pt.x < box.x_hi and box.y_lo < pt.y < box.y_hi
    if isinstance(box, ArcNbhd):
        g = m.gluing(box.gluing)
        if isinstance(pt, OnArc):
            return pt.gluing == box.gluing and box.x_lo < pt.x < box.x_hi
        if not isinstance(pt, InStrip):
            return False
        phi = affine_gluing_map(m, g)
        for ref, eps, to_a in ((g.a, box.eps_a, IDENTITY), (g.b, box.eps_b, phi.inverse())):
            if pt.strip == ref.strip and 0 < depth_of(ref.side, pt.y) < eps:
                if box.x_lo < to_a(pt.x) < box.x_hi:
                    return True
        return False
    if isinstance(pt, OnBoundary):
        return (pt.strip, pt.side) == (box.strip, box.side) and box.x_lo < pt.x < box.x_hi
    return (
        isinstance(pt, InStrip)
        and pt.strip == box.strip
        and 0 < depth_of(box.side, pt.y) < box.eps
        and box.x_lo < pt.x < box.x_hi
    )


def _sub_interval(lo: ExtRat, hi: ExtRat, x: Fraction) -> Interval:
    r = ONE
    if is_finite(lo):
        r = min(r, (x - lo) / 2)
    if is_finite(hi):
        r = min(r, (hi - x) / 2)
    return x - r, x + r


def neighborhood_within(m: StripModel, pt: ModelPoint, sat: SaturatedSet) -> Box | None:
    """A basic open set around ``pt`` whose saturation lies in ``sat``, or None if there is none."""
    if isinstance(pt, InStrip):
        for lo, hi in sat.intervals(pt.strip):
            if lo < pt.y < hi:
                d = min(pt.y - lo, hi - pt.y) / 2
                return Rect(pt.strip, pt.x - 1, pt.x + 1, pt.y - d, pt.y + d)
        return None
    if isinstance(pt, OnArc):
        if pt.gluing not in sat.arcs:
            return None
        g = m.gluing(pt.gluing)
        ea, eb = sat.collar_depth(g.a.strip, g.a.side), sat.collar_depth(g.b.strip, g.b.side)
        if ea <= 0 or eb <= 0:
            return None
        arc = m.arc(g.a)
        lo, hi = _sub_interval(arc.lo, arc.hi, pt.x)
        return ArcNbhd(pt.gluing, lo, hi, ea / 2, eb / 2)
    if (pt.strip, pt.side) not in sat.boundaries:
        return None
    e = sat.collar_depth(pt.strip, pt.side)
    if e <= 0:
        return None
    return BoundaryNbhd(pt.strip, pt.side, pt.x - 1, pt.x + 1, e / 2)


def open_witness(m: StripModel, pt: ModelPoint, sat: SaturatedSet) -> bool:
    """True iff some basic neighborhood of ``pt`` is contained in ``sat``."""
    box = neighborhood_within(m, pt, sat)
    return box is not None and box_contains(m, box, pt) and saturate_basic(m, box).issubset(sat)


def sample_points(m: StripModel, sat: SaturatedSet, n: int, rng: random.Random) -> list[ModelPoint]:
    """Points of ``sat``, concentrated near the ends of its height intervals."""
    pieces: list = [("h", sid, iv) for sid, ivs in sat.heights for iv in ivs]
    pieces += [("a", gi) for gi in sorted(sat.arcs)]
    pieces += [("b", b) for b in sorted(sat.boundaries)]
    if not pieces:
        return []
    out: list[ModelPoint] = []
    for k in range(n):
        piece = pieces[k % len(pieces)]
        x = Fraction(rng.randint(-1000, 1000), rng.randint(1, 16))
        if piece[0] == "h":
            _, sid, (lo, hi) = piece
            j = rng.randint(1, 30)
            frac = Fraction(1, 2**j)
            y = lo + (hi - lo) * (frac if rng.random() < 0.5 else 1 - frac)
            if rng.random() < 0.2:
                y = lo + (hi - lo) * Fraction(rng.randint(1, 99), 100)
            out.append(InStrip(sid, x, y))
        elif piece[0] == "a":
            arc = m.arc(m.gluing(piece[1]).a)
            if arc.contains(x):
                out.append(OnArc(piece[1], x))
            else:
                lo = arc.lo if is_finite(arc.lo) else arc.hi - 2
                hi = arc.hi if is_finite(arc.hi) else lo + 2
                out.append(OnArc(piece[1], lo + (hi - lo) * Fraction(rng.randint(1, 99), 100)))
        else:
            sid, side = piece[1]
            out.append(OnBoundary(sid, side, x))
    return out


def random_box(m: StripModel, rng: random.Random) -> Box:
    """A random basic open set of ``m``."""
    kinds = ["rect"]
    if m.gluings:
        kinds.append("arc")
    if m.boundary_sides():
        kinds.append("boundary")
    kind = rng.choice(kinds)
    x = Fraction(rng.randint(-50, 50), rng.randint(1, 4))
    w = Fraction(rng.randint(1, 20), rng.randint(1, 4))
    if kind == "rect":
        sid = rng.choice(m.strip_ids)
        a, b = sorted(rng.sample(range(0, 65), 2))
        return Rect(sid, x, x + w, Fraction(a, 64), Fraction(b, 64))
    if kind == "arc":
        gi = rng.randrange(len(m.gluings))
        arc = m.arc(m.gluings[gi].a)
        lo = arc.lo if is_finite(arc.lo) else (arc.hi - 10 if is_finite(arc.hi) else x)
        hi = arc.hi if is_finite(arc.hi) else lo + 10
        p, q = sorted(rng.sample(range(0, 33), 2))
        return ArcNbhd(
            gi,
            lo + (hi - lo) * Fraction(p, 32),
            lo + (hi - lo) * Fraction(q, 32),
            Fraction(rng.randint(1, 64), 64),
            Fraction(rng.randint(1, 64), 64),
        )
    sid, side = rng.choice(m.boundary_sides())
    return BoundaryNbhd(sid, side, x, x + w, Fraction(rng.randint(1, 64), 64))


def basic_neighborhood(m: StripModel, leaf: LeafDescriptor, eps: Fraction) -> Box:
    """A basic open set meeting ``leaf`` whose collars have depth ``eps``."""
    check_leaf(m, leaf)
    if isinstance(leaf, Interior):
        return Rect(leaf.strip, Fraction(-1), ONE, max(ZERO, leaf.y - eps), min(ONE, leaf.y + eps))
    if isinstance(leaf, ArcLeaf):
        arc = m.arc(m.gluing(leaf.gluing).a)
        x0 = base_point(arc)
        lo, hi = _sub_interval(arc.lo, arc.hi, x0)
        return ArcNbhd(leaf.gluing, lo, hi, eps, eps)
    return BoundaryNbhd(leaf.strip, leaf.side, Fraction(-1), ONE, eps)


def base_point(arc: Arc) -> Fraction:
    """Canonical interior point of an arc: midpoint, one unit inside a half-line, or 0."""
    kind = arc.end_type
    if kind == "finite":
        return (arc.lo + arc.hi) / 2
    if kind == "left":
        return arc.hi - 1
    if kind == "right":
        return arc.lo + 1
    return ZERO


# -- proper embedding ------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    holds: bool
    evidence: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.holds


def is_properly_embedded(m: StripModel, leaf: LeafDescriptor) -> Certificate:
    """Check that the canonical parametrization of ``leaf`` is an embedding with closed image."""
    check_leaf(m, leaf)
    if isinstance(leaf, Interior):
        return Certificate(True, (f"{leaf} is the line R x {{{format_extrat(leaf.y)}}} of strip {leaf.strip}",
                                  "closed: its complement is saturated by open height intervals"))
    if isinstance(leaf, BoundaryLeaf):
        return Certificate(True, (f"{leaf} is the whole boundary line of {leaf.strip}.{leaf.side}",))
    g = m.gluing(leaf.gluing)
    evidence = [f"x -> OnArc(g{leaf.gluing}, x) embeds the open arc {m.arc(g.a)}"]
    holds = True
    for ref in (g.a, g.b):
        spec = m.side(ref.strip, ref.side)
        arc = spec.arcs[ref.index]
        for end in (arc.lo, arc.hi):
            if not is_finite(end):
                evidence.append(f"{ref}: end {format_extrat(end)} escapes every compact set")
                continue
            if spec.kind != ARCS or any(other.contains(end) for other in spec.arcs):
                holds = False
                evidence.append(f"{ref}: endpoint {format_extrat(end)} is a point of X")
            else:
                evidence.append(f"{ref}: endpoint {format_extrat(end)} lies off every arc, so it is removed from X")
    return Certificate(holds, tuple(evidence))


def all_leaf_classes(m: StripModel) -> list[LeafDescriptor]:
    """One representative of each leaf class: a middle interior leaf per strip, each arc and boundary leaf."""
    leaves: list[LeafDescriptor] = [Interior(s.id, Fraction(1, 2)) for s in m.strips]
    leaves += [ArcLeaf(gi) for gi in range(len(m.gluings))]
    leaves += [BoundaryLeaf(sid, side) for sid, side in m.boundary_sides()]
    return leaves


# -- doubling --------------------------------------------------------------------

COPY_SUFFIX = ("~1", "~2")


@dataclass(frozen=True)
class Involution:
    """Copy-swapping involution of a doubled model.

    ``strip_pairs`` lists (copy 1, copy 2) strip ids, ``gluing_map[g]`` is the
    image gluing of ``g``; mirror gluings (former boundary sides) are fixed.
    The reflection on a transversal through a mirror arc is ``u -> -u``.
    """

    strip_pairs: tuple[tuple[str, str], ...]
    gluing_map: tuple[int, ...]

    @cached_property
    def _strip_map(self) -> dict[str, str]:
        out = {}
        for a, b in self.strip_pairs:
            out[a], out[b] = b, a
        return out

    def strip(self, sid: str) -> str:
        return self._strip_map[sid]

    def gluing(self, gi: int) -> int:
        return self.gluing_map[gi]

    @property
    def mirror_gluings(self) -> tuple[int, ...]:
        return tuple(g for g, h in enumerate(self.gluing_map) if g == h)

    def point(self, pt: ModelPoint) -> ModelPoint:
        if isinstance(pt, InStrip):
            return InStrip(self.strip(pt.strip), pt.x, pt.y)
        if isinstance(pt, OnArc):
            return OnArc(self.gluing(pt.gluing), pt.x)
        return OnBoundary(self.strip(pt.strip), pt.side, pt.x)

    def leaf(self, leaf: LeafDescriptor) -> LeafDescriptor:
        if isinstance(leaf, Interior):
            return Interior(self.strip(leaf.strip), leaf.y)
        if isinstance(leaf, ArcLeaf):
            return ArcLeaf(self.gluing(leaf.gluing))
        return BoundaryLeaf(self.strip(leaf.strip), leaf.side)

    @staticmethod
    def reflect(u: Fraction) -> Fraction:
        return -u


def double_model(m: StripModel) -> tuple[StripModel, Involution]:
    """Two copies of ``m`` glued by the identity along every boundary side."""
    require_valid(m)
    ids = set(m.strip_ids)
    for sid in ids:
        for suffix in COPY_SUFFIX:
            if sid + suffix in ids:
                raise ModelError(f"cannot double: strip id {sid + suffix!r} already in use")

    full = SideSpec(ARCS, (Arc(NEG_INF, POS_INF),))

    def copy_side(spec: SideSpec) -> SideSpec:
        return full if spec.kind == BOUNDARY else spec

    strips = tuple(
        Strip(s.id + suffix, copy_side(s.bottom), copy_side(s.top)) for suffix in COPY_SUFFIX for s in m.strips
    )

    def rename(ref: ArcRef, suffix: str) -> ArcRef:
        return ArcRef(ref.strip + suffix, ref.side, ref.index)

    gluings = [
        Gluing(rename(g.a, suffix), rename(g.b, suffix), g.orientation) for suffix in COPY_SUFFIX for g in m.gluings
    ]
    n = len(m.gluings)
    gluing_map = [gi + n for gi in range(n)] + [gi for gi in range(n)]
    for sid, side in m.boundary_sides():
        gluing_map.append(len(gluings))
        gluings.append(Gluing(ArcRef(sid + "~1", side, 0), ArcRef(sid + "~2", side, 0), KEEP))
    doubled = StripModel(strips, tuple(gluings))
    inv = Involution(tuple((s.id + "~1", s.id + "~2") for s in m.strips), tuple(gluing_map))
    return doubled, inv


def half_of_double(d: StripModel, inv: Involution) -> StripModel:
    """Forget copy labels: copy 1 of ``d`` with the mirror gluings turned back into boundary sides."""
    mirror_sides = {(d.gluings[g].a.strip, d.gluings[g].a.side) for g in inv.mirror_gluings}
    first = {a for a, _ in inv.strip_pairs}

    def strip_label(sid: str) -> str:
        return sid[: -len(COPY_SUFFIX[0])]

    strips = []
    for s in d.strips:
        if s.id not in first:
            continue
        sides = {side: (SideSpec(BOUNDARY) if (s.id, side) in mirror_sides else s.side(side)) for side in SIDES}
        strips.append(Strip(strip_label(s.id), sides[BOTTOM], sides[TOP]))
    gluings = []
    for gi, g in enumerate(d.gluings):
        if inv.gluing(gi) == gi or g.a.strip not in first:
            continue
        gluings.append(
            Gluing(
                ArcRef(strip_label(g.a.strip), g.a.side, g.a.index),
                ArcRef(strip_label(g.b.strip), g.b.side, g.b.index),
                g.orientation,
            )
        )
    return StripModel(tuple(strips), tuple(gluings))


def relabel(m: StripModel, mapping: dict[str, str]) -> StripModel:
    """Rename strips."""
    strips = tuple(replace(s, id=mapping.get(s.id, s.id)) for s in m.strips)

    def ref(r: ArcRef) -> ArcRef:
        return ArcRef(mapping.get(r.strip, r.strip), r.side, r.index)

    return StripModel(strips, tuple(Gluing(ref(g.a), ref(g.b), g.orientation) for g in m.gluings))
