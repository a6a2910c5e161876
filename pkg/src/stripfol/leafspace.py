"""The leaf space Y = X/P of a striped model as a finite non-Hausdorff 1-manifold.

Y has one open edge ``(0,1)`` per strip (an interior leaf maps to its height)
and one vertex per arc leaf and per boundary leaf.  A vertex sits at the ends
of the edges whose sides carry it.  Two vertices are non-separated exactly when
they sit at a common edge end: every neighborhood of either contains the
interior leaves near that side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .extrat import format_extrat
from .model import (
    SIDES,
    ArcLeaf,
    BoundaryLeaf,
    Interior,
    LeafDescriptor,
    ModelError,
    SaturatedSet,
    StripModel,
    basic_neighborhood,
    default_collar,
    is_properly_embedded,
    leaf_from_dict,
    leaf_to_dict,
    require_valid,
    saturate_basic,
)

End = tuple[str, str]


@dataclass(frozen=True)
class Vertex:
    id: str
    leaf: LeafDescriptor
    ends: tuple[End, ...]

    @property
    def is_boundary(self) -> bool:
        return isinstance(self.leaf, BoundaryLeaf)


@dataclass(frozen=True)
class EdgePoint:
    strip: str
    y: Fraction


YPoint = Union[str, EdgePoint]


def vertex_id(leaf: LeafDescriptor) -> str:
    if isinstance(leaf, ArcLeaf):
        return f"g{leaf.gluing}"
    if isinstance(leaf, BoundaryLeaf):
        return f"{leaf.strip}.{leaf.side}"
    raise ValueError(f"{leaf} is not a vertex leaf")


@dataclass(frozen=True)
class LeafSpaceGraph:
    edges: tuple[str, ...]
    vertices: tuple[Vertex, ...]
    attachments: tuple[tuple[End, tuple[str, ...]], ...]
    nonseparated: frozenset[frozenset[str]] = field(default_factory=frozenset)

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(f"unknown vertex {vid!r}")

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices)

    def attached(self, end: End) -> tuple[str, ...]:
        for e, vids in self.attachments:
            if e == end:
                return vids
        return ()

    def are_nonseparated(self, v: str, w: str) -> bool:
        return frozenset((v, w)) in self.nonseparated

    def pairs(self) -> list[tuple[str, str]]:
        order = {vid: i for i, vid in enumerate(self.vertex_ids)}
        return sorted((tuple(sorted(p, key=order.__getitem__)) for p in self.nonseparated), key=lambda p: (order[p[0]], order[p[1]]))

    def project(self, leaf: LeafDescriptor) -> YPoint:
        """The quotient projection on leaves."""
        if isinstance(leaf, Interior):
            return EdgePoint(leaf.strip, leaf.y)
        return vertex_id(leaf)


def build_leaf_space(m: StripModel) -> LeafSpaceGraph:
    require_valid(m)
    vertices: list[Vertex] = []
    positions: dict[End, list[tuple[object, str]]] = {(s.id, side): [] for s in m.strips for side in SIDES}
    for gi, g in enumerate(m.gluings):
        vid = f"g{gi}"
        vertices.append(Vertex(vid, ArcLeaf(gi), ((g.a.strip, g.a.side), (g.b.strip, g.b.side))))
        for ref in (g.a, g.b):
            positions[(ref.strip, ref.side)].append((ref.index, vid))
    for sid, side in m.boundary_sides():
        vid = f"{sid}.{side}"
        vertices.append(Vertex(vid, BoundaryLeaf(sid, side), ((sid, side),)))
        positions[(sid, side)].append((0, vid))
    attachments = tuple((end, tuple(v for _, v in sorted(items))) for end, items in positions.items())
    nonsep = set()
    for _, vids in attachments:
        for i, v in enumerate(vids):
            for w in vids[i + 1 :]:
                if v != w:
                    nonsep.add(frozenset((v, w)))
    return LeafSpaceGraph(m.strip_ids, tuple(vertices), attachments, frozenset(nonsep))


def hausdorff_closure(gY: LeafSpaceGraph, u: YPoint) -> frozenset:
    """Intersection of the closures of all neighborhoods of ``u``."""
    if isinstance(u, EdgePoint):
        if u.strip not in gY.edges or not 0 < u.y < 1:
            raise KeyError(f"unknown point {u!r}")
        return frozenset({u})
    gY.vertex(u)
    return frozenset({u} | {w for w in gY.vertex_ids if gY.are_nonseparated(u, w)})


def special_points(gY: LeafSpaceGraph) -> tuple[str, ...]:
    return tuple(v for v in gY.vertex_ids if hausdorff_closure(gY, v) != {v})


def nonseparated_oracle(m: StripModel, A: LeafDescriptor, B: LeafDescriptor, depth: int = 20) -> bool:
    """Shrinking-neighborhood test: do saturated neighborhoods of A and B meet at every scale?"""
    if A == B:
        raise ValueError("the oracle compares two distinct leaves")
    eps = default_collar(m)
    for k in range(1, depth + 1):
        e = eps / 2**k
        if not saturate_basic(m, basic_neighborhood(m, A, e)).intersects(saturate_basic(m, basic_neighborhood(m, B, e))):
            return False
    return True


# -- hypotheses --------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    holds: bool
    certificate: str

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class HypothesisReport:
    all_leaves_noncompact: Check
    special_family_locally_finite: Check
    t1: Check
    hausdorff: Check
    locally_euclidean: Check
    special: tuple[str, ...]
    charts: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        out = {}
        for name in ("all_leaves_noncompact", "special_family_locally_finite", "t1", "hausdorff", "locally_euclidean"):
            c = getattr(self, name)
            out[name] = {"holds": c.holds, "certificate": c.certificate}
        out["special_points"] = list(self.special)
        out["vertex_charts"] = {v: kind for v, kind in self.charts}
        return out


def hypothesis_report(m: StripModel, gY: LeafSpaceGraph) -> HypothesisReport:
    require_valid(m)
    special = special_points(gY)
    noncompact = Check(True, "all leaf types parametrized by open intervals: interior and boundary leaves by R, arc leaves by their open arc")
    finite = Check(True, f"finitely many vertices ({len(gY.vertices)}), {len(special)} special")
    leaves = [v.leaf for v in gY.vertices] + [Interior(sid, Fraction(1, 2)) for sid in gY.edges]
    closed = all(is_properly_embedded(m, leaf).holds for leaf in leaves)
    t1 = Check(closed, "every leaf is closed in X (arc ends are removed points)" if closed else "a leaf is not closed")
    hausdorff = Check(not special, "no special points" if not special else "special points: " + ", ".join(special))
    charts = []
    bad = []
    for v in gY.vertices:
        if not v.is_boundary and len(v.ends) == 2:
            charts.append((v.id, "R"))
        elif v.is_boundary and len(v.ends) == 1:
            charts.append((v.id, "R+"))
        else:
            bad.append(v.id)
    euclid = Check(
        not bad,
        f"{sum(k == 'R' for _, k in charts)} vertex charts to R, {sum(k == 'R+' for _, k in charts)} to R+"
        if not bad
        else "vertices without a chart: " + ", ".join(bad),
    )
    return HypothesisReport(noncompact, finite, t1, hausdorff, euclid, special, tuple(charts))


# -- quotient images ----------------------------------------------------------------


@dataclass(frozen=True)
class YSubset:
    """A subset of Y given by open edge intervals and whole vertices."""

    intervals: tuple[tuple[str, tuple[tuple[Fraction, Fraction], ...]], ...]
    vertices: frozenset[str]

    def edge_intervals(self, sid: str):
        for s, ivs in self.intervals:
            if s == sid:
                return ivs
        return ()


def image_of(gY: LeafSpaceGraph, sat: SaturatedSet) -> YSubset:
    """p(sat): heights become edge intervals, arc/boundary leaves become vertices."""
    vertices = {f"g{g}" for g in sat.arcs} | {f"{s}.{side}" for s, side in sat.boundaries}
    return YSubset(sat.heights, frozenset(vertices))


def is_open_in_Y(gY: LeafSpaceGraph, S: YSubset) -> bool:
    """Every vertex of S has a one-sided collar in S on each edge end it is attached to."""
    for vid in S.vertices:
        for sid, side in gY.vertex(vid).ends:
            ivs = S.edge_intervals(sid)
            if side == "top" and not any(hi == 1 and lo < 1 for lo, hi in ivs):
                return False
            if side == "bottom" and not any(lo == 0 and hi > 0 for lo, hi in ivs):
                return False
    return True


# -- export -------------------------------------------------------------------------

SCHEMA = "stripfol.leafspace/1"


def graph_to_dict(gY: LeafSpaceGraph) -> dict:
    return {
        "schema": SCHEMA,
        "edges": list(gY.edges),
        "vertices": [
            {"id": v.id, "leaf": leaf_to_dict(v.leaf), "ends": [list(e) for e in v.ends]} for v in gY.vertices
        ],
        "attachments": [{"edge": s, "side": side, "vertices": list(vids)} for (s, side), vids in gY.attachments],
        "nonseparated": [list(p) for p in gY.pairs()],
    }


def graph_from_dict(d: dict) -> LeafSpaceGraph:
    if d.get("schema") != SCHEMA:
        raise ModelError(f"expected schema {SCHEMA}, got {d.get('schema')!r}")
    vertices = tuple(
        Vertex(v["id"], leaf_from_dict(v["leaf"]), tuple(tuple(e) for e in v["ends"])) for v in d["vertices"]
    )
    attachments = tuple(((a["edge"], a["side"]), tuple(a["vertices"])) for a in d["attachments"])
    nonsep = frozenset(frozenset(p) for p in d["nonseparated"])
    return LeafSpaceGraph(tuple(d["edges"]), vertices, attachments, nonsep)


def _q(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def export_graph(gY: LeafSpaceGraph, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(graph_to_dict(gY), indent=2) + "\n"
    if fmt != "dot":
        raise ValueError(f"unknown format {fmt!r}")
    lines = ["graph leafspace {", "  node [shape=point];"]
    for sid in gY.edges:
        lines.append(f"  {_q(sid + ':bottom')} -- {_q(sid + ':top')} [label={_q(sid)}];")
    for v in gY.vertices:
        shape = "box" if v.is_boundary else "circle"
        lines.append(f"  {_q(v.id)} [shape={shape}, label={_q(v.id)}];")
        for sid, side in v.ends:
            lines.append(f"  {_q(v.id)} -- {_q(sid + ':' + side)};")
    for v, w in gY.pairs():
        lines.append(f"  {_q(v)} -- {_q(w)} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_graph_json(text: str) -> LeafSpaceGraph:
    return graph_from_dict(json.loads(text))


def format_point(u: YPoint) -> str:
    if isinstance(u, EdgePoint):
        return f"{u.strip}@{format_extrat(u.y)}"
    return u

