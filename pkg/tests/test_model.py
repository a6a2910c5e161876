import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stripfol.extrat import IDENTITY, NEG_INF, POS_INF, AffineMap
from stripfol.generate import load_fixture, random_model
from stripfol.model import (
    BOTTOM,
    TOP,
    ArcLeaf,
    ArcNbhd,
    BoundaryLeaf,
    InStrip,
    Interior,
    ModelError,
    OnArc,
    OnBoundary,
    Rect,
    StripModel,
    affine_gluing_map,
    all_leaf_classes,
    double_model,
    format_model,
    half_of_double,
    is_properly_embedded,
    leaf_of,
    model_from_dict,
    model_to_dict,
    open_witness,
    parse_model,
    random_box,
    sample_points,
    saturate_basic,
    validate_model,
)

seeds = st.integers(min_value=0, max_value=10_000)


def two_strip(side_a: str, side_b: str, orientation: str = "keep") -> StripModel:
    return parse_model(
        "strip s1\nstrip s2\n"
        "side s1 bottom open\n"
        f"side s1 top arcs {side_a}\n"
        f"side s2 bottom arcs {side_b}\n"
        "side s2 top open\n"
        f"glue s1.top.0 s2.bottom.0 {orientation}\n"
    )


def test_parse_fixtures():
    m0, m1 = load_fixture("M0"), load_fixture("M1")
    assert (len(m0.strips), len(m0.gluings)) == (2, 1)
    assert (len(m1.strips), len(m1.gluings)) == (2, 2)


def test_same_side_gluing_rejected():
    text = "strip s1\nside s1 bottom open\nside s1 top arcs (0,1) (2,3)\nglue s1.top.0 s1.top.1 keep\n"
    with pytest.raises(ModelError, match="same-side gluing"):
        parse_model(text)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("strip s1\nside s1 top arcs (0,1\n", "line 2"),
        ("strip s1\nside s1 middle open\n", "line 2"),
        ("strip s1\nstrip s1\n", "duplicate"),
    ],
)
def test_parse_errors_carry_context(text, needle):
    with pytest.raises(ModelError) as info:
        parse_model(text)
    assert needle in str(info.value)


def test_validate_examples():
    assert validate_model(load_fixture("M0")).issues == []
    assert "overlapping arcs" in validate_model(load_fixture("M4"))
    m1 = load_fixture("M1")
    assert "unmatched arc" in validate_model(StripModel(m1.strips, m1.gluings[:1]))


@pytest.mark.parametrize(
    "a, b, orientation, expected",
    [
        ("(0,1)", "(2,4)", "keep", AffineMap(F(2), F(2))),
        ("(-inf,0)", "(-inf,3)", "keep", AffineMap(F(1), F(3))),
        ("(-inf,+inf)", "(-inf,+inf)", "keep", IDENTITY),
        ("(0,1)", "(2,4)", "flip", AffineMap(F(-2), F(4))),
        ("(-inf,0)", "(1,+inf)", "flip", AffineMap(F(-1), F(1))),
    ],
)
def test_affine_gluing_map(a, b, orientation, expected):
    assert affine_gluing_map(two_strip(a, b, orientation), 0) == expected


def test_incompatible_ends_rejected():
    m = two_strip("(-inf,0)", "(0,1)")
    assert "incompatible endpoint types" in validate_model(m)
    with pytest.raises(ModelError):
        affine_gluing_map(m, 0)


@given(
    lo=st.fractions(-10, 10),
    w1=st.fractions(F(1, 8), 10),
    lo2=st.fractions(-10, 10),
    w2=st.fractions(F(1, 8), 10),
    flip=st.booleans(),
)
def test_finite_gluing_matches_endpoints(lo, w1, lo2, w2, flip):
    m = two_strip(f"({lo},{lo + w1})", f"({lo2},{lo2 + w2})", "flip" if flip else "keep")
    phi = affine_gluing_map(m, 0)
    ends = (phi(lo), phi(lo + w1))
    assert ends == ((lo2 + w2, lo2) if flip else (lo2, lo2 + w2))


def test_leaf_of_examples():
    assert leaf_of(load_fixture("M0"), InStrip("s1", F(7), F(1, 2))) == Interior("s1", F(1, 2))
    assert leaf_of(load_fixture("M1"), OnArc(0, F(-5))) == ArcLeaf(0)
    assert leaf_of(load_fixture("M3"), OnBoundary("s1", BOTTOM, F(0))) == BoundaryLeaf("s1", BOTTOM)


def test_saturation_examples():
    m0, m1 = load_fixture("M0"), load_fixture("M1")
    sat = saturate_basic(m0, Rect("s1", F(0), F(1), F(1, 4), F(1, 2)))
    assert sat.heights == (("s1", ((F(1, 4), F(1, 2)),)),) and not sat.arcs
    sat = saturate_basic(m1, ArcNbhd(0, F(-2), F(-1), F(1, 8), F(1, 8)))
    assert sat.arcs == {0}
    assert sat.intervals("s1") == ((F(7, 8), F(1)),)
    assert sat.intervals("s2") == ((F(0), F(1, 8)),)
    sat = saturate_basic(m1, Rect("s1", F(0), F(1), F(7, 8), F(1)))
    assert sat.heights == (("s1", ((F(7, 8), F(1)),)),) and not sat.arcs


def test_properly_embedded_examples():
    assert is_properly_embedded(load_fixture("M0"), Interior("s1", F(1, 2)))
    assert is_properly_embedded(load_fixture("M1"), ArcLeaf(0))
    assert is_properly_embedded(load_fixture("M3"), BoundaryLeaf("s1", BOTTOM))


def test_arc_between_finite_ends_is_proper():
    m = parse_model(
        "strip s1\nstrip s2\n"
        "side s1 bottom open\nside s1 top arcs (0,1) (1,4)\n"
        "side s2 bottom arcs (0,1) (1,4)\nside s2 top open\n"
        "glue s1.top.0 s2.bottom.0 keep\nglue s1.top.1 s2.bottom.1 keep\n"
    )
    cert = is_properly_embedded(m, ArcLeaf(0))
    assert cert and any("removed from X" in e for e in cert.evidence)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_text_and_json_round_trip(seed):
    m = random_model(seed)
    assert parse_model(format_model(m)) == m
    assert model_from_dict(model_to_dict(m)) == m


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_every_leaf_class_is_proper(seed):
    m = random_model(seed)
    for leaf in all_leaf_classes(m):
        assert is_properly_embedded(m, leaf), leaf


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(0, 2**32 - 1))
def test_saturations_of_boxes_are_open(seed, box_seed):
    m = random_model(seed)
    rng = random.Random(box_seed)
    box = random_box(m, rng)
    sat = saturate_basic(m, box)
    for pt in sample_points(m, sat, 30, rng):
        assert open_witness(m, pt, sat), pt


def test_double_m3():
    d, inv = double_model(load_fixture("M3"))
    assert validate_model(d).ok
    assert len(d.strips) == 4
    # one copy of the interior gluing per half, plus one mirror gluing per boundary side
    assert len(d.gluings) == 4
    assert d.boundary_sides() == []
    assert len(inv.mirror_gluings) == 2


def test_double_without_boundary_is_two_copies():
    m0 = load_fixture("M0")
    d, inv = double_model(m0)
    assert len(d.strips) == 4 and len(d.gluings) == 2
    assert inv.mirror_gluings == ()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_involution_is_an_involution(seed):
    m = random_model(seed)
    d, inv = double_model(m)
    assert validate_model(d).ok
    for sid in d.strip_ids:
        assert inv.strip(inv.strip(sid)) == sid
    for gi in range(len(d.gluings)):
        assert inv.gluing(inv.gluing(gi)) == gi
        # sigma maps gluings to gluings with the same arcs up to the copy swap
        g, h = d.gluings[gi], d.gluings[inv.gluing(gi)]
        assert {inv.strip(g.a.strip), inv.strip(g.b.strip)} == {h.a.strip, h.b.strip}
    assert half_of_double(d, inv) == m


def test_double_rejects_clashing_ids():
    m = parse_model("strip s1\nstrip s1~1\nside s1 bottom boundary\nside s1~1 bottom boundary\n")
    with pytest.raises(ModelError):
        double_model(m)


def test_infinite_ends_in_text():
    m = two_strip("(-inf,+inf)", "(-inf,+inf)")
    assert m.arc(m.gluings[0].a).lo == NEG_INF and m.arc(m.gluings[0].b).hi == POS_INF
    assert TOP in format_model(m)
