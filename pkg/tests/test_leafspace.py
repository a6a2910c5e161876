import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import nonseparated_by_sequences, special_count, vertex_ends
from stripfol.generate import load_fixture, random_model
from stripfol.leafspace import (
    EdgePoint,
    build_leaf_space,
    export_graph,
    hausdorff_closure,
    hypothesis_report,
    image_of,
    is_open_in_Y,
    nonseparated_oracle,
    parse_graph_json,
    special_points,
)
from stripfol.model import ArcLeaf, Interior, ModelError, default_collar, random_box, saturate_basic

seeds = st.integers(min_value=0, max_value=10_000)


def test_m0_graph():
    gY = build_leaf_space(load_fixture("M0"))
    assert gY.edges == ("s1", "s2")
    assert gY.vertex_ids == ("g0",)
    assert gY.vertex("g0").ends == (("s1", "top"), ("s2", "bottom"))
    assert gY.nonseparated == frozenset()


def test_m1_graph():
    gY = build_leaf_space(load_fixture("M1"))
    assert len(gY.edges) == 2
    for vid in ("g0", "g1"):
        assert set(gY.vertex(vid).ends) == {("s1", "top"), ("s2", "bottom")}
    assert gY.pairs() == [("g0", "g1")]


def test_m3_graph():
    gY = build_leaf_space(load_fixture("M3"))
    assert len(gY.edges) == 2 and len(gY.vertices) == 3
    assert sum(v.is_boundary for v in gY.vertices) == 2
    assert gY.nonseparated == frozenset()


def test_hausdorff_closure_examples():
    assert hausdorff_closure(build_leaf_space(load_fixture("M1")), "g0") == {"g0", "g1"}
    assert hausdorff_closure(build_leaf_space(load_fixture("M0")), "g0") == {"g0"}
    p = EdgePoint("s1", F(1, 3))
    assert hausdorff_closure(build_leaf_space(load_fixture("M2")), p) == {p}
    with pytest.raises(KeyError):
        hausdorff_closure(build_leaf_space(load_fixture("M0")), "g7")


@pytest.mark.parametrize("name, expected", [("M0", ()), ("M1", ("g0", "g1")), ("M2", ("g0", "g1", "g2"))])
def test_special_points(name, expected):
    assert special_points(build_leaf_space(load_fixture(name))) == expected


def test_oracle_examples():
    assert nonseparated_oracle(load_fixture("M1"), ArcLeaf(0), ArcLeaf(1), 20)
    assert not nonseparated_oracle(load_fixture("M0"), ArcLeaf(0), Interior("s1", F(1, 2)), 20)
    assert not nonseparated_oracle(load_fixture("M2"), ArcLeaf(0), ArcLeaf(2), 20)
    with pytest.raises(ValueError):
        nonseparated_oracle(load_fixture("M1"), ArcLeaf(0), ArcLeaf(0))


def test_non_transitive_on_m2():
    gY = build_leaf_space(load_fixture("M2"))
    assert gY.are_nonseparated("g0", "g1") and gY.are_nonseparated("g1", "g2")
    assert not gY.are_nonseparated("g0", "g2")


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_relation_matches_sequence_oracle(seed):
    m = random_model(seed)
    gY = build_leaf_space(m)
    eps = default_collar(m)
    vids = gY.vertex_ids
    for i, v in enumerate(vids):
        for w in vids[i + 1 :]:
            assert gY.are_nonseparated(v, w) == nonseparated_by_sequences(m, v, w, eps), (v, w)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_graph_invariants(seed):
    m = random_model(seed)
    gY = build_leaf_space(m)
    ends = vertex_ends(m)
    assert {v.id: set(v.ends) for v in gY.vertices} == ends
    for v in gY.vertices:
        assert len(v.ends) == (1 if v.is_boundary else 2)
        assert v.id in hausdorff_closure(gY, v.id)
        for w in hausdorff_closure(gY, v.id):
            assert v.id in hausdorff_closure(gY, w)
    assert len(special_points(gY)) == special_count(m)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 2**32 - 1))
def test_images_of_saturated_open_sets_are_open(seed, box_seed):
    m = random_model(seed)
    gY = build_leaf_space(m)
    sat = saturate_basic(m, random_box(m, random.Random(box_seed)))
    assert is_open_in_Y(gY, image_of(gY, sat))


def test_hypothesis_reports():
    m0 = load_fixture("M0")
    r = hypothesis_report(m0, build_leaf_space(m0))
    assert all(r.to_dict()[k]["holds"] for k in ("all_leaves_noncompact", "special_family_locally_finite", "t1", "hausdorff", "locally_euclidean"))
    m1 = load_fixture("M1")
    r = hypothesis_report(m1, build_leaf_space(m1))
    assert not r.hausdorff and r.t1 and r.locally_euclidean
    assert r.special == ("g0", "g1")
    m3 = load_fixture("M3")
    r = hypothesis_report(m3, build_leaf_space(m3))
    assert r.hausdorff and r.locally_euclidean
    assert dict(r.charts) == {"g0": "R", "s1.bottom": "R+", "s2.top": "R+"}


def test_export_formats():
    gY = build_leaf_space(load_fixture("M1"))
    dot = export_graph(gY, "dot")
    assert dot.count("style=dashed") == 1
    assert '"g0" -- "g1" [style=dashed]' in dot
    doc = export_graph(build_leaf_space(load_fixture("M0")), "json")
    assert parse_graph_json(doc).nonseparated == frozenset()
    with pytest.raises(ValueError):
        export_graph(gY, "svg")


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_json_round_trip(seed):
    gY = build_leaf_space(random_model(seed))
    assert parse_graph_json(export_graph(gY)) == gY


def test_invalid_model_rejected():
    with pytest.raises(ModelError):
        build_leaf_space(load_fixture("M4"))
