"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and then
asserts, so a failing criterion also fails the run.
"""

import random
import subprocess
import sys
import time
from fractions import Fraction as F

import numpy as np

from oracles import nonseparated_by_sequences, straighten_k1
from stripfol.fibration import (
    atlas_coverage,
    build_atlas,
    certify_component,
    check_section,
    cross_section_through,
    kaplan_decomposition,
    verify_atlas,
)
from stripfol.generate import load_fixture, random_models
from stripfol.leafspace import EdgePoint, build_leaf_space, hausdorff_closure, nonseparated_oracle, special_points
from stripfol.model import (
    ArcLeaf,
    OnArc,
    InStrip,
    all_leaf_classes,
    default_collar,
    double_model,
    open_witness,
    random_box,
    sample_points,
    saturate_basic,
    validate_model,
)
from stripfol.numeric import (
    GraphSample,
    POUPiece,
    POUSpec,
    check_fibered_homeo,
    pou_glue,
    random_graph_sample,
    random_two_piece_spec,
    straighten_graphs,
)

FIXTURES = ("M0", "M1", "M2", "M3")


def corpus():
    """Fixtures M0-M3 and the ten seeded random models."""
    return [(name, load_fixture(name)) for name in FIXTURES] + [
        (f"random[{k}]", m) for k, m in enumerate(random_models(10))
    ]


def test_criterion_1_special_points(acceptance):
    mismatches, pairs = [], 0
    for name, m in corpus():
        gY = build_leaf_space(m)
        eps = default_collar(m)
        vids = gY.vertex_ids
        for i, v in enumerate(vids):
            for w in vids[i + 1 :]:
                pairs += 1
                got = gY.are_nonseparated(v, w)
                oracle = nonseparated_oracle(m, gY.vertex(v).leaf, gY.vertex(w).leaf, depth=20)
                sequences = nonseparated_by_sequences(m, v, w, eps)
                if not got == oracle == sequences:
                    mismatches.append((name, v, w, got, oracle, sequences))
    counts = {name: len(special_points(build_leaf_space(load_fixture(name)))) for name in ("M0", "M1", "M2")}
    ok = not mismatches and counts == {"M0": 0, "M1": 2, "M2": 3}
    acceptance(1, ok, f"{pairs} vertex pairs, {len(mismatches)} mismatches; special counts {counts}")
    assert ok, mismatches[:5]


def test_criterion_2_closure_symmetry(acceptance):
    asymmetric, checked = [], 0
    for name, m in corpus():
        gY = build_leaf_space(m)
        points = list(gY.vertex_ids) + [EdgePoint(sid, F(1, 3)) for sid in gY.edges]
        for p in points:
            for q in points:
                if p == q:
                    continue
                checked += 1
                if (q in hausdorff_closure(gY, p)) != (p in hausdorff_closure(gY, q)):
                    asymmetric.append((name, p, q))
    gY = build_leaf_space(load_fixture("M2"))
    witness = gY.are_nonseparated("g0", "g1") and gY.are_nonseparated("g1", "g2") and not gY.are_nonseparated("g0", "g2")
    ok = not asymmetric and witness
    acceptance(2, ok, f"{checked} ordered pairs, {len(asymmetric)} asymmetric; M2 non-transitivity witness {witness}")
    assert ok


def test_criterion_3_constructive_chain(acceptance):
    problems = []
    charts = 0
    worst = 0.0
    start = time.perf_counter()
    for name, m in corpus():
        for leaf in all_leaf_classes(m):
            issues = check_section(m, cross_section_through(m, leaf))
            problems += [f"{name} {leaf}: {issue}" for issue in issues]
        atlas = build_atlas(m)
        charts += len(atlas.charts)
        problems += [f"{name}: {p}" for p in atlas_coverage(atlas)]
        report = verify_atlas(atlas, grid=101)
        worst = max([worst, *report.residuals.values()])
        problems += [f"{name}: {f['check']} at {f['at']}" for f in report.failures]
    ok = not problems and worst == 0.0
    acceptance(
        3,
        ok,
        f"{charts} charts on 14 models at grid 101, {len(problems)} failures, "
        f"worst residual {worst} (exact), {time.perf_counter() - start:.0f}s",
    )
    assert ok, problems[:5]


def test_criterion_4_saturation_openness(acceptance):
    rng = random.Random(4)
    counterexamples, points = [], 0
    for name in FIXTURES:
        m = load_fixture(name)
        for _ in range(100):
            box = random_box(m, rng)
            sat = saturate_basic(m, box)
            for pt in sample_points(m, sat, 20, rng):
                points += 1
                if not open_witness(m, pt, sat):
                    counterexamples.append((name, box, pt))
    ok = not counterexamples
    acceptance(4, ok, f"400 boxes, {points} sampled points, {len(counterexamples)} counterexamples")
    assert ok, counterexamples[:3]


def graph_residual(gs: GraphSample, h) -> float:
    worst = 0.0
    for i in range(gs.k):
        x, _ = h(gs.values[i], gs.z)
        worst = max(worst, float(np.max(np.abs(x - gs.targets[i]))))
    for end in gs.interval:
        x, _ = h(np.full(gs.z.size, end), gs.z)
        worst = max(worst, float(np.max(np.abs(x - end))))
    return worst


def test_criterion_5_straightening(acceptance):
    z = np.linspace(0.0, 1.0, 5)
    h = straighten_graphs(GraphSample(z, np.full(z.size, 0.25), (0.0, 1.0), [0.5]))
    x, _ = h(np.array([0.25, 0.0625]), np.zeros(2))
    exact = abs(x[0] - 0.5) <= 1e-12 and abs(x[1] - 0.25) <= 1e-12
    exact = exact and abs(x[1] - straighten_k1(0.0625, 0.25, 0.5)) <= 1e-12

    rng = np.random.default_rng(0)
    failed = []
    worst = 0.0
    start = time.perf_counter()
    for k in range(50):
        gs = random_graph_sample(rng)
        h = straighten_graphs(gs)
        report = check_fibered_homeo(h, grid=101, tol=1e-9)
        res = graph_residual(gs, h)
        worst = max([worst, res, *report.residuals.values()])
        if not report.passed or res > 1e-9:
            failed.append((k, report.failed_checks(), res))
    elapsed = time.perf_counter() - start
    ok = exact and not failed and elapsed < 10
    acceptance(
        5,
        ok,
        f"h(0.25)={float(x[0])!r}, h(0.0625)={float(x[1])!r}; 50 samples, {len(failed)} failing, "
        f"worst residual {worst:.2e}, {elapsed:.2f}s",
    )
    assert ok, failed


def test_criterion_6_partition_of_unity(acceptance):
    rng = np.random.default_rng(6)
    failing = []
    for k in range(20):
        glued = pou_glue(random_two_piece_spec(rng), samples=101)
        if not glued.report.passed or not glued.report.checks.get("glued_monotone"):
            failing.append((k, glued.report.failed_checks()))
    spec = random_two_piece_spec(rng)
    p1, p2 = spec.pieces
    planted = POUPiece(p2.lo, p2.hi, p2.weight, lambda x, u: 1 - p2.fiber(x, u))
    fault = pou_glue(POUSpec((p1, planted), spec.start, spec.end, spec.u_range))
    caught = not fault.report.passed
    ok = not failing and caught
    acceptance(6, ok, f"20 specs, {len(failing)} failing; planted fault reported: {fault.report.failed_checks()}")
    assert ok, failing


def test_criterion_7_doubling(acceptance):
    m3 = load_fixture("M3")
    d, sigma = double_model(m3)
    valid = validate_model(d).ok
    no_boundary = d.boundary_sides() == []
    edges = len(build_leaf_space(d).edges) == 2 * len(build_leaf_space(m3).edges)

    involutive = all(sigma.strip(sigma.strip(s)) == s for s in d.strip_ids)
    involutive &= all(sigma.gluing(sigma.gluing(g)) == g for g in range(len(d.gluings)))
    pts = [InStrip(s, F(x, 3), F(y, 7)) for s in d.strip_ids for x in range(-4, 5) for y in range(1, 7)]
    pts += [OnArc(g, F(x, 5)) for g in sigma.mirror_gluings for x in range(-10, 11)]
    involutive &= all(sigma.point(sigma.point(p)) == p for p in pts)

    eps = default_collar(d)
    grid = [eps * F(2 * k - 49, 50) for k in range(50)]  # 50 points, symmetric under u -> -u
    commutes = True
    for g in sigma.mirror_gluings:
        for x0 in (F(-3), F(0), F(5, 2)):
            c_hat = cross_section_through(d, ArcLeaf(g), x0=x0)
            commutes &= all(sigma.point(c_hat(u)) == c_hat(sigma.reflect(u)) for u in grid)
            commutes &= sigma.point(c_hat(F(0))) == c_hat(F(0))
    ok = valid and no_boundary and edges and involutive and commutes
    acceptance(
        7,
        ok,
        f"valid={valid}, no boundary={no_boundary}, edges {len(build_leaf_space(d).edges)}=2*{len(m3.strips)}, "
        f"sigma^2=id {involutive}, sigma.c=c.xi {commutes} ({len(d.gluings)} gluings)",
    )
    assert ok


def test_criterion_8_kaplan(acceptance):
    expected = {"M0": (1, 0), "M1": (2, 2), "M2": (4, 3)}
    got, failures = {}, []
    for name in expected:
        m = load_fixture(name)
        kd = kaplan_decomposition(m)
        got[name] = (len(kd.components), len(kd.special_leaves))
        for comp in kd.components:
            report = certify_component(m, comp, grid=101)
            if not report.passed:
                failures.append((name, comp.strips, report.failed_checks()))
    ok = got == expected and not failures
    acceptance(8, ok, f"(components, special leaves) {got}; {len(failures)} failing certificates")
    assert ok, failures


def cli(*argv, stdin=None):
    proc = subprocess.run(
        [sys.executable, "-m", "stripfol", *argv], input=stdin, capture_output=True
    )
    return proc.returncode, proc.stdout


def test_criterion_9_cli(acceptance):
    expected = {name: 0 for name in FIXTURES}
    expected["M4"] = 1
    wrong, unstable = [], []
    for name, code in expected.items():
        runs = {
            "validate": [("validate", name)],
            "analyze": [("analyze", name)],
            "double": [("double", name)],
            "trivialize": [("trivialize", name)],
        }
        for label, (argv,) in runs.items():
            first, second = cli(*argv), cli(*argv)
            if first[0] != code:
                wrong.append((name, label, first[0]))
            if first != second:
                unstable.append((name, label))
        if code == 0:
            atlas = cli("trivialize", name)[1]
            first, second = cli("verify", "-", stdin=atlas), cli("verify", "-", stdin=atlas)
            if first[0] != 0:
                wrong.append((name, "verify", first[0]))
            if first != second:
                unstable.append((name, "verify"))
    ok = not wrong and not unstable
    acceptance(9, ok, f"5 fixtures x 5 commands, wrong exit codes {wrong}, non-identical repeats {unstable}")
    assert ok
