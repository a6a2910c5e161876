"""Floating-point fibered homeomorphisms and a grid verification harness.

Evaluators act on arrays: ``forward(t, u)`` returns ``(x, z)`` where lines
``{u} x (fiber)`` go to curves along which ``x`` is the position on a leaf and
``z`` labels the leaf.  Every construction here keeps ``z`` a function of ``u``
alone, so fibers map into leaves by design and the harness checks the rest.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_TOL = 1e-9


# -- reports -------------------------------------------------------------------------


@dataclass
class GridReport:
    """Outcome of a grid verification: per-check status, worst residuals and failing samples."""

    checks: dict[str, bool] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    samples: int = 0
    max_failures_per_check: int = 25

    def run(self, name: str) -> None:
        self.checks.setdefault(name, True)

    def fail(self, name: str, at: Any, detail: str = "") -> None:
        self.checks[name] = False
        if sum(f["check"] == name for f in self.failures) < self.max_failures_per_check:
            self.failures.append({"check": name, "at": _jsonable(at), "detail": detail})

    def residual(self, name: str, value: float) -> None:
        value = float(value)
        self.residuals[name] = max(self.residuals.get(name, 0.0), value)

    @property
    def passed(self) -> bool:
        return not self.failures

    def failed_checks(self) -> list[str]:
        return sorted({f["check"] for f in self.failures})

    def merge(self, other: GridReport, prefix: str = "") -> GridReport:
        for name, ok in other.checks.items():
            self.checks[prefix + name] = self.checks.get(prefix + name, True) and ok
        for name, val in other.residuals.items():
            self.residual(prefix + name, val)
        for f in other.failures:
            self.failures.append({**f, "check": prefix + f["check"]})
        self.samples += other.samples
        return self

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "checks": dict(sorted(self.checks.items())),
            "residuals": {k: _finite(v) for k, v in sorted(self.residuals.items())},
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "worst_residual", "passed"])
        for name in sorted(self.checks):
            writer.writerow([name, repr(self.residuals.get(name, 0.0)), self.checks[name]])
        return buf.getvalue()


def _finite(v: float):
    return v if math.isfinite(v) else str(v)


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return str(x)


# -- evaluators ---------------------------------------------------------------------


Pair = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class EmbeddingEvaluator:
    """A fibered map ``(t, u) -> (x, z)`` on the rectangle ``t_range x u_range``."""

    forward: Callable[[np.ndarray, np.ndarray], Pair]
    inverse: Optional[Callable[[np.ndarray, np.ndarray], Pair]]
    t_range: tuple[float, float]
    u_range: tuple[float, float]
    fixed_t: tuple[float, ...] = ()
    fixed_u: tuple[float, ...] = ()
    tol: float = DEFAULT_TOL
    to_model: Optional[Callable[[float, float], Any]] = None
    model: Any = None

    def in_domain(self, t, u) -> np.ndarray:
        t, u = np.asarray(t, float), np.asarray(u, float)
        (t0, t1), (u0, u1) = self.t_range, self.u_range
        slack = self.tol
        return (t >= t0 - slack) & (t <= t1 + slack) & (u >= u0 - slack) & (u <= u1 + slack)

    def __call__(self, t, u) -> Pair:
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float))
        if not np.all(self.in_domain(t, u)):
            raise ValueError("point outside the evaluator domain")
        return self.forward(t, u)


def identity_evaluator(t_range=(-1.0, 1.0), u_range=(-1.0, 1.0)) -> EmbeddingEvaluator:
    def same(t, u):
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float))
        return t.copy(), u.copy()

    return EmbeddingEvaluator(same, same, tuple(t_range), tuple(u_range), fixed_t=tuple(t_range))


def invert_monotone(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, target, iters: int = 200) -> np.ndarray:
    """Solve ``fn(x) = target`` for a strictly monotone ``fn`` on ``[lo, hi]`` by vectorized bisection."""
    target = np.asarray(target, float)
    a = np.full(target.shape, lo, float)
    b = np.full(target.shape, hi, float)
    # Direction is decided per element, so one call can invert a family of maps.
    increasing = fn(b) >= fn(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        value = fn(mid)
        below = np.where(increasing, value < target, value > target)
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if np.all(b - a <= 1e-15 * np.maximum(1.0, np.abs(a))):
            break
    return 0.5 * (a + b)


# -- graph straightening -----------------------------------------------------------


@dataclass(frozen=True)
class GraphSample:
    """Samples of ``k`` ordered graphs ``f_1 < ... < f_k`` over a 1-d base ``Z``."""

    z: np.ndarray
    values: np.ndarray
    interval: tuple[float, float]
    targets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, float))
        values = np.asarray(self.values, float)
        object.__setattr__(self, "values", values.reshape(-1, self.z.size))
        object.__setattr__(self, "targets", np.atleast_1d(np.asarray(self.targets, float)))
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def validate(self) -> None:
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")
        if self.z.size == 0 or np.any(np.diff(self.z) <= 0):
            raise ValueError("z-grid must be non-empty and strictly increasing")
        if self.targets.size != self.k:
            raise ValueError("one target per graph")
        if np.any(np.diff(self.values, axis=0) <= 0):
            raise ValueError("ordering violation: graphs must satisfy f_i < f_j for i < j")
        if np.any(np.diff(self.targets) <= 0):
            raise ValueError("ordering violation: targets must be strictly increasing")
        if np.any(self.targets <= a) or np.any(self.targets >= b):
            raise ValueError("target outside interval")
        if np.any(self.values <= a) or np.any(self.values >= b):
            raise ValueError("graph values must lie strictly inside the interval")

    def levels(self, z) -> np.ndarray:
        """Graph values at arbitrary base points (piecewise linear between samples)."""
        z = np.asarray(z, float)
        return np.stack([np.interp(z, self.z, row) for row in self.values])

    def to_dict(self) -> dict:
        return {
            "z": self.z.tolist(),
            "values": self.values.tolist(),
            "interval": list(self.interval),
            "targets": self.targets.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> GraphSample:
        return cls(d["z"], d["values"], tuple(d["interval"]), d["targets"])


def power_step(s, level, target, lo: float, hi: float, inverse: bool = False) -> np.ndarray:
    """Straighten one graph on the slab ``[lo, hi]``: rescaled ``s -> s ** log_level(target)``.

    Points outside ``(lo, hi)`` are left alone.
    """
    s = np.asarray(s, float)
    span = hi - lo
    expo = np.log((target - lo) / span) / np.log((np.asarray(level, float) - lo) / span)
    if inverse:
        expo = 1.0 / expo
    inside = (s > lo) & (s < hi)
    r = np.where(inside, (s - lo) / span, 0.5)
    return np.where(inside, lo + span * r**expo, s)


def _straighten_exponent_chain(gs: GraphSample, z) -> list[np.ndarray]:
    """Images of each level under the previous steps (the level each step straightens)."""
    levels = gs.levels(z)
    a, b = gs.interval
    lower = a
    placed = []
    current = levels.copy()
    for i in range(gs.k):
        placed.append(current[i].copy())
        for j in range(i + 1, gs.k):
            current[j] = power_step(current[j], current[i], gs.targets[i], lower, b)
        lower = gs.targets[i]
    return placed


def straighten_graphs(gs: GraphSample) -> EmbeddingEvaluator:
    """Self-map of ``[a,b] x Z`` fixing both ends, preserving lines and sending graph i to level ``c_i``.

    One graph at a time: graph i is straightened on the slab above level
    ``c_{i-1}``, which fixes every level already placed.
    """
    gs.validate()
    a, b = gs.interval

    def forward(s, z):
        s, z = np.broadcast_arrays(np.asarray(s, float), np.asarray(z, float))
        placed = _straighten_exponent_chain(gs, z)
        levels = gs.levels(z)
        out, lower = s.copy(), a
        for i in range(gs.k):
            stepped = power_step(out, placed[i], gs.targets[i], lower, b)
            # Decide slab membership from the original coordinate: rounding must not drag placed graphs along.
            out = stepped if i == 0 else np.where(s > levels[i - 1], stepped, out)
            lower = gs.targets[i]
        return out, z.copy()

    def inverse(x, z):
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        placed = _straighten_exponent_chain(gs, z)
        out = x.copy()
        for i in reversed(range(gs.k)):
            lower = a if i == 0 else gs.targets[i - 1]
            out = power_step(out, placed[i], gs.targets[i], lower, b, inverse=True)
        return out, z.copy()

    fixed_u = tuple(
        float(z) for j, z in enumerate(gs.z) if np.allclose(gs.values[:, j], gs.targets, rtol=0, atol=0)
    )
    return EmbeddingEvaluator(forward, inverse, (a, b), (float(gs.z[0]), float(gs.z[-1])), fixed_t=(a, b), fixed_u=fixed_u)


def random_graph_sample(rng: np.random.Generator, k: int | None = None, nz: int = 21) -> GraphSample:
    """A random valid sample with ``k <= 3`` smooth-ish graphs on a random interval."""
    k = int(rng.integers(1, 4)) if k is None else k
    a = float(rng.uniform(-5, 0))
    b = a + float(rng.uniform(0.5, 5))
    z = np.linspace(float(rng.uniform(-3, 0)), float(rng.uniform(0.5, 3)), nz)
    margin = 0.1 * (b - a)
    # k + 1 positive gaps per base point, normalized to fill (a + margin, b - margin).
    phase = rng.uniform(0, 2 * np.pi, size=(k + 1, 1))
    gaps = 1.0 + 0.5 * np.sin(np.outer(rng.uniform(0.5, 3, size=k + 1), z) + phase)
    gaps /= gaps.sum(axis=0, keepdims=True)
    values = a + margin + (b - a - 2 * margin) * np.cumsum(gaps, axis=0)[:k]
    # Targets near the mean level keep the exponents moderate, so double precision suffices.
    mean = values.mean(axis=1)
    spread = np.diff(np.concatenate([[a + margin], mean, [b - margin]]))
    targets = mean + rng.uniform(-0.3, 0.3, size=k) * np.minimum(spread[:-1], spread[1:])
    return GraphSample(z, values, (a, b), targets)


# -- chart normalization and concatenation -------------------------------------------


def section_from_samples(u: Sequence[float], t_values: Sequence[float], z_values: Sequence[float]) -> Callable:
    """Piecewise-linear section ``u -> (t, z)`` through the given samples."""
    u, tv, zv = (np.asarray(v, float) for v in (u, t_values, z_values))

    def section(w):
        w = np.asarray(w, float)
        return np.interp(w, u, tv), np.interp(w, u, zv)

    return section


def normalize_chart(
    section: Callable,
    c: float,
    chart: EmbeddingEvaluator,
    u_range: tuple[float, float],
    window: tuple[float, float] | None = None,
    samples: int = 201,
) -> EmbeddingEvaluator:
    """Reparametrize ``chart`` so that ``phi(c, u) = chart(section(u))``.

    ``section(u) = (t_u, z_u)`` is given in the chart's domain coordinates; its
    base part ``u -> z_u`` must be strictly monotone (a cross section).  The new
    chart is ``phi(t, u) = chart(H^{-1}(t; t_u), z_u)`` where ``H`` straightens
    the graph ``u -> t_u`` to level ``c`` on the slab ``window`` (default: the
    whole fiber interval of ``chart``) and is the identity outside it.
    """
    lo, hi = window if window is not None else chart.t_range
    if not lo < c < hi:
        raise ValueError("fiber value outside the fiber interval")
    u0, u1 = float(u_range[0]), float(u_range[1])
    grid = np.linspace(u0, u1, samples)
    tg, zg = section(grid)
    tg, zg = np.asarray(tg, float), np.asarray(zg, float)
    if np.any(tg <= lo) or np.any(tg >= hi):
        raise ValueError("section not within chart: fiber values leave the straightening window")
    (cz0, cz1) = chart.u_range
    if np.any(zg < cz0 - chart.tol) or np.any(zg > cz1 + chart.tol):
        raise ValueError("section not within chart: base values leave the chart")
    dz = np.diff(zg)
    if not (np.all(dz > 0) or np.all(dz < 0)):
        raise ValueError("section is not transverse: its base projection is not injective")

    def base(u):
        return np.asarray(section(u)[1], float)

    def level(u):
        return np.asarray(section(u)[0], float)

    def forward(t, u):
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float))
        t_pre = power_step(t, level(u), c, lo, hi, inverse=True)
        return chart.forward(t_pre, base(u))

    def inverse(x, z):
        t_pre, zc = chart.inverse(np.asarray(x, float), np.asarray(z, float))
        # The straightening is not Lipschitz at the window ends: rounding of a point on an end
        # would come back amplified, so values within a few ulps snap to the (fixed) end.
        ulp = 8 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
        t_pre = np.where(np.abs(t_pre - lo) <= ulp, lo, np.where(np.abs(t_pre - hi) <= ulp, hi, t_pre))
        u = invert_monotone(base, u0, u1, zc)
        return power_step(t_pre, level(u), c, lo, hi), u

    return EmbeddingEvaluator(
        forward,
        inverse if chart.inverse is not None else None,
        chart.t_range,
        (u0, u1),
        tol=chart.tol,
    )


def concat_charts(
    phi1: EmbeddingEvaluator,
    phi2: EmbeddingEvaluator,
    seam: float,
    half_width: float | None = None,
    tol: float = DEFAULT_TOL,
) -> EmbeddingEvaluator:
    """Join two foliated charts along a leaf at the fiber value ``seam``.

    ``phi1`` is adjusted near the seam so that it agrees with ``phi2`` on
    ``{seam} x W`` and labels leaves by ``phi2``'s base coordinate; the result
    is ``phi1`` (adjusted) below the seam and ``phi2`` above it.
    """
    (a1, b1), (a2, b2) = phi1.t_range, phi2.t_range
    if not (a2 < b1 and a1 < seam < b1 and a2 < seam < b2):
        raise ValueError("overlap empty")
    if phi1.inverse is None:
        raise ValueError("the left chart needs an inverse")
    w = half_width if half_width is not None else min(seam - a1, b1 - seam, seam - a2) / 2
    u_range = phi2.u_range

    def section(u):
        x, z = phi2.forward(np.full(np.shape(u), seam, float), np.asarray(u, float))
        return phi1.inverse(x, z)

    adjusted = normalize_chart(section, seam, phi1, u_range, window=(seam - w, seam + w))
    grid = np.linspace(u_range[0], u_range[1], 101)
    lx, lz = adjusted.forward(np.full_like(grid, seam), grid)
    rx, rz = phi2.forward(np.full_like(grid, seam), grid)
    mismatch = float(np.max(np.hypot(lx - rx, lz - rz)))
    if mismatch > tol:
        raise ValueError(f"seam mismatch {mismatch:.3e} above tolerance")

    def forward(t, u):
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float))
        left = adjusted.forward(np.minimum(t, seam), u)
        right = phi2.forward(np.maximum(t, seam), u)
        below = t <= seam
        return np.where(below, left[0], right[0]), np.where(below, left[1], right[1])

    def inverse(x, z):
        x, z = np.asarray(x, float), np.asarray(z, float)
        t2, u2 = phi2.inverse(x, z)
        t1, u1 = adjusted.inverse(x, z)
        use_right = (t2 >= seam) & (t2 <= b2)
        return np.where(use_right, t2, t1), np.where(use_right, u2, u1)

    return EmbeddingEvaluator(
        forward,
        inverse if phi2.inverse is not None else None,
        (a1, b2),
        u_range,
        tol=max(phi1.tol, phi2.tol),
    )


# -- partition of unity ---------------------------------------------------------------


@dataclass(frozen=True)
class POUPiece:
    """One chart of the cover: base interval, weight and leaf-point -> fiber-coordinate map."""

    lo: float
    hi: float
    weight: Callable[[np.ndarray], np.ndarray]
    fiber: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class POUSpec:
    """Pieces over the base ``u_range``; segments run from ``start(u)`` to ``end(u)`` on each leaf."""

    pieces: tuple[POUPiece, ...]
    start: Callable[[np.ndarray], np.ndarray]
    end: Callable[[np.ndarray], np.ndarray]
    u_range: tuple[float, float]
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class GluedFiber:
    spec: POUSpec
    report: GridReport

    def f(self, x, u) -> np.ndarray:
        """Convex combination of the local fiber coordinates."""
        x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
        total = np.zeros_like(x)
        for piece in self.spec.pieces:
            lam = np.asarray(piece.weight(u), float) * ((u > piece.lo) & (u < piece.hi))
            active = lam > 0
            if np.any(active):
                total = total + np.where(active, lam * piece.fiber(x, u), 0.0)
        return total

    def block_map(self) -> EmbeddingEvaluator:
        """``[0,1] x W -> K``: the inverse of ``x -> (f(x), u)`` (bisection along each leaf segment)."""
        spec = self.spec

        def forward(tau, u):
            tau, u = np.broadcast_arrays(np.asarray(tau, float), np.asarray(u, float))
            a, b = np.asarray(spec.start(u), float), np.asarray(spec.end(u), float)
            lo, hi = a.copy(), b.copy()
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                below = self.f(mid, u) < tau
                lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
            x = np.where(tau <= 0, a, np.where(tau >= 1, b, 0.5 * (lo + hi)))
            return x, u.copy()

        def inverse(x, u):
            return self.f(x, u), np.asarray(u, float).copy()

        return EmbeddingEvaluator(forward, inverse, (0.0, 1.0), spec.u_range, fixed_t=(), tol=spec.tol)


def pou_glue(spec: POUSpec, samples: int = 101) -> GluedFiber:
    """Glue local fiber coordinates by a partition of unity on the base.

    Raises ``ValueError`` when the weights do not sum to one; monotonicity and
    endpoint failures of the pieces or of the glued function are recorded in
    the returned report.
    """
    u0, u1 = spec.u_range
    ug = np.linspace(u0, u1, samples)
    report = GridReport(samples=samples * samples)
    wsum = np.zeros_like(ug)
    for piece in spec.pieces:
        lam = np.asarray(piece.weight(ug), float)
        outside = ~((ug > piece.lo) & (ug < piece.hi))
        if np.any(lam < -spec.tol) or np.any(lam[outside] > spec.tol):
            raise ValueError("weights must be non-negative with support inside their piece")
        wsum = wsum + np.where(outside, 0.0, lam)
    deviation = float(np.max(np.abs(wsum - 1.0)))
    if deviation > spec.tol:
        raise ValueError(f"weight sum deviates from 1 by {deviation:.3e}")
    report.run("weight_sum")
    report.residual("weight_sum", deviation)

    tau = np.linspace(0.0, 1.0, samples)
    U, T = np.meshgrid(ug, tau, indexing="ij")
    A, B = np.asarray(spec.start(U), float), np.asarray(spec.end(U), float)
    X = A + (B - A) * T
    for i, piece in enumerate(spec.pieces):
        name = f"piece_{i}_monotone"
        report.run(name)
        mask = (ug > piece.lo) & (ug < piece.hi)
        if not np.any(mask):
            continue
        vals = np.asarray(piece.fiber(X[mask], U[mask]), float)
        bad = np.argwhere(np.diff(vals, axis=1) <= 0)
        for r, c in bad:
            report.fail(name, (float(U[mask][r, 0]), float(X[mask][r, c])), "local fiber coordinate not increasing")
        ends = np.abs(vals[:, 0]) + np.abs(vals[:, -1] - 1.0)
        report.residual(f"piece_{i}_endpoints", float(np.max(ends)))
        if np.max(ends) > spec.tol:
            report.fail(f"piece_{i}_endpoints", float(U[mask][int(np.argmax(ends)), 0]), "segment ends not sent to 0 and 1")

    glued = GluedFiber(spec, report)
    F = glued.f(X, U)
    report.run("glued_monotone")
    for r, c in np.argwhere(np.diff(F, axis=1) <= 0):
        report.fail("glued_monotone", (float(U[r, 0]), float(X[r, c])), "glued fiber function not strictly increasing")
    ends = np.maximum(np.abs(F[:, 0]), np.abs(F[:, -1] - 1.0))
    report.run("glued_endpoints")
    report.residual("glued_endpoints", float(np.max(ends)))
    if np.max(ends) > spec.tol:
        report.fail("glued_endpoints", float(ug[int(np.argmax(ends))]), "f does not map the segment ends to 0 and 1")
    return glued


def affine_piece(lo: float, hi: float, weight, start, end, slope_bend: float = 0.0) -> POUPiece:
    """Piece whose fiber coordinate is affine along each segment (optionally bent, still increasing)."""

    def fiber(x, u):
        a, b = np.asarray(start(u), float), np.asarray(end(u), float)
        r = (np.asarray(x, float) - a) / (b - a)
        return r + slope_bend * r * (1 - r)

    return POUPiece(lo, hi, weight, fiber)


def random_two_piece_spec(rng: np.random.Generator) -> POUSpec:
    """Two overlapping pieces with a smooth partition of unity and increasing local coordinates."""
    u0, u1 = -1.0, 1.0
    split_lo, split_hi = float(rng.uniform(-0.6, -0.1)), float(rng.uniform(0.1, 0.6))
    a0, a1 = float(rng.uniform(-3, 0)), float(rng.uniform(-1, 1))
    length, skew = float(rng.uniform(0.5, 4)), float(rng.uniform(-1, 1))

    def start(u):
        return a0 + a1 * np.sin(np.asarray(u, float))

    def end(u):
        return start(u) + length + 0.3 * np.tanh(skew * np.asarray(u, float))

    def ramp(u):
        r = np.clip((np.asarray(u, float) - split_lo) / (split_hi - split_lo), 0, 1)
        return r * r * (3 - 2 * r)

    bend1, bend2 = (float(rng.uniform(-0.9, 0.9)) for _ in range(2))
    p1 = affine_piece(u0 - 1, split_hi, lambda u: 1 - ramp(u), start, end, bend1)
    p2 = affine_piece(split_lo, u1 + 1, ramp, start, end, bend2)
    return POUSpec((p1, p2), start, end, (u0, u1))


# -- the harness ---------------------------------------------------------------------


def check_fibered_homeo(e: EmbeddingEvaluator, grid: int = 101, tol: float = DEFAULT_TOL) -> GridReport:
    """Grid checks for a fibered embedding.

    Per-line strict monotonicity in the fiber coordinate, injectivity over all
    sampled pairs, declared fixed lines, inverse round-trip residual and (for
    evaluators into a striped model) leaf preservation.
    """
    report = GridReport(samples=grid * grid)
    ts = np.linspace(*e.t_range, grid)
    us = np.linspace(*e.u_range, grid)
    U, T = np.meshgrid(us, ts, indexing="ij")
    X, Z = e.forward(T, U)
    X, Z = np.asarray(X, float), np.asarray(Z, float)

    report.run("finite")
    for r, c in np.argwhere(~(np.isfinite(X) & np.isfinite(Z))):
        report.fail("finite", (T[r, c], U[r, c]), "non-finite image")

    report.run("monotone")
    d = np.diff(X, axis=1)
    for r in range(grid):
        row = d[r]
        sign = 1.0 if np.sum(row > 0) >= np.sum(row < 0) else -1.0
        for c in np.flatnonzero(sign * row <= 0):
            report.fail("monotone", (T[r, c + 1], U[r, c]), "fiber line not strictly monotone")

    report.run("injective")
    pts = np.column_stack([X.ravel(), Z.ravel()])
    ok = np.all(np.isfinite(pts), axis=1)
    tree = cKDTree(pts[ok])
    idx = np.flatnonzero(ok)
    for i, j in sorted(tree.query_pairs(r=tol * 1e-3 + 1e-300)):
        a, b = idx[i], idx[j]
        report.fail("injective", (T.ravel()[a], U.ravel()[a], T.ravel()[b], U.ravel()[b]), "two grid points share an image")

    if e.fixed_t or e.fixed_u:
        report.run("fixed")
        worst = 0.0
        for t in e.fixed_t:
            fx, fz = e.forward(np.full_like(us, t), us)
            res = np.maximum(np.abs(fx - t), np.abs(fz - us))
            worst = max(worst, float(np.max(res)))
            for k in np.flatnonzero(res > tol):
                report.fail("fixed", (t, us[k]), "declared fixed line moved")
        for u in e.fixed_u:
            fx, fz = e.forward(ts, np.full_like(ts, u))
            res = np.maximum(np.abs(fx - ts), np.abs(fz - u))
            worst = max(worst, float(np.max(res)))
            for k in np.flatnonzero(res > tol):
                report.fail("fixed", (ts[k], u), "declared fixed line moved")
        report.residual("fixed", worst)

    if e.inverse is not None:
        report.run("round_trip")
        it, iu = e.inverse(X, Z)
        res = np.maximum(np.abs(np.asarray(it) - T), np.abs(np.asarray(iu) - U))
        res = np.where(np.isfinite(res), res, np.inf)
        report.residual("round_trip", float(np.max(res)))
        for r, c in np.argwhere(res > tol):
            report.fail("round_trip", (T[r, c], U[r, c]), f"inverse residual {res[r, c]:.3e}")

    if e.to_model is not None and e.model is not None:
        from .model import leaf_of

        report.run("leaf_preserving")
        seen: dict = {}
        for r, u in enumerate(us):
            leaves = {leaf_of(e.model, e.to_model(float(t), float(u))) for t in ts}
            if len(leaves) != 1:
                report.fail("leaf_preserving", u, "a fiber line meets several leaves")
                continue
            leaf = leaves.pop()
            if leaf in seen:
                report.fail("leaf_preserving", (seen[leaf], u), "two fiber lines on one leaf")
            seen[leaf] = u
    return report
