"""Reference fixtures and seeded random striped models."""

from __future__ import annotations

import random
from fractions import Fraction
from importlib import resources

from .extrat import NEG_INF, POS_INF
from .model import (
    ARCS,
    BOUNDARY,
    FLIP,
    KEEP,
    OPEN,
    SIDES,
    Arc,
    ArcRef,
    Gluing,
    SideSpec,
    Strip,
    StripModel,
    parse_model,
    require_valid,
)

FIXTURES = ("M0", "M1", "M2", "M3", "M4")
VALID_FIXTURES = ("M0", "M1", "M2", "M3")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    return resources.files("stripfol").joinpath("fixtures", f"{name}.model").read_text(encoding="utf-8")


def load_fixture(name: str) -> StripModel:
    return parse_model(fixture_text(name))


# Arc slot kinds, listed in their left-to-right order on a side.
_KIND_ORDER = {"left": 0, "finite": 1, "right": 2, "full": 0}

_PARTNERS = {
    "finite": [("finite", KEEP), ("finite", FLIP)],
    "left": [("left", KEEP), ("right", FLIP)],
    "right": [("right", KEEP), ("left", FLIP)],
    "full": [("full", KEEP), ("full", FLIP)],
}


def _accepts(slots: list[str], kind: str, max_arcs: int) -> bool:
    if len(slots) >= max_arcs or "full" in slots:
        return False
    if kind == "full":
        return not slots
    if kind in ("left", "right"):
        return kind not in slots
    return True


def random_model(seed: int, max_strips: int = 6, max_arcs: int = 4) -> StripModel:
    """A valid model with at most ``max_strips`` strips and ``max_arcs`` arcs per side."""
    rng = random.Random(seed)
    n = rng.randint(1, max_strips)
    sids = [f"s{i + 1}" for i in range(n)]
    kinds: dict[tuple[str, str], str] = {}
    for sid in sids:
        for side in SIDES:
            kinds[(sid, side)] = rng.choices([OPEN, BOUNDARY, ARCS], weights=[2, 1, 6])[0]

    slots: dict[tuple[str, str], list[str]] = {key: [] for key, k in kinds.items() if k == ARCS}
    pairs: list[tuple[tuple[str, str], int, tuple[str, str], int, str]] = []
    for _ in range(rng.randint(1, 3 * n)):
        kind = rng.choices(["finite", "left", "right", "full"], weights=[5, 2, 2, 1])[0]
        other, orient = rng.choice(_PARTNERS[kind])
        hosts = [key for key, sl in slots.items() if _accepts(sl, kind, max_arcs)]
        if not hosts:
            continue
        first = rng.choice(hosts)
        slots[first].append(kind)
        partners = [key for key, sl in slots.items() if key != first and _accepts(sl, other, max_arcs)]
        if not partners:
            slots[first].pop()
            continue
        second = rng.choice(partners)
        slots[second].append(other)
        pairs.append((first, len(slots[first]) - 1, second, len(slots[second]) - 1, orient))

    # Lay out the slots of each side left to right with random rational endpoints.
    placed: dict[tuple[str, str], list[tuple[int, Arc]]] = {}
    for key, sl in slots.items():
        order = sorted(range(len(sl)), key=lambda i: (_KIND_ORDER[sl[i]], i))
        cursor = Fraction(rng.randint(-6, 2), rng.choice([1, 2, 3]))
        arcs: list[tuple[int, Arc]] = []
        for i in order:
            kind = sl[i]
            if kind == "full":
                arcs.append((i, Arc(NEG_INF, POS_INF)))
                continue
            if kind == "left":
                arcs.append((i, Arc(NEG_INF, cursor)))
                continue
            start = cursor + (Fraction(rng.randint(1, 6), rng.choice([1, 2, 4])) if rng.random() < 0.6 else 0)
            if kind == "right":
                arcs.append((i, Arc(start, POS_INF)))
                continue
            end = start + Fraction(rng.randint(1, 8), rng.choice([1, 2, 3]))
            arcs.append((i, Arc(start, end)))
            cursor = end
        placed[key] = arcs

    index_of: dict[tuple[tuple[str, str], int], int] = {}
    sides: dict[tuple[str, str], SideSpec] = {}
    for key, kind in kinds.items():
        arcs = placed.get(key, [])
        if kind == ARCS and not arcs:
            kind = OPEN
        if kind == ARCS:
            for pos, (slot, _) in enumerate(arcs):
                index_of[(key, slot)] = pos
            sides[key] = SideSpec(ARCS, tuple(a for _, a in arcs))
        else:
            sides[key] = SideSpec(kind)

    gluings = []
    for first, i, second, j, orient in pairs:
        a = ArcRef(first[0], first[1], index_of[(first, i)])
        b = ArcRef(second[0], second[1], index_of[(second, j)])
        if kinds_of(sides, a) == "finite" and rng.random() < 0.5:
            orient = FLIP if orient == KEEP else KEEP
        gluings.append(Gluing(a, b, orient))
    gluings.sort(key=lambda g: (g.a, g.b))
    model = StripModel(
        tuple(Strip(sid, sides[(sid, "bottom")], sides[(sid, "top")]) for sid in sids), tuple(gluings)
    )
    require_valid(model)
    return model


def kinds_of(sides: dict[tuple[str, str], SideSpec], ref: ArcRef) -> str:
    return sides[(ref.strip, ref.side)].arcs[ref.index].end_type


def random_models(count: int = 10, seed: int = 0) -> list[StripModel]:
    return [random_model(seed * 1000 + k) for k in range(count)]
