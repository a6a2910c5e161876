"""Extended rationals: exact fractions plus the two infinities.

Finite values are :class:`fractions.Fraction`; the infinities are the float
values ``-inf``/``+inf``, which compare correctly against fractions.  Arithmetic
is only ever performed on finite values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

ExtRat = Union[Fraction, float]

NEG_INF: float = -math.inf
POS_INF: float = math.inf

_RATIONAL = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def parse_extrat(text: str) -> ExtRat:
    """Parse ``int``, ``int/int``, ``-inf`` or ``+inf`` (``inf`` is accepted too)."""
    token = text.strip()
    if token in ("-inf", "-oo"):
        return NEG_INF
    if token in ("+inf", "inf", "+oo", "oo"):
        return POS_INF
    if not _RATIONAL.match(token):
        raise ValueError(f"malformed rational {text!r}")
    value = Fraction(token)
    return value


def parse_rational(text: str) -> Fraction:
    value = parse_extrat(text)
    if not is_finite(value):
        raise ValueError(f"expected a finite rational, got {text!r}")
    return value


def is_finite(x: ExtRat) -> bool:
    return isinstance(x, Fraction)


def as_extrat(x) -> ExtRat:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float) and math.isinf(x):
        return x
    if isinstance(x, str):
        return parse_extrat(x)
    raise TypeError(f"cannot interpret {x!r} as an extended rational")


def format_extrat(x: ExtRat) -> str:
    if not is_finite(x):
        return "+inf" if x > 0 else "-inf"
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class AffineMap:
    """``x -> scale * x + shift`` with exact coefficients, ``scale != 0``."""

    scale: Fraction
    shift: Fraction

    def __call__(self, x: ExtRat) -> ExtRat:
        if not is_finite(x):
            return x if self.scale > 0 else -x
        return self.scale * x + self.shift

    def inverse(self) -> AffineMap:
        return AffineMap(1 / self.scale, -self.shift / self.scale)

    def compose(self, inner: AffineMap) -> AffineMap:
        """Return ``self o inner``."""
        return AffineMap(self.scale * inner.scale, self.scale * inner.shift + self.shift)

    @property
    def preserves_orientation(self) -> bool:
        return self.scale > 0

    def describe(self) -> str:
        return f"x -> {format_extrat(self.scale)}*x + {format_extrat(self.shift)}"


IDENTITY = AffineMap(Fraction(1), Fraction(0))
