"""Exact rational parsing and formatting helpers."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC

from .errors import StructuralError


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected: they cannot carry the exact values the mechanisms branch on.
    """
    if isinstance(value, bool):
        raise StructuralError(f"expected a rational, got boolean {value!r}")
    if isinstance(value, _RationalABC):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"not a rational literal: {value!r}") from exc
    raise StructuralError(f"expected an integer or 'p/q' string, got {value!r}")


def fmt(q: Fraction) -> str:
    """Canonical text form: ``"3"`` or ``"-3/2"``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
