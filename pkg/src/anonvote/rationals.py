"""Exact rational parsing and formatting.

Every probability, value, allocation, and welfare figure in this package is
a ``fractions.Fraction``. Decimal input is rejected on purpose: exactness
requires integer or ``p/q`` forms, and base-10 rounding must never leak
into a computation path.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["Rational", "RationalParseError", "parse_rational", "format_rational"]

Rational = Fraction

_ALLOWED_CHARS = set("0123456789+-/ ")


class RationalParseError(ValueError):
    """A token could not be read as an exact rational."""


def parse_rational(token) -> Fraction:
    """Parse an integer or a ``"p"`` / ``"p/q"`` string into a Fraction.

    Floats and decimal strings are rejected; Fractions pass through.
    """
    if isinstance(token, Fraction):
        return token
    if isinstance(token, bool):
        raise RationalParseError(f"not an exact rational: {token!r}")
    if isinstance(token, int):
        return Fraction(token)
    if isinstance(token, float):
        raise RationalParseError(f"decimal input rejected, use p/q strings: {token!r}")
    if isinstance(token, str):
        text = token.strip()
        if not text or not set(text) <= _ALLOWED_CHARS:
            raise RationalParseError(f"not an exact rational: {token!r}")
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise RationalParseError(f"not an exact rational: {token!r}") from exc
    raise RationalParseError(f"not an exact rational: {token!r}")


def format_rational(value: Fraction) -> str:
    """Render as ``"p"`` or ``"p/q"`` in lowest terms with positive denominator."""
    return str(Fraction(value))
