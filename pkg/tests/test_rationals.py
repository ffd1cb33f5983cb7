from fractions import Fraction

import pytest

from anonvote.rationals import RationalParseError, format_rational, parse_rational


def test_parse_accepts_integers_strings_and_fractions():
    assert parse_rational(7) == Fraction(7)
    assert parse_rational(-3) == Fraction(-3)
    assert parse_rational("499/1000") == Fraction(499, 1000)
    assert parse_rational("-100") == Fraction(-100)
    assert parse_rational(" 2/4 ") == Fraction(1, 2)
    assert parse_rational(Fraction(5, 3)) == Fraction(5, 3)


@pytest.mark.parametrize(
    "bad", ["1.5", "1e3", "", "abc", "1/0", "1/2/3", 0.5, True, None, [1]]
)
def test_parse_rejects_inexact_or_malformed(bad):
    with pytest.raises(RationalParseError):
        parse_rational(bad)


def test_format_round_trips_lowest_terms():
    assert format_rational(Fraction(5)) == "5"
    assert format_rational(Fraction(-499, 1000)) == "-499/1000"
    assert parse_rational(format_rational(Fraction(12, 8))) == Fraction(3, 2)
