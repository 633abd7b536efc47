import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from periodsieve.arith import (
    QuadRational,
    big_height_quad,
    format_element,
    fundamental_discriminants,
    height,
    height_quad,
    is_square_in_K,
    make_field,
    normalize_rational,
    parse_element,
    quad_arith,
)

fracs = st.fractions(max_denominator=60).filter(lambda r: abs(r.numerator) < 10**4)
discs = st.sampled_from(fundamental_discriminants(-40, 40))


def elems(draw_field=discs):
    return st.builds(lambda D, x, y: QuadRational(x, y, make_field(D)), draw_field, fracs, fracs)


def test_normalize_rational():
    assert normalize_rational(2, 4) == Fraction(1, 2)
    assert normalize_rational(-29, 16) == Fraction(-29, 16)
    z = normalize_rational(0, 5)
    assert (z.numerator, z.denominator) == (0, 1)
    with pytest.raises(ZeroDivisionError):
        normalize_rational(1, 0)


def test_height():
    assert height(Fraction(-29, 16)) == pytest.approx(math.log(29))
    assert height(Fraction(0)) == 0
    assert height(Fraction(1, 1000)) == pytest.approx(math.log(1000))


@pytest.mark.parametrize("D,a,n", [(-3, 1, 1), (-4, 0, 1), (33, 1, -8), (5, 1, -1), (8, 0, -2)])
def test_make_field(D, a, n):
    K = make_field(D)
    assert (K.a, K.n) == (a, n)


@pytest.mark.parametrize("D", [0, 1, 9, -12, 2, 3, -16, 20])
def test_make_field_rejects(D):
    with pytest.raises(ValueError):
        make_field(D)


def test_fundamental_discriminants_count():
    # |D| <= 40 has 13 negative and 13 positive fundamental discriminants
    ds = fundamental_discriminants(-40, 40)
    assert len(ds) == 26
    assert -3 in ds and 33 in ds and -12 not in ds


def test_quad_arith_examples(K33, Km4):
    w = QuadRational(0, 1, K33)
    assert w * w == QuadRational(8, 1, K33)
    u = QuadRational(Fraction(1, 3), 2, K33)
    assert quad_arith(u, QuadRational(0, 0, K33), "add") == u
    i = QuadRational(0, 1, Km4)
    assert (1 + i) * (1 - i) == QuadRational(2, 0, Km4)
    assert quad_arith(i, None, "conjugate") == -i


def test_height_quad(K33, Km3):
    assert height_quad(QuadRational(Fraction(-71, 48), 0, K33)) == pytest.approx(math.log(71))
    assert height_quad(QuadRational(Fraction(1, 4), Fraction(1, 4), Km3)) == pytest.approx(math.log(4))
    assert height_quad(Fraction(0)) == 0


def test_is_square_examples(K33):
    assert is_square_in_K(Fraction(9, 16)) == Fraction(3, 4)
    assert is_square_in_K(Fraction(33, 4)) is None
    r = is_square_in_K(Fraction(33, 4), K33)
    assert r in (QuadRational(Fraction(-1, 2), 1, K33), QuadRational(Fraction(1, 2), -1, K33))


@given(elems(), fracs, fracs, fracs, fracs)
def test_field_axioms(u, x1, y1, x2, y2):
    K = u.field
    v, w = QuadRational(x1, y1, K), QuadRational(x2, y2, K)
    assert (u * v) * w == u * (v * w)
    assert u * (v + w) == u * v + u * w
    assert (u * v).conjugate() == u.conjugate() * v.conjugate()
    assert (u * v).norm() == u.norm() * v.norm()
    if u:
        assert u * u.inverse() == QuadRational(1, 0, K)
        assert (v / u) * u == v


@given(elems())
def test_conjugate_is_involution(u):
    assert u.conjugate().conjugate() == u
    assert u + u.conjugate() == QuadRational(u.trace(), 0, u.field)


@given(elems())
def test_square_root_of_square(u):
    r = is_square_in_K(u * u)
    assert r is not None and r * r == u * u
    assert r in (u, -u)


@given(discs, st.integers(2, 50))
def test_nonsquare_integers(D, m):
    K = make_field(D)
    r = is_square_in_K(Fraction(m), K)
    expected = math.isqrt(m) ** 2 == m or (m * D > 0 and is_square_int_ratio(m, D))
    assert (r is not None) == expected


def is_square_int_ratio(m, D):
    # m = D * t^2 for rational t
    t2 = Fraction(m, D)
    return math.isqrt(t2.numerator) ** 2 == t2.numerator and math.isqrt(t2.denominator) ** 2 == t2.denominator


@given(elems())
def test_format_parse_round_trip(u):
    text = format_element(u)
    assert parse_element(text, u.field) == u
    assert format_element(parse_element(text, u.field)) == text


@given(fracs)
def test_format_parse_rational(r):
    text = format_element(r)
    assert "/" in text and parse_element(text) == r


def test_format_zero():
    assert format_element(Fraction(0)) == "0/1"


@given(elems())
def test_big_height_is_coordinatewise(u):
    assert big_height_quad(u) == max(
        abs(u.x.numerator), u.x.denominator, abs(u.y.numerator), u.y.denominator
    )
