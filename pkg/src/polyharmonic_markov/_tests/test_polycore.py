from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharmonic_markov._tests.strategies import coordinates, polynomials
from polyharmonic_markov.errors import DimensionError, PolySyntaxError
from polyharmonic_markov.polycore import (
    MPoly,
    eval_poly,
    format_poly,
    format_rational,
    homogeneous_parts,
    iterated_laplacian,
    laplacian,
    monomials_of_degree,
    parse_poly,
    parse_rational,
    polyharmonic_degree,
)


def to_sympy(p, symbols):
    return sympy.Add(
        *[
            sympy.Rational(c.numerator, c.denominator)
            * sympy.Mul(*[s**e for s, e in zip(symbols, mono, strict=True)])
            for mono, c in p.terms.items()
        ]
    )


def test_parse_expands_products():
    """Test that products and powers are expanded to canonical form."""

    p = parse_poly("(x1 - 1/2)*(x1 + 1/2)", 2)
    assert p == MPoly(2, {(2, 0): 1, (0, 0): Fraction(-1, 4)})
    assert p.to_text() == "x1^2 - 1/4"

    q = parse_poly("-(x1 + x2)^2 + 2*x1*x2", 2)
    assert q == MPoly(2, {(2, 0): -1, (0, 2): -1})


def test_to_text_is_graded_lex():
    """Test the printed order and rational formatting."""

    p = parse_poly("x2 - 1/2*x1^2 + 3", 2)
    assert p.to_text() == "-1/2*x1^2 + x2 + 3"
    assert MPoly(3).to_text() == "0"
    assert parse_poly("x3*x1", 3).to_text() == "x1*x3"


@given(polynomials(3, 4))
def test_to_text_reparses(p):
    """Test that printing and parsing give back the same polynomial."""

    assert parse_poly(p.to_text(), 3) == p


def test_parse_syntax_error_position():
    """Test that malformed input reports where parsing stopped."""

    with pytest.raises(PolySyntaxError) as excinfo:
        parse_poly("x1 + * x2", 2)
    assert excinfo.value.position == 5
    assert "position 5" in str(excinfo.value)

    with pytest.raises(PolySyntaxError):
        parse_poly("x1 +", 2)
    with pytest.raises(PolySyntaxError):
        parse_poly("y1", 2)


def test_parse_rejects_zero_denominator():
    """Test that a literal with denominator 0 is a syntax error."""

    with pytest.raises(PolySyntaxError):
        parse_poly("1/0*x1", 2)


def test_rational_literals():
    """Test the strict p/q format, including a zero denominator."""

    assert parse_rational("-3/6") == Fraction(-1, 2)
    assert format_rational(Fraction(4, 2)) == "2"
    for bad in ("1/0", "-2/00", "0.5", "1/", 3):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_format_poly_is_canonical():
    """Test that equal polynomials print identically."""

    p = parse_poly("x2*x1 + 1/2 - x1^2", 2)
    assert format_poly(p) == "-x1^2 + x1*x2 + 1/2"
    assert format_poly(p) == format_poly(parse_poly("1/2 + x1*x2 - x1^2", 2))


def test_parse_variable_out_of_range():
    """Test that x3 is rejected in the plane and dimension 1 is refused."""

    with pytest.raises(DimensionError):
        parse_poly("x1 + x3", 2)
    with pytest.raises(DimensionError):
        parse_poly("x1", 1)
    with pytest.raises(DimensionError):
        MPoly(1, {(1,): 1})


def test_arithmetic():
    """Test ring operations, scalar division and equality with scalars."""

    x1 = MPoly.variable(2, 0)
    x2 = MPoly.variable(2, 1)
    assert (x1 + x2) * (x1 - x2) == x1**2 - x2**2
    assert (x1 - x1) == 0
    assert not (x1 - x1)
    assert (2 * x1) / 4 == x1 * Fraction(1, 2)
    assert 1 - x1 == -(x1 - 1)
    assert (x1 + 1) ** 0 == 1
    assert MPoly.radius_squared(2) == x1**2 + x2**2
    assert hash(x1 * x2) == hash(x2 * x1)
    with pytest.raises(DimensionError):
        x1 + MPoly.variable(3, 0)
    with pytest.raises(ValueError):
        x1**-1


def test_degree_and_parts():
    """Test degree, homogeneity and homogeneous parts."""

    p = parse_poly("x1^3 + x1*x2 - x2 + 5", 2)
    assert p.degree == 3
    assert MPoly(2).degree == -1
    assert not p.is_homogeneous()
    parts = homogeneous_parts(p)
    assert [j for j, _ in parts.nonzero()] == [0, 1, 2, 3]
    assert parts.parts[2] == parse_poly("x1*x2", 2)
    assert parts.reconstruct() == p
    assert homogeneous_parts(MPoly(2)).parts == ()


def test_parse_zero_and_sphere():
    """Test the zero polynomial and the parts of |x|^2 - 1."""

    assert parse_poly("0", 3) == MPoly(3)
    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    assert sphere == MPoly(2, {(2, 0): 1, (0, 2): 1, (0, 0): -1})
    assert homogeneous_parts(sphere).parts == (
        MPoly.constant(2, -1),
        MPoly(2),
        MPoly.radius_squared(2),
    )


@given(polynomials(3, 5))
def test_homogeneous_parts_reconstruct(p):
    """Test that every part is homogeneous of its index and they sum to p."""

    parts = homogeneous_parts(p)
    for j, part in parts.nonzero():
        assert part.is_homogeneous()
        assert part.degree == j
    assert parts.reconstruct() == p


def test_monomials_of_degree_order():
    """Test the descending graded-lex listing."""

    assert list(monomials_of_degree(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    assert len(list(monomials_of_degree(3, 4))) == 15


def test_laplacian_examples():
    """Test the Laplacian on a few hand-computed inputs."""

    assert laplacian(MPoly.radius_squared(2)) == 4
    assert laplacian(MPoly.radius_squared(3)) == 6
    assert laplacian(parse_poly("x1^4", 2)) == parse_poly("12*x1^2", 2)
    assert laplacian(parse_poly("x1^2 - x2^2", 2)) == 0
    assert iterated_laplacian(parse_poly("(x1^2 + x2^2)^2", 2), 2) == 64


@settings(max_examples=40)
@given(st.sampled_from([2, 3, 4]).flatmap(lambda n: polynomials(n, 5)))
def test_laplacian_matches_sympy(p):
    """Test the Laplacian against symbolic differentiation."""

    symbols = sympy.symbols(f"x1:{p.dim + 1}")
    expected = sum(
        sympy.diff(to_sympy(p, symbols), s, 2) for s in symbols
    )
    assert sympy.expand(expected - to_sympy(laplacian(p), symbols)) == 0


@settings(max_examples=40)
@given(
    st.sampled_from([2, 3]).flatmap(
        lambda n: st.tuples(polynomials(n, 5), polynomials(n, 5))
    ),
    st.fractions(-3, 3, max_denominator=4),
)
def test_laplacian_is_linear_and_lowers_degree(pair, scale):
    """Test linearity of the Laplacian and deg(laplacian p) <= deg p - 2."""

    p, q = pair
    assert laplacian(p + scale * q) == laplacian(p) + scale * laplacian(q)
    assert laplacian(p).degree <= p.degree - 2 or not laplacian(p)


def test_polyharmonic_degree_examples():
    """Test d(P) on harmonic, biharmonic and zero inputs."""

    assert polyharmonic_degree(parse_poly("x1^2 - x2^2", 2)) == 0
    assert polyharmonic_degree(parse_poly("x1^2 + x2^2", 2)) == 1
    assert polyharmonic_degree(parse_poly("(x1^2 + x2^2)^2", 2)) == 2
    assert polyharmonic_degree(parse_poly("x1^3", 2)) == 1
    assert polyharmonic_degree(parse_poly("7", 3)) == 0
    assert polyharmonic_degree(MPoly(2)) == 0


@settings(max_examples=60)
@given(st.sampled_from([2, 3, 4]).flatmap(lambda n: polynomials(n, 4)))
def test_radius_factor_raises_degree(q):
    """Test that multiplying by |x|^2 raises d by exactly one."""

    r = MPoly.radius_squared(q.dim)
    assert polyharmonic_degree(r * q) == polyharmonic_degree(q) + 1


@settings(max_examples=40)
@given(polynomials(2, 4), polynomials(2, 4))
def test_degree_of_sum_is_bounded(p, q):
    """Test d(p + q) <= max(d(p), d(q)) and d(p) <= deg p / 2."""

    assert polyharmonic_degree(p + q) <= max(
        polyharmonic_degree(p), polyharmonic_degree(q)
    )
    assert 2 * polyharmonic_degree(p) <= p.degree


def test_eval_poly():
    """Test exact evaluation and dimension checks."""

    p = parse_poly("x1^2 - x2 + 1/3", 2)
    assert eval_poly(p, (Fraction(1, 2), 1)) == Fraction(-5, 12)
    with pytest.raises(DimensionError):
        eval_poly(p, (1, 2, 3))


@given(polynomials(3, 4), st.tuples(coordinates, coordinates, coordinates))
def test_numeric_evaluation_matches_exact(p, point):
    """Test that the numpy evaluation agrees with exact arithmetic."""

    exact = float(p(point))
    numeric = p.evaluate_numeric(np.array([float(x) for x in point]))
    np.testing.assert_allclose(numeric, exact, rtol=1e-12, atol=1e-12)


def test_derivative():
    """Test partial derivatives."""

    p = parse_poly("x1^3*x2 + x2^2", 2)
    assert p.derivative(0) == parse_poly("3*x1^2*x2", 2)
    assert p.derivative(1) == parse_poly("x1^3 + 2*x2", 2)
