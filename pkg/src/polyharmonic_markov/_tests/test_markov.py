import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharmonic_markov._tests.strategies import dims, measures, polynomials
from polyharmonic_markov.errors import (
    DimensionError,
    EvaluationError,
    TruncationError,
)
from polyharmonic_markov.harmonic import harmonic_basis, np_formula
from polyharmonic_markov.markov import (
    SeriesRep,
    Verdict,
    identity_check,
    markov_eval_numeric,
    markov_series,
    moment_functional,
    orthogonal_rest_profile,
    polyharmonicity_check,
    product_measure_series,
    radial_operator,
    rest_series,
    same_transform,
    second_kind,
    second_kind_orthogonality,
    support_verdict,
)
from polyharmonic_markov.measures import Atom, DiscreteMeasure, integrate_poly
from polyharmonic_markov.polycore import MPoly, parse_poly, polyharmonic_degree
from polyharmonic_markov.verify import (
    catalog_varieties,
    sample_measure,
    uniform_circle_measure,
)

QUARTER = Fraction(1, 4)


def ring(radius):
    """Four quarter-weight atoms on the circle of the given radius."""
    return DiscreteMeasure.from_pairs(
        2,
        [
            ((radius, 0), QUARTER),
            ((0, radius), QUARTER),
            ((-radius, 0), QUARTER),
            ((0, -radius), QUARTER),
        ],
    )


def test_series_of_origin_atom():
    """Test that a point mass at the origin gives 1/zeta."""

    mu = DiscreteMeasure.from_pairs(3, [((0, 0, 0), 1)])
    assert markov_series(mu, 6).coeffs == {(0, 0, 1): 1}


def test_series_of_four_roots(circle4):
    """Test that only the harmonic degrees 0 and 4 survive."""

    series = markov_series(circle4, 7)
    assert series.coeffs == {
        (0, 0, 1): 1,
        (2, 0, 1): 1,
        (4, 0, 1): 1,
        (6, 0, 1): 1,
        (4, 4, 1): 2,
        (6, 4, 1): 2,
    }
    assert series.level(4) == {(0, 1): 1, (4, 1): 2}
    assert series.first_nonzero() == (0, 0, 1)
    assert SeriesRep.from_json(series.to_json()) == series
    with pytest.raises(ValueError):
        markov_series(circle4, -1)


def test_uniform_circle_radial_coefficients():
    """Test that the k = 0 coefficients of 32 circle atoms are all 1."""

    series = markov_series(uniform_circle_measure(32), 30)
    for s in range(0, 31, 2):
        assert series.coefficient(s, 0, 1) == 1


@pytest.mark.parametrize("zeta", [2, 2j, 3 + 1j])
def test_uniform_circle_numeric(zeta):
    """Test 32 circle atoms against zeta / (zeta^2 - 1)."""

    mu = uniform_circle_measure(32)
    value = markov_eval_numeric(mu, zeta, (1.0, 0.0))
    expected = zeta / (zeta * zeta - 1)
    assert abs(value - expected) <= 1e-9 * abs(expected)


def test_series_matches_numeric_in_the_plane(circle4):
    """Test the truncated series against the kernel sum at zeta = 3i."""

    theta = (0.6, 0.8)
    series = markov_series(circle4, 40)
    value = markov_eval_numeric(circle4, 3j, theta)
    np.testing.assert_allclose(series.evaluate(3j, theta), value, rtol=1e-10)


def test_series_matches_numeric_in_space():
    """Test the truncated series against the kernel sum for n = 3."""

    mu = DiscreteMeasure.from_pairs(
        3,
        [
            ((QUARTER, 0, 0), 1),
            ((0, -QUARTER, QUARTER), Fraction(-1, 2)),
        ],
    )
    theta = (0.0, 0.6, 0.8)
    series = markov_series(mu, 12)
    value = markov_eval_numeric(mu, 3, theta)
    np.testing.assert_allclose(series.evaluate(3, theta), value, rtol=1e-8)


def test_numeric_evaluation_domain(circle4):
    """Test the checks on zeta, theta and odd dimensions."""

    with pytest.raises(EvaluationError):
        markov_eval_numeric(circle4, 1, (1.0, 0.0))
    with pytest.raises(EvaluationError):
        markov_eval_numeric(circle4, 2, (1.0, 1.0))
    with pytest.raises(DimensionError):
        markov_eval_numeric(circle4, 2, (1.0, 0.0, 0.0))
    space = DiscreteMeasure.from_pairs(3, [((0, 0, 0), 1)])
    with pytest.raises(EvaluationError):
        markov_eval_numeric(space, 2j, (1.0, 0.0, 0.0))
    assert markov_eval_numeric(space, 2, (1.0, 0.0, 0.0)) == pytest.approx(
        0.5
    )
    assert markov_eval_numeric(DiscreteMeasure(2), 2, (1.0, 0.0)) == 0


@settings(max_examples=60)
@given(
    dims.flatmap(lambda n: st.tuples(polynomials(n, 4), measures(n, 5)))
)
def test_moment_functional_integrates(case):
    """Test that pairing P with the Markov series integrates P."""

    P, mu = case
    series = markov_series(mu, P.degree)
    assert moment_functional(series, P) == integrate_poly(mu, P)


def test_moment_functional_truncation(circle4):
    """Test that a series shorter than deg P is refused."""

    series = markov_series(circle4, 1)
    assert moment_functional(series, MPoly.constant(2)) == 1
    with pytest.raises(TruncationError):
        moment_functional(series, parse_poly("x1^2", 2))


def test_rest_series(circle4):
    """Test R_P for P = 1, for a supported P and at a single atom."""

    assert rest_series(MPoly.constant(2), circle4, 5) == markov_series(
        circle4, 5
    )
    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    assert rest_series(sphere, circle4, 8).is_zero()
    half = DiscreteMeasure.from_pairs(2, [((Fraction(1, 2), 0), 1)])
    rest = rest_series(MPoly.variable(2, 0), half, 1)
    assert rest.coefficient(0, 0, 1) == Fraction(1, 2)
    assert rest.coefficient(1, 1, 1) == Fraction(1, 2)


def test_second_kind_on_circle(circle4):
    """Test Q_P = zeta for |x|^2 - 1 and four atoms on the circle."""

    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    rep = second_kind(sphere, circle4, 3)
    assert rep.sectors == {(0, 1): (Fraction(1),)}
    assert rep.coefficients() == {(-2, 0, 1): 1}
    assert rep.to_json()["sectors"] == [{"k": 0, "m": 1, "p": ["1"]}]


def test_second_kind_sees_only_some_moments():
    """Test that different measures can share Q_P but not the transform."""

    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    origin = DiscreteMeasure.from_pairs(2, [((0, 0), 1)])
    inner = ring(Fraction(1, 2))
    assert (
        second_kind(sphere, origin, 3).sectors
        == second_kind(sphere, inner, 3).sectors
    )
    assert not same_transform(origin, inner)


def test_second_kind_edge_cases(circle4):
    """Test the zero measure, the zero polynomial and the default k_max."""

    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    assert second_kind(sphere, DiscreteMeasure(2), 4).sectors == {}
    assert second_kind(sphere, circle4).k_max == 12
    with pytest.raises(ValueError):
        second_kind(MPoly(2), circle4)
    with pytest.raises(DimensionError):
        second_kind(MPoly.constant(3), circle4)


@settings(max_examples=30)
@given(
    dims.flatmap(lambda n: st.tuples(polynomials(n, 3), measures(n, 3)))
)
def test_second_kind_sector_degrees(case):
    """Test deg p_{k,m} < d(P * Y_{k,m}) <= N_P for every sector."""

    P, mu = case
    bound = np_formula(P)
    for (k, m), poly in second_kind(P, mu, P.degree + 2).sectors.items():
        y = harmonic_basis(P.dim, k).polys[m - 1]
        assert len(poly) - 1 < polyharmonic_degree(P * y) <= bound


def test_identity_examples(circle4):
    """Test the identity for P = 1, on the circle and in space."""

    assert identity_check(MPoly.constant(2), circle4, 6)
    assert identity_check(parse_poly("x1^2 + x2^2 - 1", 2), circle4, 8)
    mu = DiscreteMeasure.from_pairs(
        3,
        [
            ((Fraction(1, 2), 0, 0), 2),
            ((0, Fraction(1, 3), Fraction(-1, 2)), Fraction(-1, 3)),
        ],
    )
    assert identity_check(parse_poly("x1*x2 - 1/4", 3), mu, 5)
    with pytest.raises(TruncationError):
        identity_check(parse_poly("x1^3", 2), circle4, 2)


@settings(max_examples=25)
@given(
    dims.flatmap(lambda n: st.tuples(polynomials(n, 3), measures(n, 4)))
)
def test_identity_holds(case):
    """Test P(zeta theta) mu^ = Q_P + R_P coefficientwise."""

    P, mu = case
    assert identity_check(P, mu, P.degree + 6)


def test_support_verdicts(circle4, caplog):
    """Test the three verdicts and the certificate."""

    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    report = support_verdict(sphere, circle4, 10)
    assert report.verdict is Verdict.SUPPORTED

    half = DiscreteMeasure.from_pairs(2, [((Fraction(1, 2), 0), 1)])
    report = support_verdict(sphere, half, 4)
    assert report.verdict is Verdict.NOT_SUPPORTED
    assert report.certificate == (0, 0, 1, Fraction(-3, 4))
    assert report.to_json()["certificate"]["value"] == "-3/4"

    with caplog.at_level(logging.WARNING):
        report = support_verdict(sphere, circle4, 3)
    assert report.verdict is Verdict.UNDECIDED
    assert "below the bound" in caplog.text


@pytest.mark.parametrize("dim", [2, 3])
def test_support_of_positive_measures_on_catalog(dim):
    """Test supported iff the integral of P^2 vanishes, both directions."""

    rng = np.random.default_rng(7)
    for variety in catalog_varieties(dim):
        mu = sample_measure(variety, rng, 3, signed=False)
        P = variety.poly
        assert integrate_poly(mu, P * P) == 0
        Q = MPoly.variable(dim, 0) ** 3 + MPoly.radius_squared(dim)
        assert integrate_poly(mu, P * Q) == 0
        report = support_verdict(P, mu, 2 * len(mu) + P.degree)
        assert report.verdict is Verdict.SUPPORTED

        off = (QUARTER, Fraction(1, 3)) + (Fraction(0),) * (dim - 2)
        spread = DiscreteMeasure(
            dim, (*mu.atoms, Atom(off, Fraction(1))), mu.radius
        )
        assert integrate_poly(spread, P * P) > 0
        report = support_verdict(P, spread, 2 * len(spread) + P.degree)
        assert report.verdict is Verdict.NOT_SUPPORTED


@settings(max_examples=30)
@given(
    dims.flatmap(
        lambda n: st.tuples(
            polynomials(n, 2), polynomials(n, 3), measures(n, 3)
        )
    )
)
def test_second_kind_orthogonality(case):
    """Test that h(zeta theta) pairs to zero against Q_P."""

    P, h, mu = case
    assert second_kind_orthogonality(P, mu, h) == 0


def test_radial_operator():
    """Test L_(k) on r^k, on r^2 and on a Laurent monomial."""

    assert radial_operator({3: Fraction(1)}, 3, 2) == {}
    # Laplacian of |x|^2 in the plane is 4
    assert radial_operator({2: Fraction(1)}, 0, 2) == {0: 4}
    assert radial_operator({-1: Fraction(2)}, 0, 3) == {}
    assert radial_operator({1: Fraction(1)}, 2, 3) == {-1: -4}


def test_polyharmonicity_examples(circle4):
    """Test the sector check on the circle and for a biharmonic P."""

    sphere = parse_poly("x1^2 + x2^2 - 1", 2)
    assert polyharmonicity_check(sphere, circle4, 6)
    mu = ring(Fraction(1, 2))
    assert polyharmonicity_check(parse_poly("x1*x2", 2), mu, 5)
    with pytest.raises(ValueError):
        polyharmonicity_check(MPoly(2), mu)


@settings(max_examples=30)
@given(
    dims.flatmap(lambda n: st.tuples(polynomials(n, 3), measures(n, 3)))
)
def test_polyharmonicity_holds(case):
    """Test that every sector of Q_P is annihilated by L_(k)^N_P."""

    P, mu = case
    assert polyharmonicity_check(P, mu, P.degree + 4)


def test_same_transform(circle4):
    """Test uniqueness of the transform on small measures."""

    shuffled = DiscreteMeasure.from_pairs(
        2, [(a.point, a.weight) for a in reversed(circle4.atoms)]
    )
    assert same_transform(circle4, shuffled)
    heavier = DiscreteMeasure(
        2,
        (Atom(circle4.atoms[0].point, Fraction(1, 3)), *circle4.atoms[1:]),
    )
    assert not same_transform(circle4, heavier)
    with pytest.raises(DimensionError):
        same_transform(circle4, DiscreteMeasure(3))


@settings(max_examples=25)
@given(dims.flatmap(lambda n: measures(n, 3)), st.integers(0, 2))
def test_changed_weight_changes_transform(mu, index):
    """Test that changing one weight changes the series."""

    atoms = list(mu.atoms)
    index %= len(atoms)
    atoms[index] = Atom(atoms[index].point, atoms[index].weight * 2)
    nu = DiscreteMeasure(mu.dim, tuple(atoms), mu.radius)
    assert not same_transform(mu, nu)


@settings(max_examples=30)
@given(
    dims.flatmap(lambda n: st.tuples(measures(n, 3), measures(n, 3))),
    st.booleans(),
)
def test_transform_determines_measure(pair, share):
    """Test equal series up to 2(|mu| + |nu|) iff equal atoms and weights."""

    mu, nu = pair
    if share:
        # keep the first atom of mu so the supports overlap
        first = mu.atoms[0]
        rest = tuple(a for a in nu.atoms if a.point != first.point)
        nu = DiscreteMeasure(nu.dim, (first, *rest), nu.radius)
    assert same_transform(mu, nu) == (mu.atom_set() == nu.atom_set())


def test_moved_atom_changes_transform():
    """Test that reflecting one atom is detected."""

    half = Fraction(1, 2)
    mu = DiscreteMeasure.from_pairs(2, [((0, half), 1), ((half, 0), 2)])
    nu = DiscreteMeasure.from_pairs(2, [((0, -half), 1), ((half, 0), 2)])
    assert not same_transform(mu, nu)
    assert same_transform(mu, mu)


def chebyshev_u(level, x):
    previous, current = Fraction(0), Fraction(1)
    for _ in range(level):
        previous, current = current, 2 * x * current - previous
    return current


def test_product_measure_series():
    """Test sigma x delta_0 against the general series and U_l."""

    half = Fraction(1, 2)
    sigma = [(half, 1), (-half, half)]
    series = product_measure_series(sigma, 6)
    planar = DiscreteMeasure.from_pairs(
        2, [((a, 0), w) for a, w in sigma]
    )
    assert series == markov_series(planar, 6)

    theta = (Fraction(3, 5), Fraction(4, 5))
    for level in range(7):
        moment = sum(w * a**level for a, w in sigma)
        total = sum(
            value * harmonic_basis(2, k).polys[m - 1](theta)
            for (k, m), value in series.level(level).items()
        )
        assert total == moment * chebyshev_u(level, theta[0])


@pytest.mark.experimental
@pytest.mark.parametrize("half_degree", [1, 2])
def test_orthogonal_rest_profile(half_degree):
    """Test the rest profile of an orthogonal polynomial of degree 2N."""

    third = Fraction(1, 3)
    mu = DiscreteMeasure.from_pairs(
        2,
        [
            ((third, 0), 1),
            ((0, third), 2),
            ((-third, third), 1),
            ((Fraction(1, 2), Fraction(-1, 4)), 3),
            ((0, 0), 1),
        ],
    )
    profile = orthogonal_rest_profile(mu, half_degree)
    assert profile.poly.degree == 2 * half_degree
    assert profile.leading_vanish
    assert profile.top_constant
    with pytest.raises(ValueError):
        orthogonal_rest_profile(mu, 0)
