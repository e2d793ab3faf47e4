from fractions import Fraction

from hypothesis import strategies as st

from polyharmonic_markov.harmonic import harmonic_basis
from polyharmonic_markov.measures import Atom, DiscreteMeasure
from polyharmonic_markov.polycore import MPoly, monomials_of_degree

small_rationals = st.fractions(
    min_value=-3, max_value=3, max_denominator=4
)
nonzero_rationals = small_rationals.filter(bool)
positive_rationals = st.fractions(
    min_value=Fraction(1, 4), max_value=3, max_denominator=4
)
coordinates = st.fractions(
    min_value=Fraction(-1, 2), max_value=Fraction(1, 2), max_denominator=4
)
dims = st.sampled_from([2, 3])


@st.composite
def polynomials(draw, dim, max_degree, max_terms=6):
    """Nonzero polynomials of degree <= max_degree."""
    monomials = [
        mono
        for degree in range(max_degree + 1)
        for mono in monomials_of_degree(dim, degree)
    ]
    chosen = draw(
        st.lists(
            st.sampled_from(monomials),
            min_size=1,
            max_size=max_terms,
            unique=True,
        )
    )
    return MPoly(dim, {mono: draw(nonzero_rationals) for mono in chosen})


@st.composite
def harmonic_polynomials(draw, dim, max_degree):
    """Nonzero harmonic polynomials assembled from the harmonic layers."""
    top = draw(st.integers(0, max_degree))
    total = MPoly(dim)
    for k in range(top + 1):
        layer = harmonic_basis(dim, k)
        coords = draw(
            st.lists(small_rationals, min_size=len(layer), max_size=len(layer))
        )
        if k == top and not any(coords):
            coords[0] = Fraction(1)
        total = total + layer.combine(coords)
    return total


@st.composite
def measures(draw, dim, max_atoms, positive=False):
    """Measures with distinct atoms inside the unit ball."""
    points = draw(
        st.lists(
            st.tuples(*[coordinates] * dim),
            min_size=1,
            max_size=max_atoms,
            unique=True,
        )
    )
    weights = positive_rationals if positive else nonzero_rationals
    atoms = tuple(Atom(point, draw(weights)) for point in points)
    return DiscreteMeasure(dim, atoms, Fraction(1))
