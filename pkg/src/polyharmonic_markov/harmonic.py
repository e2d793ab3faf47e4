import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, prod

from polyharmonic_markov import exact_linalg
from polyharmonic_markov.errors import DimensionError, TruncationError
from polyharmonic_markov.polycore import (
    MPoly,
    format_rational,
    homogeneous_parts,
    iterated_laplacian,
    laplacian,
    monomials_of_degree,
    polyharmonic_degree,
)

logger = logging.getLogger(__name__)


def harmonic_dimension(dim: int, degree: int) -> int:
    """Number a_k of independent harmonic homogeneous polynomials."""
    if degree < 0:
        return 0
    total = comb(degree + dim - 1, dim - 1)
    if degree >= 2:
        total -= comb(degree + dim - 3, dim - 1)
    return total


@lru_cache(maxsize=None)
def _monomial_integral(alpha: tuple[int, ...], dim: int) -> Fraction:
    if any(e % 2 for e in alpha):
        return Fraction(0)
    halves = [e // 2 for e in alpha]
    numerator = prod(prod(range(1, 2 * b, 2)) for b in halves)
    denominator = prod(dim + 2 * j for j in range(sum(halves)))
    return Fraction(numerator, denominator)


def sphere_monomial_integral(alpha, dim: int) -> Fraction:
    """Average of x^alpha over the unit sphere S^(dim-1)."""
    alpha = tuple(int(e) for e in alpha)
    if len(alpha) != dim:
        raise DimensionError(
            f"exponent of length {len(alpha)} for dimension {dim}"
        )
    return _monomial_integral(alpha, dim)


def sphere_inner(p: MPoly, q: MPoly) -> Fraction:
    """Sphere-averaged product of two polynomials."""
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} and {q.dim}")
    # only monomials of equal parity pattern pair to a nonzero integral
    by_parity = defaultdict(list)
    for mono, coeff in q.terms.items():
        by_parity[tuple(e & 1 for e in mono)].append((mono, coeff))
    total = Fraction(0)
    for mono, coeff in p.terms.items():
        for other, other_coeff in by_parity.get(
            tuple(e & 1 for e in mono), ()
        ):
            alpha = tuple(a + b for a, b in zip(mono, other, strict=True))
            total += coeff * other_coeff * _monomial_integral(alpha, p.dim)
    return total


@dataclass(frozen=True)
class LayerElement:
    poly: MPoly
    norm_sq: Fraction


@dataclass(frozen=True)
class HarmonicLayer:
    """Orthogonal basis Y_{k,1..a_k} of one harmonic degree.

    Element ``m - 1`` is Y_{k,m}. Each element carries coefficient 1 at its
    own leading monomial and coefficient 0 at the leading monomials of the
    elements after it, which makes :meth:`coordinates` a triangular solve.
    """

    dim: int
    degree: int
    elements: tuple[LayerElement, ...]
    leading: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def polys(self) -> list[MPoly]:
        return [e.poly for e in self.elements]

    @property
    def norms(self) -> list[Fraction]:
        return [e.norm_sq for e in self.elements]

    def coordinates(self, h: MPoly) -> list[Fraction]:
        """Coefficients of a harmonic homogeneous ``h`` of this degree.

        The input must be harmonic; only its coefficients at the leading
        monomials are read.
        """
        if h.dim != self.dim:
            raise DimensionError(
                f"dimension mismatch: {h.dim} and {self.dim}"
            )
        if h and (h.degree != self.degree or not h.is_homogeneous()):
            raise ValueError(
                f"expected a homogeneous polynomial of degree {self.degree}"
            )
        values = [h.coefficient(mono) for mono in self.leading]
        coords = [Fraction(0)] * len(values)
        for j in range(len(values) - 1, -1, -1):
            total = values[j]
            for i in range(j + 1, len(values)):
                if coords[i]:
                    total -= (
                        self.elements[i].poly.coefficient(self.leading[j])
                        * coords[i]
                    )
            coords[j] = total
        return coords

    def combine(self, coords) -> MPoly:
        total = MPoly(self.dim)
        for element, c in zip(self.elements, coords, strict=True):
            if c:
                total = total + element.poly * Fraction(c)
        return total

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "elements": [
                {
                    "m": m,
                    "poly": e.poly.to_text(),
                    "norm_sq": format_rational(e.norm_sq),
                }
                for m, e in enumerate(self.elements, start=1)
            ],
        }


def _cauchy_harmonic(dim: int, alpha: tuple[int, ...]) -> MPoly:
    """Harmonic polynomial equal to x^alpha modulo x_n^2 (alpha_n <= 1).

    Built as sum_j x_n^(2j+e) g_j with g_0 = x'^alpha' and
    g_{j+1} = -Laplacian(g_j) / ((2j+e+2)(2j+e+1)).
    """
    e = alpha[-1]
    last = MPoly.variable(dim, dim - 1)
    g = MPoly(dim, {alpha[:-1] + (0,): 1})
    total = MPoly(dim)
    j = 0
    while g:
        total = total + g * last ** (2 * j + e)
        g = laplacian(g) * Fraction(-1, (2 * j + e + 2) * (2 * j + e + 1))
        j += 1
    return total


@lru_cache(maxsize=None)
def harmonic_basis(dim: int, degree: int) -> HarmonicLayer:
    """Orthogonal basis of harmonic homogeneous polynomials of ``degree``.

    Starts from the harmonic extensions of the monomials with x_n-exponent
    at most 1 (graded-lex descending) and orthogonalizes them in that order
    under :func:`sphere_inner`.
    """
    if dim < 2:
        raise DimensionError(f"dimension must be at least 2, got {dim}")
    if degree < 0:
        raise ValueError("degree must be non-negative")
    leading = tuple(
        mono for mono in monomials_of_degree(dim, degree) if mono[-1] <= 1
    )
    elements: list[LayerElement] = []
    for mono in leading:
        start = _cauchy_harmonic(dim, mono)
        poly = start
        for done in elements:
            weight = sphere_inner(start, done.poly) / done.norm_sq
            if weight:
                poly = poly - done.poly * weight
        elements.append(LayerElement(poly, sphere_inner(poly, poly)))
    logger.debug(
        "harmonic layer dim=%d degree=%d: %d elements",
        dim,
        degree,
        len(elements),
    )
    if len(elements) != harmonic_dimension(dim, degree):
        raise RuntimeError(f"wrong layer size for dim={dim}, k={degree}")
    return HarmonicLayer(dim, degree, tuple(elements), leading)


def laplacian_kernel(dim: int, degree: int) -> list[MPoly]:
    """Kernel of the Laplacian on homogeneous polynomials, by elimination."""
    columns = list(monomials_of_degree(dim, degree))
    rows = (
        list(monomials_of_degree(dim, degree - 2)) if degree >= 2 else []
    )
    row_index = {mono: i for i, mono in enumerate(rows)}
    matrix = [[Fraction(0)] * len(columns) for _ in rows]
    for j, mono in enumerate(columns):
        image = laplacian(MPoly(dim, {mono: 1}))
        for target, coeff in image.terms.items():
            matrix[row_index[target]][j] = coeff
    return [
        MPoly(dim, dict(zip(columns, vector, strict=True)))
        for vector in exact_linalg.nullspace(matrix, len(columns))
    ]


@lru_cache(maxsize=None)
def _radius_power(dim: int, power: int) -> MPoly:
    return MPoly.radius_squared(dim) ** power


def _peel_constant(j: int, k: int, dim: int) -> int:
    # Laplacian^j (|x|^(2j) h) = constant * h for h harmonic of degree k
    return prod(2 * i * (2 * k + dim + 2 * i - 2) for i in range(1, j + 1))


def _peel_homogeneous(part: MPoly, degree: int) -> dict[int, MPoly]:
    """Almansi components {j: h_j} of a homogeneous polynomial."""
    remainder = part
    components = {}
    for j in range(degree // 2, -1, -1):
        if not remainder:
            break
        h = iterated_laplacian(remainder, j)
        if h:
            h = h * Fraction(1, _peel_constant(j, degree - 2 * j, part.dim))
            remainder = remainder - _radius_power(part.dim, j) * h
            components[j] = h
    if remainder:
        raise RuntimeError("Almansi peeling left a nonzero remainder")
    return components


def _solve_homogeneous(part: MPoly, degree: int) -> dict[int, MPoly]:
    dim = part.dim
    rows = list(monomials_of_degree(dim, degree))
    columns = []
    for j in range(degree // 2 + 1):
        layer = harmonic_basis(dim, degree - 2 * j)
        for element in layer:
            full = _radius_power(dim, j) * element.poly
            columns.append((j, element.poly, full))
    matrix = [
        [full.coefficient(mono) for _, _, full in columns] for mono in rows
    ]
    solution = exact_linalg.solve(
        matrix, [part.coefficient(mono) for mono in rows]
    )
    if solution is None:
        raise RuntimeError("Almansi system is inconsistent")
    components: dict[int, MPoly] = {}
    for (j, poly, _), value in zip(columns, solution, strict=True):
        if value:
            components[j] = components.get(j, MPoly(dim)) + poly * value
    return components


@dataclass(frozen=True)
class AlmansiDecomp:
    """p = sum_j |x|^(2j) harmonics[j] with every harmonics[j] harmonic."""

    dim: int
    harmonics: tuple[MPoly, ...]

    @property
    def order(self) -> int:
        return len(self.harmonics) - 1

    def reconstruct(self) -> MPoly:
        total = MPoly(self.dim)
        for j, h in enumerate(self.harmonics):
            total = total + _radius_power(self.dim, j) * h
        return total


def almansi_decompose(p: MPoly, method: str = "laplacian") -> AlmansiDecomp:
    """Gauss decomposition of ``p`` into harmonic components.

    Args:
        p (MPoly): polynomial to decompose.
        method (str): ``"laplacian"`` peels components with iterated
            Laplacians, ``"solve"`` solves the exact linear system over the
            harmonic layers. Both give the same (unique) result.
    """
    if method == "laplacian":
        split = _peel_homogeneous
    elif method == "solve":
        split = _solve_homogeneous
    else:
        raise ValueError(f"unknown Almansi method {method!r}")
    harmonics: dict[int, MPoly] = {}
    for degree, part in homogeneous_parts(p).nonzero():
        for j, h in split(part, degree).items():
            harmonics[j] = harmonics.get(j, MPoly(p.dim)) + h
    top = max((j for j, h in harmonics.items() if h), default=0)
    return AlmansiDecomp(
        p.dim,
        tuple(harmonics.get(j, MPoly(p.dim)) for j in range(top + 1)),
    )


def harmonic_expansion(p: MPoly) -> dict[tuple[int, int, int], Fraction]:
    """Coefficients a_{t,k,m} of p = sum a_{t,k,m} |x|^(2t) Y_{k,m}."""
    expansion = {}
    for degree, part in homogeneous_parts(p).nonzero():
        for t, h in _peel_homogeneous(part, degree).items():
            k = degree - 2 * t
            coords = harmonic_basis(p.dim, k).coordinates(h)
            for m, value in enumerate(coords, start=1):
                if value:
                    expansion[(t, k, m)] = value
    return expansion


def sphere_projection(f: MPoly) -> dict[tuple[int, int], Fraction]:
    """Coefficients of f restricted to the sphere in the Y_{k,m} basis."""
    projection: dict[tuple[int, int], Fraction] = {}
    for (_, k, m), value in harmonic_expansion(f).items():
        total = projection.get((k, m), 0) + value
        if total:
            projection[(k, m)] = total
        else:
            projection.pop((k, m), None)
    return projection


def np_formula(P: MPoly) -> int:
    """N_P from the top harmonic degree of each homogeneous part."""
    if not P:
        raise ValueError("N_P is undefined for the zero polynomial")
    best = 0
    for degree, part in homogeneous_parts(P).nonzero():
        top_k = max(k for _, k, _ in harmonic_expansion(part))
        if (degree + top_k) % 2:
            raise RuntimeError(
                f"parity violated: degree {degree}, harmonic degree {top_k}"
            )
        best = max(best, (degree + top_k) // 2)
    return best


def np_search(P: MPoly, k_max: int) -> int:
    """N_P as the largest d(P * Y_{k,m}) over layers up to ``k_max``."""
    if not P:
        raise ValueError("N_P is undefined for the zero polynomial")
    if k_max < P.degree:
        raise TruncationError(
            f"k_max={k_max} is below deg P={P.degree}; the supremum may be "
            "missed"
        )
    return max(
        polyharmonic_degree(P * element.poly)
        for k in range(k_max + 1)
        for element in harmonic_basis(P.dim, k)
    )
