import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from polyharmonic_markov.errors import (
    DimensionError,
    EvaluationError,
    TruncationError,
)
from polyharmonic_markov.harmonic import (
    almansi_decompose,
    harmonic_basis,
    harmonic_expansion,
    np_formula,
    sphere_projection,
)
from polyharmonic_markov.measures import (
    DiscreteMeasure,
    layer_moments,
    orthogonalize,
)
from polyharmonic_markov.polycore import (
    MPoly,
    format_rational,
    homogeneous_parts,
    parse_rational,
)

logger = logging.getLogger(__name__)

SMAX_MARGIN = 10
NUMERIC_RTOL = 1e-9

SeriesKey = tuple[int, int, int]


def _check_dim(mu: DiscreteMeasure, p: MPoly):
    if p.dim != mu.dim:
        raise DimensionError(
            f"polynomial of dimension {p.dim} against measure of "
            f"dimension {mu.dim}"
        )


def _norm_sq(dim: int, k: int, m: int) -> Fraction:
    return harmonic_basis(dim, k).elements[m - 1].norm_sq


@dataclass(frozen=True)
class SeriesRep:
    """Truncated series sum coeff(s,k,m) Y_{k,m}(theta) / zeta^(s+1).

    Only nonzero coefficients are stored; every coefficient with
    ``s <= s_max`` is exact.
    """

    dim: int
    s_max: int
    coeffs: dict[SeriesKey, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self,
            "coeffs",
            {
                key: Fraction(value)
                for key, value in sorted(self.coeffs.items())
                if value
            },
        )

    def coefficient(self, s: int, k: int, m: int) -> Fraction:
        return self.coeffs.get((s, k, m), Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def level(self, s: int) -> dict[tuple[int, int], Fraction]:
        """Coefficients r_s as a map (k, m) -> value."""
        return {
            (k, m): v
            for (level, k, m), v in self.coeffs.items()
            if level == s
        }

    def first_nonzero(self):
        """Smallest (s, k, m) with a nonzero coefficient, or None."""
        return min(self.coeffs, default=None)

    def evaluate(self, zeta: complex, theta) -> complex:
        """Floating point value of the truncated series."""
        theta = np.asarray(theta, dtype=float)
        total = 0j
        for (s, k, m), value in self.coeffs.items():
            y = harmonic_basis(self.dim, k).elements[m - 1].poly
            total += (
                float(value) * complex(y.evaluate_numeric(theta))
            ) / zeta ** (s + 1)
        return total

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "s_max": self.s_max,
            "coeffs": [
                {"s": s, "k": k, "m": m, "value": format_rational(v)}
                for (s, k, m), v in self.coeffs.items()
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "SeriesRep":
        return cls(
            doc["dim"],
            doc["s_max"],
            {
                (e["s"], e["k"], e["m"]): parse_rational(e["value"])
                for e in doc["coeffs"]
            },
        )


def markov_series(mu: DiscreteMeasure, s_max: int) -> SeriesRep:
    """Exact expansion of the Markov transform of ``mu`` up to ``s_max``.

    coeff(2t+k, k, m) = c_{t,k,m} / |Y_{k,m}|^2.
    """
    if s_max < 0:
        raise ValueError("s_max must be non-negative")
    coeffs = {}
    for k in range(s_max + 1):
        layer = harmonic_basis(mu.dim, k)
        table = layer_moments(mu, k, (s_max - k) // 2)
        for m, (element, row) in enumerate(
            zip(layer, table, strict=True), start=1
        ):
            for t, moment in enumerate(row):
                if moment:
                    coeffs[(2 * t + k, k, m)] = moment / element.norm_sq
    return SeriesRep(mu.dim, s_max, coeffs)


def markov_eval_numeric(mu: DiscreteMeasure, zeta, theta) -> complex:
    """Value of the Markov transform from its defining kernel sum.

    Each atom contributes w * zeta^(n-1) / q^(n/2) with
    q = zeta^2 - 2 zeta <theta, x> + |x|^2.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mu.dim,):
        raise DimensionError(
            f"theta of shape {theta.shape} for dimension {mu.dim}"
        )
    if not np.isclose(np.linalg.norm(theta), 1.0):
        raise EvaluationError("theta must be a unit vector")
    zeta = complex(zeta)
    if abs(zeta) <= float(mu.radius):
        raise EvaluationError(
            f"|zeta| = {abs(zeta)} does not exceed the radius "
            f"{format_rational(mu.radius)}"
        )
    n = mu.dim
    if not len(mu.atoms):
        return 0j
    points = mu.points_array()
    weights = mu.weights_array()
    if n % 2:
        if zeta.imag != 0 or zeta.real <= 0:
            raise EvaluationError(
                "odd dimensions need a real zeta greater than the radius"
            )
        z = zeta.real
        q = z * z - 2 * z * (points @ theta) + np.sum(points**2, axis=1)
        return complex(np.sum(weights * z ** (n - 1) / q ** (n / 2)))
    q = zeta * zeta - 2 * zeta * (points @ theta) + np.sum(points**2, axis=1)
    return complex(np.sum(weights * zeta ** (n - 1) / q ** (n // 2)))


def moment_functional(series: SeriesRep, P: MPoly) -> Fraction:
    """Residue pairing of P(zeta theta) with a series.

    The contour integral selects s = 2t+k and the sphere integral selects
    (k, m), so the pairing is sum a_{t,k,m} coeff(2t+k,k,m) |Y_{k,m}|^2.
    """
    if P.dim != series.dim:
        raise DimensionError(
            f"dimension mismatch: {P.dim} and {series.dim}"
        )
    if series.s_max < P.degree:
        raise TruncationError(
            f"series truncated at s_max={series.s_max} cannot pair with a "
            f"polynomial of degree {P.degree}"
        )
    return sum(
        (
            a
            * series.coefficient(2 * t + k, k, m)
            * _norm_sq(P.dim, k, m)
            for (t, k, m), a in harmonic_expansion(P).items()
        ),
        Fraction(0),
    )


def rest_series(P: MPoly, mu: DiscreteMeasure, s_max: int) -> SeriesRep:
    """Coefficients r_s[P] of the rest function R_P, the transform of P dmu."""
    _check_dim(mu, P)
    return markov_series(mu.reweighted(P), s_max)


@dataclass(frozen=True)
class SecondKindRep:
    """Q_P as sectors zeta^-(k-1) p_{k,m}(zeta^2) Y_{k,m} / |Y_{k,m}|^2.

    ``sectors[(k, m)]`` lists the coefficients of p_{k,m} in u = zeta^2,
    constant term first. Sectors with k > k_max were not computed.
    """

    dim: int
    k_max: int
    sectors: dict[tuple[int, int], tuple[Fraction, ...]]

    def coefficients(self) -> dict[SeriesKey, Fraction]:
        """The same function in the (s, k, m) coefficient space."""
        coeffs = {}
        for (k, m), poly in self.sectors.items():
            norm = _norm_sq(self.dim, k, m)
            for i, c in enumerate(poly):
                if c:
                    coeffs[(k - 2 - 2 * i, k, m)] = c / norm
        return coeffs

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "k_max": self.k_max,
            "sectors": [
                {"k": k, "m": m, "p": [format_rational(c) for c in poly]}
                for (k, m), poly in sorted(self.sectors.items())
            ],
        }


def _sector_polynomial(
    harmonics: tuple[MPoly, ...], mu: DiscreteMeasure
) -> tuple[Fraction, ...]:
    # p_i = sum_{j > i} integral of |x|^(2(j-1-i)) h_j
    order = len(harmonics) - 1
    coeffs = [Fraction(0)] * order
    for atom in mu.atoms:
        r = atom.radius_squared
        for j in range(1, order + 1):
            if not harmonics[j]:
                continue
            value = atom.weight * harmonics[j](atom.point)
            for i in range(j - 1, -1, -1):
                coeffs[i] += value
                value *= r
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return tuple(coeffs)


def second_kind(
    P: MPoly, mu: DiscreteMeasure, k_max: int | None = None
) -> SecondKindRep:
    """Function of the second kind Q_P, sectors k = 0 .. k_max.

    For a discrete measure infinitely many sectors are nonzero in general,
    so the expansion is cut at ``k_max`` (default deg P + SMAX_MARGIN).
    """
    if not P:
        raise ValueError("Q_P is undefined for the zero polynomial")
    _check_dim(mu, P)
    if k_max is None:
        k_max = P.degree + SMAX_MARGIN
    sectors = {}
    for k in range(k_max + 1):
        for m, element in enumerate(harmonic_basis(P.dim, k), start=1):
            decomp = almansi_decompose(P * element.poly)
            poly = _sector_polynomial(decomp.harmonics, mu)
            if poly:
                sectors[(k, m)] = poly
    return SecondKindRep(P.dim, k_max, sectors)


def _product_coefficients(
    P: MPoly, series: SeriesRep, s_limit: int
) -> dict[SeriesKey, Fraction]:
    """Coefficients of P(zeta theta) times a series, for s <= s_limit."""
    parts = homogeneous_parts(P).nonzero()
    projections = {}
    product = defaultdict(Fraction)
    for (s_in, k_in, m_in), value in series.coeffs.items():
        y = harmonic_basis(P.dim, k_in).elements[m_in - 1].poly
        for degree, part in parts:
            s = s_in - degree
            if s > s_limit:
                continue
            key = (degree, k_in, m_in)
            if key not in projections:
                projections[key] = sphere_projection(part * y)
            for (k, m), c in projections[key].items():
                product[(s, k, m)] += value * c
    return {key: v for key, v in product.items() if v}


def identity_check(P: MPoly, mu: DiscreteMeasure, s_max: int) -> bool:
    """Coefficientwise check of P(zeta theta) mu^ = Q_P + R_P.

    With the Markov series known up to ``s_max`` the product is exact for
    s <= s_max - deg P, which is the range compared.
    """
    _check_dim(mu, P)
    if s_max < P.degree:
        raise TruncationError(
            f"s_max={s_max} is below deg P={P.degree}: no coefficient of "
            "the product is known exactly"
        )
    s_limit = s_max - P.degree
    lhs = _product_coefficients(P, markov_series(mu, s_max), s_limit)
    rhs = defaultdict(Fraction)
    if P:
        reach = s_limit + 2 * np_formula(P)
        for key, value in second_kind(P, mu, reach).coefficients().items():
            if key[0] <= s_limit:
                rhs[key] += value
    for key, value in rest_series(P, mu, s_limit).coeffs.items():
        rhs[key] += value
    rhs = {key: v for key, v in rhs.items() if v}
    if lhs == rhs:
        return True
    mismatch = min(
        key
        for key in set(lhs) | set(rhs)
        if lhs.get(key, 0) != rhs.get(key, 0)
    )
    logger.debug(
        "identity fails at %s: product %s, Q_P + R_P %s",
        mismatch,
        lhs.get(mismatch, 0),
        rhs.get(mismatch, 0),
    )
    return False


class Verdict(Enum):
    SUPPORTED = "supported"
    NOT_SUPPORTED = "not_supported"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class SupportReport:
    verdict: Verdict
    s_max: int
    certificate: tuple[int, int, int, Fraction] | None = None

    def to_json(self) -> dict:
        doc = {"verdict": self.verdict.value, "s_max": self.s_max}
        if self.certificate is not None:
            s, k, m, value = self.certificate
            doc["certificate"] = {
                "s": s,
                "k": k,
                "m": m,
                "value": format_rational(value),
            }
        return doc


def support_bound(P: MPoly, mu: DiscreteMeasure) -> int:
    """Truncation from which vanishing rest coefficients prove support."""
    return 2 * len(mu.atoms) + max(P.degree, 0)


def support_verdict(
    P: MPoly, mu: DiscreteMeasure, s_max: int
) -> SupportReport:
    """Decide whether mu lives on the zero set of P from R_P alone.

    Any nonzero rest coefficient certifies that some atom is off the zero
    set. The verdict is checked against direct evaluation at the atoms.
    """
    _check_dim(mu, P)
    rest = rest_series(P, mu, s_max)
    on_zero_set = all(P(atom.point) == 0 for atom in mu.atoms)
    if not rest.is_zero():
        key = rest.first_nonzero()
        report = SupportReport(
            Verdict.NOT_SUPPORTED, s_max, (*key, rest.coeffs[key])
        )
    elif s_max >= support_bound(P, mu):
        report = SupportReport(Verdict.SUPPORTED, s_max)
    else:
        logger.warning(
            "rest coefficients vanish up to s_max=%d, below the bound %d",
            s_max,
            support_bound(P, mu),
        )
        return SupportReport(Verdict.UNDECIDED, s_max)
    if (report.verdict is Verdict.SUPPORTED) != on_zero_set:
        raise RuntimeError(
            f"series verdict {report.verdict.value} contradicts the atoms"
        )
    return report


def second_kind_orthogonality(
    P: MPoly, mu: DiscreteMeasure, h: MPoly
) -> Fraction:
    """Residue pairing of h(zeta theta) against Q_P; always zero."""
    _check_dim(mu, h)
    _check_dim(mu, P)
    if not h or not P:
        return Fraction(0)
    reach = h.degree + 2 * np_formula(P)
    coeffs = second_kind(P, mu, reach).coefficients()
    total = Fraction(0)
    for degree, part in homogeneous_parts(h).nonzero():
        for (k, m), c in sphere_projection(part).items():
            value = coeffs.get((degree, k, m))
            if value:
                total += c * value * _norm_sq(h.dim, k, m)
    return total


def radial_operator(
    laurent: dict[int, Fraction], k: int, dim: int
) -> dict[int, Fraction]:
    """Apply d^2/dr^2 + (n-1)/r d/dr - k(k+n-2)/r^2 to a Laurent polynomial.

    ``laurent`` maps exponents a to coefficients; r^a goes to
    (a-k)(a+k+n-2) r^(a-2).
    """
    image = {}
    for a, c in laurent.items():
        factor = (a - k) * (a + k + dim - 2)
        if factor and c:
            image[a - 2] = c * factor
    return image


def polyharmonicity_check(
    P: MPoly, mu: DiscreteMeasure, k_max: int | None = None
) -> bool:
    """Check that every sector of Q_P is annihilated by L_(k)^N_P.

    Sector (k, m) is r^-(n+k-2) p_{k,m}(r^2) as a function of the radius.
    """
    if not P:
        raise ValueError("Q_P is undefined for the zero polynomial")
    order = np_formula(P)
    n = P.dim
    for (k, m), poly in second_kind(P, mu, k_max).sectors.items():
        laurent = {-(n + k - 2) + 2 * i: c for i, c in enumerate(poly) if c}
        for _ in range(order):
            laurent = radial_operator(laurent, k, n)
        if laurent:
            logger.debug("sector (%d, %d) survives L_(k)^%d", k, m, order)
            return False
    return True


def same_transform(
    mu: DiscreteMeasure, nu: DiscreteMeasure, s_max: int | None = None
) -> bool:
    """Compare Markov series up to 2 * (|mu| + |nu|) by default."""
    if mu.dim != nu.dim:
        raise DimensionError(f"dimension mismatch: {mu.dim} and {nu.dim}")
    if s_max is None:
        s_max = 2 * (len(mu.atoms) + len(nu.atoms))
    return markov_series(mu, s_max).coeffs == markov_series(nu, s_max).coeffs


def cos_harmonic(k: int) -> MPoly:
    """Re (x1 + i x2)^k in two variables."""
    return MPoly(
        2,
        {
            (k - j, j): comb(k, j) * (-1) ** (j // 2)
            for j in range(0, k + 1, 2)
        },
    )


def product_measure_series(sigma, s_max: int) -> SeriesRep:
    """Markov series of sigma x delta_0 in the plane.

    ``sigma`` is a sequence of ``(a, weight)`` atoms on the line. Level l
    equals the moment of order l times the Chebyshev kernel
    sin((l+1)t) / sin t = sum over k = l mod 2 of eps_k cos(kt), with
    eps_0 = 1 and eps_k = 2.
    """
    sigma = [(Fraction(a), Fraction(w)) for a, w in sigma]
    coeffs = defaultdict(Fraction)
    for level in range(s_max + 1):
        moment = sum((w * a**level for a, w in sigma), Fraction(0))
        if not moment:
            continue
        for k in range(level % 2, level + 1, 2):
            eps = 1 if k == 0 else 2
            layer = harmonic_basis(2, k)
            for m, c in enumerate(layer.coordinates(cos_harmonic(k)), 1):
                if c:
                    coeffs[(level, k, m)] += eps * moment * c
    return SeriesRep(2, s_max, dict(coeffs))


@dataclass(frozen=True)
class RestProfile:
    poly: MPoly
    leading_vanish: bool
    top_constant: bool
    rest: SeriesRep


def orthogonal_rest_profile(
    mu: DiscreteMeasure, half_degree: int
) -> RestProfile:
    """Rest coefficients of an orthogonal polynomial of degree 2N.

    P is |x|^(2N) made mu-orthogonal to every |x|^(2t) Y_{k,m} with t < N
    and 2t + k <= 2N. Then r_0 .. r_{2N-1} should vanish and r_{2N} should
    only have the constant sector.
    """
    if half_degree < 1:
        raise ValueError("half_degree must be positive")
    top = 2 * half_degree
    radius = MPoly.radius_squared(mu.dim)
    basis = [
        radius**t * element.poly
        for t in range(half_degree)
        for k in range(top - 2 * t + 1)
        for element in harmonic_basis(mu.dim, k)
    ]
    P = orthogonalize(mu, top, radius**half_degree, basis=basis)
    rest = rest_series(P, mu, top)
    leading_vanish = all(s >= top for s, _, _ in rest.coeffs)
    top_constant = all(k == 0 for k, _ in rest.level(top))
    return RestProfile(P, leading_vanish, top_constant, rest)
