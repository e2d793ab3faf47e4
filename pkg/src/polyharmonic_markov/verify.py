import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from tqdm import tqdm

from polyharmonic_markov import exact_linalg
from polyharmonic_markov.errors import DimensionError, MeasureError
from polyharmonic_markov.harmonic import harmonic_basis, np_formula
from polyharmonic_markov.measures import Atom, DiscreteMeasure, integrate_poly
from polyharmonic_markov.polycore import MPoly, format_rational

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0


def _basis_of_degree(dim: int, order: int, degree: int) -> list[MPoly]:
    """Elements |x|^(2t) Y_{k,m} of total degree ``degree`` with t < order."""
    radius = MPoly.radius_squared(dim)
    elements = []
    for t in range(min(order - 1, degree // 2) + 1):
        layer = harmonic_basis(dim, degree - 2 * t)
        elements.extend(radius**t * element.poly for element in layer)
    return elements


def polyharmonic_basis(
    dim: int, order: int, max_degree: int
) -> list[MPoly]:
    """Basis of U_order restricted to degree <= max_degree.

    Ordered by total degree, then by t, then by m.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    if order <= 0:
        return []
    return [
        element
        for degree in range(max_degree + 1)
        for element in _basis_of_degree(dim, order, degree)
    ]


def unp_basis(P: MPoly, D: int) -> list[MPoly]:
    """Basis of U_{N_P} restricted to degree <= D."""
    if not P:
        raise ValueError("U_{N_P} is undefined for the zero polynomial")
    return polyharmonic_basis(P.dim, np_formula(P), D)


def _validate_atoms(P: MPoly, atoms) -> list[tuple[Fraction, ...]]:
    points = [tuple(Fraction(x) for x in point) for point in atoms]
    for point in points:
        if len(point) != P.dim:
            raise DimensionError(
                f"atom of length {len(point)} for dimension {P.dim}"
            )
        if P(point):
            raise MeasureError(f"atom {point} is not on the zero set of P")
    if len(set(points)) != len(points):
        raise MeasureError("atoms must be distinct")
    return points


@dataclass(frozen=True)
class RankReport:
    """Rank of the evaluation matrix of U_N (degree <= D) at the atoms."""

    basis_description: str
    atom_count: int
    basis_size: int
    evaluation_matrix_rank: int
    full_rank: bool
    separating_witness: MPoly | None = None

    def to_json(self) -> dict:
        return {
            "basis": self.basis_description,
            "atom_count": self.atom_count,
            "basis_size": self.basis_size,
            "rank": self.evaluation_matrix_rank,
            "full_rank": self.full_rank,
            "witness": (
                self.separating_witness.to_text()
                if self.separating_witness is not None
                else None
            ),
        }


def _rank_report(P, points, order, D) -> RankReport:
    basis = polyharmonic_basis(P.dim, order, D)
    matrix = [[b(point) for b in basis] for point in points]
    rank = exact_linalg.rank(matrix, len(basis)) if points else 0
    full = rank == len(points)
    witness = None
    if full and points:
        # interpolate the indicator of the first atom
        target = [Fraction(int(i == 0)) for i in range(len(points))]
        coeffs = exact_linalg.solve(matrix, target)
        if coeffs is None:
            raise RuntimeError("full-rank evaluation system is inconsistent")
        witness = MPoly(P.dim)
        for b, c in zip(basis, coeffs, strict=True):
            if c:
                witness = witness + b * c
    return RankReport(
        basis_description=f"U_{order} with degree <= {D} in dimension {P.dim}",
        atom_count=len(points),
        basis_size=len(basis),
        evaluation_matrix_rank=rank,
        full_rank=full,
        separating_witness=witness,
    )


def density_rank_test(P: MPoly, atoms: Sequence, D: int) -> RankReport:
    """Rank of U_{N_P} (degree <= D) evaluated at atoms on the zero set.

    Full rank means every function on the atoms is the restriction of an
    element of U_{N_P}; the witness then takes the value 1 at the first
    atom and 0 at the others.
    """
    points = _validate_atoms(P, atoms)
    return _rank_report(P, points, np_formula(P), D)


def exploratory_ranks(P: MPoly, atoms: Sequence, D: int) -> dict[int, int]:
    """Ranks for U_N, N = 1 .. N_P. Reported only; nothing is asserted."""
    points = _validate_atoms(P, atoms)
    ranks = {
        order: _rank_report(P, points, order, D).evaluation_matrix_rank
        for order in range(1, np_formula(P) + 1)
    }
    logger.info("exploratory ranks at degree %d: %s", D, ranks)
    return ranks


def minimal_full_rank_degree(
    P: MPoly, atoms: Sequence, max_degree: int
) -> tuple[int | None, RankReport]:
    """Smallest D <= max_degree at which density_rank_test is full rank."""
    points = _validate_atoms(P, atoms)
    order = np_formula(P)
    report = None
    for D in range(max_degree + 1):
        report = _rank_report(P, points, order, D)
        if report.full_rank:
            return D, report
    return None, report


class Separation(Enum):
    EQUAL = "equal"
    SEPARATED = "separated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SeparationResult:
    outcome: Separation
    d_max: int
    witness: MPoly | None = None
    degree: int | None = None
    mu_value: Fraction | None = None
    nu_value: Fraction | None = None

    def to_json(self) -> dict:
        doc = {"outcome": self.outcome.value, "d_max": self.d_max}
        if self.outcome is Separation.SEPARATED:
            doc.update(
                witness=self.witness.to_text(),
                degree=self.degree,
                mu_value=format_rational(self.mu_value),
                nu_value=format_rational(self.nu_value),
            )
        return doc


def separation_test(
    P: MPoly, mu: DiscreteMeasure, nu: DiscreteMeasure, D_max: int
) -> SeparationResult:
    """Find an element of U_{N_P} whose integrals against mu and nu differ.

    Candidates are tried by increasing degree and within a degree in basis
    order, so the witness is deterministic.
    """
    for measure in (mu, nu):
        if measure.dim != P.dim:
            raise DimensionError(
                f"measure of dimension {measure.dim} for polynomial of "
                f"dimension {P.dim}"
            )
        _validate_atoms(P, [a.point for a in measure.atoms])
    order = np_formula(P)
    if mu.atom_set() == nu.atom_set():
        for b in polyharmonic_basis(P.dim, order, D_max):
            if integrate_poly(mu, b) != integrate_poly(nu, b):
                raise RuntimeError("equal measures with different moments")
        return SeparationResult(Separation.EQUAL, D_max)
    for degree in range(D_max + 1):
        for b in _basis_of_degree(P.dim, order, degree):
            left, right = integrate_poly(mu, b), integrate_poly(nu, b)
            if left != right:
                return SeparationResult(
                    Separation.SEPARATED, D_max, b, degree, left, right
                )
    logger.warning(
        "no separating element of U_%d up to degree %d", order, D_max
    )
    return SeparationResult(Separation.INCONCLUSIVE, D_max)


def rational_circle_point(
    angle: float, max_denominator: int = 10**6
) -> tuple[Fraction, Fraction]:
    """Rational point on the unit circle close to angle.

    Uses ((1 - t^2) / (1 + t^2), 2t / (1 + t^2)) with t a rational
    approximation of tan(angle / 2).
    """
    angle = math.remainder(angle, 2 * math.pi)
    if abs(abs(angle) - math.pi) < 1e-12:
        return Fraction(-1), Fraction(0)
    t = Fraction(math.tan(angle / 2)).limit_denominator(max_denominator)
    return (1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)


def uniform_circle_measure(
    count: int, max_denominator: int = 10**6
) -> DiscreteMeasure:
    """``count`` near-equidistant rational atoms on S^1, total weight 1."""
    points = [
        rational_circle_point(2 * math.pi * j / count, max_denominator)
        for j in range(count)
    ]
    return DiscreteMeasure.from_pairs(
        2, [(p, Fraction(1, count)) for p in points], radius=1
    )


def _random_rational(rng: np.random.Generator, bound: int, den: int):
    return Fraction(int(rng.integers(-bound, bound + 1)), den)


def _sphere_point(rng, dim: int, radius: Fraction) -> tuple[Fraction, ...]:
    # inverse stereographic projection of a rational point of R^(dim-1)
    u = [
        Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 4)))
        for _ in range(dim - 1)
    ]
    norm = sum((x * x for x in u), Fraction(0))
    scale = radius / (norm + 1)
    return (*(2 * x * scale for x in u), (norm - 1) * scale)


def _hyperplane_point(rng, dim: int, axis: int) -> tuple[Fraction, ...]:
    return tuple(
        Fraction(0) if i == axis else _random_rational(rng, 2, 4)
        for i in range(dim)
    )


@dataclass(frozen=True)
class CatalogVariety:
    """Zero set of a catalog polynomial with a rational point sampler."""

    name: str
    poly: MPoly
    radius: Fraction
    sampler: Callable[[np.random.Generator], tuple[Fraction, ...]]

    def sample(self, rng: np.random.Generator) -> tuple[Fraction, ...]:
        point = self.sampler(rng)
        if self.poly(point):
            raise RuntimeError(f"sampled point off the variety {self.name}")
        return point


def catalog_varieties(dim: int) -> list[CatalogVariety]:
    """|x|^2 - 1, |x|^2 - 4, x1*x2 and x1*(|x|^2 - 1) in dimension dim."""
    one = Fraction(1)
    two = Fraction(2)
    radius_sq = MPoly.radius_squared(dim)
    x1 = MPoly.variable(dim, 0)
    x2 = MPoly.variable(dim, 1)

    def axes(rng):
        return _hyperplane_point(rng, dim, int(rng.integers(2)))

    def plane_or_sphere(rng):
        if rng.random() < 0.5:
            return _hyperplane_point(rng, dim, 0)
        return _sphere_point(rng, dim, one)

    return [
        CatalogVariety(
            "unit sphere",
            radius_sq - 1,
            one,
            lambda rng: _sphere_point(rng, dim, one),
        ),
        CatalogVariety(
            "sphere of radius 2",
            radius_sq - 4,
            two,
            lambda rng: _sphere_point(rng, dim, two),
        ),
        CatalogVariety("coordinate planes", x1 * x2, one, axes),
        CatalogVariety(
            "plane and sphere", x1 * (radius_sq - 1), one, plane_or_sphere
        ),
    ]


def sample_measure(
    variety: CatalogVariety,
    rng: np.random.Generator,
    count: int,
    signed: bool = True,
) -> DiscreteMeasure:
    """Random measure with ``count`` distinct rational atoms on a variety."""
    points: dict[tuple[Fraction, ...], None] = {}
    for _ in range(100 * count):
        if len(points) == count:
            break
        points[variety.sample(rng)] = None
    else:
        raise RuntimeError(f"could not sample {count} distinct points")
    atoms = []
    for point in points:
        weight = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        if signed and rng.random() < 0.5:
            weight = -weight
        atoms.append(Atom(point, weight))
    return DiscreteMeasure(variety.poly.dim, tuple(atoms), variety.radius)


@dataclass(frozen=True)
class SweepRecord:
    dim: int
    variety: str
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    full_rank_degree: int | None
    rank: RankReport
    separation: SeparationResult

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "variety": self.variety,
            "mu": self.mu.to_json(),
            "nu": self.nu.to_json(),
            "full_rank_degree": self.full_rank_degree,
            "rank": self.rank.to_json(),
            "separation": self.separation.to_json(),
        }


def sweep_catalog(
    configs: int = 20,
    seed: int = DEFAULT_SEED,
    dims: Sequence[int] = (2, 3),
    max_atoms: int = 3,
    progress: bool = True,
) -> list[SweepRecord]:
    """Random unequal measure pairs on the catalog varieties.

    For each pair the union of the supports is tested for full rank up to
    degree 2 * atom_count and the pair is separated with
    D_max = 2 * (|mu| + |nu|).
    """
    rng = np.random.default_rng(seed)
    records = []
    for index in tqdm(
        range(configs), desc="catalog sweep", disable=not progress
    ):
        dim = dims[index % len(dims)]
        varieties = catalog_varieties(dim)
        variety = varieties[int(rng.integers(len(varieties)))]
        mu = sample_measure(variety, rng, int(rng.integers(1, max_atoms + 1)))
        nu = sample_measure(variety, rng, int(rng.integers(1, max_atoms + 1)))
        while nu.atom_set() == mu.atom_set():
            nu = sample_measure(variety, rng, len(nu.atoms))
        support = sorted({a.point for a in (*mu.atoms, *nu.atoms)})
        degree, report = minimal_full_rank_degree(
            variety.poly, support, 2 * len(support)
        )
        separation = separation_test(
            variety.poly, mu, nu, 2 * (len(mu.atoms) + len(nu.atoms))
        )
        records.append(
            SweepRecord(
                dim, variety.name, mu, nu, degree, report, separation
            )
        )
    logger.info(
        "catalog sweep: %d configurations, %d separated, %d full rank",
        len(records),
        sum(r.separation.outcome is Separation.SEPARATED for r in records),
        sum(r.full_rank_degree is not None for r in records),
    )
    return records
