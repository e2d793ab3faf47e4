import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from polyharmonic_markov import exact_linalg
from polyharmonic_markov.errors import DimensionError, MeasureError
from polyharmonic_markov.harmonic import harmonic_basis
from polyharmonic_markov.polycore import (
    MPoly,
    format_rational,
    monomials_of_degree,
    parse_rational,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Atom:
    point: tuple[Fraction, ...]
    weight: Fraction

    @property
    def radius_squared(self) -> Fraction:
        return sum((x * x for x in self.point), Fraction(0))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Signed measure sum_i weight_i * delta(point_i) inside a ball.

    Atoms are stored sorted by point, so two measures with the same atoms
    compare equal regardless of the order they were given in.

    Args:
        dim (int): ambient dimension n >= 2.
        atoms (Sequence[Atom]): atoms with distinct points and nonzero
            weights.
        radius (Fraction): R with |point|^2 <= R^2 for every atom.
    """

    dim: int
    atoms: tuple[Atom, ...] = field(default=())
    radius: Fraction = Fraction(1)

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(
                f"dimension must be at least 2, got {self.dim}"
            )
        radius = Fraction(self.radius)
        if radius < 0:
            raise MeasureError("radius must be non-negative")
        atoms = []
        for atom in self.atoms:
            point = tuple(Fraction(x) for x in atom.point)
            weight = Fraction(atom.weight)
            if len(point) != self.dim:
                raise MeasureError(
                    f"atom {point} does not have dimension {self.dim}"
                )
            if not weight:
                raise MeasureError(f"atom at {point} has zero weight")
            atom = Atom(point, weight)
            if atom.radius_squared > radius * radius:
                raise MeasureError(
                    f"atom at {_format_point(point)} lies outside radius "
                    f"{format_rational(radius)}"
                )
            atoms.append(atom)
        atoms.sort(key=lambda a: a.point)
        for left, right in zip(atoms, atoms[1:], strict=False):
            if left.point == right.point:
                raise MeasureError(
                    f"duplicate atom at {_format_point(left.point)}"
                )
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "radius", radius)

    @classmethod
    def from_pairs(cls, dim: int, pairs, radius=1) -> "DiscreteMeasure":
        """Build from ``(point, weight)`` pairs."""
        return cls(
            dim,
            tuple(Atom(tuple(point), weight) for point, weight in pairs),
            Fraction(radius),
        )

    def __len__(self):
        return len(self.atoms)

    @property
    def total_mass(self) -> Fraction:
        return sum((a.weight for a in self.atoms), Fraction(0))

    def atom_set(self) -> frozenset:
        return frozenset((a.point, a.weight) for a in self.atoms)

    def reweighted(self, P: MPoly) -> "DiscreteMeasure":
        """The measure P dmu; atoms where P vanishes are dropped."""
        _check_dim(self, P)
        atoms = []
        for atom in self.atoms:
            weight = atom.weight * P(atom.point)
            if weight:
                atoms.append(Atom(atom.point, weight))
        return DiscreteMeasure(self.dim, tuple(atoms), self.radius)

    def points_array(self) -> np.ndarray:
        return np.array(
            [[float(x) for x in a.point] for a in self.atoms], dtype=float
        ).reshape(len(self.atoms), self.dim)

    def weights_array(self) -> np.ndarray:
        return np.array([float(a.weight) for a in self.atoms], dtype=float)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "radius": format_rational(self.radius),
            "atoms": [
                {
                    "point": [format_rational(x) for x in a.point],
                    "weight": format_rational(a.weight),
                }
                for a in self.atoms
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "DiscreteMeasure":
        return load_measure(doc)


def _format_point(point) -> str:
    return "(" + ", ".join(format_rational(x) for x in point) + ")"


def _check_dim(mu: DiscreteMeasure, p: MPoly):
    if p.dim != mu.dim:
        raise DimensionError(
            f"polynomial of dimension {p.dim} against measure of "
            f"dimension {mu.dim}"
        )


def load_measure(doc) -> DiscreteMeasure:
    """Validate a measure document.

    The schema is ``{"dim": int, "radius": "p/q", "atoms": [{"point":
    ["p/q", ...], "weight": "p/q"}, ...]}``.
    """
    if not isinstance(doc, dict):
        raise MeasureError("measure document must be a JSON object")
    missing = {"dim", "radius", "atoms"} - set(doc)
    if missing:
        raise MeasureError(f"measure document lacks {sorted(missing)}")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise MeasureError("dim must be an integer")
    if not isinstance(doc["atoms"], list):
        raise MeasureError("atoms must be a list")
    try:
        radius = parse_rational(doc["radius"])
        atoms = []
        for entry in doc["atoms"]:
            if not isinstance(entry, dict) or set(entry) != {
                "point",
                "weight",
            }:
                raise MeasureError(
                    "each atom must have exactly 'point' and 'weight'"
                )
            if not isinstance(entry["point"], list):
                raise MeasureError("atom point must be a list")
            point = tuple(parse_rational(x) for x in entry["point"])
            atoms.append(Atom(point, parse_rational(entry["weight"])))
    except ValueError as exc:
        if isinstance(exc, MeasureError):
            raise
        raise MeasureError(str(exc)) from exc
    try:
        return DiscreteMeasure(dim, tuple(atoms), radius)
    except DimensionError as exc:
        raise MeasureError(str(exc)) from exc


def read_measure(path) -> DiscreteMeasure:
    with open(path, encoding="utf-8") as handle:
        return load_measure(json.load(handle))


def dump_measure(mu: DiscreteMeasure, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(mu.to_json(), indent=2) + "\n")
    return path


def integrate_poly(mu: DiscreteMeasure, p: MPoly) -> Fraction:
    """Exact value of the integral of p against mu."""
    _check_dim(mu, p)
    return sum((a.weight * p(a.point) for a in mu.atoms), Fraction(0))


def layer_moments(
    mu: DiscreteMeasure, degree: int, t_max: int
) -> list[list[Fraction]]:
    """Moments of one harmonic layer: result[m-1][t] = c_{t,degree,m}."""
    radii = [a.radius_squared for a in mu.atoms]
    table = []
    for element in harmonic_basis(mu.dim, degree):
        values = [
            a.weight * element.poly(a.point) for a in mu.atoms
        ]
        row = []
        for _ in range(t_max + 1):
            row.append(sum(values, Fraction(0)))
            values = [v * r for v, r in zip(values, radii, strict=True)]
        table.append(row)
    return table


@dataclass(frozen=True)
class MomentTable:
    """Distributed moments c_{t,k,m} for t <= t_max, k <= k_max."""

    dim: int
    t_max: int
    k_max: int
    entries: dict[tuple[int, int, int], Fraction]

    def value(self, t: int, k: int, m: int) -> Fraction:
        return self.entries[(t, k, m)]

    def to_json(self) -> list[dict]:
        return [
            {"t": t, "k": k, "m": m, "value": format_rational(v)}
            for (t, k, m), v in sorted(self.entries.items())
        ]


def distributed_moments(
    mu: DiscreteMeasure, t_max: int, k_max: int
) -> MomentTable:
    if t_max < 0 or k_max < 0:
        raise ValueError("t_max and k_max must be non-negative")
    entries = {}
    for k in range(k_max + 1):
        for m, row in enumerate(layer_moments(mu, k, t_max), start=1):
            for t, value in enumerate(row):
                entries[(t, k, m)] = value
    return MomentTable(mu.dim, t_max, k_max, entries)


def monomial_basis(dim: int, below_degree: int) -> list[MPoly]:
    """All monomials of degree < below_degree, graded-lex descending."""
    return [
        MPoly(dim, {mono: 1})
        for degree in range(below_degree - 1, -1, -1)
        for mono in monomials_of_degree(dim, degree)
    ]


def orthogonality_order(P: MPoly, mu: DiscreteMeasure, M: int) -> bool:
    """Whether P is mu-orthogonal to every polynomial of degree < M.

    The direct moment check is compared with the vanishing of the rest
    coefficients r_0 .. r_{M-1}; the two always agree.
    """
    if M < 1:
        raise ValueError("M must be positive")
    _check_dim(mu, P)
    from polyharmonic_markov.markov import rest_series

    direct = all(
        integrate_poly(mu, P * b) == 0 for b in monomial_basis(mu.dim, M)
    )
    rest_vanishes = rest_series(P, mu, M - 1).is_zero()
    if direct != rest_vanishes:
        raise RuntimeError(
            f"moment check ({direct}) and rest coefficients "
            f"({rest_vanishes}) disagree"
        )
    return direct


def orthogonalize(
    mu: DiscreteMeasure,
    target_degree: int,
    seed: MPoly,
    basis: Sequence[MPoly] | None = None,
) -> MPoly:
    """Remove from ``seed`` its mu-projection onto a polynomial subspace.

    Args:
        mu (DiscreteMeasure): measure defining the bilinear form.
        target_degree (int): project out all polynomials of degree below
            this, unless ``basis`` is given.
        seed (MPoly): polynomial to orthogonalize.
        basis (Sequence[MPoly] | None): explicit spanning set of the
            subspace to project out.

    Returns:
        MPoly: ``seed`` minus a combination of the basis that is
        mu-orthogonal to every basis element.
    """
    _check_dim(mu, seed)
    if basis is None:
        basis = monomial_basis(mu.dim, target_degree)
    basis = list(basis)
    if not basis or not mu.atoms:
        return seed
    values = [[b(a.point) for a in mu.atoms] for b in basis]
    weights = [a.weight for a in mu.atoms]
    seed_values = [seed(a.point) for a in mu.atoms]

    def pairing(left, right):
        return sum(
            (w * x * y for w, x, y in zip(weights, left, right, strict=True)),
            Fraction(0),
        )

    gram = [[pairing(vi, vj) for vj in values] for vi in values]
    rhs = [pairing(vi, seed_values) for vi in values]
    coeffs = exact_linalg.solve(gram, rhs)
    if coeffs is None:
        raise MeasureError(
            "Gram system is inconsistent: the signed measure is degenerate "
            "on the projected subspace"
        )
    result = seed
    for b, c in zip(basis, coeffs, strict=True):
        if c:
            result = result - b * c
    if not result:
        logger.info("seed annihilated by the projection")
    return result
