import re
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

import numpy as np
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from polyharmonic_markov.errors import (
    DimensionError,
    PolyharmonicError,
    PolySyntaxError,
)

Monomial = tuple[int, ...]

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?")

POLY_GRAMMAR = r"""
    ?start: sum

    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
        | product "*" unary -> mul

    ?unary: power
        | "-" unary         -> neg
        | "+" unary

    ?power: atom
        | atom "^" INT      -> pow

    ?atom: number
        | VAR               -> var
        | "(" sum ")"

    number: INT ("/" INT)?

    VAR: /x[0-9]+/

    %import common.INT
    %import common.WS
    %ignore WS
"""

_PARSER = Lark(POLY_GRAMMAR, parser="lalr")


def grlex_key(mono: Monomial) -> tuple[int, Monomial]:
    """Sort key of the graded-lexicographic order."""
    return sum(mono), mono


def monomials_of_degree(dim: int, degree: int) -> Iterator[Monomial]:
    """Yield all exponent tuples of total ``degree``, highest grlex first."""
    if dim == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in monomials_of_degree(dim - 1, degree - first):
            yield (first, *rest)


def format_rational(value) -> str:
    """Serialize a rational as ``"p/q"`` in lowest terms, or ``"p"``."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse the strict ``p`` / ``p/q`` rational format."""
    if not isinstance(text, str) or not _RATIONAL_RE.fullmatch(text):
        raise ValueError(f"not a rational literal: {text!r}")
    numerator, _, denominator = text.partition("/")
    if denominator and not int(denominator):
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(text)


class MPoly:
    """Sparse polynomial in ``dim`` variables with rational coefficients.

    Args:
        dim (int): ambient dimension n, at least 2.
        terms (Mapping[tuple[int, ...], Fraction | int] | None): exponent
            tuple to coefficient. Zero coefficients are dropped.
    """

    __slots__ = ("dim", "_terms")

    def __init__(self, dim: int, terms: Mapping | None = None):
        if dim < 2:
            raise DimensionError(f"dimension must be at least 2, got {dim}")
        cleaned = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != dim or any(e < 0 for e in mono):
                raise DimensionError(
                    f"monomial {mono} does not fit dimension {dim}"
                )
            value = cleaned.get(mono, 0) + Fraction(coeff)
            if value:
                cleaned[mono] = value
            else:
                cleaned.pop(mono, None)
        self.dim = dim
        self._terms = cleaned

    @classmethod
    def _wrap(cls, dim: int, terms: dict) -> "MPoly":
        # terms must already be clean: right length, no zero coefficients
        poly = object.__new__(cls)
        poly.dim = dim
        poly._terms = terms
        return poly

    @classmethod
    def constant(cls, dim: int, value=1) -> "MPoly":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> "MPoly":
        """The coordinate x_{index+1} (``index`` is 0-based)."""
        if not 0 <= index < dim:
            raise DimensionError(
                f"variable x{index + 1} out of range for dimension {dim}"
            )
        mono = tuple(int(i == index) for i in range(dim))
        return cls._wrap(dim, {mono: Fraction(1)})

    @classmethod
    def radius_squared(cls, dim: int) -> "MPoly":
        """|x|^2 = x1^2 + ... + xn^2."""
        return cls._wrap(
            dim,
            {
                tuple(2 * int(i == j) for i in range(dim)): Fraction(1)
                for j in range(dim)
            },
        )

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Total degree, -1 for the zero polynomial."""
        return max((sum(mono) for mono in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_homogeneous(self) -> bool:
        return len({sum(mono) for mono in self._terms}) <= 1

    def monomials(self) -> list[Monomial]:
        """Monomials present, highest graded-lex first."""
        return sorted(self._terms, key=grlex_key, reverse=True)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def homogeneous_part(self, degree: int) -> "MPoly":
        return MPoly._wrap(
            self.dim,
            {m: c for m, c in self._terms.items() if sum(m) == degree},
        )

    def derivative(self, index: int) -> "MPoly":
        """Partial derivative with respect to x_{index+1}."""
        if not 0 <= index < self.dim:
            raise DimensionError(
                f"variable x{index + 1} out of range for dimension {self.dim}"
            )
        terms = {}
        for mono, coeff in self._terms.items():
            exponent = mono[index]
            if exponent:
                lowered = (
                    mono[:index] + (exponent - 1,) + mono[index + 1 :]
                )
                terms[lowered] = coeff * exponent
        return MPoly._wrap(self.dim, terms)

    def _coerce(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            if other.dim != self.dim:
                raise DimensionError(
                    f"dimension mismatch: {self.dim} and {other.dim}"
                )
            return other
        if isinstance(other, int | Fraction):
            return MPoly.constant(self.dim, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            value = terms.get(mono, 0) + coeff
            if value:
                terms[mono] = value
            else:
                terms.pop(mono, None)
        return MPoly._wrap(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly._wrap(self.dim, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int | Fraction):
            if not other:
                return MPoly._wrap(self.dim, {})
            return MPoly._wrap(
                self.dim, {m: c * other for m, c in self._terms.items()}
            )
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2, strict=True))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return MPoly._wrap(self.dim, {m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, int | Fraction):
            return NotImplemented
        return self * (1 / Fraction(other))

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MPoly.constant(self.dim)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, int | Fraction):
            other = MPoly.constant(self.dim, other)
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, frozenset(self._terms.items())))

    def __bool__(self):
        return bool(self._terms)

    def __call__(self, point: Sequence) -> Fraction:
        """Exact value at a rational point."""
        if len(point) != self.dim:
            raise DimensionError(
                f"point of length {len(point)} for dimension {self.dim}"
            )
        point = [Fraction(x) for x in point]
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            value = coeff
            for x, e in zip(point, mono, strict=True):
                if e:
                    value *= x**e
            total += value
        return total

    def evaluate_numeric(self, points) -> np.ndarray:
        """Floating point values at an array of points of shape (..., dim)."""
        points = np.asarray(points)
        if points.shape[-1] != self.dim:
            raise DimensionError(
                f"points of length {points.shape[-1]} for dimension "
                f"{self.dim}"
            )
        if not self._terms:
            return np.zeros(points.shape[:-1], dtype=points.dtype)
        exponents = np.array(list(self._terms), dtype=int)
        coeffs = np.array([float(c) for c in self._terms.values()])
        powers = np.prod(points[..., None, :] ** exponents, axis=-1)
        return powers @ coeffs

    def to_text(self) -> str:
        """Canonical text form, readable back by :func:`parse_poly`."""
        if not self._terms:
            return "0"
        pieces = []
        for mono in self.monomials():
            coeff = self._terms[mono]
            factors = [
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}"
                for i, e in enumerate(mono)
                if e
            ]
            magnitude = format_rational(abs(coeff))
            if not factors:
                body = magnitude
            elif abs(coeff) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([magnitude, *factors])
            sign = "-" if coeff < 0 else "+"
            if not pieces:
                pieces.append(body if sign == "+" else f"-{body}")
            else:
                pieces.append(f" {sign} {body}")
        return "".join(pieces)

    __str__ = to_text

    def __repr__(self):
        return f"MPoly(dim={self.dim}, {self.to_text()!r})"


@dataclass(frozen=True)
class HomogeneousParts:
    """Split of a polynomial by total degree.

    ``parts[j]`` is zero or homogeneous of degree j; the zero polynomial has
    no parts.
    """

    dim: int
    parts: tuple[MPoly, ...]

    def reconstruct(self) -> MPoly:
        total = MPoly(self.dim)
        for part in self.parts:
            total = total + part
        return total

    def nonzero(self) -> list[tuple[int, MPoly]]:
        return [(j, part) for j, part in enumerate(self.parts) if part]


def homogeneous_parts(p: MPoly) -> HomogeneousParts:
    buckets: list[dict] = [{} for _ in range(p.degree + 1)]
    for mono, coeff in p.terms.items():
        buckets[sum(mono)][mono] = coeff
    return HomogeneousParts(
        dim=p.dim, parts=tuple(MPoly._wrap(p.dim, b) for b in buckets)
    )


def laplacian(p: MPoly) -> MPoly:
    """Sum of the pure second derivatives."""
    terms: dict[Monomial, Fraction] = {}
    for mono, coeff in p.terms.items():
        for i, e in enumerate(mono):
            if e >= 2:
                lowered = mono[:i] + (e - 2,) + mono[i + 1 :]
                terms[lowered] = terms.get(lowered, 0) + coeff * e * (e - 1)
    return MPoly._wrap(p.dim, {m: c for m, c in terms.items() if c})


def iterated_laplacian(p: MPoly, times: int) -> MPoly:
    for _ in range(times):
        if not p:
            break
        p = laplacian(p)
    return p


def polyharmonic_degree(p: MPoly) -> int:
    """Least N with Laplacian^(N+1) p = 0; 0 for the zero polynomial."""
    order = 0
    current = laplacian(p)
    while current:
        order += 1
        current = laplacian(current)
    return order


def eval_poly(p: MPoly, point: Sequence) -> Fraction:
    return p(point)


@v_args(inline=True)
class _PolyBuilder(Transformer):
    """Turn a parse tree into an :class:`MPoly` of fixed dimension."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim

    def add(self, left, right):
        return left + right

    def sub(self, left, right):
        return left - right

    def mul(self, left, right):
        return left * right

    def neg(self, operand):
        return -operand

    def pow(self, base, exponent):
        return base ** int(exponent)

    def number(self, numerator, denominator=None):
        if denominator is None:
            return MPoly.constant(self.dim, int(numerator))
        if int(denominator) == 0:
            raise PolySyntaxError(
                "zero denominator", position=denominator.start_pos
            )
        return MPoly.constant(
            self.dim, Fraction(int(numerator), int(denominator))
        )

    def var(self, token):
        index = int(token[1:])
        if not 1 <= index <= self.dim:
            raise DimensionError(
                f"variable {token} out of range for dimension {self.dim}"
            )
        return MPoly.variable(self.dim, index - 1)


def parse_poly(text: str, dim: int) -> MPoly:
    """Parse the polynomial grammar, e.g. ``"(x1 - 1/2)*(x1 + 1/2)"``.

    Args:
        text (str): expression in x1..x<dim>, rationals, + - * ^ and
            parentheses.
        dim (int): ambient dimension, at least 2.

    Returns:
        MPoly: the expanded polynomial.
    """
    if dim < 2:
        raise DimensionError(f"dimension must be at least 2, got {dim}")
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        position = getattr(exc, "pos_in_stream", None)
        if position is not None and position < 0:
            position = None
        raise PolySyntaxError(
            f"cannot parse polynomial {text!r}", position=position
        ) from exc
    try:
        result = _PolyBuilder(dim).transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, PolyharmonicError):
            raise exc.orig_exc from None
        raise
    if not isinstance(result, MPoly):
        raise RuntimeError(f"parser produced {type(result).__name__}")
    return result


def format_poly(p: MPoly) -> str:
    return p.to_text()
