"""Finite quasi-metric spaces.

A space is a square distance matrix with row = "from" and column = "to".
Two arithmetic backends are supported: ``"rational"`` stores entries as
``fractions.Fraction`` (or ``int``) in a numpy object array so every identity
is checked exactly, ``"float"`` stores float64 and compares with an absolute
tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .errors import InputError, MathFailure

DEFAULT_TOL = 1e-9
ARITHMETICS = ("rational", "float")

FORWARD = "forward"
BACKWARD = "backward"
SYMMETRIC = "symmetric"


def to_rational(value) -> Fraction:
    """Exact conversion; floats are read as their shortest decimal literal."""
    if isinstance(value, bool):
        raise InputError("boolean is not a distance")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise InputError(f"non-finite entry {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise InputError(f"cannot read {value!r} as a rational") from None
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return to_rational(float(value))
    raise InputError(f"cannot read {value!r} as a number")


def _simplify(q):
    if isinstance(q, Fraction) and q.denominator == 1:
        return int(q.numerator)
    return q


def as_matrix(matrix, arithmetic: str = "rational") -> np.ndarray:
    """Coerce nested sequences into a square matrix of the chosen arithmetic."""
    if arithmetic not in ARITHMETICS:
        raise InputError(f"arithmetic must be one of {ARITHMETICS}")
    rows = [list(r) for r in matrix]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise InputError("distance matrix must be square and non-empty")
    if arithmetic == "float":
        try:
            d = np.array(rows, dtype=float)
        except (TypeError, ValueError):
            d = np.array([[float(to_rational(v)) for v in r] for r in rows], dtype=float)
        if np.isnan(d).any():
            raise InputError("NaN entry in distance matrix")
        if np.isinf(d).any():
            raise InputError("infinite entry in distance matrix")
    else:
        d = np.empty((n, n), dtype=object)
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                d[i, j] = _simplify(to_rational(v))
    if (d < 0).any():
        i, j = np.argwhere(d < 0)[0]
        raise InputError(f"negative entry d[{i}][{j}] = {d[i, j]}")
    return d


@dataclass(frozen=True)
class Violation:
    kind: str  # "triangle" | "positivity"
    indices: tuple
    slack: object

    def to_json(self):
        return {"kind": self.kind, "indices": list(self.indices), "slack": float(self.slack)}


class ViolationError(MathFailure):
    def __init__(self, violations):
        super().__init__(f"{len(violations)} quasi-metric axiom violation(s)", violations)
        self.violations = violations


@dataclass(frozen=True, eq=False)
class FiniteQuasiMetric:
    """Validated finite quasi-metric space. Build with :func:`validate`."""

    labels: tuple
    d: np.ndarray = field(repr=False)
    arithmetic: str = "rational"
    tol: float = 0

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def exact(self) -> bool:
        return self.arithmetic == "rational"

    def index(self, point) -> int:
        """Accept an index or a label."""
        if isinstance(point, (int, np.integer)) and not isinstance(point, bool):
            if not 0 <= point < self.n:
                raise IndexError(f"point index {point} out of range for n={self.n}")
            return int(point)
        try:
            return self.labels.index(point)
        except ValueError:
            raise IndexError(f"unknown point {point!r}") from None

    def dist(self, x, y):
        return self.d[self.index(x), self.index(y)]

    def is_zero(self, value) -> bool:
        return value == 0 if self.exact else abs(value) <= self.tol

    def equal(self, a, b) -> bool:
        return self.is_zero(a - b)

    def is_symmetric(self) -> bool:
        diff = self.d - self.d.T
        return bool(all(self.is_zero(v) for v in diff.ravel()))

    def triangular_tensor(self) -> np.ndarray:
        """``T[i, j, k] = d(i, j) + d(j, k) - d(i, k)`` for all triples."""
        d = self.d
        return d[:, :, None] + d[None, :, :] - d[:, None, :]

    def __eq__(self, other):
        if not isinstance(other, FiniteQuasiMetric):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.arithmetic == other.arithmetic
            and np.array_equal(self.d, other.d)
        )

    def __hash__(self):
        return hash((self.labels, self.arithmetic))

    def to_json(self):
        return {"labels": list(self.labels), "d": [[_json_number(v) for v in row] for row in self.d]}


def _json_number(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def find_violations(d: np.ndarray, tol=0) -> list:
    """Every positivity and triangle violation of ``d``, sorted by indices."""
    n = d.shape[0]
    out = []
    for i in range(n):
        for j in range(n):
            v = d[i, j]
            if i == j and v != 0:
                out.append(Violation("positivity", (i, j), v))
            elif i != j and not v > 0:
                out.append(Violation("positivity", (i, j), v))
    T = d[:, :, None] + d[None, :, :] - d[:, None, :]
    bad = np.argwhere(T < -tol) if d.dtype != object else np.argwhere(T < -Fraction(tol))
    for i, j, k in bad:  # argwhere is already in lexicographic order
        out.append(Violation("triangle", (int(i), int(j), int(k)), T[i, j, k]))
    return out


def validate(matrix, tolerance=None, *, labels=None, arithmetic: str = "rational") -> FiniteQuasiMetric:
    """Check both quasi-metric axioms and return the space.

    Raises :class:`ViolationError` listing every violating pair or triple, and
    :class:`InputError` for non-square, negative or NaN input. ``tolerance``
    defaults to 0 in rational mode and ``DEFAULT_TOL`` in float mode.
    """
    if tolerance is None:
        tolerance = 0 if arithmetic == "rational" else DEFAULT_TOL
    if tolerance < 0:
        raise InputError("tolerance must be >= 0")
    d = as_matrix(matrix, arithmetic)
    n = d.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    labels = tuple(labels)
    if len(labels) != n or len(set(labels)) != n:
        raise InputError("labels must be distinct and match the matrix size")
    violations = find_violations(d, tolerance)
    if violations:
        raise ViolationError(violations)
    d.setflags(write=False)
    return FiniteQuasiMetric(labels, d, arithmetic, tolerance)


def triangular(space: FiniteQuasiMetric, x, y, z):
    """``T(x, y, z) = d(x, y) + d(y, z) - d(x, z)``."""
    i, j, k = space.index(x), space.index(y), space.index(z)
    d = space.d
    return d[i, j] + d[j, k] - d[i, k]


def symmetrize(space: FiniteQuasiMetric) -> FiniteQuasiMetric:
    d = space.d
    if space.exact:
        s = np.empty_like(d)
        for i in range(space.n):
            for j in range(space.n):
                s[i, j] = _simplify(Fraction(d[i, j] + d[j, i]) / 2)
    else:
        s = (d + d.T) / 2
    s.setflags(write=False)
    return FiniteQuasiMetric(space.labels, s, space.arithmetic, space.tol)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: object
    kind: str
    members: frozenset


def ball(space: FiniteQuasiMetric, center, radius, kind: str = FORWARD) -> Ball:
    """Open ball; ``kind`` is forward, backward or symmetric (their intersection)."""
    if not radius > 0:
        raise InputError("ball radius must be positive")
    c = space.index(center)
    r = to_rational(radius) if space.exact else radius
    fwd = {y for y in range(space.n) if space.d[c, y] < r}
    bwd = {y for y in range(space.n) if space.d[y, c] < r}
    if kind == FORWARD:
        members = fwd
    elif kind == BACKWARD:
        members = bwd
    elif kind == SYMMETRIC:
        members = fwd & bwd
    else:
        raise InputError(f"unknown ball kind {kind!r}")
    return Ball(c, radius, kind, frozenset(members))


def _as_chain(space, chain: Sequence) -> list:
    pts = [space.index(p) for p in chain]
    if len(pts) < 2:
        raise InputError("a chain needs at least two points")
    for a, b in zip(pts, pts[1:]):
        if a == b:
            raise InputError("consecutive chain points must differ")
    return pts


def chain_length(space: FiniteQuasiMetric, chain: Sequence):
    pts = _as_chain(space, chain)
    return sum((space.d[a, b] for a, b in zip(pts, pts[1:])), 0 * space.d[0, 0])


def minimizing_by_length(space, chain) -> bool:
    pts = _as_chain(space, chain)
    excess = chain_length(space, pts) - space.d[pts[0], pts[-1]]
    if space.exact:
        return excess == 0
    return abs(excess) <= space.tol * (len(pts) - 1)


def minimizing_by_triples(space, chain) -> bool:
    """T vanishes on every ordered triple of chain positions."""
    pts = np.asarray(_as_chain(space, chain))
    k = len(pts)
    if k == 2:
        return True
    d = space.d[np.ix_(pts, pts)]
    T = d[:, :, None] + d[None, :, :] - d[:, None, :]
    a, b, c = np.meshgrid(np.arange(k), np.arange(k), np.arange(k), indexing="ij")
    vals = T[(a < b) & (b < c)]
    if space.exact:
        return bool(all(v == 0 for v in vals))
    return bool(np.all(np.abs(vals.astype(float)) <= space.tol))


class InconsistentCharacterization(AssertionError):
    pass


def is_minimizing(space: FiniteQuasiMetric, chain: Sequence) -> bool:
    """Whether ``chain`` realizes the distance between its endpoints.

    Both characterizations (length equals distance; T vanishes on ordered
    triples) are computed and must agree.
    """
    by_length = minimizing_by_length(space, chain)
    by_triples = minimizing_by_triples(space, chain)
    if by_length != by_triples:
        raise InconsistentCharacterization(
            f"length test says {by_length}, triple test says {by_triples} for chain {list(chain)}"
        )
    return by_length
