"""Almost isometries between finite quasi-metric spaces.

An almost isometry is a bijection that preserves the triangular function
``T(x, y, z) = d(x, y) + d(y, z) - d(x, z)``. Equivalently there is a
potential ``f`` on the target with

    d2(phi(x), phi(y)) = d1(x, y) + f(phi(y)) - f(phi(x)),

unique up to an additive constant. Potentials here are always normalized so
that ``f(phi(x0)) = 0`` for the stored base point ``x0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import CapExceeded, InputError, MathFailure
from .qmetric import FiniteQuasiMetric, _simplify, symmetrize

DEFAULT_SEARCH_CAP = 10


@dataclass(frozen=True)
class Bijection:
    source: FiniteQuasiMetric
    target: FiniteQuasiMetric
    map: tuple

    def __post_init__(self):
        m = tuple(int(i) for i in self.map)
        object.__setattr__(self, "map", m)
        if self.source.n != self.target.n:
            raise InputError(
                f"cardinality mismatch: {self.source.n} source points, {self.target.n} target points"
            )
        if sorted(m) != list(range(self.source.n)):
            raise InputError(f"{list(m)} is not a permutation of 0..{self.source.n - 1}")

    @property
    def n(self):
        return len(self.map)

    def inverse_map(self) -> tuple:
        inv = [0] * self.n
        for i, j in enumerate(self.map):
            inv[j] = i
        return tuple(inv)

    def inverse(self) -> "Bijection":
        return Bijection(self.target, self.source, self.inverse_map())

    def _compare(self, a, b) -> bool:
        if self.source.exact and self.target.exact:
            return a == b
        return abs(a - b) <= max(self.source.tol, self.target.tol)


def identity(space: FiniteQuasiMetric) -> Bijection:
    return Bijection(space, space, tuple(range(space.n)))


@dataclass(frozen=True)
class AlmostIsometry:
    bijection: Bijection
    potential: tuple  # indexed by target points
    base_point: int

    @property
    def map(self):
        return self.bijection.map

    @property
    def source(self):
        return self.bijection.source

    @property
    def target(self):
        return self.bijection.target

    def defect(self):
        """Largest |d2(phi x, phi y) - d1(x, y) - f(phi y) + f(phi x)| over all pairs."""
        return _identity_defect(self.bijection, self.potential)

    def to_json(self):
        return {
            "map": list(self.map),
            "potential": [float(v) for v in self.potential],
            "base_point": self.base_point,
        }


class NotAlmostIsometry(MathFailure):
    def __init__(self, triple, t_source, t_target):
        super().__init__(
            f"triangular function not preserved at {triple}: {t_source} vs {t_target}",
            {"triple": list(triple), "source_T": float(t_source), "target_T": float(t_target)},
        )
        self.triple = triple


def _pulled_back_target(b: Bijection) -> np.ndarray:
    m = np.asarray(b.map)
    return b.target.d[np.ix_(m, m)]


def first_failing_triple(b: Bijection):
    """Lexicographically first ``(x, y, z)`` with T2(phi x, phi y, phi z) != T1(x, y, z), or None."""
    d1 = b.source.d
    d2 = _pulled_back_target(b)
    T1 = d1[:, :, None] + d1[None, :, :] - d1[:, None, :]
    T2 = d2[:, :, None] + d2[None, :, :] - d2[:, None, :]
    diff = T2 - T1
    if b.source.exact and b.target.exact:
        bad = np.argwhere(diff != 0)
    else:
        tol = max(b.source.tol, b.target.tol)
        bad = np.argwhere(np.abs(diff.astype(float)) > tol)
    if len(bad) == 0:
        return None
    i, j, k = (int(v) for v in bad[0])
    return (i, j, k), T1[i, j, k], T2[i, j, k]


def check_almost_isometry(b: Bijection) -> bool:
    return first_failing_triple(b) is None


def is_isometry(b: Bijection) -> bool:
    d2 = _pulled_back_target(b)
    d1 = b.source.d
    return all(b._compare(d2[i, j], d1[i, j]) for i in range(b.n) for j in range(b.n))


def _identity_defect(b: Bijection, f):
    n = b.n
    worst = 0
    for x in range(n):
        px = b.map[x]
        for y in range(n):
            py = b.map[y]
            r = b.target.d[px, py] - b.source.d[x, y] - f[py] + f[px]
            worst = max(worst, abs(r))
    return worst


def _normalize(f, at):
    c = f[at]
    return tuple(_simplify(v - c) for v in f)


def _certify(b: Bijection, f, base_point) -> AlmostIsometry:
    defect = _identity_defect(b, f)
    if not (defect == 0 if (b.source.exact and b.target.exact) else defect <= 4 * max(b.source.tol, b.target.tol)):
        raise MathFailure(f"potential identity fails by {defect}", {"defect": float(defect)})
    return AlmostIsometry(b, tuple(f), base_point)


def recover_potential(b: Bijection, x0=0) -> AlmostIsometry:
    """Build ``f(z) = d1(phi^-1(z), x0) - d2(z, phi(x0))`` and verify it.

    The construction already satisfies ``f(phi(x0)) = 0``. Raises
    :class:`NotAlmostIsometry` with the first failing triple otherwise.
    """
    x0 = b.source.index(x0)
    failing = first_failing_triple(b)
    if failing is not None:
        raise NotAlmostIsometry(*failing)
    inv = b.inverse_map()
    p0 = b.map[x0]
    f = [_simplify(b.source.d[inv[z], x0] - b.target.d[z, p0]) for z in range(b.n)]
    return _certify(b, f, x0)


def compose(a1: AlmostIsometry, a2: AlmostIsometry) -> AlmostIsometry:
    """``a2 after a1``: X1 -> X2 -> X3 with ``f(z) = f2(z) + f1(phi2^-1(z))``."""
    if a1.target != a2.source:
        raise InputError("compose: target of the first map is not the source of the second")
    m = tuple(a2.map[i] for i in a1.map)
    b = Bijection(a1.source, a2.target, m)
    inv2 = a2.bijection.inverse_map()
    f = [a2.potential[z] + a1.potential[inv2[z]] for z in range(b.n)]
    f = _normalize(f, m[a1.base_point])
    return _certify(b, f, a1.base_point)


def invert(a: AlmostIsometry) -> AlmostIsometry:
    """Inverse map with potential ``g(x) = -f(phi(x))`` on the original source."""
    b = a.bijection.inverse()
    g = [-a.potential[a.map[x]] for x in range(b.n)]
    base = a.map[a.base_point]
    g = _normalize(g, b.map[base])
    return _certify(b, g, base)


def identity_almost_isometry(space: FiniteQuasiMetric) -> AlmostIsometry:
    zero = 0 if space.exact else 0.0
    return AlmostIsometry(identity(space), (zero,) * space.n, 0)


def same_potential(f, g, exact=True, tol=0.0) -> bool:
    """Equality modulo an additive constant."""
    c = f[0] - g[0]
    if exact:
        return all(a - b == c for a, b in zip(f, g))
    return all(abs(a - b - c) <= tol for a, b in zip(f, g))


def _signature(sym: np.ndarray, i: int):
    return tuple(sorted(sym[i], reverse=True))


def _search_order(sym: np.ndarray) -> list:
    n = sym.shape[0]
    # decreasing signature, ties by index
    keyed = sorted(range(n), key=lambda i: (_signature(sym, i), -i), reverse=True)
    return keyed


def symmetrized_isometries(space: FiniteQuasiMetric, order=None):
    """Yield every self-bijection preserving the symmetrized metric.

    Backtracking over points in ``order``; a partial map is extended only if
    it keeps ``dt(phi x, phi y) = dt(x, y)`` with the already-placed points.
    """
    sym = symmetrize(space).d
    n = space.n
    exact = space.exact
    tol = space.tol
    if order is None:
        order = _search_order(sym)
    sigs = [_signature(sym, i) for i in range(n)]

    def same(a, b):
        return a == b if exact else abs(a - b) <= tol

    def same_sig(i, j):
        return all(same(a, b) for a, b in zip(sigs[i], sigs[j]))

    candidates = [[j for j in range(n) if same_sig(i, j)] for i in range(n)]
    phi = [-1] * n
    used = [False] * n

    def extend(depth):
        if depth == n:
            yield tuple(phi)
            return
        i = order[depth]
        placed = order[:depth]
        for j in candidates[i]:
            if used[j]:
                continue
            if all(same(sym[j, phi[k]], sym[i, k]) for k in placed):
                phi[i] = j
                used[j] = True
                yield from extend(depth + 1)
                used[j] = False
                phi[i] = -1

    yield from extend(0)


def enumerate_extended_group(space: FiniteQuasiMetric, cap: int = DEFAULT_SEARCH_CAP) -> list:
    """All almost isometries of ``space`` onto itself, sorted by permutation.

    Candidates come from :func:`symmetrized_isometries` (the extended group
    sits inside the isometry group of the symmetrized metric) and are kept
    when they preserve T. Potentials are normalized at point 0.
    """
    if space.n > cap:
        raise CapExceeded(f"n={space.n} exceeds search cap {cap}")
    out = []
    for perm in symmetrized_isometries(space):
        b = Bijection(space, space, perm)
        if check_almost_isometry(b):
            out.append(recover_potential(b, 0))
    out.sort(key=lambda a: a.map)
    return out


def isometry_group(space: FiniteQuasiMetric, cap: int = DEFAULT_SEARCH_CAP) -> list:
    """Plain isometries of ``space``, by exhaustive enumeration (maps only)."""
    if space.n > cap:
        raise CapExceeded(f"n={space.n} exceeds search cap {cap}")
    return sorted(
        p for p in permutations(range(space.n)) if is_isometry(Bijection(space, space, p))
    )


def image_chain(b: Bijection, chain: Sequence) -> list:
    return [b.map[b.source.index(p)] for p in chain]
