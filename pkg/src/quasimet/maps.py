"""Planar chart maps and scalar fields with derivatives.

Built-in affine maps (translations, rotations, shears) carry exact
Jacobians and inverses. Maps given by expressions get symbolic Jacobians and
a Newton inverse. Anything else falls back to central differences.
"""
from __future__ import annotations

import numpy as np

from . import expr as ex
from .errors import InputError, MathFailure

FD_STEP = 1e-5


def fd_gradient(fn, x, step=FD_STEP):
    x = np.asarray(x, dtype=float)
    g = np.empty(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        g[i] = (fn(x + e) - fn(x - e)) / (2 * step)
    return g


def fd_jacobian(fn, x, step=FD_STEP):
    x = np.asarray(x, dtype=float)
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        J[:, j] = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * step)
    return J


class ScalarField:
    """A function on the plane with a gradient (analytic when known)."""

    def __init__(self, fn, grad=None, label=None):
        self.fn = fn
        self._grad = grad
        self.label = label

    def __call__(self, x):
        return float(self.fn(np.asarray(x, dtype=float)))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=float)
        return fd_gradient(self.fn, x)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = float(other)
            return ScalarField(lambda x: self.fn(x) + c, self.gradient)
        return ScalarField(lambda x: self.fn(x) + other.fn(x), lambda x: self.gradient(x) + other.gradient(x))

    __radd__ = __add__

    def __neg__(self):
        return ScalarField(lambda x: -self.fn(x), lambda x: -self.gradient(x))

    def __sub__(self, other):
        return self + (-other if isinstance(other, ScalarField) else -float(other))

    def __mul__(self, c):
        c = float(c)
        return ScalarField(lambda x: c * self.fn(x), lambda x: c * self.gradient(x))

    __rmul__ = __mul__

    def after(self, phi: "ChartMap") -> "ScalarField":
        """``self o phi`` with the chain-rule gradient."""
        return ScalarField(
            lambda x: self.fn(phi(x)),
            lambda x: phi.jacobian(x).T @ self.gradient(phi(x)),
        )

    @classmethod
    def constant(cls, c=0.0):
        c = float(c)
        return cls(lambda x: c, lambda x: np.zeros(2), label=repr(c))

    @classmethod
    def linear(cls, a, b, c=0.0):
        """``a*x + b*y + c``."""
        a, b, c = float(a), float(b), float(c)
        return cls(lambda x: a * x[0] + b * x[1] + c, lambda x: np.array([a, b]))

    @classmethod
    def from_expr(cls, text):
        e = ex.as_expr(text)
        dx, dy = e.diff("x"), e.diff("y")
        return cls(
            lambda p: e.evaluate({"x": p[0], "y": p[1]}),
            lambda p: np.array([dx.evaluate({"x": p[0], "y": p[1]}), dy.evaluate({"x": p[0], "y": p[1]})], dtype=float),
            label=str(text),
        )


class ChartMap:
    """A planar diffeomorphism. Subclasses override what they know exactly."""

    def __call__(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        return fd_jacobian(self, x)

    def inverse(self) -> "ChartMap":
        return NewtonInverse(self)

    def compose(self, inner: "ChartMap") -> "ChartMap":
        """``self o inner``."""
        return Composed(self, inner)


class AffineMap(ChartMap):
    """``x -> A x + b``."""

    def __init__(self, matrix, offset=(0.0, 0.0)):
        self.A = np.asarray(matrix, dtype=float).reshape(2, 2)
        self.b = np.asarray(offset, dtype=float).reshape(2)
        if abs(np.linalg.det(self.A)) < 1e-14:
            raise InputError("affine map is singular")

    def __call__(self, x):
        return self.A @ np.asarray(x, dtype=float) + self.b

    def jacobian(self, x):
        return self.A.copy()

    def inverse(self):
        Ai = np.linalg.inv(self.A)
        return AffineMap(Ai, -Ai @ self.b)

    def compose(self, inner):
        if isinstance(inner, AffineMap):
            return AffineMap(self.A @ inner.A, self.A @ inner.b + self.b)
        return Composed(self, inner)

    def __repr__(self):
        return f"AffineMap({self.A.tolist()}, {self.b.tolist()})"

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def translation(cls, dx, dy):
        return cls(np.eye(2), (dx, dy))

    @classmethod
    def rotation(cls, angle, center=(0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        R = np.array([[c, -s], [s, c]])
        p = np.asarray(center, dtype=float)
        return cls(R, p - R @ p)

    @classmethod
    def shear(cls, k):
        return cls([[1.0, k], [0.0, 1.0]])


class ExprMap(ChartMap):
    """Map given by two expressions in ``x, y``, with symbolic partials."""

    def __init__(self, fx, fy):
        self.fx, self.fy = ex.as_expr(fx), ex.as_expr(fy)
        self.partials = [[self.fx.diff("x"), self.fx.diff("y")], [self.fy.diff("x"), self.fy.diff("y")]]

    @classmethod
    def parse(cls, text):
        parts = ex.parse_list(text)
        if len(parts) != 2:
            raise ex.ExpressionError(f"a chart map needs two components, got {len(parts)}")
        return cls(*parts)

    def __call__(self, x):
        env = {"x": float(x[0]), "y": float(x[1])}
        return np.array([self.fx.evaluate(env), self.fy.evaluate(env)], dtype=float)

    def jacobian(self, x):
        env = {"x": float(x[0]), "y": float(x[1])}
        return np.array([[float(p.evaluate(env)) for p in row] for row in self.partials])

    def __repr__(self):
        return f"ExprMap({self.fx}, {self.fy})"


class Composed(ChartMap):
    def __init__(self, outer, inner):
        self.outer, self.inner = outer, inner

    def __call__(self, x):
        return self.outer(self.inner(x))

    def jacobian(self, x):
        return self.outer.jacobian(self.inner(x)) @ self.inner.jacobian(x)

    def inverse(self):
        return Composed(self.inner.inverse(), self.outer.inverse())


class NewtonInverse(ChartMap):
    def __init__(self, forward, tol=1e-13, max_iter=50):
        self.forward = forward
        self.tol = tol
        self.max_iter = max_iter

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        x = y.copy()
        for _ in range(self.max_iter):
            r = self.forward(x) - y
            if np.max(np.abs(r)) <= self.tol * max(1.0, np.max(np.abs(y))):
                return x
            x = x - np.linalg.solve(self.forward.jacobian(x), r)
        raise MathFailure(f"Newton inverse did not converge at {y.tolist()}")

    def jacobian(self, y):
        return np.linalg.inv(self.forward.jacobian(self(y)))

    def inverse(self):
        return self.forward
