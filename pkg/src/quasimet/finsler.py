"""Pseudo-Finsler metrics on planar charts.

A chart is a rectangle ``(x0, x1, y0, y1)`` with a function ``F(x, v)``
that is positively 1-homogeneous in ``v`` and vanishes only at ``v = 0``.
Randers charts ``F = sqrt(h(v, v)) + omega(v)`` keep their data so callers
can compare against closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, MathFailure

RIEMANNIAN = "riemannian"
RANDERS = "randers"
CUSTOM = "custom"

ZERO_SECTION_GUARD = 1e-8
MIN_QUADRATURE = 16


def _as_matrix_field(h):
    if callable(h):
        return lambda x: np.asarray(h(x), dtype=float).reshape(2, 2)
    m = np.asarray(h, dtype=float).reshape(2, 2)
    return lambda x: m


def _as_covector_field(w):
    if callable(w):
        return lambda x: np.asarray(w(x), dtype=float).reshape(2)
    c = np.asarray(w, dtype=float).reshape(2)
    return lambda x: c


@dataclass(frozen=True)
class RandersData:
    """``h`` is a 2x2 SPD matrix field, ``omega`` a covector field."""

    h: Callable
    omega: Callable

    @classmethod
    def build(cls, h, omega):
        return cls(_as_matrix_field(h), _as_covector_field(omega))

    def omega_norm(self, x) -> float:
        """``||omega||_h = sqrt(omega^T h^-1 omega)``."""
        w = self.omega(x)
        return float(math.sqrt(w @ np.linalg.solve(self.h(x), w)))

    def check(self, points) -> float:
        """Largest omega norm over ``points``; raises if h is not SPD or the norm reaches 1."""
        worst = 0.0
        for x in points:
            H = self.h(x)
            if not np.allclose(H, H.T) or np.linalg.eigvalsh((H + H.T) / 2).min() <= 0:
                raise MathFailure(f"h is not positive definite at {list(map(float, x))}")
            nrm = self.omega_norm(x)
            if nrm >= 1:
                raise MathFailure(
                    f"omega has h-norm {nrm:.6g} >= 1 at {list(map(float, x))}",
                    {"point": [float(a) for a in x], "slack": 1 - nrm},
                )
            worst = max(worst, nrm)
        return worst


@dataclass(frozen=True)
class FinslerChart:
    domain: tuple
    F: Callable = field(repr=False)
    smooth: bool = True
    kind: str = CUSTOM
    randers: RandersData | None = field(default=None, repr=False)

    def __post_init__(self):
        d = tuple(float(a) for a in self.domain)
        if len(d) != 4 or not (d[0] < d[1] and d[2] < d[3]):
            raise InputError(f"domain must be [x0, x1, y0, y1] with x0 < x1, y0 < y1; got {self.domain}")
        object.__setattr__(self, "domain", d)

    def contains(self, x, slack=1e-12) -> bool:
        x0, x1, y0, y1 = self.domain
        return x0 - slack <= x[0] <= x1 + slack and y0 - slack <= x[1] <= y1 + slack

    def grid(self, resolution: int):
        x0, x1, y0, y1 = self.domain
        return np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution)

    def sample_points(self, count: int, rng) -> np.ndarray:
        x0, x1, y0, y1 = self.domain
        return np.column_stack([rng.uniform(x0, x1, count), rng.uniform(y0, y1, count)])


def euclidean(domain=(-1.0, 1.0, -1.0, 1.0)) -> FinslerChart:
    return FinslerChart(domain, lambda x, v: float(math.hypot(v[0], v[1])), kind=RIEMANNIAN,
                        randers=RandersData.build(np.eye(2), (0.0, 0.0)))


def riemannian(h, domain) -> FinslerChart:
    data = RandersData.build(h, (0.0, 0.0))
    hf = data.h

    def F(x, v):
        v = np.asarray(v, dtype=float)
        return float(math.sqrt(max(v @ hf(x) @ v, 0.0)))

    return FinslerChart(domain, F, kind=RIEMANNIAN, randers=data)


def randers(h, omega, domain) -> FinslerChart:
    data = RandersData.build(h, omega)
    hf, wf = data.h, data.omega

    def F(x, v):
        v = np.asarray(v, dtype=float)
        return float(math.sqrt(max(v @ hf(x) @ v, 0.0)) + wf(x) @ v)

    return FinslerChart(domain, F, kind=RANDERS, randers=data)


def custom(fn, domain, smooth=True) -> FinslerChart:
    return FinslerChart(domain, lambda x, v: float(fn(np.asarray(x, float), np.asarray(v, float))), smooth=smooth)


def eval(chart: FinslerChart, x, v) -> float:  # noqa: A001 - operation name
    x = np.asarray(x, dtype=float)
    if not chart.contains(x):
        raise InputError(f"point {x.tolist()} is outside the chart domain {chart.domain}")
    return chart.F(x, np.asarray(v, dtype=float))


def add_differential(chart: FinslerChart, grad, sign=1.0) -> FinslerChart:
    """``F + sign * df`` for a gradient field ``grad(x)``."""
    base = chart.F

    def F(x, v):
        return base(x, v) + sign * float(np.asarray(grad(x)) @ np.asarray(v, dtype=float))

    data = None
    if chart.randers is not None:
        w0 = chart.randers.omega
        data = RandersData(chart.randers.h, lambda x: w0(x) + sign * np.asarray(grad(x), dtype=float))
    return FinslerChart(chart.domain, F, chart.smooth, RANDERS if data is not None else CUSTOM, data)


@dataclass
class ChartCheck:
    homogeneity_error: float
    positivity_ok: bool
    min_unit_value: float

    def to_json(self):
        return {"homogeneity_error": self.homogeneity_error, "positivity_ok": self.positivity_ok,
                "min_unit_value": self.min_unit_value}


def check_chart(chart: FinslerChart, rng, samples: int = 200, scales=(0.5, 2.0, 10.0)) -> ChartCheck:
    """Spot-check positive homogeneity and positivity on random samples.

    The homogeneity error is relative: ``|F(x, l v) - l F(x, v)| / (l F(x, v))``.
    """
    pts = chart.sample_points(samples, rng)
    worst = 0.0
    min_unit = math.inf
    positive = chart.F(pts[0], np.zeros(2)) == 0
    for x in pts:
        theta = rng.uniform(0, 2 * math.pi)
        v = np.array([math.cos(theta), math.sin(theta)]) * rng.uniform(0.1, 3.0)
        f = chart.F(x, v)
        if not f > 0:
            positive = False
        min_unit = min(min_unit, f / float(np.linalg.norm(v)))
        for lam in scales:
            err = abs(chart.F(x, lam * v) - lam * f) / max(lam * abs(f), 1e-300)
            worst = max(worst, err)
    return ChartCheck(worst, bool(positive), float(min_unit))


@dataclass(frozen=True)
class FundamentalTensorSample:
    x: tuple
    u: tuple
    g_u: np.ndarray

    def quadratic(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.g_u @ v)


FD_STEP = 2.0 ** -9  # relative to the unit direction


def fd_step(u) -> float:
    """Step for a direction of length ``|u|``; a power of two keeps ``u +- s`` clean."""
    return FD_STEP * 2.0 ** round(math.log2(max(float(np.linalg.norm(u)), 1e-300)))


def _mixed_second(F2, u, s):
    E = np.eye(2) * s
    g = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            val = (F2(u + E[i] + E[j]) - F2(u + E[i] - E[j]) - F2(u - E[i] + E[j]) + F2(u - E[i] - E[j])) / (8 * s * s)
            g[i, j] = g[j, i] = val
    return g


def fundamental_tensor(chart: FinslerChart, x, u, step=None) -> FundamentalTensorSample:
    """``g_u(v, w) = 1/2 d^2/ds dt F^2(u + t v + s w)`` by central differences.

    With the 1/2 factor ``g_u(u, u) = F(u)^2`` and the Euclidean tensor is
    the identity. The tensor is 0-homogeneous in ``u``, so the stencil runs
    around ``u / |u|``; steps ``s`` and ``2s`` are combined by Richardson
    extrapolation, leaving an O(s^4) truncation error.
    """
    if not chart.smooth:
        raise InputError("fundamental tensor needs a chart smooth away from the zero section")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm < ZERO_SECTION_GUARD:
        raise InputError("direction u is too close to zero")
    e = u / norm
    s = FD_STEP if step is None else float(step) / norm

    def F2(v):
        f = chart.F(x, v)
        return f * f

    g = (4 * _mixed_second(F2, e, s) - _mixed_second(F2, e, 2 * s)) / 3
    return FundamentalTensorSample(tuple(x), tuple(u), g)


def is_strongly_convex(chart: FinslerChart, points, directions: int = 16) -> bool:
    for x in points:
        for k in range(directions):
            t = 2 * math.pi * k / directions
            g = fundamental_tensor(chart, x, (math.cos(t), math.sin(t))).g_u
            if np.linalg.eigvalsh(g).min() <= 0:
                return False
    return True


def symmetrize_finsler(chart: FinslerChart) -> FinslerChart:
    """``F_hat(x, v) = (F(x, v) + F(x, -v)) / 2``."""
    base = chart.F

    def F(x, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * (base(x, v) + base(x, -v))

    kind = RIEMANNIAN if chart.kind in (RIEMANNIAN, RANDERS) else CUSTOM
    data = None
    if chart.randers is not None:
        data = RandersData(chart.randers.h, lambda x: np.zeros(2))
    return FinslerChart(chart.domain, F, chart.smooth, kind, data)


def average_metric_2d(chart: FinslerChart, x, quadrature_points: int = 512) -> np.ndarray:
    """Average of the fundamental tensor over the indicatrix.

    The indicatrix is parametrized radially, ``u(t) = e(t) / F(x, e(t))``
    with ``e(t) = (cos t, sin t)``. The density is normalized so the unit
    ball has area one; along this parametrization ``Omega(u, u') dt =
    dt / (F(e)^2 * area)`` and ``area = 1/2 * int dt / F(e)^2``. Since the
    tensor is 0-homogeneous, ``g_u = g_e``. For the Euclidean plane the
    result is ``2 * I``. The trapezoid rule is spectrally accurate here.
    """
    if quadrature_points < MIN_QUADRATURE:
        raise InputError(f"need at least {MIN_QUADRATURE} quadrature points")
    x = np.asarray(x, dtype=float)
    dt = 2 * math.pi / quadrature_points
    total = np.zeros((2, 2))
    weight_sum = 0.0
    for k in range(quadrature_points):
        t = k * dt
        e = np.array([math.cos(t), math.sin(t)])
        f = chart.F(x, e)
        if not f > 0:
            raise MathFailure(f"F vanishes or is negative in direction {e.tolist()}")
        g = fundamental_tensor(chart, x, e).g_u
        if np.linalg.eigvalsh(g).min() < -1e-8 * max(1.0, abs(g).max()):
            raise MathFailure(f"chart is not convex at {x.tolist()} (direction angle {t:.4g})")
        w = 1.0 / (f * f)
        total += g * w
        weight_sum += w
    area = 0.5 * weight_sum * dt
    h = total * dt / area
    return (h + h.T) / 2


# projective relatedness


@dataclass
class OneFormField:
    """Covector components on a tensor grid; arrays indexed ``[i_y, j_x]``."""

    xs: np.ndarray
    ys: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def curl(self) -> np.ndarray:
        """``d1 b2 - d2 b1`` by central differences on interior nodes."""
        hx = self.xs[1] - self.xs[0]
        hy = self.ys[1] - self.ys[0]
        d1b2 = (self.b2[1:-1, 2:] - self.b2[1:-1, :-2]) / (2 * hx)
        d2b1 = (self.b1[2:, 1:-1] - self.b1[:-2, 1:-1]) / (2 * hy)
        return d1b2 - d2b1


@dataclass
class ProjectiveResult:
    related: bool
    stage: str | None  # failing stage: "linearity" | "closedness" | "path"
    xs: np.ndarray
    ys: np.ndarray
    potential: np.ndarray | None  # indexed [i_y, j_x], zero at (x0, y0)
    linearity_error: float
    closedness_error: float | None = None
    path_error: float | None = None
    one_form: OneFormField | None = field(default=None, repr=False)

    def to_json(self, include_potential=True):
        out = {
            "related": self.related,
            "stage": self.stage,
            "linearity_error": self.linearity_error,
            "closedness_error": self.closedness_error,
            "path_error": self.path_error,
        }
        if include_potential and self.potential is not None:
            out["grid_x"] = self.xs.tolist()
            out["grid_y"] = self.ys.tolist()
            out["potential"] = self.potential.tolist()
        return out


_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(4)

LIN_TOL = 1e-9
CLOSED_TOL = 1e-3
PATH_TOL = 1e-6


def _segment_integral(beta, a, b, axis):
    """Integral of component ``axis`` of ``beta`` along the straight segment a -> b."""
    mid = (a + b) / 2
    half = (b - a) / 2
    length = half[axis]
    total = 0.0
    for t, w in zip(_GAUSS_T, _GAUSS_W):
        total += w * beta(mid + t * half)[axis]
    return total * length


def projective_test(chart1: FinslerChart, chart2: FinslerChart, resolution: int = 64, *,
                    lin_tol=LIN_TOL, closed_tol=CLOSED_TOL, path_tol=PATH_TOL) -> ProjectiveResult:
    """Decide on a grid whether ``F1 = F2 + df`` and recover ``f``.

    Stage 1 checks that ``D = F1 - F2`` is linear in ``v`` (8 directions
    against the two basis values). Stage 2 checks the curl of the one-form
    by central differences. Stage 3 integrates it from the lower-left corner
    along the x-then-y staircase, cross-checks the y-then-x staircase, and
    returns the potential. Each segment integral uses 4-point Gauss-Legendre,
    evaluating the one-form off-grid, so polynomial potentials are exact.
    Tolerances are relative to ``max(1, scale)``.
    """
    if resolution < 3:
        raise InputError("resolution must be at least 3")
    if chart1.domain != chart2.domain:
        raise InputError("charts must share their domain")
    F1, F2 = chart1.F, chart2.F
    xs, ys = chart1.grid(resolution)
    dirs = [np.array([math.cos(t), math.sin(t)]) for t in np.arange(8) * math.pi / 4]
    dirs[0], dirs[2] = np.array([1.0, 0.0]), np.array([0.0, 1.0])

    def beta(p):
        return np.array([F1(p, dirs[0]) - F2(p, dirs[0]), F1(p, dirs[2]) - F2(p, dirs[2])])

    b1 = np.empty((resolution, resolution))
    b2 = np.empty((resolution, resolution))
    lin_err = 0.0
    scale = 1.0
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            p = np.array([x, y])
            f1 = [F1(p, v) for v in dirs]
            D = [a - F2(p, v) for a, v in zip(f1, dirs)]
            scale = max(scale, max(abs(a) for a in f1))
            b1[i, j], b2[i, j] = D[0], D[2]
            for v, dv in zip(dirs, D):
                lin_err = max(lin_err, abs(dv - v[0] * D[0] - v[1] * D[2]))
    form = OneFormField(xs, ys, b1, b2)
    result = ProjectiveResult(False, "linearity", xs, ys, None, lin_err, one_form=form)
    if lin_err > lin_tol * scale:
        return result

    beta_scale = max(1.0, float(np.abs(b1).max()), float(np.abs(b2).max()))
    curl_err = float(np.abs(form.curl()).max()) if resolution >= 3 else 0.0
    result.closedness_error = curl_err
    if curl_err > closed_tol * beta_scale:
        result.stage = "closedness"
        return result

    n = resolution
    pts = lambda i, j: np.array([xs[j], ys[i]])  # noqa: E731
    # x first, then y
    fa = np.zeros((n, n))
    for j in range(1, n):
        fa[0, j] = fa[0, j - 1] + _segment_integral(beta, pts(0, j - 1), pts(0, j), 0)
    for j in range(n):
        for i in range(1, n):
            fa[i, j] = fa[i - 1, j] + _segment_integral(beta, pts(i - 1, j), pts(i, j), 1)
    # y first, then x
    fb = np.zeros((n, n))
    for i in range(1, n):
        fb[i, 0] = fb[i - 1, 0] + _segment_integral(beta, pts(i - 1, 0), pts(i, 0), 1)
    for i in range(n):
        for j in range(1, n):
            fb[i, j] = fb[i, j - 1] + _segment_integral(beta, pts(i, j - 1), pts(i, j), 0)
    path_err = float(np.abs(fa - fb).max())
    result.path_error = path_err
    if path_err > path_tol * max(1.0, float(np.abs(fa).max())):
        result.stage = "path"
        return result
    result.related = True
    result.stage = None
    result.potential = fa
    return result


def pushforward(phi, chart: FinslerChart, domain) -> FinslerChart:
    """``phi_*(F)(y, w) = F(phi^-1(y), Dphi^-1 w)`` as a chart on ``domain``."""
    inv = phi.inverse()
    base = chart.F

    def F(y, w):
        x = inv(y)
        J = phi.jacobian(x)
        if abs(np.linalg.det(J)) < 1e-12:
            raise MathFailure(f"Jacobian is not invertible at {np.asarray(x).tolist()}")
        return base(x, np.linalg.solve(J, np.asarray(w, dtype=float)))

    return FinslerChart(domain, F, chart.smooth, CUSTOM)


@dataclass
class PushforwardReport:
    projective: ProjectiveResult
    outside_source: int  # grid nodes whose pre-image left the source rectangle
    symmetrized_error: float

    @property
    def certified(self) -> bool:
        return self.projective.related

    @property
    def stage(self):
        return self.projective.stage

    @property
    def potential(self):
        return self.projective.potential

    def to_json(self, include_potential=False):
        out = self.projective.to_json(include_potential)
        out.update(certified=self.certified, outside_source=self.outside_source,
                   symmetrized_error=self.symmetrized_error)
        return out


def symmetrized_error(chart_a: FinslerChart, chart_b: FinslerChart, points, directions: int = 8) -> float:
    """Largest gap between the symmetrized metrics of two charts on samples."""
    sa, sb = symmetrize_finsler(chart_a), symmetrize_finsler(chart_b)
    worst = 0.0
    for p in points:
        for k in range(directions):
            t = 2 * math.pi * k / directions
            v = np.array([math.cos(t), math.sin(t)])
            worst = max(worst, abs(sa.F(p, v) - sb.F(p, v)))
    return worst


def pushforward_check(phi, chart1: FinslerChart, chart2: FinslerChart, resolution: int = 32, **tols) -> PushforwardReport:
    """Certify ``phi: (M1, F1) -> (M2, F2)`` as an almost isometry at grid resolution.

    Runs :func:`projective_test` between ``F2`` and ``phi_*(F1)`` on the
    target rectangle, so a returned potential satisfies
    ``F2 = phi_*(F1) + df``, i.e. ``d2(phi x, phi y) = d1(x, y) + f(phi y) - f(phi x)``.
    The source formula is evaluated on pre-images even when they leave
    the source rectangle; such nodes are counted in ``outside_source``.
    """
    pushed = pushforward(phi, chart1, chart2.domain)
    inv = phi.inverse()
    xs, ys = chart2.grid(resolution)
    outside = sum(1 for y in ys for x in xs if not chart1.contains(inv(np.array([x, y]))))
    proj = projective_test(chart2, pushed, resolution, **tols)
    coarse = [np.array([x, y]) for y in ys[::4] for x in xs[::4]]
    sym = symmetrized_error(chart2, pushed, coarse)
    return PushforwardReport(proj, outside, sym)
