"""Conformastationary splittings, Fermat metrics and conformal lifts.

A splitting of ``S x R`` carries the metric

    g((v, tau), (v, tau)) = Omega(x, t) * (g0(v, v) + 2 omega(v) tau - tau^2)

with ``K = d/dt``. Its Fermat metric is the Randers metric
``F(v) = sqrt(g0(v, v) + omega(v)^2) + omega(v)``, which does not see
``Omega``.

Sign conventions used throughout:

* ``reslice(split, f)`` re-cuts along ``t = f(x)``; the new time is
  ``t' = t - f(x)`` and the new Fermat metric is ``F - df``.
* A lift ``psi(x, t) = (phi(x), t + f(x))`` between two splittings is
  conformal exactly when ``phi^*(F_target) = F_source + df``. Hence the lift
  from a splitting to ``reslice(split, f)`` is ``(id, -f)``.
* The conformal factor is ``lambda = (psi^* g_target) / g_source``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import finsler
from .errors import InputError, MathFailure
from .lengthspace import discretize_chart, grid_graph, single_source
from .maps import AffineMap, ChartMap, ScalarField

DEFAULT_T_SAMPLES = (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class ConformastationarySplitting:
    domain: tuple
    Omega: Callable = field(repr=False)  # (x, t) -> float > 0
    g0: Callable = field(repr=False)  # x -> 2x2 SPD
    omega: Callable = field(repr=False)  # x -> covector

    def __post_init__(self):
        d = tuple(float(a) for a in self.domain)
        if len(d) != 4 or not (d[0] < d[1] and d[2] < d[3]):
            raise InputError(f"bad domain {self.domain}")
        object.__setattr__(self, "domain", d)

    @classmethod
    def build(cls, domain, Omega=1.0, g0=np.eye(2), omega=(0.0, 0.0)):
        """Constants or callables for each field."""
        if callable(Omega):
            Om = Omega
        else:
            c = float(Omega)
            Om = lambda x, t: c  # noqa: E731
        return cls(domain, Om, finsler._as_matrix_field(g0), finsler._as_covector_field(omega))

    def grid(self, resolution):
        x0, x1, y0, y1 = self.domain
        xs, ys = np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution)
        return [np.array([x, y]) for y in ys for x in xs]

    def metric_matrix(self, x, t) -> np.ndarray:
        """3x3 Gram matrix of g in the basis (e1, e2, d/dt)."""
        G = np.empty((3, 3))
        G[:2, :2] = self.g0(x)
        w = self.omega(x)
        G[:2, 2] = w
        G[2, :2] = w
        G[2, 2] = -1.0
        return self.Omega(x, t) * G

    def check(self, resolution=8, t_samples=DEFAULT_T_SAMPLES):
        """Sampled positivity of Omega and g0."""
        for x in self.grid(resolution):
            g = self.g0(x)
            if np.linalg.eigvalsh((g + g.T) / 2).min() <= 0:
                raise MathFailure(f"g0 is not positive definite at {x.tolist()}", {"point": x.tolist()})
            for t in t_samples:
                if not self.Omega(x, t) > 0:
                    raise MathFailure(f"Omega is not positive at {x.tolist()}, t={t}", {"point": x.tolist(), "t": t})
        return self


def fermat_metric(split: ConformastationarySplitting) -> finsler.FinslerChart:
    """Randers chart with ``h = g0 + omega (x) omega`` and one-form ``omega``."""
    g0, om = split.g0, split.omega

    def F(x, v):
        v = np.asarray(v, dtype=float)
        w = om(x) @ v
        return float(math.sqrt(v @ g0(x) @ v + w * w) + w)

    def h(x):
        w = om(x)
        return g0(x) + np.outer(w, w)

    data = finsler.RandersData(h, om)
    return finsler.FinslerChart(split.domain, F, True, finsler.RANDERS, data)


class SliceError(MathFailure):
    pass


def slice_norms(split, f: ScalarField, resolution=16):
    """``||omega - df||_h`` at grid points (h = g0 + omega omega^T)."""
    out = []
    for x in split.grid(resolution):
        w = split.omega(x)
        h = split.g0(x) + np.outer(w, w)
        b = w - f.gradient(x)
        out.append((x, float(math.sqrt(b @ np.linalg.solve(h, b)))))
    return out


def reslice(split: ConformastationarySplitting, f: ScalarField, check_resolution: int = 16) -> ConformastationarySplitting:
    """The splitting adapted to the slice ``{t = f(x)}``; its Fermat metric is ``F - df``.

    With ``t' = t - f(x)``: ``omega' = omega - df``,
    ``g0' = g0 + omega*df + df*omega - df*df`` (symmetrized products),
    ``Omega'(x, t') = Omega(x, t' + f(x))``. The slice is spacelike iff
    ``||omega - df||_h < 1``, checked on a grid.
    """
    norms = slice_norms(split, f, check_resolution)
    bad = [(x, n) for x, n in norms if n >= 1]
    if bad:
        x, n = max(bad, key=lambda p: p[1])
        raise SliceError(
            f"slice is not spacelike: ||omega - df||_h = {n:.6g} at {x.tolist()}",
            {"point": x.tolist(), "slack": 1 - n, "violations": len(bad)},
        )
    g0, om, Om = split.g0, split.omega, split.Omega

    def new_g0(x):
        w = om(x)
        df = f.gradient(x)
        cross = np.outer(w, df)
        return g0(x) + cross + cross.T - np.outer(df, df)

    def new_omega(x):
        return om(x) - f.gradient(x)

    def new_Omega(x, t):
        return Om(x, t + f(x))

    return ConformastationarySplitting(split.domain, new_Omega, new_g0, new_omega)


@dataclass(frozen=True)
class TimeTranslation:
    T: float

    def __call__(self, x, t):
        return np.asarray(x, dtype=float), t + self.T


@dataclass(frozen=True)
class ConformalLift:
    """``psi(x, t) = (phi(x), t + f(x))``. Build certified lifts with :func:`lift`."""

    phi: ChartMap
    f: ScalarField

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        return self.phi(x), t + self.f(x)

    def jacobian(self, x) -> np.ndarray:
        J = np.zeros((3, 3))
        J[:2, :2] = self.phi.jacobian(x)
        J[2, :2] = self.f.gradient(x)
        J[2, 2] = 1.0
        return J

    def compose(self, inner: "ConformalLift") -> "ConformalLift":
        """``self o inner``: potential ``f_inner + f_self o phi_inner``."""
        return ConformalLift(self.phi.compose(inner.phi), inner.f + self.f.after(inner.phi))

    def inverse(self) -> "ConformalLift":
        inv = self.phi.inverse()
        return ConformalLift(inv, -self.f.after(inv))

    @classmethod
    def identity(cls):
        return cls(AffineMap.identity(), ScalarField.constant(0.0))


class LiftError(MathFailure):
    pass


def pullback_defect(phi, f: ScalarField, chart_source, chart_target, points, directions=8) -> float:
    """Largest ``|F_T(phi x, Dphi v) - F_S(x, v) - df_x(v)|`` over samples."""
    worst = 0.0
    for x in points:
        px = phi(x)
        J = phi.jacobian(x)
        df = f.gradient(x)
        for k in range(directions):
            t = 2 * math.pi * k / directions
            v = np.array([math.cos(t), math.sin(t)])
            r = chart_target.F(px, J @ v) - chart_source.F(x, v) - df @ v
            worst = max(worst, abs(r))
    return worst


def lift(phi: ChartMap, f: ScalarField, split_source, split_target, *, resolution: int = 24, tol: float = 1e-6) -> ConformalLift:
    """Certify ``phi`` as an almost isometry of the Fermat metrics with potential ``f``, then lift.

    Two checks: :func:`finsler.pushforward_check` must relate
    ``F_target`` and ``phi_*(F_source)``, and the pointwise identity
    ``phi^*(F_target) = F_source + df`` must hold on samples within ``tol``.
    """
    Fs, Ft = fermat_metric(split_source), fermat_metric(split_target)
    report = finsler.pushforward_check(phi, Fs, Ft, resolution)
    if not report.certified:
        raise LiftError(f"map is not an almost isometry of the Fermat metrics (failed at {report.stage})",
                        report.to_json())
    defect = pullback_defect(phi, f, Fs, Ft, split_source.grid(max(4, resolution // 3)))
    if defect > tol:
        raise LiftError(f"potential does not match: pullback defect {defect:.3g}",
                        {"pullback_defect": defect, **report.to_json()})
    return ConformalLift(phi, f)


def project(lift: ConformalLift):
    return lift.phi, lift.f


@dataclass
class ConformalityReport:
    passed: bool
    lambdas: np.ndarray
    max_pair_spread: float
    degenerate_error: float
    points: list = field(repr=False, default_factory=list)

    @property
    def lambda_min(self):
        return float(self.lambdas.min())

    @property
    def lambda_max(self):
        return float(self.lambdas.max())

    def to_json(self):
        return {
            "pass": self.passed,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "max_pair_spread": float(self.max_pair_spread),
            "degenerate_error": float(self.degenerate_error),
        }


def _spanning_vectors(G):
    """e1, e2, d/dt and a future null vector over e1 for the Gram matrix G."""
    e1, e2, et = np.eye(3)
    # g(e1 + tau et) = G11 + 2 G13 tau + G33 tau^2 = 0 with G33 < 0
    a, b, c = G[2, 2], 2 * G[0, 2], G[0, 0]
    tau = (-b - math.sqrt(b * b - 4 * a * c)) / (2 * a)
    return [e1, e2, et, e1 + tau * et]


def verify_conformality(lift: ConformalLift, split_source, split_target, samples=None, *,
                        t_samples=DEFAULT_T_SAMPLES, resolution: int = 5, tol: float = 1e-6) -> ConformalityReport:
    """Test ``psi^* g_target = lambda g_source`` pointwise.

    At each spacetime sample, both forms are evaluated on all pairs from a
    spanning set of four vectors (two spatial, one timelike, one null).
    Ratios over non-degenerate pairs must agree to ``tol`` (relative);
    pairs that are null for ``g_source`` must be null for the pullback too.
    """
    if samples is None:
        samples = [(x, t) for x in split_source.grid(resolution) for t in t_samples]
    lambdas, spread, degenerate = [], 0.0, 0.0
    passed = True
    for x, t in samples:
        x = np.asarray(x, dtype=float)
        Gs = split_source.metric_matrix(x, t)
        px, pt = lift(x, t)
        J = lift.jacobian(x)
        Gp = J.T @ split_target.metric_matrix(px, pt) @ J
        vecs = _spanning_vectors(Gs)
        scale_s = max(abs(a @ Gs @ b) for a in vecs for b in vecs)
        scale_p = max(abs(a @ Gp @ b) for a in vecs for b in vecs)
        ratios = []
        for i in range(4):
            for j in range(i, 4):
                s = vecs[i] @ Gs @ vecs[j]
                p = vecs[i] @ Gp @ vecs[j]
                if abs(s) <= 1e-12 * scale_s:
                    degenerate = max(degenerate, abs(p) / max(scale_p, 1e-300))
                else:
                    ratios.append(p / s)
        lam = float(np.median(ratios))
        sp = (max(ratios) - min(ratios)) / max(abs(lam), 1e-300)
        spread = max(spread, sp)
        lambdas.append(lam)
        if not lam > 0 or sp > tol:
            passed = False
    if degenerate > tol:
        passed = False
    return ConformalityReport(passed, np.array(lambdas), spread, degenerate, list(samples))


def time_translation(lift: ConformalLift, points, tol: float = 1e-9):
    """The ``T`` with ``lift(x, t) = (x, t + T)`` on all points, or ``None``."""
    shifts = []
    for x in points:
        x = np.asarray(x, dtype=float)
        px, _ = lift(x, 0.0)
        if np.max(np.abs(px - x)) > tol:
            return None
        shifts.append(lift.f(x))
    T = float(np.mean(shifts))
    if max(abs(s - T) for s in shifts) > tol:
        return None
    return T


# discrete cross-check


def discrete_lift_defect(lift: ConformalLift, split_source, split_target, resolution: int,
                         sources=None, stencil: int = 16):
    """Grid-level check of ``d_T(phi x, phi y) = d_S(x, y) + f(y) - f(x)``.

    The source grid is mapped node by node through ``phi``; both graphs use
    midpoint edge weights of their Fermat metric on the same edge pattern.
    Returns ``(max_error, cell_size)`` over the rows from ``sources``
    (default: the four corners and the centre).
    """
    Fs, Ft = fermat_metric(split_source), fermat_metric(split_target)
    g_s = discretize_chart(Fs.F, split_source.domain, resolution, stencil=stencil)
    nodes = [np.array(c) for c in g_s.coords]
    images = [lift.phi(p) for p in nodes]

    def weight(i0, j0, i1, j1):
        a, b = images[i0 * resolution + j0], images[i1 * resolution + j1]
        return Ft.F((a + b) / 2, b - a)

    g_t = grid_graph(resolution, resolution, weight, stencil=stencil)
    if sources is None:
        r = resolution - 1
        c = resolution // 2
        sources = [0, r, r * resolution, r * resolution + r, c * resolution + c]
    ds = single_source(g_s, sources)
    dt = single_source(g_t, sources)
    fv = [lift.f(p) for p in nodes]
    err = 0.0
    for row, s in enumerate(sources):
        for y in range(g_s.n):
            err = max(err, abs(dt[row][y] - ds[row][y] - (fv[y] - fv[s])))
    x0, x1 = split_source.domain[:2]
    return err, (x1 - x0) / (resolution - 1)


def discretized_distances(split, resolution: int, stencil: int = 16):
    """All-pairs distances of the discretized Fermat metric (graph, rows)."""
    from .lengthspace import induced_quasimetric

    g = discretize_chart(fermat_metric(split).F, split.domain, resolution, stencil=stencil)
    return g, induced_quasimetric(g).dist
