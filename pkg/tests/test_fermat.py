import math

import numpy as np
import pytest

from quasimet import fermat as fm
from quasimet import finsler as fs
from quasimet.errors import InputError, MathFailure
from quasimet.maps import AffineMap, ExprMap, ScalarField

UNIT = (0.0, 1.0, 0.0, 1.0)
rng = np.random.default_rng(7)
SAMPLES = [(rng.uniform(0, 1, 2), rng.uniform(-1, 1)) for _ in range(20)]


def static(Omega=1.0):
    return fm.ConformastationarySplitting.build(UNIT, Omega=Omega)


def zermelo(Omega=1.0):
    return fm.ConformastationarySplitting.build(UNIT, Omega=Omega, omega=(0.5, 0.0))


def curved():
    return fm.ConformastationarySplitting.build(
        UNIT,
        Omega=lambda x, t: 1 + 0.2 * x[0] ** 2 + 0.1 * math.sin(t),
        g0=lambda x: np.array([[1 + 0.3 * x[1], 0.1], [0.1, 1.2]]),
        omega=lambda x: np.array([0.3 * x[1], -0.2 * x[0]]),
    )


def test_static_fermat_is_euclidean():
    F = fm.fermat_metric(static())
    assert F.F(np.zeros(2), (3, 4)) == 5


def test_zermelo_fermat_values():
    F = fm.fermat_metric(zermelo())
    assert F.kind == fs.RANDERS
    assert F.F(np.zeros(2), (1, 0)) == pytest.approx(math.sqrt(1.25) + 0.5, abs=1e-15)
    assert F.randers.omega_norm(np.zeros(2)) == pytest.approx(0.5 / math.sqrt(1.25))
    assert 0.5 / math.sqrt(1.25) == pytest.approx(0.4472, abs=1e-4)


def test_fermat_ignores_omega_bitwise():
    a = fm.fermat_metric(curved())
    b_split = fm.ConformastationarySplitting(UNIT, lambda x, t: 17.0 * curved().Omega(x, t), curved().g0, curved().omega)
    b = fm.fermat_metric(b_split)
    for x, _ in SAMPLES:
        v = rng.normal(size=2)
        assert a.F(x, v) == b.F(x, v)


def test_check_rejects_bad_fields():
    with pytest.raises(MathFailure):
        fm.ConformastationarySplitting.build(UNIT, Omega=-1.0).check()
    with pytest.raises(MathFailure):
        fm.ConformastationarySplitting.build(UNIT, g0=[[1, 0], [0, -1]]).check()
    with pytest.raises(InputError):
        fm.ConformastationarySplitting.build((1, 0, 0, 1))


def test_reslice_trivial_is_identical():
    s = curved()
    r = fm.reslice(s, ScalarField.constant(0.0))
    for x, t in SAMPLES:
        assert np.array_equal(r.g0(x), s.g0(x))
        assert np.array_equal(r.omega(x), s.omega(x))
        assert r.Omega(x, t) == s.Omega(x, t)


def test_reslice_static_example():
    r = fm.reslice(static(), ScalarField.linear(0.3, 0))
    F = fm.fermat_metric(r)
    for x, _ in SAMPLES:
        v = rng.normal(size=2)
        assert F.F(x, v) == pytest.approx(math.hypot(*v) - 0.3 * v[0], abs=1e-12)


def test_reslice_rejects_non_spacelike():
    with pytest.raises(fm.SliceError) as info:
        fm.reslice(static(), ScalarField.from_expr("2*x"))
    assert info.value.report["slack"] == pytest.approx(-1.0)


@pytest.mark.parametrize("fexpr", ["0.3*x", "0.2*sin(2*x) + 0.1*y^2", "0.1*x*y - 0.05*y"])
def test_reslice_gives_F_minus_df(fexpr):
    s = curved()
    f = ScalarField.from_expr(fexpr)
    F = fm.fermat_metric(s)
    G = fm.fermat_metric(fm.reslice(s, f))
    for x, _ in SAMPLES:
        v = rng.normal(size=2)
        assert abs(G.F(x, v) - (F.F(x, v) - f.gradient(x) @ v)) <= 1e-9


def test_reslice_class_unchanged():
    s = zermelo()
    f = ScalarField.from_expr("0.1*x^2 + 0.2*y")
    res = fs.projective_test(fm.fermat_metric(s), fm.fermat_metric(fm.reslice(s, f)), 24)
    assert res.related
    X, Y = np.meshgrid(res.xs, res.ys)
    assert np.abs(res.potential - (0.1 * X ** 2 + 0.2 * Y)).max() < 1e-9


def test_identity_lift():
    s = curved()
    psi = fm.lift(AffineMap.identity(), ScalarField.constant(0), s, s)
    rep = fm.verify_conformality(psi, s, s, SAMPLES)
    assert rep.passed and rep.lambda_min == pytest.approx(1) and rep.lambda_max == pytest.approx(1)
    phi, f = fm.project(psi)
    assert f(np.zeros(2)) == 0 and np.array_equal(phi(np.ones(2)), np.ones(2))


def test_translation_lift_is_isometry():
    s = static()
    psi = fm.lift(AffineMap.translation(0.2, -0.1), ScalarField.constant(0), s, s)
    rep = fm.verify_conformality(psi, s, s)
    assert rep.passed and np.allclose(rep.lambdas, 1, atol=1e-12)


def test_reslice_lift_both_orientations():
    s = static()
    f = ScalarField.linear(0.3, 0)
    r = fm.reslice(s, f)
    forward = fm.lift(ExprMap.parse("x, y"), -f, s, r)
    back = fm.lift(ExprMap.parse("x, y"), f, r, s)
    for psi, a, b in ((forward, s, r), (back, r, s)):
        rep = fm.verify_conformality(psi, a, b, SAMPLES)
        assert rep.passed and np.allclose(rep.lambdas, 1, atol=1e-9)
    with pytest.raises(fm.LiftError):
        fm.lift(ExprMap.parse("x, y"), f, s, r)


def test_omega_rescaled_lambda_is_ratio():
    a, b = zermelo(), zermelo(Omega=4.0)
    psi = fm.lift(AffineMap.identity(), ScalarField.constant(0), a, b)
    rep = fm.verify_conformality(psi, a, b, SAMPLES)
    assert rep.passed and np.allclose(rep.lambdas, 4, atol=1e-12)
    back = fm.verify_conformality(psi, b, a, SAMPLES)
    assert back.passed and np.allclose(back.lambdas, 0.25, atol=1e-12)


def test_broken_lift_reports_spread():
    s = static()
    r = fm.reslice(s, ScalarField.linear(0.3, 0))
    rep = fm.verify_conformality(fm.ConformalLift.identity(), s, r, SAMPLES)
    assert not rep.passed
    assert rep.max_pair_spread > 0.05
    assert set(rep.to_json()) >= {"pass", "lambda_min", "lambda_max", "max_pair_spread"}


def test_rotation_is_not_liftable_on_zermelo():
    s = zermelo()
    with pytest.raises(fm.LiftError):
        fm.lift(AffineMap.rotation(0.5, (0.5, 0.5)), ScalarField.constant(0), s, s)


def test_kernel_and_time_translation():
    f = ScalarField.from_expr("0.1*sin(x) + 0.05*y")
    psi1 = fm.ConformalLift(AffineMap.translation(0.1, 0), f)
    psi2 = fm.ConformalLift(AffineMap.translation(0.1, 0), f + 0.7)
    pts = [x for x, _ in SAMPLES]
    assert fm.time_translation(psi2.inverse().compose(psi1), pts) == pytest.approx(-0.7, abs=1e-12)
    assert fm.time_translation(psi1.inverse().compose(psi2), pts) == pytest.approx(0.7, abs=1e-12)
    other = fm.ConformalLift(AffineMap.translation(0.2, 0), f)
    assert fm.time_translation(other.inverse().compose(psi1), pts) is None
    T = fm.TimeTranslation(0.7)
    x, t = np.array([0.1, 0.2]), 0.3
    assert np.array_equal(T(x, t)[0], x) and T(x, t)[1] == pytest.approx(1.0)


def test_homomorphism_on_translations():
    a = fm.ConformalLift(AffineMap.translation(0.1, 0.2), ScalarField.linear(0.1, 0))
    b = fm.ConformalLift(AffineMap.translation(-0.3, 0.05), ScalarField.linear(0, 0.2, 1))
    ab = a.compose(b)
    for x, t in SAMPLES:
        assert np.allclose(fm.project(ab)[0](x), a.phi(b.phi(x)), atol=1e-15)
        y, s = ab(x, t)
        y2, s2 = a(*b(x, t))
        assert np.allclose(y, y2) and s == pytest.approx(s2, abs=1e-14)


def test_discrete_cross_check_converges():
    s = zermelo()
    f = ScalarField.from_expr("0.2*sin(2*x) + 0.1*y^2")
    psi = fm.ConformalLift(AffineMap.identity(), -f)
    errs = [fm.discrete_lift_defect(psi, s, fm.reslice(s, f), n)[0] for n in (8, 16)]
    assert errs[1] < errs[0]


def test_discrete_cross_check_with_translation():
    s = zermelo()
    psi = fm.ConformalLift(AffineMap.translation(0.05, 0.0), ScalarField.constant(0))
    err, h = fm.discrete_lift_defect(psi, s, s, 12)
    assert err < 1e-12
