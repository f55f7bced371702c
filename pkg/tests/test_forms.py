import numpy as np
import pytest

from finslerkit.catalog import (
    DomainSampler,
    MetricSpec,
    base_randers,
    beta_bar,
    build_metric,
    funk,
    nonclosed_form,
    randers_one_form,
    sample_points,
)
from finslerkit.conventions import resolve_conventions, rtens_residual
from finslerkit.errors import NonIsotropic, NotHamel, NotLinear, NotLinearFactor, NotRiemannian
from finslerkit.forms import (
    closedness_residual,
    dh_alpha_residual,
    euler_lagrange,
    factor_linearity,
    hamel_factor_residual,
    hamel_residual,
    kappa_derivatives,
    levi_civita_residual,
    projective_factor_flat,
    projr_residual,
    pw1_pair,
    verify_dhalpha_transform,
    verify_phibar,
    verify_pw1,
)
from finslerkit.geometry import (
    ChartPoint,
    ScalarField,
    deform_spray,
    flat_spray,
    flag_curvature,
    geodesic_spray,
    weyl_w1,
)

FUNK = build_metric(MetricSpec("funk", 2))
HALF_FUNK = ScalarField(lambda x, y: 0.5 * funk(x, y), name="funk/2")
Y1 = ScalarField(lambda x, y: y[0] + 0.0 * x[0], name="y1")
ZERO = ScalarField(lambda x, y: 0.0 * y[0], name="0")


def points(spec, count=20, seed=0):
    return sample_points(DomainSampler(spec, seed=seed), count)


def randers_pair(nu=-0.3, n=2):
    """Randers base with c = -nu and the closed deformation nu * bbar."""
    spec = MetricSpec("randers_pf", n, {"c": -nu})
    e = [0.1] + [0.0] * (n - 1)
    bb = beta_bar(nu, e, 1.0)
    P = ScalarField(lambda x, y: nu * bb(x, y), name="nu*bbar")
    return spec, build_metric(spec), P


# ---------------------------------------------------------------- Euler-Lagrange and Hamel


def test_euler_lagrange_examples():
    p = points(MetricSpec("funk", 2))
    assert np.abs(euler_lagrange(FUNK, flat_spray(), p)).max() <= 1e-10
    assert np.abs(euler_lagrange(Y1, flat_spray(), p)).max() == 0


def test_euler_lagrange_nonclosed_covector():
    F = ScalarField(lambda x, y: (y[0] * y[0] + y[1] * y[1]) ** 0.5 + x[0] * y[1], name="|y|+x1y2")
    el = euler_lagrange(F, flat_spray(), ChartPoint([1.0, 0.0], [1.0, 1.0]))
    # S0(dF/dy) - dF/dx: only the x^1 y^2 term contributes, giving (-y^2, y^1)
    np.testing.assert_allclose(el, [-1.0, 1.0], atol=1e-13)
    assert hamel_residual(F, ChartPoint([1.0, 0.0], [1.0, 1.0])) > 0.1


@pytest.mark.parametrize(
    "spec,tol",
    [(MetricSpec("funk", 2), 1e-10), (MetricSpec("deformed_randers", 2, {"nu": -0.5}), 1e-9)],
)
def test_hamel_residual_small(spec, tol):
    assert hamel_residual(build_metric(spec), points(spec)).max() <= tol


def test_projective_factor_examples():
    p = points(MetricSpec("randers_pf", 2, {"c": 0.5}), 100)
    np.testing.assert_allclose(projective_factor_flat(build_metric(MetricSpec("euclidean", 2)), p), 0, atol=1e-15)
    F = build_metric(MetricSpec("randers_pf", 2, {"c": 0.5}))
    assert np.abs(projective_factor_flat(F, p) - 0.5 * F.at(p)).max() <= 1e-9


def test_square_factor_is_twice_cF_base_from_flat():
    """Relative to the flat spray the factor is 2c F_base; relative to the base spray it is c F_base."""
    spec = MetricSpec("square_pf", 2, {"c": 0.5, "eta": 1.0})
    F = build_metric(spec)
    Fb = base_randers(spec)
    p = points(spec, 30)
    P = projective_factor_flat(F, p)
    assert np.abs(P - 2 * 0.5 * Fb.at(p)).max() <= 1e-9
    assert np.abs(P - projective_factor_flat(Fb, p) - 0.5 * Fb.at(p)).max() <= 1e-9
    assert np.abs(P - 0.5 * Fb.at(p)).max() > 0.1


def test_projective_factor_requires_positive_F():
    with pytest.raises(ValueError):
        projective_factor_flat(ScalarField(lambda x, y: -1.0 * (y[0] * y[0] + y[1] * y[1]) ** 0.5), ChartPoint([0, 0], [1, 0]))


# ---------------------------------------------------------------- closedness and Levi-Civita


def test_closedness_examples():
    p = points(MetricSpec("randers_pf", 2, {"c": 0.5}))
    b = ScalarField(randers_one_form(0.5), name="b")
    assert closedness_residual(b, p).max() <= 1e-10
    nc = ScalarField(nonclosed_form, name="x1y2")
    np.testing.assert_allclose(closedness_residual(nc, p), 1.0, atol=1e-13)
    bb = ScalarField(beta_bar(-0.5, [0.1, 0.0], 1.0), name="bbar")
    assert closedness_residual(bb, p).max() <= 1e-10


def test_closedness_requires_linear_form():
    with pytest.raises(NotLinear):
        closedness_residual(FUNK, points(MetricSpec("funk", 2), 3))


def test_levi_civita_examples():
    spec = MetricSpec("klein", 3, {"mu": -1.0})
    F = build_metric(spec)
    p = points(spec)
    assert levi_civita_residual(F, p).max() <= 1e-9
    assert factor_linearity(F, p).max() <= 1e-10
    e = build_metric(MetricSpec("euclidean", 2))
    assert levi_civita_residual(e, points(MetricSpec("euclidean", 2))).max() == 0


def test_levi_civita_errors_and_counterexample():
    with pytest.raises(NotRiemannian):
        levi_civita_residual(FUNK, points(MetricSpec("funk", 2), 3))
    spec = MetricSpec("riemann_counterexample_2d", 2)
    F = build_metric(spec)
    p = points(spec)
    with pytest.raises(NotLinearFactor):
        levi_civita_residual(F, p)
    assert levi_civita_residual(F, p, check=False).max() > 1e-3


# ---------------------------------------------------------------- d_h alpha and kappa


def test_dh_alpha_examples():
    assert dh_alpha_residual(FUNK, points(MetricSpec("funk", 2))).max() <= 1e-8
    e = build_metric(MetricSpec("euclidean", 2))
    assert dh_alpha_residual(e, points(MetricSpec("euclidean", 2))).max() == 0


def test_dh_alpha_independent_of_w1_in_2d():
    spec = MetricSpec("riemann_counterexample_2d", 2)
    F = build_metric(spec)
    p = points(spec, 50)
    assert np.abs(weyl_w1(F, p)).max() <= 1e-8
    assert dh_alpha_residual(F, p).max() > 1e-3


def test_dh_alpha_non_isotropic():
    spec = MetricSpec("riemann_counterexample_3d", 3)
    with pytest.raises(NonIsotropic):
        dh_alpha_residual(build_metric(spec), points(spec, 5))


def test_kappa_derivatives_vanish_for_cfc():
    spec = MetricSpec("conformal_pf", 2)
    dj, dh = kappa_derivatives(build_metric(spec), points(spec))
    assert np.abs(dj).max() <= 1e-9 and np.abs(dh).max() <= 1e-8
    spec = MetricSpec("riemann_counterexample_2d", 2)
    dj, dh = kappa_derivatives(build_metric(spec), points(spec))
    assert np.abs(dh).max() > 1e-2


# ---------------------------------------------------------------- transformation laws


def test_phibar_examples():
    p = points(MetricSpec("funk", 2))
    assert verify_phibar(FUNK, ZERO, p).max() == 0
    assert verify_phibar(None, HALF_FUNK, p).max() <= 1e-8
    spec, F, P = randers_pair()
    assert verify_phibar(F, P, points(spec)).max() <= 1e-8


def test_pw1_examples():
    p = points(MetricSpec("funk", 2))
    direct, formula = pw1_pair(None, Y1, p)
    assert np.abs(direct).max() <= 1e-12 and np.abs(direct - formula).max() <= 1e-12
    assert verify_pw1(None, HALF_FUNK, p).max() <= 1e-7
    assert verify_pw1(FUNK, ZERO, p).max() == 0
    spec, F, P = randers_pair(n=3)
    assert verify_pw1(F, P, points(spec)).max() <= 1e-7


def test_pw1_non_hamel_factor_fixes_orientation():
    """With a factor that is not Hamel only one orientation of the d_J d_h P term balances."""
    probe = ScalarField(lambda x, y: 0.3 * build_metric(MetricSpec("randers_nonclosed", 2))(x, y), name="probe")
    p = points(MetricSpec("funk", 2), 8)
    flags = resolve_conventions()
    assert verify_pw1(None, probe, p, dj_sign=flags["pw1_dJdhP_sign"]).max() <= 1e-9
    assert verify_pw1(None, probe, p, dj_sign=-flags["pw1_dJdhP_sign"]).max() > 1e-3
    assert projr_residual(None, probe, p).max() <= 1e-9


def test_hamel_factor_residual():
    p = points(MetricSpec("funk", 2))
    assert hamel_factor_residual(None, HALF_FUNK, p).max() <= 1e-10
    spec, F, P = randers_pair()
    assert hamel_factor_residual(F, P, points(spec)).max() <= 1e-10


def test_dhalpha_transform_examples():
    p = points(MetricSpec("funk", 2))
    assert verify_dhalpha_transform(FUNK, ZERO, p).max() == 0
    assert verify_dhalpha_transform(None, Y1, p).max() <= 1e-9
    spec, F, P = randers_pair()
    assert verify_dhalpha_transform(F, P, points(spec)).max() <= 1e-7


def test_dhalpha_transform_requires_hamel():
    spec = MetricSpec("randers_nonclosed", 2)
    with pytest.raises(NotHamel):
        verify_dhalpha_transform(None, build_metric(spec), points(spec, 5))


def test_closed_deformation_keeps_curvature_constant():
    nu = -0.3
    spec, F, P = randers_pair(nu)
    p = points(spec, 30)
    Fbar = build_metric(MetricSpec("deformed_randers", 2, {"nu": nu, "e": [0.1, 0.0], "f": 1.0}))
    G_def = deform_spray(geodesic_spray(F), P)
    G_bar = geodesic_spray(Fbar)
    from finslerkit.geometry import geodesic_coefficients

    np.testing.assert_allclose(
        geodesic_coefficients(None, p, spray=G_def), geodesic_coefficients(None, p, spray=G_bar), atol=1e-10
    )
    np.testing.assert_allclose(flag_curvature(Fbar, p), -nu * nu, atol=1e-9)


def test_displayed_bbar_coefficient_only_matches_at_half():
    """A 1/(4 nu^2) normalisation agrees with the gradient form only when nu = -1/2."""
    e, f = [0.1, 0.0], 1.0
    p = points(MetricSpec("randers_pf", 2, {"c": 0.3}), 30)

    def literal(nu):
        return ScalarField(
            lambda x, y: (e[0] * y[0] + e[1] * y[1]) / (4 * nu * nu * (e[0] * x[0] + e[1] * x[1] + f)) + 0.0 * x[0],
            name="literal",
        )

    nu = -0.3
    base = build_metric(MetricSpec("randers_pf", 2, {"c": -nu}))
    bad = ScalarField(lambda x, y: literal(nu)(x, y) + base(x, y), name="literal deformation")
    good = ScalarField(lambda x, y: beta_bar(nu, e, f)(x, y) + base(x, y), name="gradient deformation")
    k_bad = flag_curvature(bad, p)
    k_good = flag_curvature(good, p)
    np.testing.assert_allclose(k_good, -nu * nu, atol=1e-9)
    assert np.ptp(k_bad) > 1e-3
    np.testing.assert_allclose(literal(-0.5).at(p), ScalarField(beta_bar(-0.5, e, f)).at(p), rtol=1e-14)


# ---------------------------------------------------------------- conventions


def test_conventions_resolved():
    flags = resolve_conventions()
    assert flags["rtens_klein_residual"] <= 1e-9
    assert flags["pw1_flat_funk_residual"] <= 1e-9
    assert flags["pw1_dJdhP_sign"] == -1
    assert flags["pw1_listed_sign_residual"] > 1e-3
    assert flags["d_R_P_sign"] == -1
    assert flags["dhalpha_probe_residual"] <= 1e-9
    assert rtens_residual(mu=-0.5, n=2) <= 1e-9
