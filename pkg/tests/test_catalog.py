import numpy as np
import pytest

from finslerkit.catalog import (
    FAMILIES,
    DomainSampler,
    MetricSpec,
    base_randers_c,
    beta_bar,
    build_metric,
    check_positive,
    conformal_factor,
    conformal_mult,
    funk,
    generalized_funk,
    linear_form,
    randers_add,
    randers_one_form,
    randers_pf,
    randers_riemannian_part,
    sample_points,
    square_deform,
    square_factor,
    square_pf,
)
from finslerkit.errors import InvalidParams, PositivityViolated, RejectionOverflow
from finslerkit.forms import closedness_residual
from finslerkit.geometry import ChartPoint, ScalarField, seed


def spec_of(family):
    return MetricSpec(family, 3 if family.endswith("3d") else 2)


def points(spec, count=30, seed=0):
    return sample_points(DomainSampler(spec, seed=seed), count)


def berw(x, y):
    """Independent transcription of the Berwald metric of the Funk family."""
    xx, yy, xy = x @ x, y @ y, x @ y
    root = np.sqrt(yy - (xx * yy - xy * xy))
    return (root + xy) ** 2 / ((1 - xx) ** 2 * root)


def at(F, p):
    return F.at(p)


# ---------------------------------------------------------------- closed forms


def test_klein_at_zero_curvature_is_euclidean():
    p = points(MetricSpec("klein", 2, {"mu": -1.0}))
    k0 = build_metric(MetricSpec("klein", 2, {"mu": 0.0}))
    e = build_metric(MetricSpec("euclidean", 2))
    assert np.abs(at(k0, p) - at(e, p)).max() <= 1e-12


def test_funk_hand_values():
    assert funk(np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(5.0, abs=1e-14)
    assert funk(np.array([0.5, 0.0]), np.array([1.0, 0.0])) == pytest.approx(2.0, abs=1e-14)


def test_generalized_funk_coincidences():
    spec = MetricSpec("generalized_funk", 2)
    p = points(spec)
    g0 = ScalarField(generalized_funk([0.0, 0.0]))
    assert np.abs(at(g0, p) - at(ScalarField(funk), p)).max() <= 1e-12
    e = [0.1, -0.05]
    gf = build_metric(MetricSpec("generalized_funk", 2, {"e": e}))
    dr = build_metric(MetricSpec("deformed_randers", 2, {"nu": -0.5, "e": e, "f": 1.0}))
    assert np.abs(at(gf, p) - at(dr, p)).max() <= 1e-12


def test_funk_is_half_randers_up_to_form_sign():
    p = points(MetricSpec("funk", 2))
    # randers_pf(1/2) carries +2c<x,y>/(1-|x|^2); the Funk metric carries +<x,y>/(1-|x|^2)
    assert np.abs(at(ScalarField(randers_pf(0.5)), p) - at(ScalarField(funk), p)).max() <= 1e-12


def test_square_pf_at_half_is_berwald():
    spec = MetricSpec("square_pf", 2, {"c": 0.5, "eta": 1.0})
    p = points(spec)
    F = build_metric(spec)
    expect = np.array([berw(x, y) for x, y in zip(p.x, p.y)])
    assert np.abs(at(F, p) - expect).max() <= 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_one_homogeneous(family):
    spec = spec_of(family)
    p = points(spec, 20)
    X, Y = seed(p, 1)
    Fj = build_metric(spec)(X, Y)
    euler = sum(p.y[:, k] * Fj.deriv(spec.n + k).value for k in range(spec.n))
    assert np.abs(euler - Fj.value).max() <= 1e-10 * np.abs(Fj.value).max()
    # scaling y does not move the sample off the indicatrix picture
    F = build_metric(spec)
    np.testing.assert_allclose(F.at(ChartPoint(p.x, 2.5 * p.y)), 2.5 * F.at(p), rtol=1e-13)


@pytest.mark.parametrize("family", ["randers_pf", "funk", "deformed_randers", "generalized_funk"])
def test_attached_forms_closed(family):
    spec = MetricSpec(family, 2)
    assert closedness_residual(linear_form(spec), points(spec)).max() <= 1e-10


def test_nonclosed_form_residual_is_one():
    spec = MetricSpec("randers_nonclosed", 2)
    np.testing.assert_allclose(closedness_residual(linear_form(spec), points(spec)), 1.0, atol=1e-13)


def test_base_randers_coefficients():
    assert base_randers_c(MetricSpec("deformed_randers", 2, {"nu": -0.3})) == pytest.approx(0.3)
    assert base_randers_c(MetricSpec("funk", 2)) == 0.5
    with pytest.raises(InvalidParams):
        base_randers_c(MetricSpec("klein", 2))


# ---------------------------------------------------------------- combinators


def test_randers_add_examples():
    spec = MetricSpec("randers_pf", 2, {"c": 0.3})
    F = build_metric(spec)
    p = points(spec)
    zero = ScalarField(lambda x, y: 0.0 * y[0], name="0")
    np.testing.assert_array_equal(at(randers_add(F, zero), p), at(F, p))
    nu, e, f = -0.3, [0.1, 0.0], 1.0
    bb = ScalarField(beta_bar(nu, e, f), name="bbar")
    assembled = randers_add(ScalarField(randers_pf(-nu)), bb)
    target = build_metric(MetricSpec("deformed_randers", 2, {"nu": nu, "e": e, "f": f}))
    assert np.abs(at(assembled, p) - at(target, p)).max() <= 1e-12
    minus = ScalarField(lambda x, y: -1.0 * bb(x, y), name="-bbar")
    assert np.abs(at(randers_add(assembled, minus), p) - at(F, p)).max() <= 1e-13


def test_randers_add_positivity():
    spec = MetricSpec("randers_pf", 2, {"c": 0.3})
    big = ScalarField(lambda x, y: -5.0 * y[0] + 0.0 * x[0], name="-5y1")
    F = randers_add(build_metric(spec), big)
    with pytest.raises(PositivityViolated):
        check_positive(F, points(spec))


def test_square_deform_examples():
    c, eta = 0.4, 1.3
    spec = MetricSpec("square_pf", 2, {"c": c, "eta": eta})
    p = points(spec)
    a = ScalarField(randers_riemannian_part(c), name="a")
    one = ScalarField(lambda x, y: 1.0 + 0.0 * x[0], homogeneity=0, name="1")
    assert np.abs(at(square_deform(a, a, one), p) - at(a, p)).max() <= 1e-13
    built = square_deform(ScalarField(randers_pf(c)), a, square_factor(c, eta))
    assert np.abs(at(built, p) - at(ScalarField(square_pf(c, eta)), p)).max() <= 1e-12


def test_conformal_mult_examples():
    spec = MetricSpec("conformal_pf", 2)
    prm = spec.params
    c = prm["c"]
    p = points(spec)
    Fbar = build_metric(MetricSpec("square_pf", 2, {"c": c, "eta": prm["eta"]}))
    base = ScalarField(randers_pf(c))
    g0, f0 = conformal_factor(c, [0.0, 0.0], 1.0)
    assert np.abs(at(conformal_mult(Fbar, g0, f0, base), p) - at(Fbar, p)).max() <= 1e-13
    g, f = conformal_factor(c, prm["v"], prm["e"])
    assert np.abs(at(conformal_mult(Fbar, g, f, base), p) - at(build_metric(spec), p)).max() <= 1e-12
    # S0 g = 2 c f and S0 f = 0
    X, Y = seed(p, 1)
    gj, fj = g(X, Y), f(X, Y)
    s0g = sum(p.y[:, k] * gj.deriv(k).value for k in range(2))
    s0f = sum(p.y[:, k] * fj.deriv(k).value for k in range(2))
    assert np.abs(s0g - 2 * c * fj.value).max() <= 1e-14
    assert np.abs(s0f).max() == 0


def test_randers_one_form_matches_metric():
    c = 0.3
    p = points(MetricSpec("randers_pf", 2, {"c": c}))
    lhs = at(ScalarField(randers_pf(c)), p)
    rhs = at(ScalarField(randers_riemannian_part(c)), p) + at(ScalarField(randers_one_form(c)), p)
    assert np.abs(lhs - rhs).max() <= 1e-13


# ---------------------------------------------------------------- specs and sampling


def test_spec_validation():
    with pytest.raises(InvalidParams):
        MetricSpec("nope", 2)
    with pytest.raises(InvalidParams):
        MetricSpec("randers_pf", 2, {"c": 0.0})
    with pytest.raises(InvalidParams):
        MetricSpec("square_pf", 2, {"eta": -1.0})
    with pytest.raises(InvalidParams):
        MetricSpec("deformed_randers", 2, {"nu": 0.0})
    with pytest.raises(InvalidParams):
        MetricSpec("deformed_randers", 2, {"nu": -0.5, "f": -1.0})
    with pytest.raises(InvalidParams):
        MetricSpec("generalized_funk", 2, {"e": [1.0, 0.0]})
    with pytest.raises(InvalidParams):
        MetricSpec("generalized_funk", 2, {"e": [0.1, 0.0, 0.0]})
    with pytest.raises(InvalidParams):
        MetricSpec("riemann_counterexample_3d", 2)
    with pytest.raises(InvalidParams):
        MetricSpec("funk", 5)
    with pytest.raises(InvalidParams):
        MetricSpec("klein", 2, {"c": 1.0})


def test_spec_json_round_trip_and_hash():
    spec = MetricSpec("conformal_pf", 3, {"c": 0.25})
    back = MetricSpec.from_json(spec.to_json())
    assert back == spec and hash(back) == hash(spec)
    import json

    assert MetricSpec.from_json(json.dumps(spec.to_json())) == spec
    assert spec.params["v"] == [0.05, 0.0, 0.0]


def test_domain_radius_and_contains():
    assert MetricSpec("klein", 2, {"mu": -4.0}).domain_radius == pytest.approx(0.5)
    assert MetricSpec("randers_pf", 2, {"c": 0.5}).domain_radius == pytest.approx(1.0)
    spec = MetricSpec("deformed_randers", 2, {"nu": -0.5, "e": [2.0, 0.0], "f": 1.0})
    assert list(spec.contains(np.array([[0.0, 0.0], [-0.6, 0.0], [0.99, 0.0]]))) == [True, False, True]


def test_sampler_examples():
    p = sample_points(DomainSampler(MetricSpec("euclidean", 2), seed=42), 3)
    assert len(p) == 3
    np.testing.assert_allclose(np.linalg.norm(p.y, axis=-1), 1.0, rtol=1e-15)
    q = points(MetricSpec("randers_pf", 2, {"c": 0.5}), 200)
    assert np.linalg.norm(q.x, axis=-1).max() < 0.8


def test_sampler_determinism_and_index_independence():
    spec = MetricSpec("deformed_randers", 3)
    a = sample_points(DomainSampler(spec, seed=7), 12)
    b = sample_points(DomainSampler(spec, seed=7), 12)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    head = sample_points(DomainSampler(spec, seed=7), 5)
    np.testing.assert_array_equal(head.x, a.x[:5])
    other = sample_points(DomainSampler(spec, seed=8), 12)
    assert not np.array_equal(other.x, a.x)


@pytest.mark.parametrize("family", FAMILIES)
def test_samples_positive_definite(family):
    spec = spec_of(family)
    p = points(spec, 30)
    from finslerkit.geometry import metric_tensor

    assert np.all(build_metric(spec).at(p) > 0)
    assert np.all(np.linalg.eigvalsh(metric_tensor(build_metric(spec), p))[:, 0] > 0)
    assert np.all(spec.contains(p.x))


def test_sampler_overflow_on_bad_params():
    spec = MetricSpec("conformal_pf", 2, {"e": -1.0})
    with pytest.raises(RejectionOverflow):
        sample_points(DomainSampler(spec), 5)


def test_sampler_argument_checks():
    with pytest.raises(ValueError):
        DomainSampler(MetricSpec("funk", 2), radius_fraction=1.0)
    with pytest.raises(ValueError):
        sample_points(DomainSampler(MetricSpec("funk", 2)), 0)
