"""Verification suites bundling the geometric residuals into pass/fail reports.

Each suite samples in-domain chart points deterministically from
``(spec, seed)``, evaluates a fixed list of named residuals, and compares the
worst case against a tolerance.  Counterexample metrics run through the same
suites and are expected to fail; that expectation is part of the report.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from finslerkit import __version__
from finslerkit import forms
from finslerkit.catalog import (
    CFC_FAMILIES,
    PROJECTIVELY_FLAT,
    RIEMANNIAN,
    DomainSampler,
    MetricSpec,
    base_randers,
    base_randers_c,
    beta_bar,
    build_metric,
    funk,
    linear_form,
    sample_points,
)
from finslerkit.conventions import resolve_conventions
from finslerkit.errors import InvalidParams, NonIsotropic
from finslerkit.geodesics import geodesic_integrate, straightness_residual
from finslerkit.geometry import (
    ScalarField,
    SprayJets,
    _w0,
    _w1,
    flat_spray,
    geodesic_spray,
    values,
)

DEFAULT_SAMPLES = 100
IDENTITY_RTOL = 1e-8
KAPPA_TOL = 1e-8
HAMEL_TOL = 1e-9
STRAIGHTNESS_TOL = 1e-6
TRANSFORM_TOL = 1e-7
INVARIANCE_TOL = 1e-9
LINEARITY_TOL = 1e-10
LEVI_CIVITA_TOL = 1e-9
GEODESIC_STEPS = 500
GEODESIC_DT = 1e-3
GEODESIC_COUNT = 5

COUNTEREXAMPLES = ("riemann_counterexample_2d", "riemann_counterexample_3d", "randers_nonclosed")
P_KINDS = ("hamel_linear", "proportional_to_F", "funk_factor", "randers_beta")


@dataclass
class Check:
    name: str
    max_residual: float
    mean_residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.max_residual) and self.max_residual <= self.tolerance)

    def to_json(self):
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def make_check(name, residuals, tolerance):
    r = np.atleast_1d(np.asarray(residuals, dtype=float))
    return Check(name, float(r.max()), float(r.mean()), float(tolerance))


@dataclass
class VerificationReport:
    """Outcome of one suite on one metric.

    ``expected`` is ``"pass"`` for theorem instances and ``"fail"`` for the
    designed counterexamples.  ``wall_time`` is informational and is left out
    of the JSON form so that reports are reproducible byte for byte.
    """

    suite: str
    metric: MetricSpec
    seed: int
    sample_count: int
    checks: list = field(default_factory=list)
    convention_flags: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    expected: str = "pass"
    wall_time: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def as_expected(self):
        return self.passed == (self.expected == "pass")

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "artifact_version": __version__,
            "suite": self.suite,
            "metric": self.metric.to_json(),
            "seed": self.seed,
            "samples": self.sample_count,
            "params": self.params,
            "expected": self.expected,
            "pass": self.passed,
            "as_expected": self.as_expected,
            "convention_flags": self.convention_flags,
            "checks": [c.to_json() for c in self.checks],
        }


def _expectation(spec):
    return "fail" if spec.family in COUNTEREXAMPLES else "pass"


def default_kappa(spec):
    """Documented flag curvature of a CFC family, or None."""
    p = spec.params
    fam = spec.family
    if fam == "randers_pf":
        return -p["c"] ** 2
    if fam == "deformed_randers":
        return -p["nu"] ** 2
    if fam in ("funk", "generalized_funk"):
        return -0.25
    if fam in ("square_pf", "conformal_pf", "euclidean"):
        return 0.0
    if fam == "klein":
        return p["mu"]
    return None


def _points(spec, samples, seed):
    return sample_points(DomainSampler(spec, seed=seed), samples)


def _kappa_checks(kappa, expected):
    checks = [make_check("kappa_constant", np.abs(kappa - kappa.mean()), KAPPA_TOL)]
    if expected is not None:
        checks.append(make_check("kappa_value", np.abs(kappa - expected), KAPPA_TOL))
    return checks


# ---------------------------------------------------------------- suites


def suite_cfc(spec, expected_kappa=None, samples=DEFAULT_SAMPLES, seed=0):
    """Weyl-type tensors, CFC form and curvature constancy on sampled points."""
    t0 = time.perf_counter()
    if expected_kappa is None:
        expected_kappa = default_kappa(spec)
    F = build_metric(spec)
    pts = _points(spec, samples, seed)
    sj = SprayJets(geodesic_spray(F), pts, extra=3)
    n = spec.n
    Phi = values(sj.Phi)
    R = values(sj.R)
    tau = values(sj.tau)
    Fv = F.at(pts)
    rho = np.trace(Phi, axis1=-2, axis2=-1) / (n - 1)
    kappa = rho / Fv**2
    W1 = _w1(R, tau)
    W0 = _w0(Phi, tau, pts.y)
    phi_scale = 1.0 + np.abs(Phi).max()
    checks = [
        make_check("W1_vanishes", np.abs(W1).max(axis=(-3, -2, -1)), IDENTITY_RTOL * (1.0 + np.abs(R).max())),
        make_check("W0_vanishes", np.abs(W0).max(axis=(-2, -1)), IDENTITY_RTOL * phi_scale),
    ]
    k_model = kappa.mean() if expected_kappa is None else expected_kappa
    Fj = F(sj.X, sj.Y)
    dF = values([Fj.deriv(n + j) for j in range(n)])
    model = k_model * (
        (Fv**2)[:, None, None] * np.eye(n) - Fv[:, None, None] * pts.y[:, :, None] * dF[:, None, :]
    )
    checks.append(make_check("cfc_form", np.abs(Phi - model).max(axis=(-2, -1)), IDENTITY_RTOL * phi_scale))
    checks += _kappa_checks(kappa, expected_kappa)
    if n == 2:
        alpha = sj.alpha
        dh = values(forms._dh_one_form(sj, alpha))
        checks.append(
            make_check(
                "dh_alpha_vanishes",
                np.abs(dh).max(axis=(-2, -1)),
                IDENTITY_RTOL * (1.0 + np.abs(values(alpha)).max()),
            )
        )
        # the converse direction needs kappa free of both y and x, checked jointly
        kj = sj.rho / (Fj * Fj)
        dk = np.concatenate(
            [values([sj.dy(kj, j) for j in range(n)]), values([sj.delta(kj, j) for j in range(n)])], axis=-1
        )
        checks.append(
            make_check("dkappa_vanishes", np.abs(dk).max(axis=-1), IDENTITY_RTOL * (1.0 + np.abs(kappa).max()))
        )
    return VerificationReport(
        "cfc",
        spec,
        seed,
        samples,
        checks,
        params={"expected_kappa": expected_kappa},
        expected=_expectation(spec),
        wall_time=time.perf_counter() - t0,
    )


def _factor_check(spec, pts):
    """Named proportionality check of the flat projective factor, or None."""
    fam = spec.family
    F = build_metric(spec)
    P = forms.projective_factor_flat(F, pts)
    if fam == "euclidean":
        return make_check("P_zero", np.abs(P), IDENTITY_RTOL)
    if fam in ("randers_pf", "funk"):
        c = base_randers_c(spec)
        diff = P - c * F.at(pts)
        name = "P_minus_cF"
    elif fam in ("deformed_randers", "generalized_funk"):
        # factor relative to the base Randers spray is nu * b_bar
        base = base_randers(spec)
        nu = -base_randers_c(spec)
        diff = P - forms.projective_factor_flat(base, pts) - nu * linear_form(spec).at(pts)
        name = "P_minus_nu_bbar"
    elif fam == "square_pf":
        # factor relative to the base Randers spray is c * F_base
        base = base_randers(spec)
        c = base_randers_c(spec)
        diff = P - forms.projective_factor_flat(base, pts) - c * base.at(pts)
        name = "P_minus_cF_base"
    elif fam == "conformal_pf":
        base = base_randers(spec)
        c = base_randers_c(spec)
        diff = P - 2.0 * c * base.at(pts)
        name = "P_minus_2cF_base"
    else:
        return None
    return make_check(name, np.abs(diff), IDENTITY_RTOL * (1.0 + np.abs(P).max()))


def geodesic_initial_conditions(spec, seed, count=GEODESIC_COUNT):
    """Seeded starting points well inside the domain with unit initial velocity."""
    pts = sample_points(DomainSampler(spec, radius_fraction=0.4, seed=seed + 7919), count)
    return pts.x, pts.y


def suite_projflat(spec, samples=DEFAULT_SAMPLES, seed=0, geodesics=GEODESIC_COUNT):
    """Hamel equation, straight geodesics and the projective factor."""
    t0 = time.perf_counter()
    F = build_metric(spec)
    pts = _points(spec, samples, seed)
    checks = [make_check("hamel", forms.hamel_residual(F, pts), HAMEL_TOL)]
    x0, y0 = geodesic_initial_conditions(spec, seed, geodesics)
    paths = geodesic_integrate(geodesic_spray(F), x0, y0, GEODESIC_DT, GEODESIC_STEPS, inside=spec.contains)
    straight = [straightness_residual(paths[:, i], y0[i]) for i in range(len(x0))]
    checks.append(make_check("straightness", straight, STRAIGHTNESS_TOL))
    fc = _factor_check(spec, pts)
    if fc is not None:
        checks.append(fc)
    return VerificationReport(
        "projflat",
        spec,
        seed,
        samples,
        checks,
        params={"geodesics": geodesics, "steps": GEODESIC_STEPS, "dt": GEODESIC_DT},
        expected=_expectation(spec),
        wall_time=time.perf_counter() - t0,
    )


def suite_beltrami(spec, samples=DEFAULT_SAMPLES, seed=0):
    """Linear projective factor, Levi-Civita relation and constant curvature."""
    if spec.family not in RIEMANNIAN:
        raise InvalidParams(f"{spec.family} is not Riemannian")
    t0 = time.perf_counter()
    F = build_metric(spec)
    pts = _points(spec, samples, seed)
    checks = [
        make_check("P_linear", forms.factor_linearity(F, pts), LINEARITY_TOL),
        make_check("levi_civita", forms.levi_civita_residual(F, pts, check=False), LEVI_CIVITA_TOL),
    ]
    sj = SprayJets(geodesic_spray(F), pts, extra=2)
    Phi = values(sj.Phi)
    kappa = np.trace(Phi, axis1=-2, axis2=-1) / (spec.n - 1) / F.at(pts) ** 2
    expected = default_kappa(spec) if spec.family in ("klein", "euclidean") else None
    checks += _kappa_checks(kappa, expected)
    return VerificationReport(
        "beltrami",
        spec,
        seed,
        samples,
        checks,
        params={"expected_kappa": expected},
        expected=_expectation(spec),
        wall_time=time.perf_counter() - t0,
    )


def deformation(spec, P_kind):
    """Base spray, projective factor and (when known) the deformed metric.

    Returns ``(spray, P, base_metric, deformed_metric)``; the metrics may be
    None.  The Euclidean metric is taken with the flat spray.
    """
    n = spec.n
    F = build_metric(spec)
    spray = flat_spray() if spec.family == "euclidean" else geodesic_spray(F)
    deformed = None
    if P_kind == "hamel_linear":
        P = ScalarField(lambda x, y: y[0] + 0.0 * x[0], name="y1")
    elif P_kind == "proportional_to_F":
        P = ScalarField(lambda x, y: 0.5 * F(x, y), name=f"{F.name}/2", order=F.order)
    elif P_kind == "funk_factor":
        P = ScalarField(lambda x, y: 0.5 * funk(x, y), name="funk/2")
        if spec.family == "euclidean":
            deformed = build_metric(MetricSpec("funk", n))
    elif P_kind == "randers_beta":
        if spec.family != "randers_pf":
            raise InvalidParams("P_kind randers_beta needs a randers_pf base")
        c = spec.params["c"]
        nu = -c
        e = [0.1] + [0.0] * (n - 1)
        bb = beta_bar(nu, e, 1.0)
        P = ScalarField(lambda x, y: nu * bb(x, y), name="nu*b_bar")
        deformed = build_metric(MetricSpec("deformed_randers", n, {"nu": nu, "e": e, "f": 1.0}))
    else:
        raise InvalidParams(f"unknown P_kind {P_kind!r}; choose from {P_KINDS}")
    return spray, P, F, deformed


def _deformation_domain(spec, P_kind):
    if P_kind == "funk_factor":
        return MetricSpec("funk", spec.n) if spec.domain_radius > 1 else spec
    if P_kind == "randers_beta":
        c = spec.params["c"]
        return MetricSpec("deformed_randers", spec.n, {"nu": -c, "e": [0.1] + [0.0] * (spec.n - 1), "f": 1.0})
    return spec


def suite_w1_transform(spec, P_kind, samples=DEFAULT_SAMPLES, seed=0):
    """Transformation laws of Phi and W1 under S -> S - 2 P C."""
    t0 = time.perf_counter()
    flags = resolve_conventions()
    spray, P, F, deformed = deformation(spec, P_kind)
    pts = _points(_deformation_domain(spec, P_kind), samples, seed)
    direct, formula = forms.phibar_pair(spray, P, pts)
    checks = [
        make_check("phibar_formula", np.abs(direct - formula).max(axis=(-2, -1)), TRANSFORM_TOL),
    ]
    w1bar, w1formula = forms.pw1_pair(spray, P, pts)
    checks.append(make_check("pw1_formula", np.abs(w1bar - w1formula).max(axis=(-3, -2, -1)), TRANSFORM_TOL))
    hamel = forms.hamel_factor_residual(spray, P, pts)
    is_hamel = bool(np.all(hamel <= forms.HAMEL_TOL * (1.0 + np.abs(P.at(pts)).max())))
    params = {"P_kind": P_kind, "P_hamel": is_hamel}
    if is_hamel:
        sj = SprayJets(spray, pts, extra=3)
        w1 = _w1(values(sj.R), values(sj.tau))
        checks.append(make_check("w1_invariant", np.abs(w1bar - w1).max(axis=(-3, -2, -1)), INVARIANCE_TOL))
        if spec.family in CFC_FAMILIES:
            checks.append(make_check("w1bar_vanishes", np.abs(w1bar).max(axis=(-3, -2, -1)), IDENTITY_RTOL * (1.0 + np.abs(values(sj.R)).max())))
            if deformed is not None:
                bar = SprayJets(forms.deform_spray(spray, P), pts, extra=2)
                Phib = values(bar.Phi)
                kbar = np.trace(Phib, axis1=-2, axis2=-1) / (spec.n - 1) / deformed.at(pts) ** 2
                checks.append(make_check("deformed_kappa_constant", np.abs(kbar - kbar.mean()), KAPPA_TOL))
                params["deformed_kappa"] = float(np.round(kbar.mean(), 12))
        try:
            lhs, rhs = forms.dhalpha_pair(spray, P, pts)
        except NonIsotropic:
            params["dhalpha"] = "skipped: not isotropic"
        else:
            checks.append(make_check("dhalpha_transform", np.abs(lhs - rhs).max(axis=(-2, -1)), TRANSFORM_TOL))
    return VerificationReport(
        "w1_transform",
        spec,
        seed,
        samples,
        checks,
        convention_flags=flags,
        params=params,
        expected="pass",
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------- matrix

SUITES = {
    "cfc": suite_cfc,
    "projflat": suite_projflat,
    "beltrami": suite_beltrami,
    "w1_transform": suite_w1_transform,
}


def default_matrix():
    """(suite, spec, extra kwargs) jobs of the standard verification run."""
    S = MetricSpec
    cfc = [
        S("euclidean", 2),
        S("klein", 3, {"mu": -1.0}),
        S("randers_pf", 2, {"c": 0.3}),
        S("randers_pf", 3, {"c": 0.3}),
        S("funk", 2),
        S("funk", 3),
        S("deformed_randers", 2, {"nu": -0.5, "e": [0.1, 0.0], "f": 1.0}),
        S("generalized_funk", 2),
        S("square_pf", 2, {"c": 0.5, "eta": 1.0}),
        S("conformal_pf", 2, {"c": 0.5, "eta": 1.0, "v": [0.05, 0.0], "e": 1.0}),
        S("riemann_counterexample_2d", 2),
        S("riemann_counterexample_3d", 3),
    ]
    projflat = [
        S("euclidean", 2),
        S("klein", 2, {"mu": -1.0}),
        S("randers_pf", 2, {"c": 0.3}),
        S("funk", 2),
        S("deformed_randers", 2),
        S("generalized_funk", 2),
        S("square_pf", 2),
        S("conformal_pf", 2),
        S("randers_nonclosed", 2),
    ]
    beltrami = [
        S("euclidean", 2),
        S("klein", 2, {"mu": -1.0}),
        S("klein", 3, {"mu": -1.0}),
        S("riemann_counterexample_2d", 2),
    ]
    jobs = [("cfc", s, {}) for s in cfc]
    jobs += [("projflat", s, {}) for s in projflat]
    jobs += [("beltrami", s, {}) for s in beltrami]
    jobs += [
        ("w1_transform", S("euclidean", 2), {"P_kind": "hamel_linear"}),
        ("w1_transform", S("euclidean", 2), {"P_kind": "funk_factor"}),
        ("w1_transform", S("funk", 2), {"P_kind": "proportional_to_F"}),
        ("w1_transform", S("randers_pf", 2, {"c": 0.3}), {"P_kind": "randers_beta"}),
    ]
    return jobs


def jobs_for(spec):
    """Applicable suites for one metric."""
    jobs = []
    if spec.family in CFC_FAMILIES or spec.family.startswith("riemann_counterexample"):
        jobs.append(("cfc", spec, {}))
    if spec.family in PROJECTIVELY_FLAT or spec.family == "randers_nonclosed":
        jobs.append(("projflat", spec, {}))
    if spec.family in RIEMANNIAN:
        jobs.append(("beltrami", spec, {}))
    return jobs


def _run_job(job):
    suite, spec, kwargs, samples, seed = job
    report = SUITES[suite](spec, samples=samples, seed=seed, **kwargs)
    if not report.convention_flags:
        report.convention_flags = resolve_conventions()
    return report


def run_all(config=None):
    """Run the verification matrix; returns reports in job order.

    ``config`` keys: ``seed`` (default 0), ``samples`` (default 100),
    ``metrics`` (list of MetricSpec or JSON objects; default the standard
    matrix, empty list gives no jobs), ``jobs`` (worker processes, default 1).
    """
    config = dict(config or {})
    seed = int(config.get("seed", 0))
    samples = int(config.get("samples", DEFAULT_SAMPLES))
    metrics = config.get("metrics")
    if metrics is None:
        plan = default_matrix()
    else:
        plan = []
        for m in metrics:
            spec = m if isinstance(m, MetricSpec) else MetricSpec.from_json(m)
            plan += jobs_for(spec)
    work = [(suite, spec, kw, samples, seed) for suite, spec, kw in plan]
    workers = int(config.get("jobs", 1))
    if workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_job, work))
    return [_run_job(w) for w in work]


def exit_status(reports):
    """0 when every report matches its expectation, 1 otherwise."""
    return 0 if all(r.as_expected for r in reports) else 1
