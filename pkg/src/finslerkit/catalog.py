"""Explicit Finsler metric families, deformation combinators and domain sampling.

Every family is written once against generic component arithmetic, so the
same evaluator serves seeded jets and plain float arrays (the latter feed the
finite-difference oracle and the sampler's positivity checks).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from finslerkit import jets
from finslerkit.errors import (
    DegenerateMetric,
    InvalidParams,
    JetDomainError,
    PositivityViolated,
    RejectionOverflow,
)
from finslerkit.geometry import ChartPoint, ScalarField, metric_tensor

FAMILIES = (
    "euclidean",
    "klein",
    "randers_pf",
    "deformed_randers",
    "funk",
    "generalized_funk",
    "square_pf",
    "conformal_pf",
    "riemann_counterexample_2d",
    "riemann_counterexample_3d",
    "randers_nonclosed",
)

# families whose flag curvature is a known constant
CFC_FAMILIES = (
    "euclidean",
    "klein",
    "randers_pf",
    "deformed_randers",
    "funk",
    "generalized_funk",
    "square_pf",
    "conformal_pf",
)
PROJECTIVELY_FLAT = CFC_FAMILIES
RIEMANNIAN = ("euclidean", "klein", "riemann_counterexample_2d", "riemann_counterexample_3d")


def _unit_vec(n, first=0.1):
    v = np.zeros(n)
    v[0] = first
    return v


def default_params(family, n):
    """Documented default parameters for a family in dimension n."""
    return {
        "euclidean": {},
        "klein": {"mu": -1.0},
        "randers_pf": {"c": 0.3},
        "deformed_randers": {"nu": -0.5, "e": _unit_vec(n).tolist(), "f": 1.0},
        "funk": {},
        "generalized_funk": {"e": _unit_vec(n).tolist()},
        "square_pf": {"c": 0.5, "eta": 1.0},
        "conformal_pf": {"c": 0.5, "eta": 1.0, "v": _unit_vec(n, 0.05).tolist(), "e": 1.0},
        "riemann_counterexample_2d": {},
        "riemann_counterexample_3d": {},
        "randers_nonclosed": {"eps": 0.1},
    }[family]


@dataclass(frozen=True)
class MetricSpec:
    """Catalog identifier, dimension and parameter record of one Finsler function."""

    family: str
    n: int = 2
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown metric family {self.family!r}")
        merged = default_params(self.family, self.n)
        unknown = set(self.params) - set(merged)
        if unknown:
            raise InvalidParams(f"{self.family} has no parameter(s) {sorted(unknown)}")
        merged.update(self.params)
        for k, v in merged.items():
            merged[k] = [float(t) for t in v] if isinstance(v, (list, tuple, np.ndarray)) else float(v)
        object.__setattr__(self, "params", merged)
        validate(self)

    def to_json(self):
        return {"family": self.family, "n": self.n, "params": self.params}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["family"], int(obj.get("n", 2)), dict(obj.get("params", {})))

    def __hash__(self):
        return hash(json.dumps(self.to_json(), sort_keys=True))

    @property
    def domain_radius(self):
        p = self.params
        fam = self.family
        if fam == "klein":
            return float(1.0 / np.sqrt(-p["mu"])) if p["mu"] < 0 else 1.0
        if fam in ("randers_pf", "square_pf", "conformal_pf"):
            return 1.0 / (2.0 * abs(p["c"]))
        if fam == "deformed_randers":
            return 1.0 / (2.0 * abs(p["nu"]))
        return 1.0

    def contains(self, x):
        """Boolean mask of base points inside the validity domain (open conditions)."""
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        ok = r2 < self.domain_radius**2
        p = self.params
        if self.family == "deformed_randers":
            ok &= -2.0 * p["nu"] * (x @ np.asarray(p["e"]) + p["f"]) > 0
        elif self.family == "generalized_funk":
            ok &= 1.0 + x @ np.asarray(p["e"]) > 0
        elif self.family == "randers_nonclosed":
            ok &= np.abs(p["eps"] * x[..., 0]) < 1.0
        return ok


def validate(spec):
    p = spec.params
    fam = spec.n, spec.family
    n, family = fam
    if n < 2 or n > 4:
        raise InvalidParams(f"dimension n={n} outside the supported range 2..4")
    for k, v in p.items():
        if isinstance(v, list) and len(v) != n:
            raise InvalidParams(f"{family}: vector parameter {k} must have length n={n}")
    if family == "riemann_counterexample_2d" and n != 2:
        raise InvalidParams("riemann_counterexample_2d requires n = 2")
    if family == "riemann_counterexample_3d" and n != 3:
        raise InvalidParams("riemann_counterexample_3d requires n = 3")
    if family in ("randers_pf", "square_pf", "conformal_pf") and p["c"] == 0:
        raise InvalidParams(f"{family}: c != 0 required")
    if family == "square_pf" and p["eta"] <= 0:
        raise InvalidParams("square_pf: eta > 0 required")
    if family == "conformal_pf" and p["eta"] <= 0:
        raise InvalidParams("conformal_pf: eta > 0 required")
    if family == "deformed_randers":
        if p["nu"] == 0:
            raise InvalidParams("deformed_randers: nu != 0 required")
        if -2.0 * p["nu"] * p["f"] <= 0:
            raise InvalidParams("deformed_randers: -2 nu (<e,x> + f) > 0 fails at x = 0")
    if family == "generalized_funk" and np.linalg.norm(p["e"]) >= 1:
        raise InvalidParams("generalized_funk: |e| < 1 required")


# ---------------------------------------------------------------- closed forms


def _dot(u, v):
    out = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        out = out + a * b
    return out


def _const_dot(c, v):
    out = 0.0
    for a, b in zip(c, v):
        if a != 0.0:
            out = out + float(a) * b
    return out


def _randers_parts(c, x, y):
    """Riemannian part a, 1-form b and their shared denominator for Randers(c)."""
    xx, yy, xy = _dot(x, x), _dot(y, y), _dot(x, y)
    den = 1.0 - 4.0 * c * c * xx
    root = jets.sqrt(yy - 4.0 * c * c * (xx * yy - xy * xy))
    return root, den, xy


def euclidean(x, y):
    return jets.sqrt(_dot(y, y))


def klein(mu):
    def F(x, y):
        xx, yy, xy = _dot(x, x), _dot(y, y), _dot(x, y)
        return jets.sqrt(yy + mu * (xx * yy - xy * xy)) / (1.0 + mu * xx)

    return F


def randers_riemannian_part(c):
    def a(x, y):
        root, den, _ = _randers_parts(c, x, y)
        return root / den

    return a


def randers_one_form(c):
    def b(x, y):
        _, den, xy = _randers_parts(c, x, y)
        return 2.0 * c * xy / den

    return b


def randers_pf(c):
    def F(x, y):
        root, den, xy = _randers_parts(c, x, y)
        return (root + 2.0 * c * xy) / den

    return F


def funk(x, y):
    xx, yy, xy = _dot(x, x), _dot(y, y), _dot(x, y)
    return jets.sqrt(yy - (xx * yy - xy * xy)) / (1.0 - xx) + xy / (1.0 - xx)


def beta_bar(nu, e, f):
    """Closed 1-form y^i d(psi)/dx^i with psi = -ln(-2 nu (<e,x> + f)) / (2 nu)."""

    def b(x, y):
        return -_const_dot(e, y) / (2.0 * nu * (_const_dot(e, x) + f))

    return b


def deformed_randers(nu, e, f):
    def F(x, y):
        xx, yy, xy = _dot(x, x), _dot(y, y), _dot(x, y)
        den = 1.0 - 4.0 * nu * nu * xx
        root = jets.sqrt(yy - 4.0 * nu * nu * (xx * yy - xy * xy))
        return root / den - 2.0 * nu * xy / den - _const_dot(e, y) / (2.0 * nu * (_const_dot(e, x) + f))

    return F


def generalized_funk(e):
    def F(x, y):
        return funk(x, y) + _const_dot(e, y) / (1.0 + _const_dot(e, x))

    return F


def square_pf(c, eta):
    def F(x, y):
        root, den, xy = _randers_parts(c, x, y)
        num = root + 2.0 * c * xy
        return eta * num * num / (den * den * root)

    return F


def conformal_pf(c, eta, v, e):
    def F(x, y):
        root, den, xy = _randers_parts(c, x, y)
        num = root + 2.0 * c * xy
        fbar = eta * num * num / (den * den * root)
        base = num / den
        factor = 2.0 * c * _const_dot(v, x) + e + _const_dot(v, y) / base
        return fbar * factor

    return F


def riemann_counterexample(n):
    """sqrt(sum_{i<n} (y^i)^2 + exp((x^1)^2) (y^n)^2): non-constant curvature."""

    def F(x, y):
        s = _dot(y[:-1], y[:-1])
        return jets.sqrt(s + jets.exp(x[0] * x[0]) * y[-1] * y[-1])

    return F


def nonclosed_form(x, y):
    """The non-closed 1-form x^1 y^2."""
    return x[0] * y[1]


def randers_nonclosed(eps):
    def F(x, y):
        return euclidean(x, y) + eps * nonclosed_form(x, y)

    return F


def build_metric(spec):
    """The Finsler function of a catalog spec as a :class:`ScalarField`."""
    p = spec.params
    fam = spec.family
    if fam == "euclidean":
        func = euclidean
    elif fam == "klein":
        func = klein(p["mu"])
    elif fam == "randers_pf":
        func = randers_pf(p["c"])
    elif fam == "deformed_randers":
        func = deformed_randers(p["nu"], p["e"], p["f"])
    elif fam == "funk":
        func = funk
    elif fam == "generalized_funk":
        func = generalized_funk(p["e"])
    elif fam == "square_pf":
        func = square_pf(p["c"], p["eta"])
    elif fam == "conformal_pf":
        func = conformal_pf(p["c"], p["eta"], p["v"], p["e"])
    elif fam in ("riemann_counterexample_2d", "riemann_counterexample_3d"):
        func = riemann_counterexample(spec.n)
    elif fam == "randers_nonclosed":
        func = randers_nonclosed(p["eps"])
    else:  # pragma: no cover - guarded by MetricSpec
        raise InvalidParams(fam)
    return ScalarField(func, homogeneity=1, name=fam)


def base_randers_c(spec):
    """Coefficient c of the projectively flat Randers metric a family is built on."""
    p = spec.params
    if spec.family in ("randers_pf", "square_pf", "conformal_pf"):
        return p["c"]
    if spec.family == "funk":
        return 0.5
    if spec.family == "deformed_randers":
        return -p["nu"]
    if spec.family == "generalized_funk":
        return 0.5
    raise InvalidParams(f"{spec.family} is not built on a projectively flat Randers metric")


def base_randers(spec):
    return ScalarField(randers_pf(base_randers_c(spec)), name=f"randers_pf(c={base_randers_c(spec)})")


def linear_form(spec):
    """The 1-form b (linear in y) attached to a Randers-type family."""
    p = spec.params
    if spec.family == "randers_pf":
        return ScalarField(randers_one_form(p["c"]), name="b")
    if spec.family == "funk":
        return ScalarField(randers_one_form(0.5), name="b")
    if spec.family == "deformed_randers":
        return ScalarField(beta_bar(p["nu"], p["e"], p["f"]), name="b_bar")
    if spec.family == "generalized_funk":
        return ScalarField(beta_bar(-0.5, p["e"], 1.0), name="b_bar")
    if spec.family == "randers_nonclosed":
        return ScalarField(nonclosed_form, name="x1*y2")
    raise InvalidParams(f"{spec.family} has no attached 1-form")


# ---------------------------------------------------------------- combinators


def randers_add(F, b):
    """F + b."""
    return ScalarField(
        lambda x, y: F(x, y) + b(x, y), homogeneity=1, name=f"{F.name}+{b.name}", order=max(F.order, b.order)
    )


def square_deform(F, a, fconf):
    """fconf(x) * F^2 / a."""

    def func(x, y):
        Fv = F(x, y)
        return fconf(x, y) * Fv * Fv / a(x, y)

    return ScalarField(func, homogeneity=1, name=f"square({F.name})")


def square_factor(c, eta):
    """eta / (1 - 4 c^2 |x|^2), the conformal factor of the square deformation."""
    return ScalarField(lambda x, y: eta / (1.0 - 4.0 * c * c * _dot(x, x)), homogeneity=0, name="f")


def conformal_mult(Fbar, g, f, F):
    """g(x) Fbar + (f / F) Fbar."""

    def func(x, y):
        fb = Fbar(x, y)
        return g(x, y) * fb + f(x, y) / F(x, y) * fb

    return ScalarField(func, homogeneity=1, name=f"conformal({Fbar.name})")


def conformal_factor(c, v, e):
    """g(x) = 2c<v, x> + e and f(x, y) = <v, y>."""
    g = ScalarField(lambda x, y: 2.0 * c * _const_dot(v, x) + e + 0.0 * x[0], homogeneity=0, name="g")
    f = ScalarField(lambda x, y: _const_dot(v, y) + 0.0 * y[0], homogeneity=1, name="f")
    return g, f


def check_positive(F, points):
    """Raise PositivityViolated unless F > 0 at every sampled point."""
    vals = F.at(points)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise PositivityViolated(f"{F.name} is not positive on the sampled points")
    return vals


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class DomainSampler:
    spec: MetricSpec
    radius_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.radius_fraction < 1:
            raise ValueError("radius_fraction must lie in (0, 1)")


def _accept(spec, F, x, y):
    ok = spec.contains(x)
    if not np.any(ok):
        return ok
    p = ChartPoint(x, y)
    xs, ys = p.components()
    with np.errstate(all="ignore"):
        fv = np.asarray(F(xs, ys), dtype=float)
    ok &= np.isfinite(fv) & (fv > 0)
    idx = np.flatnonzero(ok)
    if idx.size:
        try:
            g = metric_tensor(F, p[idx])
        except (DegenerateMetric, JetDomainError):
            g = None
        if g is None:
            # fall back to point-wise checks to isolate the offenders
            for i in idx:
                try:
                    metric_tensor(F, p[i])
                except (DegenerateMetric, JetDomainError):
                    ok[i] = False
        else:
            ok[idx] &= np.all(np.isfinite(g), axis=(-2, -1)) & (np.linalg.eigvalsh(g)[:, 0] > 0)
    return ok


def sample_points(sampler, count, max_rounds=100):
    """Deterministic in-domain sample of ``count`` chart points.

    Point ``i`` is drawn from its own generator seeded with ``(seed, i)``, so
    the result does not depend on batch size or evaluation order.  ``x`` is
    uniform in the ball of radius ``radius_fraction * domain_radius`` and
    ``y`` uniform on the unit sphere.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    spec = sampler.spec
    n = spec.n
    F = build_metric(spec)
    radius = sampler.radius_fraction * spec.domain_radius
    gens = [np.random.default_rng([sampler.seed, i]) for i in range(count)]
    xs = np.zeros((count, n))
    ys = np.zeros((count, n))
    pending = np.arange(count)
    drawn = 0
    for _ in range(max_rounds):
        cand_x = np.zeros((pending.size, n))
        cand_y = np.zeros((pending.size, n))
        for row, i in enumerate(pending):
            g = gens[i]
            d = g.standard_normal(n)
            r = radius * g.random() ** (1.0 / n)
            cand_x[row] = r * d / np.linalg.norm(d)
            v = g.standard_normal(n)
            cand_y[row] = v / np.linalg.norm(v)
        drawn += pending.size
        ok = _accept(spec, F, cand_x, cand_y)
        xs[pending[ok]] = cand_x[ok]
        ys[pending[ok]] = cand_y[ok]
        pending = pending[~ok]
        if pending.size == 0:
            return ChartPoint(xs, ys)
        if drawn >= 100 * count and (count - pending.size) / drawn < 0.01:
            break
    raise RejectionOverflow(
        f"{spec.family}: acceptance below 1% ({count - pending.size} of {drawn} draws); check params"
    )
