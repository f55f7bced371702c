"""Sprays, connections and curvature of Finsler functions, computed on jets.

Conventions used throughout (components at one point, indices i, j, k):

* ``N[i, j] = dG^i/dy^j``
* ``Phi[i, j] = 2 dG^i/dx^j - S(N^i_j) - N^i_k N^k_j`` with
  ``S(f) = y^k df/dx^k - 2 G^k df/dy^k``
* ``R[i, j, k] = (dPhi^i_j/dy^k - dPhi^i_k/dy^j) / 3``, so ``R[i, j, k] y^k = Phi[i, j]``
* ``(beta ^ J)[i, j, k] = beta_k delta^i_j - beta_j delta^i_k``

All point-wise operations accept batched :class:`ChartPoint` objects; results
carry the batch shape in front of the tensor axes.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from finslerkit.errors import DegenerateMetric, FinslerError, NonIsotropic
from finslerkit.jets import DEFAULT_DEGREE, Jet, make_variable

ISOTROPY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Base point ``x`` and fiber vector ``y`` in a chart.

    ``x`` and ``y`` have shape ``(n,)`` or ``(*batch, n)``.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.shape != y.shape or x.ndim == 0:
            raise ValueError(f"x and y must share a shape (..., n); got {x.shape}, {y.shape}")
        if not 1 <= x.shape[-1] <= 8:
            raise ValueError(f"unsupported dimension n={x.shape[-1]}")
        if np.any(np.all(y == 0, axis=-1)):
            raise ValueError("y must be nonzero (points of the slit tangent bundle)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[-1]

    @property
    def batch_shape(self):
        return self.x.shape[:-1]

    def __len__(self):
        if not self.batch_shape:
            raise TypeError("unbatched ChartPoint has no len()")
        return self.batch_shape[0]

    def __getitem__(self, idx):
        return ChartPoint(self.x[idx], self.y[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def stack(cls, points):
        points = list(points)
        return cls(np.stack([p.x for p in points]), np.stack([p.y for p in points]))

    def components(self):
        """Coordinate components as two lists of arrays (x^i, y^i)."""
        return (
            [self.x[..., i] for i in range(self.n)],
            [self.y[..., i] for i in range(self.n)],
        )


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A function of ``(x, y)`` written against jet/array arithmetic.

    ``func(x, y)`` receives two lists of components that are either float
    arrays or seeded jets and must use only the operations provided by
    :mod:`finslerkit.jets`.  ``order`` counts derivatives that ``func`` takes
    of its (seeded) inputs; closed-form fields have order 0 and also accept
    plain arrays.
    """

    func: Callable
    homogeneity: int = 1
    name: str = "F"
    order: int = 0

    def __call__(self, x, y):
        return self.func(x, y)

    def at(self, p):
        """Value at a (possibly batched) chart point, as a float array."""
        if self.order:
            X, Y = seed(p, self.order)
            return self(X, Y).value
        xs, ys = p.components()
        return np.asarray(self(xs, ys), dtype=float)


@dataclass(frozen=True, eq=False)
class Spray:
    """Spray coefficients ``G^i`` as jets of the seeded chart variables.

    ``order`` is the number of derivative orders the construction consumes;
    a seed of degree ``D`` yields ``G`` jets of degree ``D - order``.
    """

    coeffs: Callable
    order: int
    name: str = "S"
    meta: dict = field(default_factory=dict)

    def __call__(self, X, Y):
        return self.coeffs(X, Y)


def seed(p, degree=DEFAULT_DEGREE):
    """Seeded jets for ``x^1..x^n`` (variables 0..n-1) and ``y^1..y^n`` (n..2n-1)."""
    n = p.n
    nv = 2 * n
    degree = max(int(degree), 1)
    X = [make_variable(i, p.x[..., i], nv, degree) for i in range(n)]
    Y = [make_variable(n + i, p.y[..., i], nv, degree) for i in range(n)]
    return X, Y


def values(jets):
    """Stack nested lists of jets into an array with the batch axes first."""
    if isinstance(jets, Jet):
        return jets.value
    depth = _depth(jets)
    arr = np.array(_values_rec(jets))
    return np.moveaxis(arr, tuple(range(depth)), tuple(range(-depth, 0)))


def _values_rec(j):
    if isinstance(j, list):
        return [_values_rec(k) for k in j]
    return j.value


def _depth(x):
    d = 0
    while isinstance(x, list):
        d += 1
        x = x[0]
    return d


def _jet_solve(A, b):
    """Gaussian elimination on jet entries (no pivoting; A is positive definite)."""
    n = len(b)
    A = [list(row) for row in A]
    b = list(b)
    for c in range(n):
        piv = A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / piv
            for k in range(c + 1, n):
                A[r][k] = A[r][k] - f * A[c][k]
            b[r] = b[r] - f * b[c]
    out = [None] * n
    for r in reversed(range(n)):
        s = b[r]
        for k in range(r + 1, n):
            s = s - A[r][k] * out[k]
        out[r] = s / A[r][r]
    return out


def _check_metric(gvals):
    if not np.all(np.isfinite(gvals)):
        raise DegenerateMetric("metric tensor is not finite (point outside the domain?)")
    eig = np.linalg.eigvalsh(gvals)
    if np.any(eig[..., 0] <= 0):
        raise DegenerateMetric("metric tensor is not positive definite")


# ---------------------------------------------------------------- sprays


def geodesic_spray(F):
    """Geodesic spray of a Finsler function: G = 1/4 g^{il}(y^k d2F2/dy^l dx^k - dF2/dx^l)."""

    def coeffs(X, Y):
        n = len(X)
        Fj = F(X, Y)
        L = Fj * Fj
        Ly = [L.deriv(n + l) for l in range(n)]
        Lyy = [[Ly[l].deriv(n + k) for k in range(n)] for l in range(n)]
        _check_metric(0.5 * values(Lyy))
        rhs = []
        for l in range(n):
            s = -L.deriv(l)
            for k in range(n):
                s = s + Y[k] * Ly[l].deriv(k)
            rhs.append(0.5 * s)
        return _jet_solve(Lyy, rhs)

    return Spray(coeffs, order=2 + F.order, name=f"geodesic({F.name})")


def flat_spray(n=None):
    """The flat spray S0 = y^i d/dx^i (G = 0)."""

    def coeffs(X, Y):
        zero = 0.0 * Y[0]
        return [zero for _ in Y]

    return Spray(coeffs, order=0, name="flat")


def deform_spray(base, P):
    """Projective deformation S - 2 P C, i.e. G^i -> G^i + P y^i."""

    def coeffs(X, Y):
        G = base(X, Y)
        Pj = P(X, Y)
        return [G[i] + Pj * Y[i] for i in range(len(G))]

    return Spray(
        coeffs, order=max(base.order, P.order), name=f"{base.name}-2({P.name})C"
    )


class SprayJets:
    """Lazily computed jets of every spray-derived quantity at seeded points.

    Parameters
    ----------
    spray : Spray
    p : ChartPoint
    extra : int
        Derivative orders needed beyond ``G`` itself (3 gives values of R and
        degree-1 jets of Phi).
    degree : int, optional
        Explicit seed degree; overrides ``extra`` so that several fields can
        share one expansion.
    """

    def __init__(self, spray, p, extra=3, degree=None):
        self.spray = spray
        self.p = p
        self.n = p.n
        self.degree = spray.order + extra if degree is None else degree
        self.X, self.Y = seed(p, self.degree)

    @cached_property
    def G(self):
        return self.spray(self.X, self.Y)

    @cached_property
    def N(self):
        n = self.n
        return [[self.G[i].deriv(n + j) for j in range(n)] for i in range(n)]

    def S(self, f):
        """Spray derivative S(f) = y^k df/dx^k - 2 G^k df/dy^k of a jet."""
        n = self.n
        out = 0.0
        for k in range(n):
            out = out + self.Y[k] * f.deriv(k) - 2.0 * self.G[k] * f.deriv(n + k)
        return out

    def delta(self, f, j):
        """Horizontal derivative d f/dx^j - N^m_j df/dy^m."""
        n = self.n
        out = f.deriv(j)
        for m in range(n):
            out = out - self.N[m][j] * f.deriv(n + m)
        return out

    def dy(self, f, j):
        return f.deriv(self.n + j)

    @cached_property
    def Phi(self):
        n = self.n
        N = self.N
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                v = 2.0 * self.G[i].deriv(j) - self.S(N[i][j])
                for k in range(n):
                    v = v - N[i][k] * N[k][j]
                row.append(v)
            out.append(row)
        return out

    @cached_property
    def trace(self):
        t = self.Phi[0][0]
        for i in range(1, self.n):
            t = t + self.Phi[i][i]
        return t

    @cached_property
    def rho(self):
        return self.trace / (self.n - 1)

    @cached_property
    def tau(self):
        """d_J Tr(Phi) as jets."""
        return [self.dy(self.trace, j) for j in range(self.n)]

    @cached_property
    def R(self):
        n = self.n
        dPhi = [[[self.dy(self.Phi[i][j], k) for k in range(n)] for j in range(n)] for i in range(n)]
        return [
            [[(dPhi[i][j][k] - dPhi[i][k][j]) / 3.0 for k in range(n)] for j in range(n)]
            for i in range(n)
        ]

    @cached_property
    def alpha(self):
        """Least-squares isotropy 1-form (jets) and the numeric residual."""
        alpha, _ = _isotropy_jets(self.Phi, self.rho, self.Y)
        return alpha

    @cached_property
    def isotropy_residual(self):
        _, resid = _isotropy_jets(self.Phi, self.rho, self.Y)
        return resid


def _isotropy_jets(Phi, rho, Y):
    n = len(Y)
    ysq = Y[0] * Y[0]
    for i in range(1, n):
        ysq = ysq + Y[i] * Y[i]
    alpha = []
    for j in range(n):
        s = 0.0
        for i in range(n):
            target = (rho if i == j else 0.0) - Phi[i][j]
            s = s + Y[i] * target
        alpha.append(s / ysq)
    resid = 0.0
    for i in range(n):
        for j in range(n):
            target = (rho.value if i == j else 0.0) - Phi[i][j].value
            resid = np.maximum(resid, np.abs(alpha[j].value * Y[i].value - target))
    return alpha, resid


def _resolve_spray(F, spray):
    if spray is not None:
        return spray
    if F is None:
        raise ValueError("need a Finsler function or a spray")
    return geodesic_spray(F)


def _delta(n):
    return np.eye(n)


def wedge_J(beta, n):
    """(beta ^ J)[..., i, j, k] = beta_k delta^i_j - beta_j delta^i_k."""
    d = _delta(n)
    return (
        beta[..., None, None, :] * d[:, :, None]
        - beta[..., None, :, None] * d[:, None, :]
    )


# ---------------------------------------------------------------- operations


def metric_tensor(F, p):
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j."""
    X, Y = seed(p, 2 + F.order)
    n = p.n
    Fj = F(X, Y)
    if not np.all(np.isfinite(Fj.value)) or np.any(Fj.value <= 0):
        raise DegenerateMetric("F is not positive and finite at the point")
    L = Fj * Fj
    g = np.stack(
        [np.stack([0.5 * L.partial(_unit2(n, n + i, n + j)) for j in range(n)], -1) for i in range(n)],
        -2,
    )
    _check_metric(g)
    return g


def _unit2(n, a, b):
    e = [0] * (2 * n)
    e[a] += 1
    e[b] += 1
    return e


def geodesic_coefficients(F, p, spray=None):
    sj = SprayJets(_resolve_spray(F, spray), p, extra=0)
    return values(sj.G)


def nonlinear_connection(F, p, spray=None):
    sj = SprayJets(_resolve_spray(F, spray), p, extra=1)
    return values(sj.N)


def jacobi_endomorphism(F, p, spray=None):
    sj = SprayJets(_resolve_spray(F, spray), p, extra=2)
    return values(sj.Phi)


def ricci_scalar(Phi, n=None):
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[-1] if n is None else n
    if n < 2:
        raise ValueError("the Ricci scalar needs n >= 2")
    return np.trace(Phi, axis1=-2, axis2=-1) / (n - 1)


def curvature_tensor(F, p, spray=None):
    sj = SprayJets(_resolve_spray(F, spray), p, extra=3)
    return values(sj.R)


def _w0(Phi, tau, y):
    n = Phi.shape[-1]
    rho = ricci_scalar(Phi)
    return (
        Phi
        - rho[..., None, None] * _delta(n)
        + y[..., :, None] * tau[..., None, :] / (2 * (n - 1))
    )


def _w1(R, tau):
    n = R.shape[-1]
    return R - wedge_J(tau, n) / (2 * (n - 1))


def weyl_w0(F, p, spray=None):
    """W0 = Phi - rho J + d_J(Tr Phi) (x) C / (2(n-1))."""
    if p.n < 2:
        raise ValueError("W0 needs n >= 2")
    sj = SprayJets(_resolve_spray(F, spray), p, extra=3)
    return _w0(values(sj.Phi), values(sj.tau), p.y)


def weyl_w1(F, p, spray=None):
    """W1 = R - d_J(Tr Phi) ^ J / (2(n-1))."""
    if p.n < 2:
        raise ValueError("W1 needs n >= 2")
    sj = SprayJets(_resolve_spray(F, spray), p, extra=3)
    return _w1(values(sj.R), values(sj.tau))


def isotropy_extract(Phi, rho, p):
    """Least-squares alpha with Phi ~ rho J - alpha (x) C; returns (alpha, residual).

    For each column j, alpha_j minimises sum_i (alpha_j y^i - (rho delta^i_j - Phi^i_j))^2.
    """
    Phi = np.asarray(Phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    y = p.y
    n = y.shape[-1]
    target = rho[..., None, None] * _delta(n) - Phi
    alpha = np.einsum("...i,...ij->...j", y, target) / np.sum(y * y, axis=-1)[..., None]
    resid = np.abs(y[..., :, None] * alpha[..., None, :] - target)
    return alpha, resid.max(axis=(-2, -1))


def flag_curvature(F, p, spray=None, rtol=ISOTROPY_RTOL):
    """kappa = rho / F^2, defined only where Phi is isotropic."""
    sj = SprayJets(_resolve_spray(F, spray), p, extra=2)
    Phi = values(sj.Phi)
    rho = ricci_scalar(Phi)
    _, resid = isotropy_extract(Phi, rho, p)
    scale = 1.0 + np.abs(Phi).max(axis=(-2, -1))
    if np.any(resid > rtol * scale):
        raise NonIsotropic(
            f"Jacobi endomorphism is not isotropic (residual {float(np.max(resid)):.3e})"
        )
    return rho / F.at(p) ** 2


def cfc_residual(F, p, kappa, spray=None):
    """max |Phi - kappa F^2 J + kappa F d_JF (x) C|."""
    sj = SprayJets(_resolve_spray(F, spray), p, extra=2)
    Phi = values(sj.Phi)
    X, Y = sj.X, sj.Y
    n = p.n
    Fj = F(X, Y)
    Fv = Fj.value
    dF = np.stack([Fj.deriv(n + j).value for j in range(n)], -1)
    model = kappa * (
        (Fv**2)[..., None, None] * _delta(n) - Fv[..., None, None] * p.y[..., :, None] * dF[..., None, :]
    )
    return np.abs(Phi - model).max(axis=(-2, -1))


@dataclass
class GeometryBundle:
    """Every tensor at one (possibly batched) chart point."""

    F: np.ndarray
    g: np.ndarray
    G: np.ndarray
    N: np.ndarray
    Phi: np.ndarray
    rho: np.ndarray
    Rcurv: np.ndarray
    W0: np.ndarray
    W1: np.ndarray
    kappa: np.ndarray | None
    isotropy_residual: np.ndarray

    def as_dict(self):
        out = {}
        for name in ("F", "g", "G", "N", "Phi", "rho", "Rcurv", "W0", "W1", "kappa"):
            val = getattr(self, name)
            out["R" if name == "Rcurv" else name] = None if val is None else np.asarray(val).tolist()
        return out


def geometry_bundle(F, p, spray=None, rtol=ISOTROPY_RTOL):
    """Evaluate F, g, G, N, Phi, rho, R, W0, W1 and (if isotropic) kappa at ``p``."""
    if p.n < 2:
        raise FinslerError("geometry bundle needs n >= 2")
    sj = SprayJets(_resolve_spray(F, spray), p, extra=3)
    Phi = values(sj.Phi)
    rho = ricci_scalar(Phi)
    tau = values(sj.tau)
    R = values(sj.R)
    Fv = F.at(p)
    _, resid = isotropy_extract(Phi, rho, p)
    scale = 1.0 + np.abs(Phi).max(axis=(-2, -1))
    kappa = rho / Fv**2 if np.all(resid <= rtol * scale) else None
    return GeometryBundle(
        F=Fv,
        g=metric_tensor(F, p),
        G=values(sj.G),
        N=values(sj.N),
        Phi=Phi,
        rho=rho,
        Rcurv=R,
        W0=_w0(Phi, tau, p.y),
        W1=_w1(R, tau),
        kappa=kappa,
        isotropy_residual=resid,
    )
