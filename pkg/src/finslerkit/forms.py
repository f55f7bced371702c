"""Euler-Lagrange forms, projective factors and projective transformation laws.

Component conventions for semi-basic forms (indices j, k):

* ``(d_J f)_j = df/dy^j`` and ``(d_h f)_j = df/dx^j - N^m_j df/dy^m``
* ``(d_J beta)_jk = s (dbeta_k/dy^j - dbeta_j/dy^k)`` with ``s = +1`` unless a
  caller passes the opposite orientation
* ``(d_h beta)_jk = d_h(beta_k)_j - d_h(beta_j)_k``
* ``(d_R P)_jk = R^i_jk dP/dy^i`` and ``(a ^ b)_jk = a_j b_k - a_k b_j``
* ``(beta (x) C)^i_j = beta_j y^i`` and ``(omega (x) C)^i_jk = omega_jk y^i``
"""

import numpy as np

from finslerkit.errors import NonIsotropic, NotHamel, NotLinear, NotLinearFactor, NotRiemannian
from finslerkit.geometry import (
    ISOTROPY_RTOL,
    ScalarField,
    Spray,
    SprayJets,
    _delta,
    _w1,
    deform_spray,
    flat_spray,
    geodesic_spray,
    values,
    wedge_J,
)

LINEARITY_TOL = 1e-10
HAMEL_TOL = 1e-8


def _as_spray(base):
    """Accept a Spray or a Finsler function (meaning its geodesic spray)."""
    if isinstance(base, Spray):
        return base
    if base is None:
        return flat_spray()
    return geodesic_spray(base)


def _shared(spray, p, g_degree, fields=()):
    """SprayJets whose seed degree leaves ``g_degree`` orders on G and the needs of ``fields``."""
    degree = spray.order + g_degree
    for f, need in fields:
        degree = max(degree, f.order + need)
    return SprayJets(spray, p, degree=degree)


def _grad_y(sj, f):
    return [sj.dy(f, j) for j in range(sj.n)]


def _el_jets(sj, L):
    """(delta_S L)_i = S(dL/dy^i) - dL/dx^i as jets."""
    return [sj.S(sj.dy(L, i)) - L.deriv(i) for i in range(sj.n)]


def _dJ_one_form(sj, beta, sign=1):
    n = sj.n
    return [[sign * (sj.dy(beta[k], j) - sj.dy(beta[j], k)) for k in range(n)] for j in range(n)]


def _dh_one_form(sj, beta):
    n = sj.n
    return [[sj.delta(beta[k], j) - sj.delta(beta[j], k) for k in range(n)] for j in range(n)]


def _otimes_C(omega, y):
    """(omega (x) C)[..., i, j(, k)] = omega[..., j(, k)] y^i."""
    rank = omega.ndim - y.ndim + 1
    ys = y.reshape(y.shape + (1,) * rank)
    return ys * np.expand_dims(omega, -rank - 1)


def _scale(*arrays):
    return 1.0 + max(float(np.max(np.abs(a))) for a in arrays)


# ---------------------------------------------------------------- Euler-Lagrange


def euler_lagrange(L, spray, p):
    """Euler-Lagrange covector (delta_S L)_i = S(dL/dy^i) - dL/dx^i at ``p``."""
    spray = _as_spray(spray)
    sj = _shared(spray, p, 1, [(L, 2)])
    return values(_el_jets(sj, L(sj.X, sj.Y)))


def hamel_residual(F, p):
    """Max-norm of the Euler-Lagrange form of F along the flat spray."""
    return np.abs(euler_lagrange(F, flat_spray(), p)).max(axis=-1)


def projective_factor_field(F):
    """P = S0 F / (2F) as a field consuming one derivative of F."""

    def P(X, Y):
        n = len(X)
        Fj = F(X, Y)
        s0 = Y[0] * Fj.deriv(0)
        for k in range(1, n):
            s0 = s0 + Y[k] * Fj.deriv(k)
        return s0 / (2.0 * Fj)

    return ScalarField(P, homogeneity=1, name=f"P({F.name})", order=F.order + 1)


def projective_factor_flat(F, p):
    """Projective factor P = S0 F / (2F) of a projectively flat F."""
    Fv = F.at(p)
    if np.any(Fv <= 0):
        raise ValueError("projective factor needs F > 0")
    return projective_factor_field(F).at(p)


def closedness_residual(b, p, tol=LINEARITY_TOL):
    """max |db_i/dx^j - db_j/dx^i| with b_i = db/dy^i; b must be linear in y."""
    sj = SprayJets(flat_spray(), p, degree=2 + b.order)
    n = sj.n
    bj = b(sj.X, sj.Y)
    bi = _grad_y(sj, bj)
    hess = values([[sj.dy(bi[i], j) for j in range(n)] for i in range(n)])
    if np.max(np.abs(hess)) > tol * _scale(values(bi)):
        raise NotLinear(f"{b.name} is not linear in y (max |d2b/dy2| = {np.max(np.abs(hess)):.3e})")
    db = values([[bi[i].deriv(j) - bi[j].deriv(i) for j in range(n)] for i in range(n)])
    return np.abs(db).max(axis=(-2, -1))


def levi_civita_residual(F, p, check=True, tol=LINEARITY_TOL):
    """max |g_ij,l - 2 psi_l g_ij - psi_i g_jl - psi_j g_il| with psi_l = dP/dy^l.

    With ``check`` the metric must not depend on y and P must be linear in y.
    """
    sj = SprayJets(flat_spray(), p, degree=3 + F.order)
    n = sj.n
    Fj = F(sj.X, sj.Y)
    L = Fj * Fj
    g = [[0.5 * sj.dy(sj.dy(L, i), j) for j in range(n)] for i in range(n)]
    gv = values(g)
    Pj = projective_factor_field(F)(sj.X, sj.Y)
    psi = _grad_y(sj, Pj)
    if check:
        gy = values([[[sj.dy(g[i][j], k) for k in range(n)] for j in range(n)] for i in range(n)])
        if np.max(np.abs(gy)) > tol * _scale(gv):
            raise NotRiemannian(f"metric depends on y (max |dg/dy| = {np.max(np.abs(gy)):.3e})")
        Pyy = values([[sj.dy(psi[i], j) for j in range(n)] for i in range(n)])
        if np.max(np.abs(Pyy)) > tol * _scale(values(psi)):
            raise NotLinearFactor(f"projective factor is not linear (max |d2P/dy2| = {np.max(np.abs(Pyy)):.3e})")
    gx = values([[[g[i][j].deriv(l) for l in range(n)] for j in range(n)] for i in range(n)])
    ps = values(psi)
    model = (
        2.0 * ps[..., None, None, :] * gv[..., :, :, None]
        + ps[..., :, None, None] * gv[..., None, :, :]
        + ps[..., None, :, None] * np.swapaxes(gv, -1, -2)[..., :, None, :]
    )
    return np.abs(gx - model).max(axis=(-3, -2, -1))


def factor_linearity(F, p):
    """max |d2P/dy^i dy^j| for the flat projective factor of F."""
    sj = SprayJets(flat_spray(), p, degree=3 + F.order)
    n = sj.n
    Pj = projective_factor_field(F)(sj.X, sj.Y)
    psi = _grad_y(sj, Pj)
    return np.abs(values([[sj.dy(psi[i], j) for j in range(n)] for i in range(n)])).max(axis=(-2, -1))


def _alpha_checked(sj, rtol):
    Phi = values(sj.Phi)
    resid = sj.isotropy_residual
    scale = 1.0 + np.abs(Phi).max(axis=(-2, -1))
    if np.any(resid > rtol * scale):
        raise NonIsotropic(f"spray is not isotropic (residual {float(np.max(resid)):.3e})")
    return sj.alpha


def dh_alpha_residual(F, p, spray=None, rtol=ISOTROPY_RTOL):
    """Max-norm of (d_h alpha)_jk, alpha the isotropy 1-form of the (geodesic) spray."""
    spray = geodesic_spray(F) if spray is None else spray
    sj = SprayJets(spray, p, extra=3)
    alpha = _alpha_checked(sj, rtol)
    return np.abs(values(_dh_one_form(sj, alpha))).max(axis=(-2, -1))


def kappa_derivatives(F, p, spray=None):
    """(d_J kappa, d_h kappa) with kappa = rho / F^2, as arrays of shape (..., n)."""
    spray = geodesic_spray(F) if spray is None else spray
    sj = SprayJets(spray, p, extra=3)
    Fj = F(sj.X, sj.Y)
    kappa = sj.rho / (Fj * Fj)
    n = sj.n
    return values([sj.dy(kappa, j) for j in range(n)]), values([sj.delta(kappa, j) for j in range(n)])


# ---------------------------------------------------------------- transformation laws


def phibar_pair(base, P, p):
    """(Phi-bar computed directly, Phi-bar from the transformation formula)."""
    spray = _as_spray(base)
    sj = _shared(spray, p, 2, [(P, 2)])
    bar = SprayJets(deform_spray(spray, P), p, degree=sj.degree)
    n = sj.n
    Pj = P(sj.X, sj.Y)
    SP = sj.S(Pj)
    Pv, SPv = Pj.value, SP.value
    beta = values([Pj * sj.dy(Pj, j) + sj.dy(SP, j) - 3.0 * sj.delta(Pj, j) for j in range(n)])
    formula = (
        values(sj.Phi)
        + (Pv * Pv - SPv)[..., None, None] * _delta(n)
        - _otimes_C(beta, p.y)
    )
    return values(bar.Phi), formula


def verify_phibar(base, P, p):
    """Max-norm of Phi-bar (direct) minus Phi + (P^2 - SP) J - (P d_JP + d_J SP - 3 d_hP) (x) C."""
    direct, formula = phibar_pair(base, P, p)
    return np.abs(direct - formula).max(axis=(-2, -1))


def _flag(name, given):
    if given is not None:
        return given
    from finslerkit.conventions import resolve_conventions

    return resolve_conventions()[name]


def pw1_pair(base, P, p, dj_sign=None):
    """(W1-bar computed directly, W1 + 1/2 delta_S P ^ J + s d_J d_h P (x) C).

    ``s`` defaults to the resolved orientation of the d_J d_h P term.
    """
    dj_sign = _flag("pw1_dJdhP_sign", dj_sign)
    spray = _as_spray(base)
    sj = _shared(spray, p, 3, [(P, 2)])
    bar = SprayJets(deform_spray(spray, P), p, degree=sj.degree)
    n = sj.n
    Pj = P(sj.X, sj.Y)
    el = values(_el_jets(sj, Pj))
    dhP = [sj.delta(Pj, j) for j in range(n)]
    djdh = values(_dJ_one_form(sj, dhP, dj_sign))
    w1 = _w1(values(sj.R), values(sj.tau))
    formula = w1 + 0.5 * wedge_J(el, n) + _otimes_C(djdh, p.y)
    return _w1(values(bar.R), values(bar.tau)), formula


def verify_pw1(base, P, p, dj_sign=None):
    direct, formula = pw1_pair(base, P, p, dj_sign)
    return np.abs(direct - formula).max(axis=(-3, -2, -1))


def projr_residual(base, P, p, dj_sign=None):
    """Max-norm of R-bar - R - s d_J d_h P (x) C - (P d_JP - d_hP) ^ J."""
    dj_sign = _flag("pw1_dJdhP_sign", dj_sign)
    spray = _as_spray(base)
    sj = _shared(spray, p, 3, [(P, 2)])
    bar = SprayJets(deform_spray(spray, P), p, degree=sj.degree)
    n = sj.n
    Pj = P(sj.X, sj.Y)
    dhP = [sj.delta(Pj, j) for j in range(n)]
    djdh = values(_dJ_one_form(sj, dhP, dj_sign))
    beta = values([Pj * sj.dy(Pj, j) - dhP[j] for j in range(n)])
    formula = values(sj.R) + _otimes_C(djdh, p.y) + wedge_J(beta, n)
    return np.abs(values(bar.R) - formula).max(axis=(-3, -2, -1))


def hamel_factor_residual(base, P, p):
    """Max-norm of delta_S P along the given spray."""
    spray = _as_spray(base)
    sj = _shared(spray, p, 1, [(P, 2)])
    return np.abs(values(_el_jets(sj, P(sj.X, sj.Y)))).max(axis=-1)


def dhalpha_pair(base, P, p, dj_sign=1, rp_sign=None, rtol=ISOTROPY_RTOL, hamel_tol=HAMEL_TOL):
    """(d_hbar alpha-bar, d_h alpha - d_R P - P d_J alpha + alpha ^ d_J P).

    ``rp_sign`` defaults to the resolved index order of the d_R P term.
    """
    rp_sign = _flag("d_R_P_sign", rp_sign)
    spray = _as_spray(base)
    sj = _shared(spray, p, 3, [(P, 2)])
    Pj = P(sj.X, sj.Y)
    el = values(_el_jets(sj, Pj))
    if np.any(np.abs(el).max(axis=-1) > hamel_tol * _scale(Pj.value)):
        raise NotHamel(f"{P.name} is not a Hamel function (max |delta_S P| = {np.max(np.abs(el)):.3e})")
    bar = SprayJets(deform_spray(spray, P), p, degree=sj.degree)
    alpha = _alpha_checked(sj, rtol)
    alpha_bar = _alpha_checked(bar, rtol)
    lhs = values(_dh_one_form(bar, alpha_bar))
    dPy = values(_grad_y(sj, Pj))
    R = values(sj.R)
    dRP = rp_sign * np.einsum("...ijk,...i->...jk", R, dPy)
    av = values(alpha)
    wedge = av[..., :, None] * dPy[..., None, :] - av[..., None, :] * dPy[..., :, None]
    rhs = (
        values(_dh_one_form(sj, alpha))
        - dRP
        - Pj.value[..., None, None] * values(_dJ_one_form(sj, alpha, dj_sign))
        + wedge
    )
    return lhs, rhs


def verify_dhalpha_transform(base, P, p, dj_sign=1, rp_sign=None, **kw):
    lhs, rhs = dhalpha_pair(base, P, p, dj_sign, rp_sign, **kw)
    return np.abs(lhs - rhs).max(axis=(-2, -1))
