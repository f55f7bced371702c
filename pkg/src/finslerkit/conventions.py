"""Numerical resolution of the sign conventions used by the transformation laws.

Each orientation choice is settled by evaluating an identity on a metric
where it is known to hold and keeping the sign under which the residual
vanishes.  The probes and their residuals are returned so that reports can
carry them as metadata.
"""

from functools import lru_cache

import numpy as np

from finslerkit.errors import FinslerError
from finslerkit.geometry import ScalarField, curvature_tensor, metric_tensor, wedge_J

PROBE_TOL = 1e-9
PROBE_SAMPLES = 8
PROBE_SEED = 20240601


def _probe_points(spec):
    from finslerkit.catalog import DomainSampler, sample_points

    return sample_points(DomainSampler(spec, seed=PROBE_SEED), PROBE_SAMPLES)


def rtens_residual(mu=-1.0, n=3):
    """Max |R - 1/2 d_J(kappa F^2) ^ J| on the Klein metric with kappa = mu."""
    from finslerkit.catalog import MetricSpec, build_metric

    spec = MetricSpec("klein", n, {"mu": mu})
    F = build_metric(spec)
    p = _probe_points(spec)
    g = metric_tensor(F, p)
    u = np.einsum("...ij,...j->...i", g, p.y)  # 1/2 d_J F^2
    R = curvature_tensor(F, p)
    return float(np.abs(R - wedge_J(mu * u, n)).max())


def _pick(residuals, label):
    for sign in (1, -1):
        if residuals[sign] <= PROBE_TOL:
            return sign
    raise FinslerError(f"no orientation satisfies the {label} identity: {residuals}")


@lru_cache(maxsize=1)
def resolve_conventions():
    """Resolve and validate the orientation flags; cached for the process."""
    from finslerkit import forms
    from finslerkit.catalog import MetricSpec, build_metric, funk, randers_nonclosed

    flags = {
        "wedge_J": "(beta^J)^i_jk = beta_k delta^i_j - beta_j delta^i_k",
        "d_J_one_form": "(d_J beta)_jk = dbeta_k/dy^j - dbeta_j/dy^k",
    }
    rt = rtens_residual()
    if rt > PROBE_TOL:
        raise FinslerError(f"curvature orientation check failed on the Klein metric ({rt:.3e})")
    flags["rtens_klein_residual"] = rt

    funk_spec = MetricSpec("funk", 2)
    pts = _probe_points(funk_spec)
    half_funk = ScalarField(lambda x, y: 0.5 * funk(x, y), name="funk/2")
    flat_funk = {s: float(forms.verify_pw1(None, half_funk, pts, dj_sign=s).max()) for s in (1, -1)}
    flags["pw1_flat_funk_residual"] = flat_funk[1]

    # The flat-to-Funk factor is Hamel, so d_J d_h P vanishes there and both
    # orientations pass; a non-Hamel factor is needed to fix the sign.
    probe = ScalarField(lambda x, y: 0.3 * randers_nonclosed(0.1)(x, y), name="non-Hamel probe")
    nonhamel = {s: float(forms.verify_pw1(None, probe, pts, dj_sign=s).max()) for s in (1, -1)}
    pw1_sign = _pick(nonhamel, "pw1")
    flags["pw1_dJdhP_sign"] = pw1_sign
    flags["pw1_nonhamel_residual"] = nonhamel[pw1_sign]
    flags["pw1_listed_sign_residual"] = nonhamel[1]

    # d_h alpha law on an isotropic 2D spray whose alpha is not d_J-closed
    rn_spec = MetricSpec("randers_nonclosed", 2, {"eps": 0.3})
    rn = build_metric(rn_spec)
    rpts = _probe_points(rn_spec)
    lin = ScalarField(lambda x, y: 0.2 * y[0] + 0.1 * y[1] + 0.0 * x[0], name="linear probe")
    dh = {
        s: float(forms.verify_dhalpha_transform(rn, lin, rpts, dj_sign=1, rp_sign=s).max())
        for s in (1, -1)
    }
    rp_sign = _pick(dh, "d_h alpha")
    flags["d_R_P_sign"] = rp_sign
    flags["d_R_P"] = "R^i_jk dP/dy^i" if rp_sign == 1 else "R^i_kj dP/dy^i"
    flags["dhalpha_probe_residual"] = dh[rp_sign]
    return flags
