"""Coefficient kernels for truncated Taylor arithmetic.

Every kernel works on 2-D coefficient blocks of shape ``(batch, ncoef)``.  Two
implementations exist: numba ``@njit`` loops, and a pure-numpy path that
vectorises over the pair table.  ``FINSLERKIT_BACKEND=numpy`` (or a missing
numba) selects the numpy path; the default is numba.

Recursions (division, sqrt, log, exp) are solved coefficient by coefficient in
graded order.  For ``k`` of degree ``d`` every term on the right-hand side only
involves coefficients of degree ``< d``, so numpy can process one whole degree
block per step.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_requested = os.environ.get("FINSLERKIT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"FINSLERKIT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and numba is not None) else "numpy"


# ---------------------------------------------------------------- numpy path


def _scatter(k_idx, prod, ncoef):
    batch = prod.shape[0]
    flat = (np.arange(batch)[:, None] * ncoef + k_idx[None, :]).ravel()
    out = np.bincount(flat, weights=prod.ravel(), minlength=batch * ncoef)
    return out.reshape(batch, ncoef)


def np_mul(a, b, tab):
    if a.shape[0] == 0:
        return np.zeros_like(a)
    prod = a[:, tab.pair_i] * b[:, tab.pair_j]
    return _scatter(tab.pair_k, prod, tab.ncoef)


def _degree_blocks(tab):
    for d in range(1, tab.max_degree + 1):
        lo, hi = tab.offsets[d], tab.offsets[d + 1]
        yield lo, hi, slice(tab.pair_ptr[lo], tab.pair_ptr[hi])


def _block_sum(tab, lo, hi, sel, weight_i, left, right, mask):
    pi = tab.pair_i[sel][mask]
    pj = tab.pair_j[sel][mask]
    pk = tab.pair_k[sel][mask] - lo
    prod = left[:, pi] * right[:, pj]
    if weight_i is not None:
        prod = prod * weight_i[pi]
    return _scatter(pk, prod, hi - lo)


def np_div(a, b, tab):
    c = np.zeros_like(a)
    b0 = b[:, :1]
    c[:, :1] = a[:, :1] / b0
    for lo, hi, sel in _degree_blocks(tab):
        mask = tab.pair_i[sel] != 0
        s = _block_sum(tab, lo, hi, sel, None, b, c, mask)
        c[:, lo:hi] = (a[:, lo:hi] - s) / b0
    return c


def np_sqrt(a, tab):
    u = np.zeros_like(a)
    u[:, :1] = np.sqrt(a[:, :1])
    two_u0 = 2.0 * u[:, :1]
    for lo, hi, sel in _degree_blocks(tab):
        mask = (tab.pair_i[sel] != 0) & (tab.pair_j[sel] != 0)
        s = _block_sum(tab, lo, hi, sel, None, u, u, mask)
        u[:, lo:hi] = (a[:, lo:hi] - s) / two_u0
    return u


def np_log(a, tab):
    u = np.zeros_like(a)
    a0 = a[:, :1]
    u[:, :1] = np.log(a0)
    deg = tab.degree.astype(float)
    for lo, hi, sel in _degree_blocks(tab):
        mask = tab.pair_j[sel] != 0
        s = _block_sum(tab, lo, hi, sel, deg, u, a, mask)
        dk = deg[lo:hi]
        u[:, lo:hi] = (dk * a[:, lo:hi] - s) / (dk * a0)
    return u


def np_exp(a, tab):
    u = np.zeros_like(a)
    u[:, :1] = np.exp(a[:, :1])
    deg = tab.degree.astype(float)
    for lo, hi, sel in _degree_blocks(tab):
        mask = tab.pair_i[sel] != 0
        s = _block_sum(tab, lo, hi, sel, deg, a, u, mask)
        u[:, lo:hi] = s / deg[lo:hi]
    return u


# ---------------------------------------------------------------- numba path

if numba is not None:

    @numba.njit(cache=True)
    def _nb_mul(a, b, pi, pj, pk):
        batch, ncoef = a.shape
        out = np.zeros((batch, ncoef))
        for r in range(batch):
            for p in range(pi.size):
                out[r, pk[p]] += a[r, pi[p]] * b[r, pj[p]]
        return out

    @numba.njit(cache=True)
    def _nb_div(a, b, pi, pj, ptr):
        batch, ncoef = a.shape
        c = np.zeros((batch, ncoef))
        for r in range(batch):
            b0 = b[r, 0]
            for k in range(ncoef):
                s = a[r, k]
                for p in range(ptr[k], ptr[k + 1]):
                    if pi[p] != 0:
                        s -= b[r, pi[p]] * c[r, pj[p]]
                c[r, k] = s / b0
        return c

    @numba.njit(cache=True)
    def _nb_sqrt(a, pi, pj, ptr):
        batch, ncoef = a.shape
        u = np.zeros((batch, ncoef))
        for r in range(batch):
            u0 = np.sqrt(a[r, 0])
            u[r, 0] = u0
            for k in range(1, ncoef):
                s = a[r, k]
                for p in range(ptr[k], ptr[k + 1]):
                    if pi[p] != 0 and pj[p] != 0:
                        s -= u[r, pi[p]] * u[r, pj[p]]
                u[r, k] = s / (2.0 * u0)
        return u

    @numba.njit(cache=True)
    def _nb_log(a, pi, pj, ptr, deg):
        batch, ncoef = a.shape
        u = np.zeros((batch, ncoef))
        for r in range(batch):
            a0 = a[r, 0]
            u[r, 0] = np.log(a0)
            for k in range(1, ncoef):
                s = deg[k] * a[r, k]
                for p in range(ptr[k], ptr[k + 1]):
                    if pj[p] != 0:
                        s -= deg[pi[p]] * u[r, pi[p]] * a[r, pj[p]]
                u[r, k] = s / (deg[k] * a0)
        return u

    @numba.njit(cache=True)
    def _nb_exp(a, pi, pj, ptr, deg):
        batch, ncoef = a.shape
        u = np.zeros((batch, ncoef))
        for r in range(batch):
            u[r, 0] = np.exp(a[r, 0])
            for k in range(1, ncoef):
                s = 0.0
                for p in range(ptr[k], ptr[k + 1]):
                    if pi[p] != 0:
                        s += deg[pi[p]] * a[r, pi[p]] * u[r, pj[p]]
                u[r, k] = s / deg[k]
        return u


def nb_mul(a, b, tab):
    return _nb_mul(a, b, tab.pair_i, tab.pair_j, tab.pair_k)


def nb_div(a, b, tab):
    return _nb_div(a, b, tab.pair_i, tab.pair_j, tab.pair_ptr)


def nb_sqrt(a, tab):
    return _nb_sqrt(a, tab.pair_i, tab.pair_j, tab.pair_ptr)


def nb_log(a, tab):
    return _nb_log(a, tab.pair_i, tab.pair_j, tab.pair_ptr, tab.degree.astype(float))


def nb_exp(a, tab):
    return _nb_exp(a, tab.pair_i, tab.pair_j, tab.pair_ptr, tab.degree.astype(float))


NUMPY_KERNELS = {"mul": np_mul, "div": np_div, "sqrt": np_sqrt, "log": np_log, "exp": np_exp}
NUMBA_KERNELS = (
    {"mul": nb_mul, "div": nb_div, "sqrt": nb_sqrt, "log": nb_log, "exp": nb_exp}
    if numba is not None
    else None
)

KERNELS = dict(NUMBA_KERNELS if BACKEND == "numba" else NUMPY_KERNELS)


def use_backend(name):
    """Switch the active kernel set at runtime ("numba" or "numpy")."""
    global BACKEND
    if name == "numba":
        if NUMBA_KERNELS is None:
            raise RuntimeError("numba is not installed")
        KERNELS.update(NUMBA_KERNELS)
    elif name == "numpy":
        KERNELS.update(NUMPY_KERNELS)
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
