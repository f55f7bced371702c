"""Fixed-step RK4 integration of geodesics and a straightness measure."""

import numpy as np

from finslerkit.errors import DegenerateMetric, DomainExit, FinslerError, JetError
from finslerkit.geometry import ChartPoint, SprayJets, values


def spray_values(spray, x, y):
    """Plain values of G^i at (x, y); any batch shape."""
    sj = SprayJets(spray, ChartPoint(x, y), extra=0)
    return values(sj.G)


def geodesic_integrate(spray, x0, y0, dt, steps, inside=None):
    """Integrate x'' + 2 G(x, x') = 0 with classical fourth-order Runge-Kutta.

    Parameters
    ----------
    spray : Spray
    x0, y0 : array_like, shape (n,) or (m, n)
        Initial positions and velocities; a batch of ``m`` initial
        conditions is integrated in lockstep.
    dt : float
    steps : int
    inside : callable, optional
        Predicate on positions; returning False aborts the integration.

    Returns
    -------
    ndarray, shape (steps + 1, n) or (steps + 1, m, n)
        Positions along the path(s), starting with ``x0``.

    Raises
    ------
    DomainExit
        If a stage leaves the domain or produces non-finite values.  The
        exception carries the index of the last valid path point.
    """
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    if x.shape != y.shape or x.ndim not in (1, 2):
        raise ValueError("x0 and y0 must be vectors (or stacks of vectors) of equal shape")
    if steps < 1 or dt <= 0:
        raise ValueError("need steps >= 1 and dt > 0")
    path = np.empty((steps + 1,) + x.shape)
    path[0] = x

    def rhs(xs, ys):
        if inside is not None and not np.all(inside(xs)):
            raise DomainExit("geodesic left the validity domain", last_valid_index=i)
        try:
            acc = -2.0 * spray_values(spray, xs, ys)
        except (JetError, DegenerateMetric, ValueError) as exc:
            raise DomainExit(f"spray evaluation failed: {exc}", last_valid_index=i) from exc
        if not np.all(np.isfinite(acc)):
            raise DomainExit("non-finite spray coefficients", last_valid_index=i)
        return ys, acc

    for i in range(steps):
        k1x, k1y = rhs(x, y)
        k2x, k2y = rhs(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
        k3x, k3y = rhs(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
        k4x, k4y = rhs(x + dt * k3x, y + dt * k3y)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        if inside is not None and not np.all(inside(x)):
            raise DomainExit("geodesic left the validity domain", last_valid_index=i)
        path[i + 1] = x
    return path


def straightness_residual(path, direction=None):
    """Max distance of path points to the line through ``path[0]``.

    The line is directed along ``direction`` (the initial velocity) when
    given, otherwise along ``path[1] - path[0]``.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[0] < 3:
        raise FinslerError("straightness needs at least three path points")
    d = path[1] - path[0] if direction is None else np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise FinslerError("degenerate path: zero initial direction")
    d = d / norm
    rel = path - path[0]
    perp = rel - np.outer(rel @ d, d)
    return float(np.linalg.norm(perp, axis=1).max())
