"""Truncated multivariate Taylor polynomials ("jets") with batched coefficients.

A :class:`Jet` stores the Taylor coefficients of a scalar function of
``num_vars`` variables about an expansion point, for every monomial of total
degree ``<= max_degree``.  Coefficient arrays carry arbitrary leading batch
dimensions so that one jet can represent the same expression expanded about
many points at once.

Jets of different degree may be mixed: the result is truncated to the lower
degree, which is the only degree at which it is known.
"""

import numpy as np

from finslerkit.errors import JetDomainError, JetError
from finslerkit.jets import _kernels
from finslerkit.jets._tables import get_table, num_coeffs

DEFAULT_DEGREE = 5


class Jet:
    """Truncated Taylor expansion of a scalar function.

    Parameters
    ----------
    coeffs : array_like, shape (..., ncoef)
        Coefficients in graded lexicographic monomial order.
    num_vars : int
    max_degree : int
    """

    __slots__ = ("coeffs", "num_vars", "max_degree")
    __array_ufunc__ = None

    def __init__(self, coeffs, num_vars, max_degree):
        coeffs = np.asarray(coeffs, dtype=float)
        expected = num_coeffs(num_vars, max_degree)
        if coeffs.shape[-1:] != (expected,):
            raise JetError(
                f"coefficient array has trailing size {coeffs.shape[-1:]}, "
                f"expected {expected} for {num_vars} variables at degree {max_degree}"
            )
        self.coeffs = coeffs
        self.num_vars = num_vars
        self.max_degree = max_degree

    # -- construction ------------------------------------------------------

    @classmethod
    def constant(cls, value, num_vars, max_degree):
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (num_coeffs(num_vars, max_degree),))
        coeffs[..., 0] = value
        return cls(coeffs, num_vars, max_degree)

    @property
    def table(self):
        return get_table(self.num_vars, self.max_degree)

    @property
    def batch_shape(self):
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        """Degree-0 coefficient: the function value at the expansion point."""
        return self.coeffs[..., 0]

    def coefficient(self, multi_index):
        return self.coeffs[..., self.table.index_of(multi_index)]

    def partial(self, multi_index):
        """Mixed partial derivative at the expansion point."""
        tab = self.table
        k = tab.index_of(multi_index)
        return self.coeffs[..., k] * tab.factorials[k]

    def as_dict(self, tol=0.0):
        """Nonzero coefficients keyed by exponent tuple (unbatched jets only)."""
        if self.batch_shape:
            raise JetError("as_dict needs an unbatched jet")
        tab = self.table
        return {
            tuple(int(e) for e in tab.exps[k]): float(c)
            for k, c in enumerate(self.coeffs)
            if abs(c) > tol
        }

    def truncate(self, degree):
        if degree > self.max_degree:
            raise JetError(f"cannot raise degree {self.max_degree} to {degree}")
        if degree == self.max_degree:
            return self
        if degree < 0:
            raise JetError("degree must be non-negative")
        n = num_coeffs(self.num_vars, degree)
        return Jet(self.coeffs[..., :n], self.num_vars, degree)

    def deriv(self, var):
        """Jet of d/dz_var, one degree lower."""
        if not 0 <= var < self.num_vars:
            raise JetError(f"variable index {var} out of range [0, {self.num_vars})")
        if self.max_degree < 1:
            raise JetError("cannot differentiate a degree-0 jet")
        src, mult = self.table.deriv_map(var)
        return Jet(self.coeffs[..., src] * mult, self.num_vars, self.max_degree - 1)

    def __repr__(self):
        return (
            f"Jet(num_vars={self.num_vars}, max_degree={self.max_degree}, "
            f"batch={self.batch_shape}, value={self.value})"
        )

    # -- arithmetic --------------------------------------------------------

    def _align(self, other):
        """Return coefficient blocks of self and other at a common degree/batch."""
        if isinstance(other, Jet):
            if other.num_vars != self.num_vars:
                raise JetError(
                    f"mismatched jets: {self.num_vars} vs {other.num_vars} variables"
                )
            d = min(self.max_degree, other.max_degree)
            a, b = self.truncate(d).coeffs, other.truncate(d).coeffs
            shape = np.broadcast_shapes(a.shape, b.shape)
            return np.broadcast_to(a, shape), np.broadcast_to(b, shape), d
        raise TypeError

    def _scalar(self, other):
        return np.asarray(other, dtype=float)

    def __neg__(self):
        return Jet(-self.coeffs, self.num_vars, self.max_degree)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, d = self._align(other)
            return Jet(a + b, self.num_vars, d)
        other = self._scalar(other)
        coeffs = np.broadcast_to(
            self.coeffs, np.broadcast_shapes(self.coeffs.shape[:-1], other.shape) + self.coeffs.shape[-1:]
        ).copy()
        coeffs[..., 0] += other
        return Jet(coeffs, self.num_vars, self.max_degree)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, d = self._align(other)
            return _binary("mul", a, b, self.num_vars, d)
        other = self._scalar(other)
        return Jet(self.coeffs * other[..., None], self.num_vars, self.max_degree)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            if np.any(other.value == 0):
                raise JetDomainError("division by a jet with vanishing constant term")
            a, b, d = self._align(other)
            return _binary("div", a, b, self.num_vars, d)
        other = self._scalar(other)
        return Jet(self.coeffs / other[..., None], self.num_vars, self.max_degree)

    def __rtruediv__(self, other):
        one = Jet.constant(other, self.num_vars, self.max_degree)
        return one / self

    def __pow__(self, k):
        return pow_int(self, k)


def _binary(name, a, b, num_vars, degree):
    tab = get_table(num_vars, degree)
    batch = a.shape[:-1]
    a2 = np.ascontiguousarray(a.reshape(-1, tab.ncoef))
    b2 = np.ascontiguousarray(b.reshape(-1, tab.ncoef))
    out = _kernels.KERNELS[name](a2, b2, tab)
    return Jet(out.reshape(batch + (tab.ncoef,)), num_vars, degree)


def _unary(name, a):
    tab = a.table
    batch = a.batch_shape
    a2 = np.ascontiguousarray(a.coeffs.reshape(-1, tab.ncoef))
    out = _kernels.KERNELS[name](a2, tab)
    return Jet(out.reshape(batch + (tab.ncoef,)), a.num_vars, a.max_degree)


# ---------------------------------------------------------------- public API


def make_variable(var_index, value, num_vars, max_degree=DEFAULT_DEGREE):
    """Seed variable ``var_index`` at ``value``: value + 1*dz_var."""
    if max_degree < 1:
        raise JetError(f"max_degree must be >= 1, got {max_degree}")
    if not 0 <= var_index < num_vars:
        raise JetError(f"var_index {var_index} out of range [0, {num_vars})")
    jet = Jet.constant(value, num_vars, max_degree)
    jet.coeffs[..., 1 + var_index] = 1.0
    return jet


def arithmetic(a, b, op):
    """Binary jet arithmetic by name: one of add, sub, mul, div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def sqrt(a):
    if not isinstance(a, Jet):
        return np.sqrt(a)
    if np.any(a.value <= 0):
        raise JetDomainError("sqrt of a jet with non-positive constant term")
    return _unary("sqrt", a)


def log(a):
    if not isinstance(a, Jet):
        return np.log(a)
    if np.any(a.value <= 0):
        raise JetDomainError("log of a jet with non-positive constant term")
    return _unary("log", a)


def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    return _unary("exp", a)


def pow_int(a, k):
    """Integer power by repeated squaring; negative k goes through 1/a."""
    k = int(k)
    if not isinstance(a, Jet):
        return np.asarray(a, dtype=float) ** k
    if k < 0:
        return pow_int(1.0 / a, -k)
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    if result is None:
        return Jet.constant(np.ones(a.batch_shape), a.num_vars, a.max_degree)
    return result


def elementary(a, fn, k=None):
    """Apply ``fn`` in {"sqrt", "ln", "log", "exp", "pow_int"} to a jet."""
    if fn == "sqrt":
        return sqrt(a)
    if fn in ("ln", "log"):
        return log(a)
    if fn == "exp":
        return exp(a)
    if fn == "pow_int":
        if k is None:
            raise ValueError("pow_int needs an exponent k")
        return pow_int(a, k)
    raise ValueError(f"unknown elementary function {fn!r}")


def partial(a, multi_index):
    return a.partial(multi_index)


def value_of(a):
    """Plain value of a jet or passthrough for numbers/arrays."""
    return a.value if isinstance(a, Jet) else np.asarray(a, dtype=float)
