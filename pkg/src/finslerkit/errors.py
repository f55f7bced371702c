"""Exception hierarchy shared by every finslerkit module."""


class FinslerError(Exception):
    """Base class for all errors raised by finslerkit."""


class JetError(FinslerError, ValueError):
    """Invalid jet construction or arithmetic (shape mismatch, bad index)."""


class JetDomainError(JetError):
    """An elementary function was applied outside its domain."""


class DegenerateMetric(FinslerError, ArithmeticError):
    """The fiber Hessian of F^2 is singular or not positive definite."""


class NonIsotropic(FinslerError):
    """The Jacobi endomorphism is not of the form rho*J - alpha (x) C."""


class NotLinear(FinslerError):
    """A field expected to be linear in the fiber coordinates is not."""


class NotRiemannian(FinslerError):
    """The metric tensor depends on the fiber coordinates."""


class NotLinearFactor(FinslerError):
    """The projective factor of a Riemannian metric is not linear in y."""


class NotHamel(FinslerError):
    """The projective factor does not satisfy the Euler-Lagrange equation."""


class DomainExit(FinslerError):
    """A geodesic left the validity domain of its metric."""

    def __init__(self, message, last_valid_index):
        super().__init__(message)
        self.last_valid_index = last_valid_index


class InvalidParams(FinslerError, ValueError):
    """Metric parameters violate a family constraint."""


class PositivityViolated(FinslerError):
    """A constructed Finsler function is not positive on the sampled domain."""


class RejectionOverflow(FinslerError):
    """The domain sampler rejected too many candidate points."""
