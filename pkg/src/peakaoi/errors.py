"""Exception hierarchy shared by the bound, solver and simulation layers."""


class PeakAoIError(Exception):
    """Base class for all package errors."""


class UnstableModel(PeakAoIError, ValueError):
    """Utilization is not strictly below one (or the stability ordering fails)."""


class NotAbsolutelyContinuous(PeakAoIError, ValueError):
    """A density was requested from a distribution with an atom."""


class NoPositiveTheta(PeakAoIError, RuntimeError):
    """No decay rate in (0, theta_max) satisfies the MGF kernel condition."""


class InfeasibleTheta(PeakAoIError, ValueError):
    """A supplied decay rate violates the kernel condition E[e^{tZ}]E[e^{-tY}] <= 1."""


class SingularTheta(PeakAoIError, ValueError):
    """Decay rate sits on the service MGF boundary, where the closed form has a pole."""


class QuadratureFailure(PeakAoIError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance within budget."""
