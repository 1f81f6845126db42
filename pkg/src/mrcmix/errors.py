"""Exception hierarchy shared by the analytic, stochastic and CLI layers."""


class MRCError(Exception):
    """Base class for all errors raised by mrcmix."""


class DomainError(MRCError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class IntegrationError(MRCError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance.

    Attributes
    ----------
    achieved : float
        Error estimate of the last attempt.
    requested : float
        Tolerance that was asked for.
    """

    def __init__(self, message, achieved, requested):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class DegenerateInputError(MRCError, ValueError):
    """The tuning equation is identically zero, so q cannot be identified."""


class NoBracketError(MRCError, ArithmeticError):
    """The tuning function has no sign change on [0, 1]."""

    def __init__(self, f0, f1):
        super().__init__(f"no sign change on [0, 1]: f(0)={f0:.6e}, f(1)={f1:.6e}")
        self.f0 = f0
        self.f1 = f1


class InsufficientDataError(MRCError, RuntimeError):
    """Too few usable Monte Carlo trials remain for a statistic."""
