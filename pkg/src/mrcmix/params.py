"""Parameter containers shared by the analytic and Monte Carlo layers."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class SystemParams:
    """Poisson dipole network seen by the typical receiver.

    Attributes
    ----------
    lam : float
        Transmitter intensity per m^2.
    p : float
        ALOHA transmit probability.
    alpha : float
        Path-loss exponent, must exceed 2.
    d : float
        Serving-link distance in m.
    epsilon : float
        Path-loss regulariser ``1/(epsilon + r^alpha)``. The analytic formulas
        assume 0; the simulator honours it.
    """

    lam: float = 1e-4
    p: float = 1.0
    alpha: float = 4.0
    d: float = 10.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"intensity must be nonnegative, got lam={self.lam}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"ALOHA probability must lie in [0, 1], got p={self.p}")
        if not self.alpha > 2:
            raise DomainError(f"path-loss exponent must exceed 2, got alpha={self.alpha}")
        if not self.d > 0:
            raise DomainError(f"link distance must be positive, got d={self.d}")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def lambda_p(self):
        """Intensity of active interferers."""
        return self.lam * self.p

    @classmethod
    def from_intensity(cls, lambda_p, alpha=4.0, d=10.0, epsilon=0.0):
        return cls(lam=lambda_p, p=1.0, alpha=alpha, d=d, epsilon=epsilon)


@dataclass(frozen=True)
class MixtureConfig:
    """Antenna count ``N`` and mixture weight ``q`` (pairwise correlation ``q^2``)."""

    N: int
    q: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"antenna count must be a positive integer, got N={self.N}")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"mixture weight must lie in [0, 1], got q={self.q}")

    @property
    def correlation(self):
        return self.q**2
