"""Channel, geometry, correlation and threshold data model.

Distances are in wavelengths throughout. Angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class ChannelParams:
    """Ricean link description.

    ``gain_ratio`` is the product beta*E_s/sigma^2; only this ratio enters
    the SNR so the three quantities are not stored separately.
    """

    kappa: float
    phi: float = 0.0
    theta: float = math.pi / 2
    gain_ratio: float = 1.0

    def __post_init__(self):
        if not (self.kappa >= 0.0) or math.isinf(self.kappa):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa}")
        if not (self.gain_ratio > 0.0) or math.isinf(self.gain_ratio):
            raise DomainError(f"gain_ratio must be finite and > 0, got {self.gain_ratio}")
        if not (0.0 <= self.phi <= math.pi / 2 + 1e-12):
            raise DomainError(f"phi must lie in [0, pi/2], got {self.phi}")
        if not (0.0 <= self.theta <= math.pi + 1e-12):
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")

    @property
    def noncentrality(self) -> float:
        return 2.0 * self.kappa


@dataclass(frozen=True)
class Geometry:
    """Box-shaped antenna region with 0 to 3 side lengths."""

    sides: tuple[float, ...] = ()

    def __post_init__(self):
        sides = tuple(float(t) for t in self.sides)
        if len(sides) > 3:
            raise DomainError(f"at most 3 side lengths are supported, got {len(sides)}")
        for t in sides:
            if not (t >= 0.0) or math.isinf(t):
                raise DomainError(f"side lengths must be finite and >= 0, got {t}")
        object.__setattr__(self, "sides", sides)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @classmethod
    def cube(cls, dim: int, side: float) -> "Geometry":
        return cls((side,) * dim)


@dataclass(frozen=True)
class CorrelationModel:
    """Isotropic spatial correlation rho(tau) ~ 1 - a*tau^2 near the origin.

    ``family`` is ``"jakes"`` for rho = J0(2*pi*tau), which fixes a = pi^2, or
    ``"quadratic"`` for the Gaussian kernel rho = exp(-a*tau^2) that shares
    the same small-lag curvature.
    """

    family: str = "jakes"
    a: float = field(default=math.pi**2)

    def __post_init__(self):
        if self.family not in ("jakes", "quadratic"):
            raise DomainError(f"unknown correlation family {self.family!r}")
        if self.family == "jakes" and self.a != math.pi**2:
            raise DomainError("the Jakes family has a fixed curvature a = pi^2")
        if not (self.a > 0.0) or math.isinf(self.a):
            raise DomainError(f"curvature coefficient must be > 0, got {self.a}")

    @property
    def lambda2(self) -> float:
        """Variance of the spatial derivative of the normalized field."""
        return 2.0 * self.a

    @classmethod
    def jakes(cls) -> "CorrelationModel":
        return cls("jakes", math.pi**2)

    @classmethod
    def quadratic(cls, a: float) -> "CorrelationModel":
        return cls("quadratic", a)


JAKES = CorrelationModel.jakes()


@dataclass(frozen=True)
class ThresholdSpec:
    """Raw linear SNR threshold ``u`` and its noncentral-chi-square scale ``x``."""

    u: float
    x: float
