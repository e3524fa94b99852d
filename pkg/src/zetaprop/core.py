"""Physical parameters, derived frequencies and shared error types.

Natural units (m = q = hbar = 1) are the defaults, but every formula keeps the
symbols explicit so SI inputs work unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

# a frequency counts as zero when |omega| * T falls below this
ZERO_FREQ = 1e-12


class PropagatorError(Exception):
    """Base class for all errors raised by this package."""


class CausticError(PropagatorError):
    """The boundary-value problem is degenerate (the amplitude diverges)."""


class DegenerateFrequencies(PropagatorError):
    """omega_+ == omega_-; the partial-fraction mode sum is 0/0."""


class SingularPhase(PropagatorError):
    pass


class DomainError(PropagatorError):
    """Parameter combination outside the supported regimes."""


class UnsupportedRegime(PropagatorError):
    pass


class DegenerateBoundary(PropagatorError):
    pass


class QuadratureNotConverged(PropagatorError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    """Charged particle in an anisotropic planar trap with B along z and E in plane."""

    m: float = 1.0
    q: float = 1.0
    B: float = 0.0
    Ex: float = 0.0
    Ey: float = 0.0
    omega_x: float = 0.0
    omega_y: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "q", "B", "Ex", "Ey", "omega_x", "omega_y", "hbar"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.m <= 0:
            raise ValueError("m must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.omega_x < 0 or self.omega_y < 0:
            raise ValueError("trap frequencies must be non-negative")

    @property
    def omega_L(self) -> float:
        return self.q * self.B / (2.0 * self.m)

    @property
    def omega_c(self) -> float:
        return 2.0 * self.omega_L

    @property
    def has_field(self) -> bool:
        return self.Ex != 0.0 or self.Ey != 0.0

    def replace(self, **changes) -> "PhysicalParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class FrequencySet:
    omega_L: float
    omega_c: float
    Omega_plus: float
    Omega_minus: float
    obar_plus: float
    obar_minus: float
    omega_x: float
    omega_y: float
    k_plus: Optional[float] = None
    k_minus: Optional[float] = None
    omega_eff: Optional[float] = None

    @property
    def isotropic(self) -> bool:
        return self.omega_eff is not None


@dataclass(frozen=True)
class Endpoints:
    x0: float
    y0: float
    x1: float
    y1: float
    T: float

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def scale(self) -> float:
        """Length scale used for relative tolerances (never below 1)."""
        return max(1.0, abs(self.x0), abs(self.y0), abs(self.x1), abs(self.y1))

    def swapped(self) -> "Endpoints":
        return Endpoints(self.x1, self.y1, self.x0, self.y0, self.T)


def derive_frequencies(p: PhysicalParams) -> FrequencySet:
    wx, wy = p.omega_x, p.omega_y
    wL = p.omega_L
    wc = p.omega_c
    Op = math.hypot(wc, wx + wy)
    Om = math.hypot(wc, wx - wy)
    ob_plus = (Op + Om) / 2
    # Op - Om cancels badly when one trap frequency is tiny; use the product form
    ob_minus = 2.0 * wx * wy / (Op + Om) if Op + Om > 0 else 0.0
    k_plus = k_minus = None
    if wc != 0.0:
        k_plus = (wx * wx - ob_plus * ob_plus) / wc
        k_minus = (wx * wx - ob_minus * ob_minus) / wc
    return FrequencySet(
        omega_L=wL,
        omega_c=wc,
        Omega_plus=Op,
        Omega_minus=Om,
        obar_plus=ob_plus,
        obar_minus=ob_minus,
        omega_x=wx,
        omega_y=wy,
        k_plus=k_plus,
        k_minus=k_minus,
        omega_eff=math.hypot(wL, wx) if wx == wy else None,
    )


def dimensionless_mode_frequencies(f: FrequencySet, T: float) -> Tuple[float, float]:
    """Scale the normal-mode frequencies by T / 2pi."""
    if T <= 0:
        raise ValueError("T must be positive")
    r = T / (2.0 * math.pi)
    return f.obar_plus * r, f.obar_minus * r


def is_zero_freq(w: float, T: float) -> bool:
    return abs(w) * T < ZERO_FREQ
