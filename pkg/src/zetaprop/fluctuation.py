"""Fluctuation amplitude from the Fourier-mode quadratic form.

The amplitude is the path integral over closed loops eta(0) = eta(T) = 0.
Two routes are provided:

* ``amplitude`` -- the closed form in Omega_+/- (evaluated through the
  Jacobi-determinant factors ``g_minus``/``g_plus`` so that the limits
  omega_x -> 0, omega_y -> 0, B -> 0 are removable rather than 0/0), with the
  square-root branch fixed by the number of conjugate points on (0, T);
* ``amplitude_from_modes`` -- the mode-product chain
  Pi_1 (zeta-regularised) x (1 - 2 A_y D_x)^(-1/2) x (1 - 2 A_x D_y)^(-1/2),
  each factor on its principal branch.

The electric field only enters through the real phase P (``field_phase``).
hbar * P equals the classical action of the loop that starts and ends at the
origin, so ``ComplexAmplitude.total`` is the full kernel K(0, T; 0, 0).
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from .core import (
    CausticError,
    DegenerateFrequencies,
    FrequencySet,
    PhysicalParams,
    SingularPhase,
    derive_frequencies,
    dimensionless_mode_frequencies,
    is_zero_freq,
)

logger = logging.getLogger(__name__)

# log(zeta) constants used by the regularised product
ZETA_0 = -0.5
ZETA_PRIME_0 = -0.5 * math.log(2.0 * math.pi)

CAUSTIC_TOL = 1e-12
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class ModeSumParams:
    alpha: float
    beta: float
    lam: float
    delta: float
    a: float
    b: float
    A_x: float
    A_y: float
    B_sum: float
    C_sum: float
    T: float


def mode_sum_params(p: PhysicalParams, T: float) -> ModeSumParams:
    if T <= 0:
        raise ValueError("T must be positive")
    m, hb = p.m, p.hbar
    wx2, wy2 = p.omega_x**2, p.omega_y**2
    r2 = (T / (2 * math.pi)) ** 2
    A_x = r2 * wy2
    A_y = r2 * wx2
    return ModeSumParams(
        alpha=2 * m * math.pi**2 / (hb * T),
        beta=2 * m * math.pi * p.omega_L / hb,
        lam=m * T * (wy2 + wx2) / (4 * hb),
        delta=m * T * (wy2 - wx2) / (8 * hb),
        a=p.q * T * p.Ex / hb,
        b=p.q * T * p.Ey / hb,
        A_x=A_x,
        A_y=A_y,
        B_sum=r2 * (4 * p.omega_L**2 + wx2 + wy2),
        C_sum=A_x * A_y,
        T=T,
    )


@dataclass(frozen=True)
class ComplexAmplitude:
    """Fluctuation prefactor of the kernel.

    ``value`` is independent of the electric field (it is the quantity the
    Gelfand-Yaglom and Van Vleck constructions produce); ``field_phase`` is P.
    """

    value: complex
    branch_phase_windings: int
    field_phase: float = 0.0
    branch: str = "general"

    @property
    def total(self) -> complex:
        """value * exp(iP), the loop kernel K(0, T; 0, 0)."""
        return self.value * cmath.exp(1j * self.field_phase)


def mode_determinant(msp: ModeSumParams, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return (msp.alpha * n * n - msp.lam) ** 2 - msp.beta**2 * n * n - 4 * msp.delta**2


def zeta_regularized_gaussian_product(alpha: float) -> complex:
    """Regularised value of prod_{n>=1} i pi / (alpha n^2), i.e. sqrt(alpha / (i pi)) / 2pi."""
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise ValueError("alpha must be a finite positive real")
    return cmath.sqrt(alpha / (1j * math.pi)) / (2 * math.pi)


def zeta_regularized_log_product(alpha: float) -> complex:
    """Same product built from zeta(0) and zeta'(0) in log form."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return ZETA_0 * cmath.log(1j * math.pi / alpha) + 2 * ZETA_PRIME_0


def product_pi1(msp: ModeSumParams, omega_plus: float, omega_minus: float) -> complex:
    for w in (omega_plus, omega_minus):
        if w != 0.0 and abs(math.sin(math.pi * w)) < CAUSTIC_TOL:
            raise CausticError(f"sin(pi * {w}) vanishes")
    # pi w / sin(pi w) -> 1 as w -> 0 is built into np.sinc
    sq = msp.alpha / (4j * math.pi**3 * float(np.sinc(omega_plus)) * float(np.sinc(omega_minus)))
    return cmath.sqrt(sq)


@lru_cache(maxsize=1)
def _zeta_even(kmax: int = 16) -> np.ndarray:
    return np.array([zeta(2 * k + 2) for k in range(kmax)])


def basel_kernel(w: float) -> float:
    """sum_{n>=1} 1/(n^2 - w^2) = 1/(2w^2) - pi cot(pi w)/(2w), stable at w -> 0."""
    w = abs(w)
    if w < 0.25:
        return float(np.polyval(_zeta_even()[::-1], w * w))
    s = math.sin(math.pi * w)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"mode sum pole at integer frequency {w}")
    return 0.5 / (w * w) - math.pi * math.cos(math.pi * w) / (2 * w * s)


def mode_sum_D(msp: ModeSumParams, which: str, omega_plus: float, omega_minus: float) -> float:
    """Closed form of sum_{n>=1} (n^2 - A)/(n^4 - B n^2 + C).

    ``which`` = "x" uses A_x, "y" uses A_y.  This is the partial-fraction
    result regrouped as [(w+^2 - A) f(w+) + (A - w-^2) f(w-)] / (w+^2 - w-^2)
    with f = ``basel_kernel``; the 1/w^2 poles of the printed form cancel
    analytically, so small omega_- costs no precision.
    """
    A = _pick_A(msp, which)
    gap = omega_plus**2 - omega_minus**2
    if abs(gap) < DEGENERATE_TOL:
        raise DegenerateFrequencies(f"omega_+^2 - omega_-^2 = {gap:.3e}")
    fp = basel_kernel(omega_plus)
    fm = basel_kernel(omega_minus)
    return fm + (omega_plus**2 - A) / gap * (fp - fm)


def landau_mode_sum(omega_L: float, T: float) -> float:
    """D_x = D_y in the trap-free limit: (pi/(w_L T))^2 (1 - w_L T cot w_L T) / 2."""
    x = abs(omega_L) * T
    if x < 1e-4:
        return math.pi**2 * (1 / 6 + x * x / 90 + x**4 / 945)
    s = math.sin(x)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"w_L T = {x} is a multiple of pi")
    return 0.5 * (math.pi / x) ** 2 * (1 - x * math.cos(x) / s)


def mode_sum_D_printed(A: float, omega_plus: float, omega_minus: float) -> float:
    """Partial-fraction form exactly as usually written (for cross-checks only)."""
    wp, wm = omega_plus, omega_minus
    cp = math.cos(math.pi * wp) / math.sin(math.pi * wp)
    cm = math.cos(math.pi * wm) / math.sin(math.pi * wm)
    d = wp * wp - wm * wm
    return (
        A / (2 * wp * wp * wm * wm)
        - math.pi * A * (wp * cm - wm * cp) / (2 * wp * wm * d)
        + math.pi * (wm * cm - wp * cp) / (2 * d)
    )


def _pick_A(msp: ModeSumParams, which: str) -> float:
    if which == "x":
        return msp.A_x
    if which == "y":
        return msp.A_y
    raise ValueError("which must be 'x' or 'y'")


def _field_term(amp2: float, D: float, A_other: float, alpha: float) -> float:
    if amp2 == 0.0:
        return 0.0
    if math.isinf(D):
        return amp2 / (4 * alpha * A_other)
    den = 1.0 - 2.0 * A_other * D
    if abs(den) < 1e-14 * (1.0 + abs(2.0 * A_other * D)):
        raise SingularPhase("1 - 2 A D vanishes")
    return -amp2 * D / (2 * alpha * den)


def phase_P(msp: ModeSumParams, D_x: float, D_y: float) -> float:
    """Electric-field phase P = P_x + P_y.

    Uses P_x = -a^2 D_x / (2 alpha (1 - 2 A_y D_x)), an exact rearrangement of
    a^2/(D_x u^2/(2 alpha) + u) - a^2/u with u = 8 Delta - 4 lambda = -4 alpha A_y
    that stays finite at u = 0; P_y follows with Delta -> -Delta, a -> b.
    The compact variant is evaluated as well and a disagreement is logged.
    """
    P = _field_term(msp.a**2, D_x, msp.A_y, msp.alpha) + _field_term(msp.b**2, D_y, msp.A_x, msp.alpha)
    if logger.isEnabledFor(logging.DEBUG):
        Pc = phase_P_compact(msp, D_x, D_y)
        if not math.isclose(P, Pc, rel_tol=1e-10, abs_tol=1e-14):
            logger.debug("compact phase disagrees: explicit=%r compact=%r", P, Pc)
    return P


def phase_P_explicit(msp: ModeSumParams, D_x: float, D_y: float) -> float:
    """The explicit P_x + P_y in their original two-term shape."""
    u = 8 * msp.delta - 4 * msp.lam
    v = 8 * msp.delta + 4 * msp.lam
    Px = Py = 0.0
    if msp.a != 0.0:
        if u == 0.0:
            raise SingularPhase("8 Delta - 4 lambda = 0 with E_x != 0")
        Px = msp.a**2 / (D_x / (2 * msp.alpha) * u * u + u) - msp.a**2 / u
    if msp.b != 0.0:
        if v == 0.0:
            raise SingularPhase("8 Delta + 4 lambda = 0 with E_y != 0")
        Py = msp.b**2 / (D_y / (2 * msp.alpha) * v * v - v) + msp.b**2 / v
    return Px + Py


def phase_P_compact(msp: ModeSumParams, D_x: float, D_y: float) -> float:
    """a^2/(4 alpha A_y) (1 - 1/(1 + 2 D_x)) + b^2/(4 alpha A_x) (1 - 1/(1 + 2 D_y))."""
    out = 0.0
    for amp2, A, D in ((msp.a**2, msp.A_y, D_x), (msp.b**2, msp.A_x, D_y)):
        if amp2 == 0.0:
            continue
        if A == 0.0:
            return math.nan
        out += amp2 / (4 * msp.alpha * A) * (1 - 1 / (1 + 2 * D))
    return out


# --- Jacobi determinant in closed form ---------------------------------------

def _sinc(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 - z * z / 6, np.sin(safe) / safe)


def _half_sine(Omega: float, t):
    """sin(Omega t / 2) / Omega, equal to t/2 at Omega = 0."""
    t = np.asarray(t, dtype=complex)
    return 0.5 * t * _sinc(0.5 * Omega * t)


def _half_sine_divdiff(Op: float, Om: float, t):
    """Divided difference (s(Op) - s(Om)) / (Op - Om) of s(Omega) = sin(Omega t/2)/Omega.

    sin(Op t/2) - sin(Om t/2) is rewritten as a product, which leaves
    [(t/2) cos((Op+Om) t/4) sinc((Op-Om) t/4) - s(Om)] / Op: no 0/0 at Op = Om
    and no cancellation in the difference.  Needs Op > 0.
    """
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    return (0.5 * t * np.cos(0.25 * (Op + Om) * t) * _sinc(0.25 * (Op - Om) * t) - _half_sine(Om, t)) / Op


def jacobi_factors(f: FrequencySet, t):
    """Return (g_minus, g_plus) with det F(t) = g_minus * g_plus.

    F is the Jacobi matrix (dx(t)/dv(0)); g_minus belongs to the x-amplitude,
    g_plus to the y-amplitude.  Both behave like t as t -> 0 and accept
    complex t.
    """
    Op, Om = f.Omega_plus, f.Omega_minus
    s = _half_sine(Op, t) + _half_sine(Om, t)
    if Op + Om == 0.0:
        return s, s
    dd = _half_sine_divdiff(Op, Om, t).reshape(np.shape(s))
    c = 4.0 * dd / (Op + Om)
    return s + f.omega_x**2 * c, s + f.omega_y**2 * c


def jacobi_determinant(f: FrequencySet, t):
    gm, gp = jacobi_factors(f, t)
    return gm * gp


def _contour(T: float, Omega_scale: float, density: int = 24):
    """Path 0 -> h(1-i) -> T - ih -> T in the lower half plane."""
    h = min(0.5 / Omega_scale, 0.25 * T) if Omega_scale > 0 else 0.25 * T
    corners = [1e-3 * h * (1 - 1j), h * (1 - 1j), T - 1j * h, complex(T)]
    pieces = []
    for a, b in zip(corners[:-1], corners[1:]):
        n = max(64, int(math.ceil(density * abs(b - a) / h)))
        pieces.append(a + (b - a) * np.linspace(0.0, 1.0, n, endpoint=False))
    pieces.append(np.array([corners[-1]]))
    return np.concatenate(pieces)


def unwrapped_phase_count(values: np.ndarray) -> int:
    """Number of half-turns accumulated by det along the contour.

    ``values`` start near t^2 on the 45-degree ray (argument -pi/2) and end on
    the real axis; the return value is the count of conjugate points on (0, T)
    with multiplicity.
    """
    ph = np.unwrap(np.angle(values))
    ph += -0.5 * math.pi - ph[0]  # values[0] ~ t0^2 with arg(t0) = -pi/4
    nu = int(round(ph[-1] / math.pi))
    if abs(ph[-1] - nu * math.pi) > 0.25:
        raise CausticError("endpoint too close to a conjugate point to fix the branch")
    return nu


def maslov_index(f: FrequencySet, T: float) -> int:
    """Conjugate points on (0, T), counted with multiplicity."""
    t = _contour(T, max(f.Omega_plus, f.omega_x, f.omega_y))
    return unwrapped_phase_count(jacobi_determinant(f, t))


def _regime(p: PhysicalParams, T: float) -> str:
    wx0, wy0 = is_zero_freq(p.omega_x, T), is_zero_freq(p.omega_y, T)
    b0 = is_zero_freq(p.omega_L, T)
    if wx0 and wy0:
        return "free" if b0 else "landau"
    if p.omega_x == p.omega_y:
        return "isotropic"
    if b0:
        return "decoupled"
    return "general"


def amplitude(p: PhysicalParams, T: float) -> ComplexAmplitude:
    """Fluctuation amplitude m/(2 pi i hbar) det F(T)^(-1/2) with Maslov branch.

    det F = [(wx+wy)^2 Om^2 sin^2(Op T/2) - (wx-wy)^2 Op^2 sin^2(Om T/2)]
            / (wx wy Op^2 Om^2)
    evaluated in factored form.  Each conjugate point on (0, T) multiplies the
    value by exp(-i pi/2).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    f = derive_frequencies(p)
    gm, gp = (complex(np.ravel(g)[0]).real for g in jacobi_factors(f, T))
    if min(abs(gm), abs(gp)) < CAUSTIC_TOL * T:
        raise CausticError(f"caustic at T={T}")
    det = gm * gp
    nu = maslov_index(f, T)
    if (det < 0) != (nu % 2 == 1):
        raise CausticError("branch tracking inconsistent with det sign (near caustic?)")
    mag = math.exp(-0.5 * math.log(abs(det)))
    value = p.m / (2j * math.pi * p.hbar) * mag * cmath.exp(-0.5j * math.pi * nu)
    P = field_phase(p, T) if p.has_field else 0.0
    return ComplexAmplitude(value=value, branch_phase_windings=nu, field_phase=P, branch=_regime(p, T))


def _mode_sums(p: PhysicalParams, T: float, msp: ModeSumParams):
    f = derive_frequencies(p)
    wp, wm = dimensionless_mode_frequencies(f, T)
    out = []
    for which in ("x", "y"):
        try:
            D = mode_sum_D(msp, which, wp, wm)
        except DegenerateFrequencies:
            from .oracles import truncated_mode_sum

            D = truncated_mode_sum(msp, which, 10**6).value
        except CausticError:
            D = math.inf
        out.append(D)
    return out[0], out[1]


def field_phase(p: PhysicalParams, T: float) -> float:
    msp = mode_sum_params(p, T)
    if msp.a == 0.0 and msp.b == 0.0:
        return 0.0
    D_x, D_y = _mode_sums(p, T, msp)
    return phase_P(msp, D_x, D_y)


def axis_amplitudes(p: PhysicalParams, T: float):
    """(A_x, A_y) on principal branches; only meaningful before the first caustic."""
    f = derive_frequencies(p)
    gm, gp = (complex(np.ravel(g)[0]).real for g in jacobi_factors(f, T))
    msp = mode_sum_params(p, T)
    D_x, D_y = _mode_sums(p, T, msp)
    pre = cmath.sqrt(p.m / (2j * math.pi * p.hbar))
    Px = _field_term(msp.a**2, D_x, msp.A_y, msp.alpha)
    Py = _field_term(msp.b**2, D_y, msp.A_x, msp.alpha)
    return (
        pre / cmath.sqrt(gm) * cmath.exp(1j * Px),
        pre / cmath.sqrt(gp) * cmath.exp(1j * Py),
    )


def amplitude_from_modes(p: PhysicalParams, T: float) -> complex:
    """Pi_1^2 / sqrt((1 - 2 A_y D_x)(1 - 2 A_x D_y)) * exp(iP), principal branches.

    Agrees with ``amplitude(p, T).total`` up to the sign fixed by the Maslov
    index; compare squares when past a caustic.
    """
    f = derive_frequencies(p)
    msp = mode_sum_params(p, T)
    wp, wm = dimensionless_mode_frequencies(f, T)
    pi1 = product_pi1(msp, wp, wm)
    D_x, D_y = _mode_sums(p, T, msp)
    P = phase_P(msp, D_x, D_y) if (msp.a or msp.b) else 0.0
    fx = 1 - 2 * msp.A_y * D_x
    fy = 1 - 2 * msp.A_x * D_y
    return pi1 * pi1 / cmath.sqrt(fx) / cmath.sqrt(fy) * cmath.exp(1j * P)
