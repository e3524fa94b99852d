"""Kernel assembly K = A exp(i S_cl / hbar), the crossed-field special case and the spectrum.

``propagate`` returns the physical kernel: the E-independent fluctuation
prefactor times exp(i S/hbar) with S the action of the true classical path.
Equivalently (``kernel_mode_route``) one may expand around the E = 0 path and
keep the field phase P from the Fourier-mode integral; both agree.

For the crossed-field case two further routes are provided verbatim in their
printed form (``exb_kernel_shift_route_printed`` and
``exb_kernel_appendix_printed``).  Both drop boundary contributions: the first
discards the total derivative dF/dt, the second combines the field phase P
with an action that already contains the drift.  They differ from each other
and from the true kernel by E-dependent phases and are kept only to make that
visible.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .classical import (
    ActionValue,
    action_along,
    classical_action_ExB,
    classical_action_ExB_printed,
    classical_action_isotropic,
    classical_action_quadrature,
    classical_trajectory,
    exb_boundary_term,
    field_shift,
    magnetic_action,
)
from .core import (
    CausticError,
    DomainError,
    Endpoints,
    PhysicalParams,
    derive_frequencies,
    is_zero_freq,
)
from .fluctuation import ComplexAmplitude, amplitude

REGIMES = ("general", "isotropic", "ExB", "free", "pure_magnetic")


@dataclass(frozen=True)
class PropagatorResult:
    kernel: complex
    amplitude: ComplexAmplitude
    action: ActionValue
    regime: str
    provenance: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True, order=True)
class EnergyLevel:
    energy: float
    n: int
    m: int


def classify(p: PhysicalParams, T: float) -> str:
    flat_x, flat_y = is_zero_freq(p.omega_x, T), is_zero_freq(p.omega_y, T)
    no_b = is_zero_freq(p.omega_L, T)
    if flat_x and flat_y:
        if no_b:
            if p.has_field:
                raise DomainError("constant field without trap or magnetic field is not supported")
            return "free"
        return "ExB" if p.has_field else "pure_magnetic"
    if no_b:
        field_shift(p)  # raises DomainError for a field along a flat direction
    if p.omega_x == p.omega_y:
        return "isotropic"
    return "general"


def _action_for(p: PhysicalParams, e: Endpoints, regime: str) -> ActionValue:
    if regime == "free":
        d2 = (e.x1 - e.x0) ** 2 + (e.y1 - e.y0) ** 2
        return ActionValue(0.5 * p.m * d2 / e.T, "closed_form_free")
    if regime in ("ExB", "pure_magnetic"):
        return classical_action_ExB(p, e)
    if regime == "isotropic" and not is_zero_freq(p.omega_L, e.T):
        return classical_action_isotropic(p, e)
    return classical_action_quadrature(p, e)


def propagate(p: PhysicalParams, e: Endpoints) -> PropagatorResult:
    regime = classify(p, e.T)
    amp = amplitude(p, e.T)
    act = _action_for(p, e, regime)
    kernel = amp.value * cmath.exp(1j * act.value / p.hbar)
    prov = {
        "amplitude": "closed_form_jacobi",
        "branch": f"maslov={amp.branch_phase_windings}",
        "action": act.method,
    }
    if regime == "free":
        prov["note"] = "free-particle limit of the general amplitude"
    return PropagatorResult(kernel, amp, act, regime, prov)


def kernel_mode_route(p: PhysicalParams, e: Endpoints) -> complex:
    """amplitude.total * exp(i S_0 / hbar), S_0 = full action along the E = 0 path."""
    p0 = p.replace(Ex=0.0, Ey=0.0)
    traj0 = classical_trajectory(p0, e)
    S0 = action_along(p, traj0, e.T)
    return amplitude(p, e.T).total * cmath.exp(1j * S0 / p.hbar)


def _landau_prefactor(p: PhysicalParams, T: float) -> complex:
    s = math.sin(p.omega_L * T)
    if abs(s) < 1e-12:
        raise CausticError(f"sin(w_L T) = 0 at T={T}")
    return p.m * p.omega_L / (2j * math.pi * p.hbar * s)


def _require_exb(p: PhysicalParams, T: float):
    if p.B == 0.0 or not (is_zero_freq(p.omega_x, T) and is_zero_freq(p.omega_y, T)):
        raise DomainError("crossed-field route needs omega_x = omega_y = 0 and B != 0")


def propagate_ExB_lagrangian_route(p: PhysicalParams, e: Endpoints) -> PropagatorResult:
    """Drift-frame route: gamma_bar = gamma + i t eps/B.

    The Lagrangian becomes L_0(gamma_bar) + (m/2)|eps|^2/B^2 + dF/dt.  The path
    integral over gamma_bar is the pure magnetic kernel between the shifted
    endpoints; the constant term gives a T-linear phase and F(T) - F(0) a
    boundary phase.
    """
    _require_exb(p, e.T)
    T = e.T
    eps2 = p.Ex**2 + p.Ey**2
    xs1 = e.x1 - p.Ey * T / p.B
    ys1 = e.y1 + p.Ex * T / p.B
    Sbar = magnetic_action(p.m, p.omega_L, e.x0, e.y0, xs1, ys1, T)
    S = Sbar + 0.5 * p.m * eps2 / p.B**2 * T + exb_boundary_term(p, e)
    pref = _landau_prefactor(p, T)
    regime = "ExB" if p.has_field else "pure_magnetic"
    nu = 2 * int(math.floor(abs(p.omega_L) * T / math.pi))
    amp = ComplexAmplitude(pref, nu, 0.0, "landau")
    act = ActionValue(S, "closed_form_ExB")
    return PropagatorResult(pref * cmath.exp(1j * S / p.hbar), amp, act, regime, {"route": "drift_frame"})


def exb_kernel_shift_route_printed(p: PhysicalParams, e: Endpoints) -> complex:
    """exp(i (m/2)|eps|^2 T/(B^2 hbar)) exp(i S/hbar) m w_L/(2 pi i hbar sin w_L T), S without dF/dt."""
    _require_exb(p, e.T)
    eps2 = p.Ex**2 + p.Ey**2
    S = classical_action_ExB_printed(p, e)
    phase = 0.5 * p.m * eps2 / p.B**2 * e.T + S
    return _landau_prefactor(p, e.T) * cmath.exp(1j * phase / p.hbar)


def exb_kernel_appendix_printed(p: PhysicalParams, e: Endpoints) -> complex:
    """exp(i S/hbar) m w_L/(2 pi i hbar sin) exp(-i m|E|^2 T/(2 hbar B^2)) exp(i m w_L |E|^2 T^2 cot/(2 hbar B^2))."""
    _require_exb(p, e.T)
    T, B, hb = e.T, p.B, p.hbar
    eps2 = p.Ex**2 + p.Ey**2
    S = classical_action_ExB_printed(p, e)
    wLT = p.omega_L * T
    P = -0.5 * p.m * eps2 * T / (hb * B * B) + 0.5 * p.m * p.omega_L * eps2 * T * T / (hb * B * B) * math.cos(wLT) / math.sin(wLT)
    return _landau_prefactor(p, T) * cmath.exp(1j * (S / hb + P))


def energy_spectrum(p: PhysicalParams, n_max: int, m_max: int) -> List[EnergyLevel]:
    """E(n, m) = hbar w+ (n + 1/2) + hbar w- (m + 1/2), sorted ascending."""
    if n_max < 0 or m_max < 0:
        raise ValueError("n_max and m_max must be non-negative")
    f = derive_frequencies(p)
    levels = [
        EnergyLevel(p.hbar * (f.obar_plus * (n + 0.5) + f.obar_minus * (m + 0.5)), n, m)
        for n in range(n_max + 1)
        for m in range(m_max + 1)
    ]
    return sorted(levels)


def landau_degenerate(p: PhysicalParams) -> bool:
    """True when obar_- = 0 so every m gives the same energy."""
    return derive_frequencies(p).obar_minus == 0.0


def characteristic_roots(p: PhysicalParams) -> np.ndarray:
    """Roots of l^4 + l^2 (w_c^2 + wx^2 + wy^2) + wx^2 wy^2."""
    return np.roots([1.0, 0.0, p.omega_c**2 + p.omega_x**2 + p.omega_y**2, 0.0, p.omega_x**2 * p.omega_y**2])
