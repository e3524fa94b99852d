"""Classical boundary-value problem and action.

Trajectories are represented by small objects with ``evaluate(t, order)``
returning (x, y) or its first/second time derivative, always in the original
(unshifted) coordinates:

* ``TrajectoryCoefficients`` -- the coupled normal-mode form (B != 0,
  omega_x, omega_y > 0), with x(t) = A1 cos w+ t - a2 sin w+ t + ... ;
* ``DecoupledTrajectory`` -- two independent 1-D oscillators (B = 0);
* ``ExBTrajectory`` -- cyclotron motion plus drift (no trap);
* ``FlowTrajectory`` -- matrix-exponential solution used when exactly one
  trap frequency vanishes and the normal-mode basis degenerates.

A constant field E is removed by the static shift d = qE/(m omega^2) when both
trap frequencies are positive.  The action picks up
T (q^2 Ex^2/(2 m wx^2) + q^2 Ey^2/(2 m wy^2)) + m w_L (dx (y1-y0) - dy (x1-x0))
on top of the E = 0 action at shifted endpoints.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .core import (
    CausticError,
    DegenerateBoundary,
    DomainError,
    Endpoints,
    FrequencySet,
    PhysicalParams,
    QuadratureNotConverged,
    UnsupportedRegime,
    derive_frequencies,
    is_zero_freq,
)

CAUSTIC_TOL = 1e-12
QUAD_START = 64
QUAD_MAX = 2**14
QUAD_RTOL = 1e-10
COEF_RESIDUAL_TOL = 1e-12

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionValue:
    value: float
    method: str  # quadrature | closed_form_isotropic | closed_form_ExB | closed_form_free


@dataclass(frozen=True)
class TrajectoryCoefficients:
    """Normal-mode coefficients; A2, A4 are stored as the real numbers -iA2, -iA4."""

    A1: float
    A2: float
    A3: float
    A4: float
    E_den: float
    C_coef: float
    D_coef: float
    k_plus: float
    k_minus: float
    obar_plus: float
    obar_minus: float
    kappa_plus: float  # k_+ / obar_+
    kappa_minus: float
    shift: Tuple[float, float] = (0.0, 0.0)
    linear_residual: float = 0.0

    def evaluate(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        x = np.zeros_like(t)
        y = np.zeros_like(t)
        for w, kap, c, s in (
            (self.obar_plus, self.kappa_plus, self.A1, self.A2),
            (self.obar_minus, self.kappa_minus, self.A3, self.A4),
        ):
            # x = c cos wt - s sin wt, y = kap (c sin wt + s cos wt): a rotation of (c, s)
            ph = w * t + order * math.pi / 2
            fac = w**order
            x = x + fac * (c * np.cos(ph) - s * np.sin(ph))
            y = y + fac * kap * (c * np.sin(ph) + s * np.cos(ph))
        if order == 0:
            x = x + self.shift[0]
            y = y + self.shift[1]
        return x, y


@dataclass(frozen=True)
class DecoupledTrajectory:
    omega_x: float
    omega_y: float
    x0: float
    y0: float
    x1: float
    y1: float
    T: float
    shift: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for w in (self.omega_x, self.omega_y):
            if w != 0.0 and abs(math.sin(w * self.T)) < CAUSTIC_TOL:
                raise CausticError(f"sin({w}*T) = 0")

    @staticmethod
    def _axis(w, a, b, T, t, order):
        if w == 0.0:
            if order == 0:
                return a + (b - a) * t / T
            if order == 1:
                return np.full_like(t, (b - a) / T)
            return np.zeros_like(t)
        s = math.sin(w * T)
        if abs(s) < CAUSTIC_TOL:
            raise CausticError(f"sin({w}*T) = 0")
        # a sin(w(T-t))/s + b sin(wt)/s, differentiated `order` times
        ph = order * math.pi / 2
        return w**order * ((-1) ** order * a * np.sin(w * (T - t) + ph) + b * np.sin(w * t + ph)) / s

    def evaluate(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        sx, sy = self.shift
        x = self._axis(self.omega_x, self.x0 - sx, self.x1 - sx, self.T, t, order)
        y = self._axis(self.omega_y, self.y0 - sy, self.y1 - sy, self.T, t, order)
        if order == 0:
            x, y = x + sx, y + sy
        return x, y


@dataclass(frozen=True)
class ExBTrajectory:
    """gamma(t) = K1 + K2 exp(-i w_c t) - i t eps / B."""

    K1: complex
    K2: complex
    drift_velocity: Tuple[float, float]
    omega_c: float
    eps_over_B: complex

    def gamma(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        rot = (-1j * self.omega_c) ** order * self.K2 * np.exp(-1j * self.omega_c * t)
        if order == 0:
            return self.K1 + rot - 1j * t * self.eps_over_B
        if order == 1:
            return rot - 1j * self.eps_over_B
        return rot

    def evaluate(self, t, order: int = 0):
        g = self.gamma(t, order)
        return g.real, g.imag


@dataclass(frozen=True)
class FlowTrajectory:
    """Solution via exp(t M5) on the state (x, y, vx, vy, 1)."""

    generator: np.ndarray
    initial_state: np.ndarray

    def states(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        P = expm(t[:, None, None] * self.generator[None, :, :])
        return P @ self.initial_state

    def evaluate(self, t, order: int = 0):
        shape = np.shape(t)
        s = self.states(t)
        if order == 2:
            s = s @ self.generator.T
            return s[:, 2].reshape(shape), s[:, 3].reshape(shape)
        i = 0 if order == 0 else 2
        return s[:, i].reshape(shape), s[:, i + 1].reshape(shape)


def _flow_generator(p: PhysicalParams) -> np.ndarray:
    M = np.zeros((5, 5))
    M[0, 2] = M[1, 3] = 1.0
    M[2, 0] = -p.omega_x**2
    M[3, 1] = -p.omega_y**2
    M[2, 3] = p.omega_c
    M[3, 2] = -p.omega_c
    M[2, 4] = p.q * p.Ex / p.m
    M[3, 4] = p.q * p.Ey / p.m
    return M


def flow_trajectory(p: PhysicalParams, e: Endpoints) -> FlowTrajectory:
    M = _flow_generator(p)
    P = expm(e.T * M)
    J = P[:2, 2:4]
    if abs(np.linalg.det(J)) < CAUSTIC_TOL * max(1.0, e.T) ** 2:
        raise CausticError("velocity-to-position map is singular")
    rhs = np.array([e.x1, e.y1]) - P[:2, [0, 1, 4]] @ np.array([e.x0, e.y0, 1.0])
    v0 = np.linalg.solve(J, rhs)
    return FlowTrajectory(M, np.array([e.x0, e.y0, v0[0], v0[1], 1.0]))


def linear_system(f: FrequencySet, T: float, kappa_plus: float, kappa_minus: float) -> np.ndarray:
    """Matrix L of L (A1, -iA2, A3, -iA4) = (x0, y0, x1, y1)."""
    cp, sp = math.cos(f.obar_plus * T), math.sin(f.obar_plus * T)
    cm, sm = math.cos(f.obar_minus * T), math.sin(f.obar_minus * T)
    return np.array(
        [
            [1.0, 0.0, 1.0, 0.0],
            [0.0, kappa_plus, 0.0, kappa_minus],
            [cp, -sp, cm, -sm],
            [kappa_plus * sp, kappa_plus * cp, kappa_minus * sm, kappa_minus * cm],
        ]
    )


def _residual(L, sol, c) -> float:
    return float(np.linalg.norm(L @ sol - c) / max(np.linalg.norm(c), 1e-300))


def solve_coefficients_general(f: FrequencySet, e: Endpoints) -> TrajectoryCoefficients:
    """Closed-form coefficients for the coupled case, checked against a dense solve.

    The x0 term of -iA4 E is (D^2 - CD) sin(Op T) + (C^2 - CD) sin(Om T).
    """
    if f.omega_c == 0.0:
        raise UnsupportedRegime("omega_c = 0: use the decoupled solution")
    wx, wy, wc = f.omega_x, f.omega_y, f.omega_c
    if wx == 0.0 or wy == 0.0:
        raise UnsupportedRegime("a vanishing trap frequency degenerates the normal modes")
    Op, Om, T = f.Omega_plus, f.Omega_minus, e.T
    C = Op / (2 * wc) * (wx * wx - wx * wy)
    D = Om / (2 * wc) * (wx * wx + wx * wy)
    sp2, cp2 = math.sin(Op * T / 2), math.cos(Op * T / 2)
    sm2, cm2 = math.sin(Om * T / 2), math.cos(Om * T / 2)
    E = 4 * D * D * sp2 * sp2 - 4 * C * C * sm2 * sm2
    if abs(E) <= CAUSTIC_TOL * 4 * (C * C + D * D):
        raise CausticError(f"boundary problem degenerate at T={T}")
    cP, sP = math.cos(Op * T), math.sin(Op * T)
    cM, sM = math.cos(Om * T), math.sin(Om * T)
    g = wx * wy  # (Op^2 - Om^2)/4
    x0, y0, x1, y1 = e.x0, e.y0, e.x1, e.y1

    A1 = (
        (D * D - C * C) * x0
        + (C + D) * x0 * (C * cM - D * cP)
        + g * y0 * (C * sM + D * sP)
        + 2 * (C * C - D * D) * x1 * sp2 * sm2
        - 2 * g * y1 * (C * sm2 * cp2 + D * sp2 * cm2)
    ) / E
    A2 = (
        (C + D) * x0 * (D * sP - C * sM)
        + g * y0 * (C * cM + D * cP - C - D)
        + 2 * (C * D + C * C) * x1 * sm2 * cp2
        - 2 * (C * D + D * D) * x1 * sp2 * cm2
        + (C + D) * 2 * g * y1 * sp2 * sm2
    ) / E
    A3 = (
        (D * D - C * C) * x0
        + (C - D) * x0 * (C * cM + D * cP)
        - g * y0 * (C * sM + D * sP)
        - 2 * (C * C - D * D) * x1 * sp2 * sm2
        + 2 * g * y1 * (C * sm2 * cp2 + D * sp2 * cm2)
    ) / E
    A4 = (
        (D * D - C * D) * x0 * sP
        + (C * C - C * D) * x0 * sM
        + g * y0 * (C * cM - D * cP + D - C)
        + 2 * (C * D - D * D) * x1 * sp2 * cm2
        + 2 * (C * D - C * C) * x1 * sm2 * cp2
        + (D - C) * y1 * 2 * g * sp2 * sm2
    ) / E

    kp, km = f.k_plus / f.obar_plus, f.k_minus / f.obar_minus
    L = linear_system(f, T, kp, km)
    c = np.array([x0, y0, x1, y1])
    sol = np.array([A1, A2, A3, A4])
    return TrajectoryCoefficients(
        A1, A2, A3, A4, E, C, D, f.k_plus, f.k_minus, f.obar_plus, f.obar_minus, kp, km,
        linear_residual=_residual(L, sol, c),
    )


def solve_coefficients_dense(f: FrequencySet, e: Endpoints, kappa_plus=None, kappa_minus=None):
    """Independent dense solve of the 4x4 system (A1, -iA2, A3, -iA4)."""
    kp = f.k_plus / f.obar_plus if kappa_plus is None else kappa_plus
    km = f.k_minus / f.obar_minus if kappa_minus is None else kappa_minus
    L = linear_system(f, e.T, kp, km)
    return np.linalg.solve(L, np.array([e.x0, e.y0, e.x1, e.y1]))


def isotropic_kappas(omega_L: float) -> Tuple[float, float]:
    """k_+/obar_+ = -sign(w_L), k_-/obar_- = +sign(w_L) when omega_x = omega_y."""
    s = -1.0 if omega_L < 0 else 1.0
    return -s, s


def solve_coefficients_isotropic(f: FrequencySet, e: Endpoints) -> TrajectoryCoefficients:
    """Simplified isotropic coefficients.

    The simplified forms hold for w_L >= 0.  For w_L < 0 they are applied to
    the mirrored problem y -> -y, which flips the sign of w_L.
    """
    if f.omega_x != f.omega_y:
        raise UnsupportedRegime("isotropic coefficients need omega_x = omega_y")
    weff = math.hypot(f.omega_L, f.omega_x)
    T = e.T
    s = math.sin(weff * T)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"sin(w_eff T) = 0 at T={T}")
    ct = math.cos(weff * T) / s
    wl = abs(f.omega_L)
    cL, sL = math.cos(wl * T), math.sin(wl * T)
    x0, y0, x1, y1 = e.x0, e.y0, e.x1, e.y1
    # y -> -y maps w_L -> -w_L; the sign flip of y(t) is carried by kappa_+/-
    sy = -1.0 if f.omega_L < 0 else 1.0
    u = (x1 * sL + sy * y1 * cL) / s
    v = (x1 * cL - sy * y1 * sL) / s
    A1 = 0.5 * (x0 + sy * y0 * ct - u)
    A2 = 0.5 * (-sy * y0 + x0 * ct - v)
    A3 = 0.5 * (x0 - sy * y0 * ct + u)
    A4 = 0.5 * (sy * y0 + x0 * ct - v)
    kp, km = isotropic_kappas(f.omega_L)
    w4 = f.omega_x**4
    E = 2 * w4 * (1 - math.cos(2 * weff * T))
    D = math.copysign(f.omega_x**2, f.omega_c) if f.omega_c else f.omega_x**2
    L = linear_system(f, T, kp, km)
    c = np.array([x0, y0, x1, y1])
    return TrajectoryCoefficients(
        A1, A2, A3, A4, E, 0.0, D,
        kp * f.obar_plus, km * f.obar_minus, f.obar_plus, f.obar_minus, kp, km,
        linear_residual=_residual(L, np.array([A1, A2, A3, A4]), c),
    )


def trajectory_eval(tc: TrajectoryCoefficients, f: FrequencySet, t):
    """(x, y, xdot, ydot) at time(s) t from the normal-mode form."""
    x, y = tc.evaluate(t, 0)
    vx, vy = tc.evaluate(t, 1)
    return x, y, vx, vy


def exb_trajectory(p: PhysicalParams, e: Endpoints) -> ExBTrajectory:
    if p.B == 0.0:
        raise DomainError("E x B trajectory needs B != 0")
    wc = p.omega_c
    rot = complex(math.cos(wc * e.T), -math.sin(wc * e.T)) - 1.0
    if abs(rot) < CAUSTIC_TOL:
        raise DegenerateBoundary("omega_c T is a multiple of 2 pi")
    eps_B = complex(p.Ex, p.Ey) / p.B
    g0, g1 = complex(e.x0, e.y0), complex(e.x1, e.y1)
    K2 = (g1 - g0 + 1j * e.T * eps_B) / rot
    K1 = g0 - K2
    return ExBTrajectory(K1, K2, (p.Ey / p.B, -p.Ex / p.B), wc, eps_B)


def field_shift(p: PhysicalParams) -> Tuple[float, float]:
    """Static displacement qE/(m omega^2) per axis (zero where E vanishes)."""
    out = []
    for E, w in ((p.Ex, p.omega_x), (p.Ey, p.omega_y)):
        if E == 0.0:
            out.append(0.0)
        elif w == 0.0:
            raise DomainError("field along an untrapped direction cannot be shifted away")
        else:
            out.append(p.q * E / (p.m * w * w))
    return out[0], out[1]


def shifted_endpoints(p: PhysicalParams, e: Endpoints) -> Endpoints:
    dx, dy = field_shift(p)
    return Endpoints(e.x0 - dx, e.y0 - dy, e.x1 - dx, e.y1 - dy, e.T)


def shift_offset(p: PhysicalParams, e: Endpoints) -> float:
    """Action difference S_E(endpoints) - S_0(shifted endpoints)."""
    dx, dy = field_shift(p)
    const = 0.5 * p.m * ((p.omega_x * dx) ** 2 + (p.omega_y * dy) ** 2)
    boundary = p.m * p.omega_L * (dx * (e.y1 - e.y0) - dy * (e.x1 - e.x0))
    return const * e.T + boundary


def classical_trajectory(p: PhysicalParams, e: Endpoints):
    """Dispatch to the trajectory representation appropriate for p."""
    T = e.T
    flat_x, flat_y = is_zero_freq(p.omega_x, T), is_zero_freq(p.omega_y, T)
    no_b = is_zero_freq(p.omega_L, T)
    if flat_x and flat_y and not no_b:
        return exb_trajectory(p, e)
    if no_b:
        dx, dy = field_shift(p)
        return DecoupledTrajectory(p.omega_x, p.omega_y, e.x0, e.y0, e.x1, e.y1, T, (dx, dy))
    if flat_x or flat_y:
        return flow_trajectory(p, e)
    f = derive_frequencies(p)
    es = shifted_endpoints(p, e)
    if p.omega_x == p.omega_y:
        tc = solve_coefficients_isotropic(f, es)
    else:
        tc = solve_coefficients_general(f, es)
    # the mode basis degenerates as w_c or a trap frequency approaches zero
    if not tc.linear_residual <= COEF_RESIDUAL_TOL:
        logger.debug("coefficient residual %.2e, using the flow trajectory", tc.linear_residual)
        return flow_trajectory(p, e)
    return dataclasses.replace(tc, shift=field_shift(p))


def lagrangian(p: PhysicalParams, x, y, vx, vy):
    return (
        0.5 * p.m * (vx * vx + vy * vy)
        - 0.5 * p.m * (p.omega_x**2 * x * x + p.omega_y**2 * y * y)
        + p.m * p.omega_L * (x * vy - y * vx)
        + p.q * (p.Ex * x + p.Ey * y)
    )


def action_along(p: PhysicalParams, traj, T: float) -> float:
    """Gauss-Legendre quadrature of the Lagrangian with node doubling."""
    prev = None
    n = QUAD_START
    while n <= QUAD_MAX:
        u, w = leggauss(n)
        t = 0.5 * T * (u + 1)
        x, y = traj.evaluate(t, 0)
        vx, vy = traj.evaluate(t, 1)
        L = lagrangian(p, x, y, vx, vy)
        S = 0.5 * T * float(w @ L)
        scale = 0.5 * T * float(w @ np.abs(L))
        if prev is not None and abs(S - prev) <= QUAD_RTOL * max(abs(S), scale, 1e-300):
            return S
        prev = S
        n *= 2
    raise QuadratureNotConverged(f"no convergence with {QUAD_MAX} nodes")


def classical_action_quadrature(p: PhysicalParams, e: Endpoints) -> ActionValue:
    traj = classical_trajectory(p, e)
    return ActionValue(action_along(p, traj, e.T), "quadrature")


def oscillator_action_1d(m: float, w: float, a: float, b: float, T: float) -> float:
    """m w ((a^2 + b^2) cos wT - 2ab) / (2 sin wT)."""
    if w == 0.0:
        return 0.5 * m * (b - a) ** 2 / T
    s = math.sin(w * T)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"sin(w T) = 0 at T={T}")
    return m * w * ((a * a + b * b) * math.cos(w * T) - 2 * a * b) / (2 * s)


def classical_action_isotropic(p: PhysicalParams, e: Endpoints) -> ActionValue:
    if p.omega_x != p.omega_y:
        raise UnsupportedRegime("isotropic action needs omega_x = omega_y")
    w_L = p.omega_L
    weff = math.hypot(w_L, p.omega_x)
    T = e.T
    s = math.sin(weff * T)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"sin(w_eff T) = 0 at T={T}")
    es = shifted_endpoints(p, e) if p.has_field else e
    x0, y0, x1, y1 = es.x0, es.y0, es.x1, es.y1
    S = p.m * weff / (2 * s) * (
        (x0 * x0 + x1 * x1 + y0 * y0 + y1 * y1) * math.cos(weff * T)
        - 2 * (x0 * x1 + y0 * y1) * math.cos(w_L * T)
        - 2 * (y0 * x1 - x0 * y1) * math.sin(w_L * T)
    )
    if p.has_field:
        S += shift_offset(p, e)
    return ActionValue(S, "closed_form_isotropic")


def magnetic_action(m: float, omega_L: float, x0, y0, x1, y1, T: float) -> float:
    """m w_L cot(w_L T)/2 |r1 - r0|^2 + m w_L (x0 y1 - x1 y0)."""
    s = math.sin(omega_L * T)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"sin(w_L T) = 0 at T={T}")
    ct = math.cos(omega_L * T) / s
    return 0.5 * m * omega_L * ct * ((x1 - x0) ** 2 + (y1 - y0) ** 2) + m * omega_L * (x0 * y1 - x1 * y0)


def classical_action_ExB_printed(p: PhysicalParams, e: Endpoints) -> float:
    """Shifted magnetic action with drift-shifted endpoints and the x0/y0 linear terms only."""
    B, T = p.B, e.T
    xs1 = e.x1 - p.Ey * T / B
    ys1 = e.y1 + p.Ex * T / B
    S = magnetic_action(p.m, p.omega_L, e.x0, e.y0, xs1, ys1, T)
    return S


def exb_boundary_term(p: PhysicalParams, e: Endpoints) -> float:
    """F(T) - F(0) with F = 2 Re[(m/2B)(i + w_L t) eps* gamma_bar(t)], gamma_bar = gamma + i t eps/B."""
    eps = complex(p.Ex, p.Ey)
    B, T = p.B, e.T
    gb0 = complex(e.x0, e.y0)
    gbT = complex(e.x1, e.y1) + 1j * T * eps / B

    def F(t, gb):
        return 2.0 * (p.m / (2 * B) * (1j + p.omega_L * t) * eps.conjugate() * gb).real

    return F(T, gbT) - F(0.0, gb0)


def classical_action_ExB(p: PhysicalParams, e: Endpoints) -> ActionValue:
    """Action for omega_x = omega_y = 0, B != 0.

    The drift shift gamma_bar = gamma + i t eps/B turns the Lagrangian into the
    pure magnetic one plus (m/2)|eps|^2/B^2 plus dF/dt.  The dF/dt piece does
    not change the equations of motion but does change the value of the action,
    so F(T) - F(0) is kept here.
    """
    if p.B == 0.0:
        raise DomainError("crossed-field action needs B != 0")
    if not (is_zero_freq(p.omega_x, e.T) and is_zero_freq(p.omega_y, e.T)):
        raise UnsupportedRegime("crossed-field action needs omega_x = omega_y = 0")
    S = classical_action_ExB_printed(p, e)
    if p.has_field:
        S += 0.5 * p.m * (p.Ex**2 + p.Ey**2) / p.B**2 * e.T + exb_boundary_term(p, e)
    return ActionValue(S, "closed_form_ExB")
