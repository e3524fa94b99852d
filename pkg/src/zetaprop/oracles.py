"""Independent numerical references for the closed forms.

None of these routines use the frequency algebra of the closed forms: the
Gelfand-Yaglom determinant integrates the Jacobi equation directly, the time
slicer builds the discretized action from the Lagrangian, the Van Vleck
determinant differentiates whatever the classical module returns, and the
mode sum is summed term by term.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .core import CausticError, Endpoints, PhysicalParams, PropagatorError

EPS_FLOOR = 1e-300


class SingularDiscretization(PropagatorError):
    """Zero pivot in the time-sliced quadratic form (a discrete caustic)."""


class FiniteDifferenceUnstable(PropagatorError):
    pass


class StepSizeUnderflow(PropagatorError):
    pass


class IntegerResonance(PropagatorError):
    """n^4 - B n^2 + C vanishes at an integer n."""


@dataclass(frozen=True)
class OracleReport:
    oracle_value: complex
    reference_value: complex
    relative_error: float
    oracle_kind: str  # gelfand_yaglom | time_slice | vvpm | ode | series
    resolution: Optional[float] = None

    def passed(self, tol: float) -> bool:
        return self.relative_error <= tol


def compare(oracle_value, reference_value, kind: str, resolution=None) -> OracleReport:
    err = abs(oracle_value - reference_value) / max(abs(reference_value), EPS_FLOOR)
    return OracleReport(oracle_value, reference_value, float(err), kind, resolution)


# --- Gelfand-Yaglom ----------------------------------------------------------

def _jacobi_rhs(p: PhysicalParams):
    wc = p.omega_c
    wx2, wy2 = p.omega_x**2, p.omega_y**2

    def rhs(F, dF):
        # rows of F are (x, y) components of two Jacobi fields
        out = np.empty_like(F)
        out[0] = wc * dF[1] - wx2 * F[0]
        out[1] = -wc * dF[0] - wy2 * F[1]
        return out

    return rhs


def _integrate_leg(p, t_a, t_b, Y0, n_samples, rtol=1e-12):
    rhs = _jacobi_rhs(p)
    dt = t_b - t_a

    def f(s, Y):
        F = Y[:4].reshape(2, 2)
        dF = Y[4:].reshape(2, 2)
        return dt * np.concatenate([dF.ravel(), rhs(F, dF).ravel()])

    s_eval = np.linspace(0.0, 1.0, n_samples)
    sol = solve_ivp(f, (0.0, 1.0), Y0, method="DOP853", rtol=rtol, atol=1e-14, t_eval=s_eval)
    if not sol.success:
        raise StepSizeUnderflow(sol.message)
    return sol.y


def _det_series(Y):
    return Y[0] * Y[3] - Y[1] * Y[2]


def _max_frequency(p: PhysicalParams) -> float:
    M = np.array(
        [
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [-p.omega_x**2, 0, 0, p.omega_c],
            [0, -p.omega_y**2, -p.omega_c, 0],
        ],
        dtype=float,
    )
    return float(np.max(np.abs(np.linalg.eigvals(M).imag)))


def jacobi_determinant_ode(p: PhysicalParams, T: float) -> float:
    """det F(T) for F(0) = 0, F'(0) = 1 on the real time axis."""
    Y0 = np.concatenate([np.zeros(4), np.eye(2).ravel()])
    Y = _integrate_leg(p, 0.0, T, Y0.astype(float), 2)
    return float(_det_series(Y[:, -1]))


def gelfand_yaglom_index(p: PhysicalParams, T: float) -> int:
    """Conjugate points on (0, T) from arg det F along a path below the real axis."""
    w = max(_max_frequency(p), p.omega_x, p.omega_y)
    h = min(0.4 / w, 0.2 * T) if w > 0 else 0.2 * T
    path = [0.0, h * (1 - 1j), T - 1j * h, complex(T)]
    Y = np.concatenate([np.zeros(4), np.eye(2).ravel()]).astype(complex)
    dets = []
    for a, b in zip(path[:-1], path[1:]):
        n = 48 + int(32 * abs(b - a) / h)
        Ys = _integrate_leg(p, a, b, Y, n)
        dets.append(_det_series(Ys)[1:])
        Y = Ys[:, -1]
    d = np.concatenate(dets)
    ph = np.unwrap(np.angle(d))
    ph += -0.5 * math.pi - ph[0]
    nu = int(round(ph[-1] / math.pi))
    if abs(ph[-1] - nu * math.pi) > 0.25:
        raise CausticError("cannot resolve branch: T is too close to a conjugate point")
    return nu


def gelfand_yaglom_amplitude(p: PhysicalParams, T: float) -> complex:
    """m/(2 pi i hbar) det F(T)^(-1/2) with phase exp(-i pi nu/2)."""
    det = jacobi_determinant_ode(p, T)
    if abs(det) < 1e-12 * T * T:
        raise CausticError(f"det F(T) = {det:.3e}")
    nu = gelfand_yaglom_index(p, T)
    if (det < 0) != (nu % 2 == 1):
        raise CausticError("branch count inconsistent with det sign")
    return p.m / (2j * math.pi * p.hbar) / math.sqrt(abs(det)) * cmath.exp(-0.5j * math.pi * nu)


# --- time slicing ------------------------------------------------------------

_GAUGES = {
    "symmetric": np.array([[0.0, -1.0], [1.0, 0.0]]),
    "radial": np.array([[1.0, -1.0], [1.0, 1.0]]),
}
_RULES = {"midpoint": (0.5, 0.5), "prepoint": (1.0, 0.0), "postpoint": (0.0, 1.0)}


def _slice_parts(p: PhysicalParams, eps: float, rule: str, gauge: str):
    """Non-kinetic parts (P00, P01, P11) of one slice; the kinetic part is (m/eps)[[1,-1],[-1,1]]."""
    try:
        G = _GAUGES[gauge]
        a, b = _RULES[rule]
    except KeyError as exc:
        raise ValueError(f"unknown rule/gauge {exc}") from None
    W = p.m * np.diag([p.omega_x**2, p.omega_y**2])
    # q A(r_eval).(r_j+1 - r_j) with A(r) = (B/2) G r and r_eval = a r_j + b r_j+1
    g = p.m * p.omega_L
    S = G + G.T
    P00 = -0.5 * eps * W - g * a * S
    P11 = -0.5 * eps * W + g * b * S
    P01 = g * (a * G.T - b * G)
    return P00, P01, P11


def slice_blocks(p: PhysicalParams, eps: float, rule: str = "midpoint", gauge: str = "symmetric"):
    """2x2 blocks (Q00, Q01, Q11) of one slice's action 1/2 u^T Q u, u = (r_j, r_j+1)."""
    P00, P01, P11 = _slice_parts(p, eps, rule, gauge)
    kin = p.m / eps * np.eye(2)
    return kin + P00, P01 - kin, kin + P11


def time_sliced_kernel(
    p: PhysicalParams, e: Endpoints, N: int, rule: str = "midpoint", gauge: str = "symmetric"
) -> complex:
    """Finite-N discretized path integral for K(r1, T; r0, 0) in the symmetric gauge.

    Kinetic and magnetic terms per segment, trapezoid rule for the potential and
    the field.  A radial-gauge result is converted back with the phase
    exp(-i q B (r1^2 - r0^2)/(4 hbar)); for the midpoint rule that conversion
    is exact at every N, for the pre/postpoint rules it is not.

    The interior Hessian is factored block by block.  Its Schur complements are
    kept as (m/eps)(c_k + Delta_k) with c_k = (k+1)/k, the free-particle value,
    so the O(eps) trap and field information in Delta_k is never recovered by
    subtracting two O(1/eps) numbers.
    """
    if N < 2:
        raise ValueError("need at least two slices")
    eps = e.T / N
    hb = p.hbar
    kin = p.m / eps
    P00, P01, P11 = _slice_parts(p, eps, rule, gauge)
    dD = (P00 + P11) / kin
    dD = 0.5 * (dD + dD.T)
    dO = P01 / kin
    dOt = dO.T
    I = np.eye(2)
    O = P01 - kin * I
    qE = p.q * np.array([p.Ex, p.Ey])
    r0 = np.array([e.x0, e.y0])
    r1 = np.array([e.x1, e.y1])
    lin = eps * qE

    log_rel = 0.0  # sum of log|det(I + Delta_k / c_k)|
    n_pos = n_neg = 0
    quad = 0.0
    Delta = dD.copy()
    y = lin + O.T @ r0
    c = 2.0
    for k in range(1, N):
        if k > 1:
            c_prev = c
            c = (k + 1) / k
            X = np.linalg.inv(c_prev * I + Delta_prev)
            Delta = Delta_prev @ X / c_prev + dD + dOt @ X + X @ dO - dOt @ X @ dO
            Delta = 0.5 * (Delta + Delta.T)
            y = lin + (I - dOt) @ (X @ y)
        if k == N - 1:
            y = y + O @ r1
        tr = (Delta[0, 0] + Delta[1, 1]) / c
        dt = (Delta[0, 0] * Delta[1, 1] - Delta[0, 1] * Delta[1, 0]) / (c * c)
        rel = tr + dt
        if rel <= -1.0 and abs(1.0 + rel) < 1e-300:
            raise SingularDiscretization(f"zero pivot at slice {k}")
        if 1.0 + rel == 0.0 or not math.isfinite(rel):
            raise SingularDiscretization(f"zero pivot at slice {k}")
        log_rel += math.log1p(rel) if rel > -1.0 else math.log(-(1.0 + rel))
        if rel > -1.0:
            if c + Delta[0, 0] > 0:
                n_pos += 2
            else:
                n_neg += 2
        else:
            n_pos += 1
            n_neg += 1
        S = c * I + Delta
        quad += float(y @ np.linalg.solve(S, y)) / kin
        Delta_prev = Delta

    Q00 = kin * I + P00
    Q11 = kin * I + P11
    const = 0.5 * r0 @ Q00 @ r0 + 0.5 * r1 @ Q11 @ r1 + 0.5 * eps * qE @ (r0 + r1)
    # det H = kin^(2(N-1)) * prod c_k^2 * prod det(I + Delta_k/c_k), prod c_k = N
    n_int = 2 * (N - 1)
    logdet = n_int * math.log(kin) + 2 * math.log(N) + log_rel
    log_mod = N * math.log(p.m / (2 * math.pi * hb * eps)) + 0.5 * n_int * math.log(2 * math.pi * hb) - 0.5 * logdet
    phase = -0.5 * math.pi * N + 0.25 * math.pi * (n_pos - n_neg) + (const - 0.5 * quad) / hb
    if gauge == "radial":
        phase -= p.m * p.omega_L * (r1 @ r1 - r0 @ r0) / (2 * hb)
    return cmath.exp(complex(log_mod, phase))


def time_sliced_amplitude(p: PhysicalParams, T: float, N: int, rule: str = "midpoint", gauge: str = "symmetric") -> complex:
    """Loop kernel K(0, T; 0, 0) at N slices (midpoint error is O(1/N^2) at B = 0, O(1/N) otherwise)."""
    if N < 8:
        raise ValueError("N must be >= 8")
    return time_sliced_kernel(p, Endpoints(0.0, 0.0, 0.0, 0.0, T), N, rule, gauge)


def richardson_weights(levels: int) -> np.ndarray:
    """Weights over N/2^(levels-1), ..., N/2, N cancelling 1/N, ..., 1/N^(levels-1)."""
    h = 2.0 ** -np.arange(levels)  # step of each level relative to the coarsest
    V = np.vander(h, levels, increasing=True).T
    rhs = np.zeros(levels)
    rhs[0] = 1.0
    return np.linalg.solve(V, rhs)


def richardson_time_sliced(
    p: PhysicalParams, T: float, N: int = 4096, levels: int = 5, **kw
) -> Tuple[complex, complex, complex]:
    """(extrapolated, value at N/2, value at N).

    With B != 0 the midpoint-rule amplitude has a first-order error
    (leading relative term w_L^2 T^2 / (2N), from |1 - i w_L eps| per slice),
    so all powers 1/N .. 1/N^(levels-1) are eliminated.
    """
    Ns = [N >> k for k in range(levels - 1, -1, -1)]
    vals = np.array([time_sliced_amplitude(p, T, n, **kw) for n in Ns])
    return complex(richardson_weights(levels) @ vals), complex(vals[-2]), complex(vals[-1])


def convergence_order(p: PhysicalParams, T: float, Ns=(256, 512, 1024, 2048), reference=None) -> float:
    """Least-squares log-log slope of |A_N - reference| against N."""
    if reference is None:
        reference = richardson_time_sliced(p, T, 4 * Ns[-1])[0]
    errs = [abs(time_sliced_amplitude(p, T, N) - reference) for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    return float(-slope)


def morse_index(p: PhysicalParams, T: float, N: int = 512) -> int:
    """Negative eigenvalues of the discretized second variation (counts conjugate points)."""
    eps = T / N
    Q00, Q01, Q11 = slice_blocks(p, eps)
    H = np.zeros((2 * (N - 1), 2 * (N - 1)))
    for k in range(N - 1):
        H[2 * k:2 * k + 2, 2 * k:2 * k + 2] = Q00 + Q11
        if k + 1 < N - 1:
            H[2 * k:2 * k + 2, 2 * k + 2:2 * k + 4] = Q01
            H[2 * k + 2:2 * k + 4, 2 * k:2 * k + 2] = Q01.T
    ev = np.linalg.eigvalsh(0.5 * (H + H.T))
    return int(np.sum(ev < 0))


# --- Van Vleck ---------------------------------------------------------------

def mixed_hessian(action, e: Endpoints, h: float) -> np.ndarray:
    """d^2 S / d r1_i d r0_j by central differences."""
    H = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            acc = 0.0
            for si, sj, sign in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                r1 = [e.x1, e.y1]
                r0 = [e.x0, e.y0]
                r1[i] += si * h
                r0[j] += sj * h
                acc += sign * action(Endpoints(r0[0], r0[1], r1[0], r1[1], e.T))
            H[i, j] = acc / (4 * h * h)
    return H


def vvpm_amplitude(p: PhysicalParams, e: Endpoints, action=None, h: Optional[float] = None) -> complex:
    """(1/(2 pi i hbar)) sqrt|det(-d^2 S/dr1 dr0)| exp(-i pi nu/2).

    The action is exactly quadratic in the endpoints, so the difference
    quotient carries no truncation error and a step of order the endpoint
    scale minimizes round-off; two steps are still compared.
    """
    if action is None:
        from .classical import classical_action_quadrature

        def action(ep):
            return classical_action_quadrature(p, ep).value

    h = 0.25 * e.scale if h is None else h
    H1 = -mixed_hessian(action, e, h)
    H2 = -mixed_hessian(action, e, h / 2)
    d1, d2 = np.linalg.det(H1), np.linalg.det(H2)
    if abs(d1 - d2) > 1e-5 * max(abs(d2), EPS_FLOOR):
        raise FiniteDifferenceUnstable(f"det estimates {d1!r} vs {d2!r}")
    det = (4 * d2 - d1) / 3
    if det == 0.0:
        raise CausticError("Van Vleck determinant vanishes")
    nu = morse_index(p, e.T)
    return math.sqrt(abs(det)) / (2j * math.pi * p.hbar) * cmath.exp(-0.5j * math.pi * nu)


# --- ODE trajectories --------------------------------------------------------

def ode_trajectory(p: PhysicalParams, state0, T: float, t_eval=None, rtol: float = 1e-12):
    """Integrate the equations of motion from (x0, y0, vx0, vy0); returns (t, x, y, vx, vy)."""
    if T <= 0:
        raise ValueError("T must be positive")
    wc, wx2, wy2 = p.omega_c, p.omega_x**2, p.omega_y**2
    ax, ay = p.q * p.Ex / p.m, p.q * p.Ey / p.m

    def f(t, s):
        x, y, vx, vy = s
        return [vx, vy, wc * vy - wx2 * x + ax, -wc * vx - wy2 * y + ay]

    if t_eval is None:
        t_eval = np.linspace(0.0, T, 101)
    sol = solve_ivp(f, (0.0, T), np.asarray(state0, float), method="DOP853", rtol=rtol, atol=1e-13, t_eval=t_eval)
    if not sol.success:
        raise StepSizeUnderflow(sol.message)
    return sol.t, sol.y[0], sol.y[1], sol.y[2], sol.y[3]


# --- mode sums ---------------------------------------------------------------

@dataclass(frozen=True)
class SeriesResult:
    value: float
    error_estimate: float
    terms: int


def truncated_mode_sum(msp, which: str, N: int = 10**6) -> SeriesResult:
    """sum_{n>=1} (n^2 - A)/(n^4 - B n^2 + C) to N terms plus an Euler-Maclaurin tail."""
    if N < 100:
        raise ValueError("N must be >= 100")
    A = msp.A_x if which == "x" else msp.A_y if which == "y" else None
    if A is None:
        raise ValueError("which must be 'x' or 'y'")
    B, C = msp.B_sum, msp.C_sum
    n = np.arange(1, N + 1, dtype=float)
    n2 = n * n
    den = n2 * n2 - B * n2 + C
    if np.min(np.abs(den) / (n2 * n2)) < 1e-12:
        k = int(n[np.argmin(np.abs(den) / (n2 * n2))])
        raise IntegerResonance(f"denominator vanishes at n={k}")
    partial = float(np.sum((n2 - A) / den))

    x = float(N)
    u = x * x - A
    v = x**4 - B * x * x + C
    fN = u / v
    dfN = (2 * x * v - u * (4 * x**3 - 2 * B * x)) / (v * v)
    integral = 1 / x + (B - A) / (3 * x**3) + (B * B - A * B - C) / (5 * x**5)
    d3 = -24 / x**5
    tail = integral - 0.5 * fN - dfN / 12 + d3 / 720
    err = 720 / (30240 * x**7) + abs(B) ** 3 / x**7 + N * 1e-16 * abs(partial) / math.sqrt(N)
    return SeriesResult(partial + tail, err, N)
