"""Oracle tests, written before the closed forms were wired together.

Frozen values come from the oracles themselves; the analytic anchors (free
particle, decoupled oscillators, Basel sum) do not touch the closed forms.
"""
import math

import numpy as np
import pytest

from zetaprop.core import Endpoints, PhysicalParams
from zetaprop.fluctuation import mode_sum_params
from zetaprop.oracles import (
    IntegerResonance,
    compare,
    convergence_order,
    gelfand_yaglom_amplitude,
    gelfand_yaglom_index,
    jacobi_determinant_ode,
    morse_index,
    ode_trajectory,
    richardson_time_sliced,
    richardson_weights,
    time_sliced_amplitude,
    time_sliced_kernel,
    truncated_mode_sum,
    vvpm_amplitude,
)

P_REF = PhysicalParams(B=1.0, omega_x=0.8, omega_y=1.3, Ex=0.3, Ey=-0.4)
T_REF = 1.7

# frozen oracle outputs at P_REF
FROZEN_DET = 0.5341070515905284
FROZEN_GY = -0.2177739737057132j
FROZEN_LOOP = -0.021013001441395437 - 0.2167578312158874j
FROZEN_GY_T5 = 0.4291634879780638j


def test_gelfand_yaglom_frozen():
    assert jacobi_determinant_ode(P_REF, T_REF) == pytest.approx(FROZEN_DET, rel=1e-10)
    np.testing.assert_allclose(gelfand_yaglom_amplitude(P_REF, T_REF), FROZEN_GY, rtol=1e-10)
    assert gelfand_yaglom_index(P_REF, 5.0) == 2
    np.testing.assert_allclose(gelfand_yaglom_amplitude(P_REF, 5.0), FROZEN_GY_T5, rtol=1e-9, atol=1e-12)


def test_gelfand_yaglom_decoupled_oscillators():
    wx, wy = 0.7, 1.9
    p = PhysicalParams(omega_x=wx, omega_y=wy)
    for T in (0.4, 1.2, 2.0, 4.0):
        det = math.sin(wx * T) * math.sin(wy * T) / (wx * wy)
        assert jacobi_determinant_ode(p, T) == pytest.approx(det, rel=1e-9)
        nu = int(wx * T // math.pi) + int(wy * T // math.pi)
        assert gelfand_yaglom_index(p, T) == nu


def test_gelfand_yaglom_free():
    p = PhysicalParams()
    np.testing.assert_allclose(gelfand_yaglom_amplitude(p, 0.8), 1 / (2j * math.pi * 0.8), rtol=1e-12)


def test_time_slicer_free_particle_is_exact():
    p = PhysicalParams()
    e = Endpoints(0.2, -0.1, 1.0, 0.4, 1.3)
    exact = 1 / (2j * math.pi * 1.3) * np.exp(0.5j * ((0.8) ** 2 + 0.5**2) / 1.3)
    np.testing.assert_allclose(time_sliced_kernel(p, e, 16, "midpoint", "symmetric"), exact, rtol=1e-12)


def test_time_slicer_frozen_loop():
    np.testing.assert_allclose(richardson_time_sliced(P_REF, T_REF, 2048)[0], FROZEN_LOOP, rtol=1e-7)


def test_time_slicer_decoupled_oscillator():
    wx, wy, T = 0.9, 1.4, 1.1
    p = PhysicalParams(omega_x=wx, omega_y=wy)
    exact = 1 / (2j * math.pi) * math.sqrt(wx * wy / (math.sin(wx * T) * math.sin(wy * T)))
    np.testing.assert_allclose(richardson_time_sliced(p, T, 1024, levels=3)[0], exact, rtol=1e-9)


def test_richardson_weights_cancel_powers():
    w = richardson_weights(4)
    h = 2.0 ** -np.arange(4)
    assert w.sum() == pytest.approx(1.0)
    for k in range(1, 4):
        assert abs(w @ h**k) < 1e-12


def test_convergence_order_midpoint():
    # first order once B != 0: |1 - i w_L eps| per slice does not cancel
    assert convergence_order(P_REF.replace(Ex=0.0, Ey=0.0), 1.0) == pytest.approx(1.0, abs=0.1)
    assert convergence_order(PhysicalParams(omega_x=0.8, omega_y=1.3), 1.0) >= 1.9


def test_first_order_coefficient_matches_prediction():
    p = PhysicalParams(B=1.2, omega_x=0.6, omega_y=1.1)
    T, N = 1.0, 1024
    ref = richardson_time_sliced(p, T, 8192)[0]
    rel = abs(time_sliced_amplitude(p, T, N)) / abs(ref) - 1
    predicted = -(p.omega_L * T) ** 2 / (2 * N)
    assert rel == pytest.approx(predicted, rel=0.05)


def test_vvpm_free_and_frozen():
    p = PhysicalParams()
    e = Endpoints(0.0, 0.0, 1.0, 0.5, 0.9)
    np.testing.assert_allclose(vvpm_amplitude(p, e), 1 / (2j * math.pi * 0.9), rtol=1e-10)
    np.testing.assert_allclose(vvpm_amplitude(P_REF, Endpoints(0.0, 0.0, 1.0, 0.5, T_REF)), FROZEN_GY, rtol=1e-9)


def test_morse_index_counts_conjugate_points():
    p = PhysicalParams(omega_x=1.0, omega_y=2.0)
    # conjugate points at pi/2, pi (y) and pi (x) before T = 3.3
    assert morse_index(p, 3.3) == 3
    assert morse_index(P_REF, 5.0) == gelfand_yaglom_index(P_REF, 5.0)


def test_series_basel_and_resonance():
    msp = mode_sum_params(PhysicalParams(), 1.0)
    r = truncated_mode_sum(msp, "x", 1000)
    assert r.value == pytest.approx(math.pi**2 / 6, rel=1e-12)
    # w_c T / 2pi = 1 puts a pole on n = 1
    msp = mode_sum_params(PhysicalParams(B=2.0), 2 * math.pi / 2.0)
    with pytest.raises(IntegerResonance):
        truncated_mode_sum(msp, "x", 1000)


def test_ode_trajectory_larmor_circle():
    p = PhysicalParams(B=2.0)
    t, x, y, vx, vy = ode_trajectory(p, (0.0, 0.0, 1.0, 0.0), 2 * math.pi / p.omega_c, t_eval=[2 * math.pi / p.omega_c])
    np.testing.assert_allclose([x[-1], y[-1], vx[-1], vy[-1]], [0, 0, 1, 0], atol=1e-9)


def test_compare_report():
    r = compare(1.0 + 1e-9, 1.0, "series")
    assert r.passed(1e-8) and not r.passed(1e-10)


def test_vvpm_independent_of_endpoints():
    a = vvpm_amplitude(P_REF, Endpoints(0.0, 0.0, 1.0, 0.5, T_REF))
    b = vvpm_amplitude(P_REF, Endpoints(-2.0, 1.5, 3.0, -0.7, T_REF))
    np.testing.assert_allclose(a, b, rtol=1e-9)
