import cmath
import math

import numpy as np
import pytest

from zetaprop.core import CausticError, DegenerateFrequencies, PhysicalParams, SingularPhase, derive_frequencies
from zetaprop.core import dimensionless_mode_frequencies
from zetaprop.fluctuation import (
    amplitude,
    amplitude_from_modes,
    axis_amplitudes,
    basel_kernel,
    field_phase,
    jacobi_determinant,
    landau_mode_sum,
    maslov_index,
    mode_determinant,
    mode_sum_D,
    mode_sum_D_printed,
    mode_sum_params,
    phase_P,
    phase_P_compact,
    phase_P_explicit,
    product_pi1,
    zeta_regularized_gaussian_product,
    zeta_regularized_log_product,
)
from zetaprop.oracles import gelfand_yaglom_amplitude, truncated_mode_sum
from zetaprop.classical import action_along, classical_trajectory
from zetaprop.core import Endpoints


def _mode_setup(p, T):
    msp = mode_sum_params(p, T)
    wp, wm = dimensionless_mode_frequencies(derive_frequencies(p), T)
    return msp, wp, wm


def test_zeta_product_two_forms_agree():
    for alpha in (0.3, 1.0, 17.0):
        direct = zeta_regularized_gaussian_product(alpha)
        via_log = cmath.exp(zeta_regularized_log_product(alpha))
        np.testing.assert_allclose(via_log, direct, rtol=1e-14)
    with pytest.raises(ValueError):
        zeta_regularized_gaussian_product(-1.0)


def test_mode_determinant_factorizes():
    p = PhysicalParams(B=0.9, omega_x=0.5, omega_y=1.2)
    T = 1.3
    msp, wp, wm = _mode_setup(p, T)
    for n in (1, 2, 5):
        expected = msp.alpha**2 * (n**4 - msp.B_sum * n * n + msp.C_sum)
        assert mode_determinant(msp, n) == pytest.approx(expected, rel=1e-12)
        assert n**4 - msp.B_sum * n * n + msp.C_sum == pytest.approx((n * n - wp * wp) * (n * n - wm * wm), rel=1e-12)


def test_basel_kernel_continuity_and_pole():
    for w in (0.249999, 0.25, 0.250001):
        ref = 0.5 / w**2 - math.pi / (2 * w * math.tan(math.pi * w))
        assert basel_kernel(w) == pytest.approx(ref, rel=1e-12)
    assert basel_kernel(0.0) == pytest.approx(math.pi**2 / 6)
    with pytest.raises(CausticError):
        basel_kernel(2.0)


def test_mode_sum_matches_series_and_printed_form():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = PhysicalParams(B=rng.uniform(0.1, 3), omega_x=rng.uniform(0.2, 2), omega_y=rng.uniform(0.2, 2))
        T = rng.uniform(0.3, 2.5)
        msp, wp, wm = _mode_setup(p, T)
        for which, A in (("x", msp.A_x), ("y", msp.A_y)):
            D = mode_sum_D(msp, which, wp, wm)
            assert truncated_mode_sum(msp, which).value == pytest.approx(D, rel=1e-9)
            assert mode_sum_D_printed(A, wp, wm) == pytest.approx(D, rel=1e-8)


def test_mode_sum_degenerate_raises():
    msp, wp, _ = _mode_setup(PhysicalParams(B=1.0, omega_x=1.0, omega_y=1.0), 1.0)
    with pytest.raises(DegenerateFrequencies):
        mode_sum_D(msp, "x", wp, wp)


def test_landau_mode_sum():
    for wL, T in ((0.5, 1.3), (1.2, 2.0), (3e-5, 1.0)):
        p = PhysicalParams(B=2 * wL)
        msp = mode_sum_params(p, T)
        assert landau_mode_sum(wL, T) == pytest.approx(truncated_mode_sum(msp, "x").value, rel=1e-10)


def test_pi1_small_frequency_limit():
    msp = mode_sum_params(PhysicalParams(), 1.0)
    np.testing.assert_allclose(product_pi1(msp, 0.0, 0.0), cmath.sqrt(msp.alpha / (4j * math.pi**3)))


def test_amplitude_matches_gelfand_yaglom_through_caustics():
    p = PhysicalParams(B=1.0, omega_x=0.8, omega_y=1.3)
    f = derive_frequencies(p)
    for T in (0.5, 2.0, 4.0, 6.0, 9.0):
        a = amplitude(p, T)
        assert a.branch_phase_windings == maslov_index(f, T)
        np.testing.assert_allclose(a.value, gelfand_yaglom_amplitude(p, T), rtol=1e-9)


def test_amplitude_raises_at_caustic():
    p = PhysicalParams(omega_x=1.0, omega_y=2.0)
    with pytest.raises(CausticError):
        amplitude(p, math.pi / 2)


def test_jacobi_determinant_complex_time_is_analytic():
    f = derive_frequencies(PhysicalParams(B=0.7, omega_x=0.4, omega_y=1.1))
    t = np.array([1.0 + 0.0j, 1.0 - 1e-6j])
    d = jacobi_determinant(f, t)
    assert d[0].imag == pytest.approx(0.0, abs=1e-15)
    assert abs(d[1] - d[0]) < 1e-5


def test_field_phase_is_loop_action():
    """hbar P is the action of the classical loop 0 -> 0 in the full Lagrangian."""
    p = PhysicalParams(B=0.8, omega_x=0.6, omega_y=1.4, Ex=0.7, Ey=-0.3, hbar=0.9)
    T = 1.9
    loop = Endpoints(0.0, 0.0, 0.0, 0.0, T)
    S = action_along(p, classical_trajectory(p, loop), T)
    assert p.hbar * field_phase(p, T) == pytest.approx(S, rel=1e-10)


def test_phase_forms_agree_where_defined():
    p = PhysicalParams(B=0.8, omega_x=0.6, omega_y=1.4, Ex=0.7, Ey=-0.3)
    msp, wp, wm = _mode_setup(p, 1.2)
    Dx, Dy = mode_sum_D(msp, "x", wp, wm), mode_sum_D(msp, "y", wp, wm)
    assert phase_P_explicit(msp, Dx, Dy) == pytest.approx(phase_P(msp, Dx, Dy), rel=1e-12)
    # the compact rearrangement is not equal to the explicit one
    assert abs(phase_P_compact(msp, Dx, Dy) - phase_P(msp, Dx, Dy)) > 1e-3


def test_singular_phase_only_in_two_term_form():
    # omega_x = 0 with E_x != 0 makes 8 Delta - 4 lambda vanish
    p = PhysicalParams(B=0.8, omega_x=0.0, omega_y=1.4, Ex=0.7)
    msp, wp, wm = _mode_setup(p, 1.2)
    Dx, Dy = mode_sum_D(msp, "x", wp, wm), mode_sum_D(msp, "y", wp, wm)
    with pytest.raises(SingularPhase):
        phase_P_explicit(msp, Dx, Dy)
    assert math.isfinite(phase_P(msp, Dx, Dy))


def test_mode_route_matches_closed_form_before_caustic():
    p = PhysicalParams(B=0.8, omega_x=0.6, omega_y=1.4, Ex=0.2, Ey=0.1)
    T = 1.0
    np.testing.assert_allclose(amplitude_from_modes(p, T), amplitude(p, T).total, rtol=1e-10)
    ax, ay = axis_amplitudes(p, T)
    np.testing.assert_allclose(ax * ay, amplitude(p, T).total, rtol=1e-10)


def test_amplitude_independent_of_field():
    p = PhysicalParams(B=0.8, omega_x=0.6, omega_y=1.4)
    a0 = amplitude(p, 1.3)
    a1 = amplitude(p.replace(Ex=0.5, Ey=0.5), 1.3)
    assert a1.value == a0.value
    assert a0.field_phase == 0.0 and a1.field_phase != 0.0


def test_phase_even_in_field_and_zero_without_it():
    p = PhysicalParams(B=0.8, omega_x=0.9, omega_y=0.9, Ex=0.6)
    assert field_phase(p, 1.1) == pytest.approx(field_phase(p.replace(Ex=-0.6), 1.1), rel=1e-14)
    assert field_phase(p.replace(Ex=0.0), 1.1) == 0.0
