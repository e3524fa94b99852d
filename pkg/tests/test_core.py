import math

import numpy as np
import pytest

from zetaprop.core import (
    Endpoints,
    PhysicalParams,
    derive_frequencies,
    dimensionless_mode_frequencies,
    is_zero_freq,
)


def test_cyclotron_is_twice_larmor():
    p = PhysicalParams(m=2.0, q=3.0, B=0.7)
    assert p.omega_L == pytest.approx(3.0 * 0.7 / 4.0)
    assert p.omega_c == pytest.approx(2 * p.omega_L)


@pytest.mark.parametrize("kw", [dict(m=0.0), dict(hbar=-1.0), dict(omega_x=-0.1), dict(B=math.nan)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PhysicalParams(**kw)


def test_endpoints_validation():
    with pytest.raises(ValueError):
        Endpoints(0, 0, 1, 1, 0.0)
    e = Endpoints(0.1, 0.2, 3.0, -4.0, 1.0)
    assert e.scale == 4.0
    assert e.swapped().x0 == 3.0


def test_frequency_identities():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p = PhysicalParams(B=rng.uniform(-3, 3), omega_x=rng.uniform(0, 2), omega_y=rng.uniform(0, 2))
        f = derive_frequencies(p)
        # w+ w- = wx wy and w+^2 + w-^2 = w_c^2 + wx^2 + wy^2
        assert f.obar_plus * f.obar_minus == pytest.approx(p.omega_x * p.omega_y, abs=1e-12)
        assert f.obar_plus**2 + f.obar_minus**2 == pytest.approx(p.omega_c**2 + p.omega_x**2 + p.omega_y**2, rel=1e-12)
        assert f.obar_plus >= f.obar_minus >= 0


def test_isotropic_effective_frequency():
    f = derive_frequencies(PhysicalParams(B=1.0, omega_x=0.6, omega_y=0.6))
    assert f.omega_eff == pytest.approx(math.hypot(0.5, 0.6))
    assert f.obar_plus == pytest.approx(f.omega_eff + 0.5)
    assert f.obar_minus == pytest.approx(f.omega_eff - 0.5)


def test_small_trap_frequency_keeps_precision():
    f = derive_frequencies(PhysicalParams(B=2.0, omega_x=1e-9, omega_y=1.0))
    assert f.obar_minus == pytest.approx(2e-9 / (f.Omega_plus + f.Omega_minus), rel=1e-12)


def test_dimensionless_and_zero_freq():
    f = derive_frequencies(PhysicalParams(B=1.0, omega_x=1.0, omega_y=2.0))
    wp, wm = dimensionless_mode_frequencies(f, 2 * math.pi)
    assert (wp, wm) == pytest.approx((f.obar_plus, f.obar_minus))
    assert is_zero_freq(1e-13, 1.0) and not is_zero_freq(1e-6, 1.0)
