"""Exact propagator of a charged particle in an anisotropic 2-D trap with crossed fields."""
from .classical import (
    ActionValue,
    classical_action_ExB,
    classical_action_isotropic,
    classical_action_quadrature,
    classical_trajectory,
    solve_coefficients_general,
    solve_coefficients_isotropic,
)
from .core import (
    CausticError,
    DegenerateBoundary,
    DegenerateFrequencies,
    DomainError,
    Endpoints,
    FrequencySet,
    PhysicalParams,
    PropagatorError,
    QuadratureNotConverged,
    SingularPhase,
    UnsupportedRegime,
    derive_frequencies,
)
from .fluctuation import ComplexAmplitude, amplitude, amplitude_from_modes, field_phase, mode_sum_D, phase_P
from .propagator import (
    EnergyLevel,
    PropagatorResult,
    energy_spectrum,
    kernel_mode_route,
    propagate,
    propagate_ExB_lagrangian_route,
)

__version__ = "0.1.0"
