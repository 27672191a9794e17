"""Velocity-dependent Casimir-Polder shifts and decay rates near a dielectric half-space."""
__version__ = "0.1.0"

from .atom import LevelScheme, Transition, dipole_vector, dipole_weights, omega_from_wavelength
from .errors import (
    CapabilityError,
    ConfigError,
    DomainError,
    QFShiftError,
    QuadratureError,
    SingularityError,
)
from .kernel import (
    CoefficientResult,
    MotionState,
    QuadratureSpec,
    ValidityWarning,
    coefficient,
    nonresonant_coefficient,
    oracle_time_domain,
    resonant_coefficient,
)
from .medium import DielectricModel, reflection_p, spectral_markers
from .observables import line_profile, shift_and_rate, thermal_factor
from .series import series_coefficient, static_values, table1_ratios
