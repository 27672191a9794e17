"""Single-resonance Drude-Lorentz half-space and its p-polarised reflection.

All frequencies are angular (rad/s). The reflection coefficient is the
electrostatic (non-retarded) one, ``r_p = (eps - 1) / (eps + 1)``.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import CapabilityError, SingularityError

MAX_DERIVATIVE_ORDER = 24
POLE_RTOL = 1e-12

# Sapphire parameters, in units of the transverse resonance.
SAPPHIRE_OMEGA_T = 1.56e14
SAPPHIRE_ETA = 2.71
SAPPHIRE_OMEGA_P_RATIO = 1.2
SAPPHIRE_GAMMA_RATIO = 0.02


@dataclass(frozen=True)
class DielectricModel:
    """eps(w) = eta * (1 - omega_p**2 / (w**2 - omega_t**2 + i*gamma*w)).

    ``omega_p = 0`` is accepted and gives the dispersionless medium
    ``eps = eta``; ``eta = 1, omega_p = 0`` is vacuum.
    """

    eta: float
    omega_p: float
    omega_t: float
    gamma: float

    def __post_init__(self):
        if not self.eta >= 1.0:
            raise ValueError(f"eta must be >= 1, got {self.eta!r}")
        if not self.omega_p >= 0.0:
            raise ValueError(f"omega_p must be >= 0, got {self.omega_p!r}")
        if not self.omega_t > 0.0:
            raise ValueError(f"omega_t must be > 0, got {self.omega_t!r}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")

    @classmethod
    def from_ratios(cls, eta, omega_t, omega_p_over_omega_t, gamma_over_omega_t):
        return cls(
            eta=float(eta),
            omega_p=float(omega_p_over_omega_t) * omega_t,
            omega_t=float(omega_t),
            gamma=float(gamma_over_omega_t) * omega_t,
        )

    @classmethod
    def sapphire(cls):
        return cls.from_ratios(
            SAPPHIRE_ETA, SAPPHIRE_OMEGA_T, SAPPHIRE_OMEGA_P_RATIO, SAPPHIRE_GAMMA_RATIO
        )

    @classmethod
    def constant(cls, eps):
        """Dispersionless medium with permittivity ``eps`` (>= 1)."""
        return cls(eta=float(eps), omega_p=0.0, omega_t=1.0, gamma=1.0)

    @property
    def is_dispersive(self):
        return self.omega_p > 0.0


@dataclass(frozen=True)
class SpectralMarkers:
    omega_l: float
    omega_plus: float


def _check_pole(denominator, scale, omega, what):
    bad = np.abs(denominator) < POLE_RTOL * np.abs(scale)
    if np.any(bad):
        where = np.asarray(omega)[bad] if np.ndim(omega) else omega
        raise SingularityError(f"{what} is singular at omega={where}", omega=where)


def _resonance_denominator(model, omega):
    return omega * omega - model.omega_t**2 + 1j * model.gamma * omega


def permittivity(model, omega):
    """Complex permittivity at (possibly complex, possibly array) ``omega``."""
    omega = np.asarray(omega, dtype=complex)
    if not model.is_dispersive:
        out = np.full(omega.shape, model.eta, dtype=complex)
        return out if out.ndim else complex(out)
    den = _resonance_denominator(model, omega)
    _check_pole(den, np.abs(omega) ** 2 + model.omega_t**2, omega, "permittivity")
    out = model.eta * (1.0 - model.omega_p**2 / den)
    return out if out.ndim else complex(out)


def permittivity_imag_axis(model, xi):
    """eps(i*xi) for real xi >= 0, evaluated through a manifestly real expression."""
    xi = np.asarray(xi, dtype=float)
    out = model.eta * (1.0 + model.omega_p**2 / (xi * xi + model.omega_t**2 + model.gamma * xi))
    return out if out.ndim else float(out)


def reflection_p(model, omega):
    """Non-retarded p-polarised reflection coefficient.

    Evaluated as the reduced rational function
    ``((eta-1) D - eta wP^2) / ((eta+1) D - eta wP^2)`` with
    ``D = w^2 - wT^2 + i gamma w``, so the bulk pole of eps cancels and only
    the surface mode ``eps = -1`` is singular.
    """
    omega = np.asarray(omega, dtype=complex)
    eta, wp2 = model.eta, model.omega_p**2
    den = _resonance_denominator(model, omega)
    num = (eta - 1.0) * den - eta * wp2
    bottom = (eta + 1.0) * den - eta * wp2
    _check_pole(bottom, np.abs((eta + 1.0) * den) + eta * wp2, omega, "r_p (surface mode)")
    out = num / bottom
    return out if out.ndim else complex(out)


def reflection_p_imag_axis(model, xi):
    """r_p(i*xi) for real xi >= 0; real by construction."""
    eps = permittivity_imag_axis(model, xi)
    return (eps - 1.0) / (eps + 1.0)


@lru_cache(maxsize=64)
def reflection_poles(model):
    """Partial-fraction data ``(a, b, w1, w2)`` of r_p.

    r_p(w) = a + b * [1/(w - w1) - 1/(w - w2)] when the surface-mode poles
    are distinct. In the critically damped case ``w1 == w2`` and
    r_p(w) = a + b / (w - w1)**2.
    """
    eta, wp2 = model.eta, model.omega_p**2
    a = (eta - 1.0) / (eta + 1.0)
    if not model.is_dispersive:
        return a, 0.0j, 0.0j, 0.0j
    lead = -2.0 * eta * wp2 / (eta + 1.0) ** 2
    wl2 = model.omega_t**2 + eta * wp2 / (eta + 1.0)
    disc = wl2 - 0.25 * model.gamma**2
    if abs(disc) <= POLE_RTOL * wl2:
        w1 = -0.5j * model.gamma
        return a, complex(lead), complex(w1), complex(w1)
    root = np.sqrt(complex(disc))
    w1 = -0.5j * model.gamma + root
    w2 = -0.5j * model.gamma - root
    return a, complex(lead / (w1 - w2)), complex(w1), complex(w2)


def _check_derivative_args(model, omega, order):
    if int(order) != order or order < 0:
        raise ValueError(f"derivative order must be a non-negative integer, got {order!r}")
    if order > MAX_DERIVATIVE_ORDER:
        raise CapabilityError(
            f"derivative order {order} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}"
        )
    _, b, w1, w2 = reflection_poles(model)
    if b != 0:
        for pole in {w1, w2}:
            if abs(omega - pole) < POLE_RTOL * max(abs(pole), 1.0):
                raise SingularityError(f"r_p derivative is singular at omega={omega}", omega=omega)


def reflection_p_derivative(model, omega, order):
    """Exact ``order``-th frequency derivative of r_p at scalar ``omega``."""
    omega = complex(omega)
    _check_derivative_args(model, omega, order)
    if order == 0:
        return reflection_p(model, omega)
    return complex(scaled_reflection_derivatives(model, omega, 1.0, order)[order])


def scaled_reflection_derivatives(model, omega, scale, max_order):
    """Array ``[scale**j * r_p^(j)(omega) for j in 0..max_order]``.

    ``scale`` may be complex. Computing ``(scale/(w - pole))**j`` directly keeps
    high orders inside floating-point range where ``r_p^(j)`` alone would
    under- or overflow.
    """
    omega = complex(omega)
    _check_derivative_args(model, omega, max_order)
    a, b, w1, w2 = reflection_poles(model)
    out = np.zeros(max_order + 1, dtype=complex)
    out[0] = reflection_p(model, omega)
    if b == 0 or max_order == 0:
        return out
    j = np.arange(1, max_order + 1)
    sign_fact = np.array([(-1.0) ** k * factorial(k) for k in j])
    u1 = 1.0 / (omega - w1)
    if w1 == w2:
        # b / (w - w1)^2  ->  (-1)^j (j+1)! b / (w - w1)^(j+2)
        out[1:] = sign_fact * (j + 1) * b * u1**2 * (scale * u1) ** j
        return out
    u2 = 1.0 / (omega - w2)
    out[1:] = sign_fact * b * (u1 * (scale * u1) ** j - u2 * (scale * u2) ** j)
    return out


def spectral_markers(model):
    """Rate maximum omega_L (surface-mode frequency) and shift maximum Omega_+."""
    omega_l = float(np.sqrt(model.eta * model.omega_p**2 / (model.eta + 1.0) + model.omega_t**2))
    return SpectralMarkers(omega_l=omega_l, omega_plus=omega_l + 0.5 * model.gamma)
