"""Low-velocity expansion of C_nk and the closed-form asymptotics.

The expansion parameter is ``s = v tau / (2 z_a)``. Term ``j`` of the
resonant series is

    -i / (64 pi^2 hbar eps0 z^3) (j+2)!/j! A_j (-i v / 2z)^j r_p^(j)(w)

with the angular factor ``A_j = int dphi d2(phi) f^j``,
``f = cos(theta) + i sin(theta) cos(phi)``. The non-resonant term is

    i / (128 pi^3 hbar eps0 z^3) (j+2)! A_j (i v / 2z)^j
        int dxi 2 Re[(w - i xi)^-(j+1)] r_p(i xi).

Because r_p^(j) grows like j!/(gamma/2)^j the series is asymptotic rather
than convergent: terms shrink until ``j ~ gamma z / v`` and then grow.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import comb, cos, factorial, pi, sin

import numpy as np
from scipy.constants import epsilon_0, hbar

from .atom import dipole_weights
from .kernel import CoefficientResult, _legendre_quarter
from .medium import (
    MAX_DERIVATIVE_ORDER,
    reflection_p,
    reflection_p_derivative,
    reflection_p_imag_axis,
    scaled_reflection_derivatives,
)

SERIES_RTOL = 1e-10


@lru_cache(maxsize=128)
def cos_moment(m):
    """int_0^{2 pi} cos(phi)^m dphi."""
    if m % 2:
        return 0.0
    return 2.0 * pi * comb(m, m // 2) / 2.0**m


def angular_factor(dipole, theta, j):
    """Closed form of int_0^{2pi} dphi d2(phi) (cos th + i sin th cos phi)^j.

    Binomial expansion in cos(phi) with exact moments; the d_x d_y cross term
    integrates to zero. For theta = +-pi/2 every odd j is exactly zero.
    """
    dx, dy, dz = (float(c) for c in dipole)
    ct, st = cos(theta), sin(theta)
    if abs(ct) < 1e-15:
        ct = 0.0
    total = 0j
    for k in range(j + 1):
        if k % 2:
            continue  # odd cos-moments (with both cos^2 and 1 weights) vanish
        coef = comb(j, k) * ct ** (j - k) * (1j * st) ** k
        if coef == 0:
            continue
        m_k, m_k2 = cos_moment(k), cos_moment(k + 2)
        total += coef * (dx * dx * m_k2 + dy * dy * (m_k - m_k2) + dz * dz * m_k)
    return total


@lru_cache(maxsize=16)
def _xi_moment_nodes(n):
    u, wu = _legendre_quarter(n)
    return np.asarray(u), np.asarray(wu)


def _xi_moments(model, omega, max_order, n=256):
    """J_j = int_0^{pi/2} r_p(i|w| tan u) cos(u)^(j-1) cos((j+1) u) du.

    Then int dxi 2 Re[(w - i xi)^-(j+1)] r_p(i xi) = 2 sign(w)^(j+1) |w|^-j J_j.
    """
    u, wu = _xi_moment_nodes(n)
    r = reflection_p_imag_axis(model, abs(omega) * np.tan(u))
    j = np.arange(max_order + 1)[:, None]
    weights = np.cos(u)[None, :] ** (j - 1) * np.cos((j + 1) * u[None, :])
    return (weights * (wu * r)[None, :]).sum(axis=1)


@dataclass
class SeriesTerms:
    resonant: np.ndarray
    nonresonant: np.ndarray
    angular: np.ndarray


def series_terms(transition, model, motion, max_order=MAX_DERIVATIVE_ORDER):
    """Individual resonant and non-resonant terms j = 0..max_order."""
    w = transition.omega_nk
    z, v = motion.z_a, motion.speed
    d = transition.dipole
    ang = np.array([angular_factor(d, motion.theta, j) for j in range(max_order + 1)])
    js = np.arange(max_order + 1)
    res = np.zeros(max_order + 1, dtype=complex)
    nres = np.zeros(max_order + 1, dtype=complex)
    if transition.is_zero:
        return SeriesTerms(res, nres, ang)
    if w > 0:
        derivs = scaled_reflection_derivatives(model, w, -1j * v / (2.0 * z), max_order)
        ratio = np.array([factorial(j + 2) / factorial(j) for j in js], dtype=float)
        res = -1j / (64.0 * pi**2 * hbar * epsilon_0 * z**3) * ratio * ang * derivs
    if w != 0:
        sgn = 1.0 if w > 0 else -1.0
        moments = _xi_moments(model, w, max_order)
        scale = (1j * v / (2.0 * z * abs(w))) ** js * sgn ** (js + 1)
        fact = np.array([float(factorial(j + 2)) for j in js])
        nres = (1j / (128.0 * pi**3 * hbar * epsilon_0 * z**3)
                * fact * ang * scale * 2.0 * moments)
    return SeriesTerms(res, nres, ang)


def _truncate(terms, rtol):
    """Partial sum, truncation info, and divergence flag for one series."""
    partial = np.cumsum(terms)
    mags = np.abs(terms)
    nz = np.flatnonzero(mags > 0)
    info = {"order_used": len(terms) - 1, "stop": "max_order", "divergent": False,
            "truncation_error": float(mags[-1]) if len(mags) else 0.0}
    if nz.size == 0:
        info.update(order_used=0, stop="tolerance", truncation_error=0.0)
        return 0j, info
    # two consecutive growing ratios among non-zero terms => divergent
    rising = 0
    for a, b in zip(nz[:-1], nz[1:]):
        if mags[b] > mags[a]:
            rising += 1
            if rising >= 2:
                info["divergent"] = True
                break
        else:
            rising = 0
    if info["divergent"]:
        j_best = int(nz[np.argmin(mags[nz])])
        info.update(order_used=j_best, stop="divergent",
                    truncation_error=float(mags[j_best]))
        return partial[j_best], info
    for j in nz:
        if j > 0 and mags[j] <= rtol * abs(partial[j]):
            info.update(order_used=int(j), stop="tolerance",
                        truncation_error=float(mags[j]))
            return partial[j], info
    return partial[-1], info


def series_coefficient(transition, model, motion, max_order=MAX_DERIVATIVE_ORDER,
                       rtol=SERIES_RTOL):
    """C_nk from the truncated expansion.

    Summation stops at the first term with ``|T_j| <= rtol |sum|`` or at
    ``max_order``. When the term magnitudes rise twice in a row the series is
    flagged ``divergent`` and the sum is cut at its smallest term.
    """
    terms = series_terms(transition, model, motion, max_order)
    res, res_info = _truncate(terms.resonant, rtol)
    nres, nres_info = _truncate(terms.nonresonant, rtol)
    diag = {
        "method": "series",
        "max_order": max_order,
        "resonant": res_info,
        "nonresonant": nres_info,
        "divergent": res_info["divergent"] or nres_info["divergent"],
        "truncation_error": res_info["truncation_error"] + nres_info["truncation_error"],
        "terms": terms,
    }
    return CoefficientResult(complex(res), complex(nres), diag)


def _prefactor(z_a):
    return 1.0 / (32.0 * pi * epsilon_0 * hbar * z_a**3)


def small_v_parallel(transition, model, z_a, v_par):
    """Two-term resonant coefficient for slow motion parallel to the surface."""
    w = transition.omega_nk
    if w <= 0:
        return 0j
    wts = dipole_weights(transition.dipole)
    r0 = reflection_p(model, w)
    r2 = reflection_p_derivative(model, w, 2)
    return -1j * _prefactor(z_a) * (wts.d_i_sq * r0 + 3.0 * wts.d_a_sq * v_par**2 * r2 / (8.0 * z_a**2))


def small_v_perp(transition, model, z_a, v_perp):
    """Two-term resonant coefficient for slow normal motion (v_perp = dz/dt)."""
    w = transition.omega_nk
    if w <= 0:
        return 0j
    d_i = dipole_weights(transition.dipole).d_i_sq
    r0 = reflection_p(model, w)
    r1 = reflection_p_derivative(model, w, 1)
    return -1j * _prefactor(z_a) * d_i * (r0 - 1.5j * v_perp * r1 / z_a)


def static_values(model, dipole_z, z_a):
    """Printed leading-order-in-gamma static shift and rate for a z dipole.

    Returns ``(shift at Omega_+, rate at omega_L)``:
    shift = d_z^2 eta wP^2 / (16 pi eps0 hbar (eta+1) wL gamma z^3), rate = 4*shift.
    """
    from .medium import spectral_markers

    wl = spectral_markers(model).omega_l
    base = (dipole_z**2 * model.eta * model.omega_p**2
            / (pi * epsilon_0 * hbar * (model.eta + 1.0) * wl * model.gamma * z_a**3))
    return base / 16.0, base / 4.0


def static_rate_model_consistent(model, dipole_z, z_a):
    """Leading-order static rate at omega_L carried through with Im r_p(omega_L).

    Im r_p(omega_L) = 2 eta wP^2 / ((eta+1)^2 wL gamma) to leading order,
    which puts one more factor (eta+1) in the denominator than the printed form.
    """
    shift, rate = static_values(model, dipole_z, z_a)
    return rate / (model.eta + 1.0)


def table1_ratios(model, z_a, v_par=0.0, v_perp=0.0):
    """Leading-order velocity corrections relative to the static values.

    Keys: shift_perp, rate_perp (3 v_perp / gamma z), shift_par
    (-3 v_par^2 / (gamma z)^2), rate_par (-6 v_par^2 / (gamma z)^2).
    ``v_perp`` is dz/dt, so approach (v_perp < 0) reduces both.
    """
    gz = model.gamma * z_a
    return {
        "shift_perp": 3.0 * v_perp / gz,
        "rate_perp": 3.0 * v_perp / gz,
        "shift_par": -3.0 * v_par**2 / gz**2,
        "rate_par": -6.0 * v_par**2 / gz**2,
    }
