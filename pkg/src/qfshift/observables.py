"""Level shifts, decay rates, thermal enhancement and averaged line profiles."""
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import Boltzmann, c as SPEED_OF_LIGHT, hbar

from .errors import QFShiftError
from .kernel import MotionState, QuadratureSpec, coefficient

RETARDATION_FRACTION = 0.1


class TransitionError(QFShiftError):
    """A coefficient for one transition n -> k could not be evaluated."""

    def __init__(self, message, n, k, cause=None):
        super().__init__(message)
        self.n, self.k, self.cause = n, k, cause


class ResolutionError(QFShiftError, ValueError):
    """Detuning grid too coarse for point-sampled Lorentzians."""


class RetardationWarning(UserWarning):
    """Distance window leaves the non-retarded regime (w z / c not small)."""


@dataclass
class ShiftRate:
    """δω_n [rad/s], Γ_n [1/s] and the per-transition coefficients."""

    shift: float
    rate: float
    breakdown: list = field(default_factory=list)


def thermal_occupation(omega, temperature):
    """Bose occupation 1/(exp(hbar w / k T) - 1); zero at T = 0."""
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature!r}")
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega!r}")
    if temperature == 0:
        return 0.0
    x = hbar * omega / (Boltzmann * temperature)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def thermal_factor(omega_a, temperature):
    """Enhancement n(w_A) + 1 of shifts and rates at temperature T."""
    return 1.0 + thermal_occupation(omega_a, temperature)


def shift_and_rate(scheme, n, model, motion, spec=None, temperature=0.0):
    """Γ_n = 2 Σ_{k<n} Re C_nk and δω_n = Σ_k Im C_nk for level ``n``.

    Levels are indexed in ascending energy, so ``k < n`` are the decay
    channels. With ``temperature > 0`` each transition's coefficient is
    scaled by ``thermal_factor(|w_nk|, T)``. Zero-dipole transitions are
    skipped and contribute exactly zero.
    """
    spec = spec or QuadratureSpec()
    shift, rate, breakdown = 0.0, 0.0, []
    for k, tr in scheme.transitions_from(n):
        if tr.is_zero:
            breakdown.append({"k": k, "omega_nk": tr.omega_nk, "C": 0j, "factor": 1.0})
            continue
        try:
            res = coefficient(tr, model, motion, spec)
        except QFShiftError as exc:
            raise TransitionError(f"transition {n}->{k} failed: {exc}", n, k, exc) from exc
        factor = thermal_factor(abs(tr.omega_nk), temperature) if temperature > 0 and tr.omega_nk else 1.0
        c_nk = factor * res.total
        breakdown.append({"k": k, "omega_nk": tr.omega_nk, "C": c_nk, "factor": factor,
                          "diagnostics": res.diagnostics})
        shift += c_nk.imag
        if k < n:
            rate += 2.0 * c_nk.real
    return ShiftRate(shift, rate, breakdown)


@dataclass
class LineProfile:
    detuning: np.ndarray
    intensity: np.ndarray
    metadata: dict = field(default_factory=dict)

    def area(self):
        return float(np.trapezoid(self.intensity, self.detuning))

    @property
    def peak_height(self):
        return float(np.max(self.intensity))

    @property
    def fwhm(self):
        return full_width_half_max(self.detuning, self.intensity)


def full_width_half_max(x, y):
    """FWHM by linear interpolation of the half-maximum crossings around the peak."""
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = i
    while left > 0 and y[left] > half:
        left -= 1
    right = i
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        return float("nan")

    def cross(a, b):
        if y[b] == y[a]:
            return x[a]
        return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a])

    return float(cross(right - 1, right) - cross(left + 1, left))


def detuning_grid(span, points, width):
    """Symmetric grid of ``points`` detunings covering ``span`` widths [rad/s]."""
    if points < 3:
        raise ValueError("grid needs at least 3 points")
    half = 0.5 * span * width
    return np.linspace(-half, half, int(points))


def uniform_weight(z):
    return np.ones_like(z)


def _bin_edges(grid):
    mid = 0.5 * (grid[1:] + grid[:-1])
    return np.concatenate(([grid[0] - (mid[0] - grid[0])], mid, [grid[-1] + (grid[-1] - mid[-1])]))


def _lorentz_bins(edges, center, width):
    # exact integral of a unit-area Lorentzian over each bin
    cdf = np.arctan(2.0 * (edges - center) / width) / np.pi
    return np.diff(cdf)


def _lorentz_points(grid, center, width):
    return (0.5 * width / np.pi) / ((grid - center) ** 2 + 0.25 * width**2)


def _threads():
    try:
        return max(1, int(os.environ.get("QFSHIFT_THREADS", "1")))
    except ValueError:
        return 1


def _line_parameters(scheme, n, k, model, motion, z_nodes, spec):
    def one(z):
        m = MotionState(float(z), motion.speed, motion.theta)
        upper = shift_and_rate(scheme, n, model, m, spec)
        lower = shift_and_rate(scheme, k, model, m, spec)
        return upper.shift - lower.shift, upper.rate + lower.rate

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, z_nodes))
    else:
        pairs = [one(z) for z in z_nodes]
    centers = np.array([p[0] for p in pairs])
    widths = np.array([p[1] for p in pairs])
    return centers, widths


def line_profile(scheme, pair, model, motion, z_window, grid, spec=None, n_z=800,
                 weight=uniform_weight, gamma_free=0.0, sampling="bin"):
    """Emission line n -> k averaged over atom heights in ``z_window``.

    At each height the line is a Lorentzian centred at ``δω_n - δω_k``
    (detuning from w_nk) with full width ``Γ_n + Γ_k + gamma_free``. Heights
    are midpoint nodes of ``z_window`` weighted by ``weight(z)`` (uniform by
    default). The result is normalised to unit area over ``grid``.

    ``sampling="bin"`` integrates each Lorentzian exactly over the grid cell
    around every point, so arbitrarily narrow lines keep their area.
    ``sampling="point"`` evaluates the Lorentzians at the grid points and
    raises ResolutionError if the grid spacing exceeds half the narrowest width.
    """
    n, k = pair
    z_min, z_max = (float(v) for v in z_window)
    if not 0.0 < z_min < z_max:
        raise ValueError(f"need 0 < z_min < z_max, got {z_window!r}")
    if gamma_free < 0:
        raise ValueError("gamma_free must be >= 0")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D array of >= 3 points")
    omega0 = abs(scheme.omega(n, k))
    if omega0 * z_max / SPEED_OF_LIGHT > RETARDATION_FRACTION:
        warnings.warn(
            f"w z_max / c = {omega0 * z_max / SPEED_OF_LIGHT:.2f} is not small; "
            "the non-retarded reflection is an approximation there",
            RetardationWarning, stacklevel=2)

    h = (z_max - z_min) / n_z
    z_nodes = z_min + h * (np.arange(n_z) + 0.5)
    w = np.asarray(weight(z_nodes), dtype=float)
    if np.any(w < 0) or not np.sum(w) > 0:
        raise ValueError("weight must be non-negative with positive sum")
    w = w / w.sum()

    centers, widths = _line_parameters(scheme, n, k, model, motion, z_nodes, spec)
    widths = widths + gamma_free
    if np.any(widths <= 0):
        raise QFShiftError("non-positive line width encountered; a downward rate is negative")

    if sampling == "bin":
        edges = _bin_edges(grid)
        cell = np.diff(edges)
        mass = np.zeros(grid.size)
        for wi, c0, g0 in zip(w, centers, widths):
            mass += wi * _lorentz_bins(edges, c0, g0)
        captured = float(mass.sum())
        intensity = mass / cell
    elif sampling == "point":
        spacing = float(np.max(np.diff(grid)))
        if spacing > 0.5 * widths.min():
            raise ResolutionError(
                f"grid spacing {spacing:.3e} rad/s exceeds half the narrowest width "
                f"{widths.min():.3e} rad/s")
        intensity = np.zeros(grid.size)
        for wi, c0, g0 in zip(w, centers, widths):
            intensity += wi * _lorentz_points(grid, c0, g0)
        captured = float(np.trapezoid(intensity, grid))
    else:
        raise ValueError(f"sampling must be 'bin' or 'point', got {sampling!r}")

    area = float(np.trapezoid(intensity, grid))
    if not area > 0:
        raise QFShiftError("profile has no weight on the detuning grid")
    intensity = intensity / area
    meta = {
        "z_window": (z_min, z_max),
        "speed": motion.speed,
        "theta": motion.theta,
        "n_z": int(n_z),
        "gamma_free": float(gamma_free),
        "sampling": sampling,
        "captured_fraction": captured,
        "min_width": float(widths.min()),
        "max_width": float(widths.max()),
    }
    prof = LineProfile(grid, intensity, meta)
    meta["peak_height"] = prof.peak_height
    meta["fwhm"] = prof.fwhm
    return prof
