"""Atomic transitions, level schemes and the angular dipole weights."""
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar

# |d| and wavelength of the Cs 6D3/2 -> 7P1/2 line.
CS_DIPOLE_MAGNITUDE = 5.85e-29
CS_WAVELENGTH = 12.21e-6


def omega_from_wavelength(wavelength):
    """Angular frequency 2*pi*c/lambda [rad/s]."""
    return 2.0 * np.pi * SPEED_OF_LIGHT / wavelength


def wavelength_from_omega(omega):
    return 2.0 * np.pi * SPEED_OF_LIGHT / omega


def dipole_vector(magnitude, orientation="isotropic"):
    """Real dipole vector from a magnitude and an orientation.

    ``orientation`` is ``"isotropic"`` (d_x^2 = d_y^2 = d_z^2 = |d|^2/3),
    one of ``"x"``, ``"y"``, ``"z"``, or an explicit 3-vector that is
    normalised before scaling.
    """
    if isinstance(orientation, str):
        key = orientation.strip().lower()
        if key == "isotropic":
            return np.full(3, magnitude / np.sqrt(3.0))
        axes = {"x": 0, "y": 1, "z": 2}
        if key not in axes:
            raise ValueError(f"unknown dipole orientation {orientation!r}")
        out = np.zeros(3)
        out[axes[key]] = magnitude
        return out
    vec = np.asarray(orientation, dtype=float)
    if vec.shape != (3,):
        raise ValueError("explicit dipole orientation must be a 3-vector")
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("explicit dipole orientation must be non-zero")
    return magnitude * vec / norm


def _as_dipole(dipole):
    d = np.asarray(dipole)
    if d.shape != (3,):
        raise ValueError(f"dipole must be a 3-vector, got shape {d.shape}")
    if np.iscomplexobj(d):
        if np.any(d.imag != 0):
            raise ValueError("dipole must be real-valued")
        d = d.real
    return d.astype(float)


@dataclass(frozen=True)
class Transition:
    """One transition n -> k: signed omega_nk (> 0 for emission) and real d_nk."""

    omega_nk: float
    dipole: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dipole", _as_dipole(self.dipole))
        object.__setattr__(self, "omega_nk", float(self.omega_nk))

    @property
    def is_zero(self):
        return not np.any(self.dipole)

    def reversed(self):
        return Transition(-self.omega_nk, self.dipole)


@dataclass
class LevelScheme:
    """Level energies [J] plus a symmetric table of real dipole moments [C m].

    ``dipoles[n][k]`` is d_nk; the diagonal is permanent dipoles (normally zero).
    """

    levels: list
    dipoles: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.levels = [float(e) for e in self.levels]
        n = len(self.levels)
        dip = np.asarray(self.dipoles, dtype=float)
        if dip.shape != (n, n, 3):
            raise ValueError(f"dipole table must have shape ({n}, {n}, 3), got {dip.shape}")
        if not np.allclose(dip, dip.transpose(1, 0, 2), rtol=0, atol=0):
            raise ValueError("real dipole table must satisfy d_nk == d_kn")
        self.dipoles = dip

    @classmethod
    def two_level(cls, omega_a, dipole):
        """Ground level at 0 J, excited level at hbar*omega_a."""
        d = _as_dipole(dipole)
        table = np.zeros((2, 2, 3))
        table[0, 1] = table[1, 0] = d
        return cls([0.0, hbar * omega_a], table)

    def __len__(self):
        return len(self.levels)

    def omega(self, n, k):
        return (self.levels[n] - self.levels[k]) / hbar

    def transition(self, n, k):
        return Transition(self.omega(n, k), self.dipoles[n, k])

    def transitions_from(self, n):
        """All (k, Transition n->k), including k == n."""
        if not 0 <= n < len(self):
            raise IndexError(f"level {n} not in scheme of {len(self)} levels")
        return [(k, self.transition(n, k)) for k in range(len(self))]


@dataclass(frozen=True)
class DipoleWeights:
    d_i_sq: float
    d_a_sq: float


def dipole_weights(dipole):
    """Isotropic and anisotropic combinations d_x^2+d_y^2+2d_z^2, 3d_x^2+d_y^2+4d_z^2."""
    dx, dy, dz = _as_dipole(dipole)
    return DipoleWeights(
        d_i_sq=dx * dx + dy * dy + 2.0 * dz * dz,
        d_a_sq=3.0 * dx * dx + dy * dy + 4.0 * dz * dz,
    )


def weighted_dipole_squared(dipole, phi, conjugate=True):
    """Angular weight of the evanescent mode with in-plane direction ``phi``.

    With ``a = (cos phi, sin phi, i)`` the default returns ``|d . a|^2`` (the
    ``a (x) a*`` contraction), i.e. ``(d_x cos phi + d_y sin phi)^2 + d_z^2``.
    ``conjugate=False`` gives the unconjugated ``(d . a)^2``, which is complex
    and is kept only to compare conventions.
    """
    dx, dy, dz = _as_dipole(dipole)
    phi = np.asarray(phi, dtype=float)
    in_plane = dx * np.cos(phi) + dy * np.sin(phi)
    if conjugate:
        return in_plane * in_plane + dz * dz
    return (in_plane + 1j * dz) ** 2
