import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.constants import hbar

from qfshift.atom import (
    CS_DIPOLE_MAGNITUDE,
    LevelScheme,
    Transition,
    dipole_vector,
    dipole_weights,
    omega_from_wavelength,
    wavelength_from_omega,
    weighted_dipole_squared,
)

# zero or normal-sized, so squares never underflow
components = st.one_of(st.just(0.0), st.floats(1e-6, 1.0), st.floats(-1.0, -1e-6))
dipoles = st.tuples(components, components, components).map(lambda t: 1e-29 * np.array(t))


def test_z_dipole_weights():
    w = dipole_weights([0.0, 0.0, 2.0])
    assert (w.d_i_sq, w.d_a_sq) == (8.0, 16.0)


def test_x_dipole_weights():
    w = dipole_weights([3.0, 0.0, 0.0])
    assert (w.d_i_sq, w.d_a_sq) == (9.0, 27.0)


def test_isotropic_cs_weight():
    d = dipole_vector(CS_DIPOLE_MAGNITUDE, "isotropic")
    w = dipole_weights(d)
    assert w.d_i_sq == pytest.approx(4.0 / 3.0 * CS_DIPOLE_MAGNITUDE**2, rel=1e-14)
    assert w.d_i_sq == pytest.approx(4.563e-57, rel=1e-3)


def test_weighted_z_dipole():
    phi = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(weighted_dipole_squared([0, 0, 1.5], phi), 2.25)


def test_weighted_orthogonal():
    assert weighted_dipole_squared([1.0, 0.0, 0.0], np.pi / 2) == pytest.approx(0.0, abs=1e-30)


def test_isotropic_phi_average():
    d = dipole_vector(1.0, "isotropic")
    phi = 2 * np.pi * np.arange(64) / 64
    assert np.mean(weighted_dipole_squared(d, phi)) == pytest.approx(2.0 / 3.0, rel=1e-14)


def test_unconjugated_convention_differs():
    # the literal a (x) a contraction gives -d_z^2 in the phi-average
    phi = 2 * np.pi * np.arange(64) / 64
    raw = weighted_dipole_squared([0, 0, 1.0], phi, conjugate=False)
    assert np.allclose(raw, -1.0)
    assert np.allclose(weighted_dipole_squared([0, 0, 1.0], phi), 1.0)


@pytest.mark.parametrize("axis, idx", [("x", 0), ("y", 1), ("z", 2)])
def test_axis_orientation(axis, idx):
    d = dipole_vector(2.0, axis)
    assert d[idx] == 2.0 and np.count_nonzero(d) == 1


def test_explicit_orientation_normalised():
    assert np.allclose(dipole_vector(5.0, [3.0, 0.0, 4.0]), [3.0, 0.0, 4.0])


@pytest.mark.parametrize("bad", ["w", [0, 0, 0], [1, 2]])
def test_bad_orientation(bad):
    with pytest.raises(ValueError):
        dipole_vector(1.0, bad)


def test_complex_dipole_rejected():
    with pytest.raises(ValueError, match="real"):
        Transition(1e14, np.array([1j, 0, 0]))


def test_wavelength_round_trip():
    w = omega_from_wavelength(12.21e-6)
    assert w == pytest.approx(1.5427e14, rel=1e-4)
    assert wavelength_from_omega(w) == pytest.approx(12.21e-6, rel=1e-15)


class TestLevelScheme:
    def test_two_level(self):
        s = LevelScheme.two_level(1e14, [0, 0, 1e-29])
        assert s.omega(1, 0) == pytest.approx(1e14, rel=1e-15)
        assert s.omega(0, 1) == -s.omega(1, 0)
        assert s.transition(1, 0).dipole[2] == 1e-29
        assert s.transition(1, 1).is_zero

    def test_asymmetric_table_rejected(self):
        table = np.zeros((2, 2, 3))
        table[0, 1] = [1, 0, 0]
        with pytest.raises(ValueError, match="d_nk == d_kn"):
            LevelScheme([0.0, 1.0], table)

    def test_shape(self):
        with pytest.raises(ValueError, match="shape"):
            LevelScheme([0.0, 1.0, 2.0], np.zeros((2, 2, 3)))

    def test_transitions_from(self):
        s = LevelScheme.two_level(1e14, [0, 0, 1e-29])
        ks = [k for k, _ in s.transitions_from(1)]
        assert ks == [0, 1]
        with pytest.raises(IndexError):
            s.transitions_from(5)

    @given(st.lists(st.floats(0, 1e-19), min_size=2, max_size=5, unique=True))
    def test_antisymmetric_frequencies(self, energies):
        n = len(energies)
        s = LevelScheme(energies, np.zeros((n, n, 3)))
        for i in range(n):
            for j in range(n):
                assert s.omega(i, j) == -s.omega(j, i)
                assert s.omega(i, j) == pytest.approx((energies[i] - energies[j]) / hbar)


@given(dipoles)
def test_weight_ordering(d):
    w = dipole_weights(d)
    assert w.d_a_sq >= w.d_i_sq >= 0
    assert (w.d_i_sq == 0) == (not np.any(d))


@given(dipoles, st.floats(0, 2 * np.pi))
def test_nonnegative_and_periodic(d, phi):
    a = weighted_dipole_squared(d, phi)
    assert a >= 0
    assert a == pytest.approx(weighted_dipole_squared(d, phi + 2 * np.pi), rel=1e-9, abs=1e-75)


@given(dipoles, st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_in_plane_rotation_covariance(d, alpha, phi):
    c, s = np.cos(alpha), np.sin(alpha)
    rot = np.array([c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]])
    a = weighted_dipole_squared(rot, phi)
    b = weighted_dipole_squared(d, phi - alpha)
    assert abs(a - b) <= 1e-12 * max(abs(a), abs(b)) + 1e-12 * np.dot(d, d)


@given(dipoles)
def test_phi_integral_identity(d):
    phi = 2 * np.pi * np.arange(32) / 32
    integral = 2 * np.pi * np.mean(weighted_dipole_squared(d, phi))
    ref = np.pi * dipole_weights(d).d_i_sq
    assert abs(integral - ref) <= 1e-10 * max(ref, 1e-300)
