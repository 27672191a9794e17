import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfshift.errors import CapabilityError, SingularityError
from qfshift.medium import (
    MAX_DERIVATIVE_ORDER,
    DielectricModel,
    permittivity,
    permittivity_imag_axis,
    reflection_p,
    reflection_p_derivative,
    reflection_p_imag_axis,
    reflection_poles,
    scaled_reflection_derivatives,
    spectral_markers,
)

import oracles

# mpmath series-division oracle at omega_L of the sapphire model (frozen)
DERIVATIVES_AT_OMEGA_L = {
    1: -1.2687776503537265e-11 - 8.857510471053884e-14j,
    2: 1.7033673982795932e-25 - 1.626558737000701e-23j,
    3: 3.12784511678345e-35 + 4.367502283053424e-37j,
    8: -7.14646685138457e-94 + 2.2740828479098937e-92j,
    16: -1.9961604399318544e-182 + 3.359979778814743e-181j,
    24: -2.4800373280677147e-269 + 2.834745999755288e-268j,
}

models = st.builds(
    DielectricModel.from_ratios,
    eta=st.floats(1.0, 10.0),
    omega_t=st.floats(1e13, 1e15),
    omega_p_over_omega_t=st.floats(0.1, 3.0),
    gamma_over_omega_t=st.floats(1e-3, 0.5),
)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


class TestModel:
    def test_sapphire_parameters(self, sapphire):
        assert sapphire.eta == 2.71
        assert sapphire.omega_t == 1.56e14
        assert sapphire.omega_p == pytest.approx(1.2 * 1.56e14, rel=1e-15)
        assert sapphire.gamma == pytest.approx(3.12e12, rel=1e-15)

    @pytest.mark.parametrize("field, value", [("eta", 0.5), ("omega_t", 0.0), ("gamma", -1.0),
                                              ("omega_p", -1.0)])
    def test_invalid(self, field, value):
        kw = dict(eta=2.0, omega_p=1.0, omega_t=1.0, gamma=0.1)
        kw[field] = value
        with pytest.raises(ValueError, match=field):
            DielectricModel(**kw)


class TestPermittivity:
    def test_static_value(self, sapphire):
        assert permittivity(sapphire, 0.0) == pytest.approx(6.6124, rel=1e-12)

    def test_high_frequency_limit(self, sapphire):
        assert rel(permittivity(sapphire, 1e6 * sapphire.omega_t), sapphire.eta) < 1e-10

    def test_at_resonance(self, sapphire):
        eps = permittivity(sapphire, sapphire.omega_t)
        assert eps.real == pytest.approx(2.71, rel=1e-12)
        assert eps.imag == pytest.approx(195.12, rel=1e-12)

    def test_pole_raises(self):
        # gamma -> tiny is still fine; the pole of eps sits at complex omega
        m = DielectricModel(2.0, 1.0, 1.0, 0.5)
        pole = -0.25j + np.sqrt(1 - 0.0625 + 0j)
        with pytest.raises(SingularityError) as info:
            permittivity(m, pole)
        assert info.value.omega == pole

    def test_array_input(self, sapphire):
        w = np.array([0.0, sapphire.omega_t])
        out = permittivity(sapphire, w)
        assert out.shape == (2,)
        assert out[0] == pytest.approx(6.6124)

    @given(models, st.floats(-3.0, 3.0), st.floats(1e-3, 3.0))
    def test_schwarz_symmetry(self, m, re, im):
        w = (re + 1j * im) * m.omega_t
        a = permittivity(m, -np.conj(w))
        b = np.conj(permittivity(m, w))
        assert rel(a, b) < 1e-12

    @given(models, st.floats(1e-3, 1e3))
    def test_imaginary_axis_real(self, m, x):
        xi = x * m.omega_t
        assert isinstance(permittivity_imag_axis(m, xi), float)
        assert isinstance(reflection_p_imag_axis(m, xi), float)
        assert rel(permittivity(m, 1j * xi), permittivity_imag_axis(m, xi)) < 1e-12

    @given(models, st.floats(1e-3, 1e3))
    def test_passivity(self, m, x):
        assert permittivity(m, x * m.omega_t).imag > 0


class TestReflection:
    def test_vacuum(self):
        vac = DielectricModel.constant(1.0)
        assert reflection_p(vac, 1.3e14) == 0
        assert reflection_p_imag_axis(vac, 1e14) == 0

    def test_perfect_conductor_limit(self):
        assert abs(reflection_p(DielectricModel.constant(1e12), 1e14) - 1.0) < 1e-11

    def test_imaginary_axis_value(self, sapphire):
        xi = sapphire.omega_t
        # 2.71 * (1 + 1.44 / 2.02) = 4.64188... (quoted to four places as 4.6417)
        assert permittivity_imag_axis(sapphire, xi) == pytest.approx(4.6417, rel=1e-4)
        assert reflection_p_imag_axis(sapphire, xi) == pytest.approx(0.6455, rel=1e-4)
        assert rel(reflection_p(sapphire, 1j * xi), reflection_p_imag_axis(sapphire, xi)) < 1e-12

    def test_matches_direct_formula(self, sapphire):
        w = np.linspace(0.5, 2.0, 31) * sapphire.omega_t
        eps = permittivity(sapphire, w)
        assert np.allclose(reflection_p(sapphire, w), (eps - 1) / (eps + 1), rtol=1e-12)

    def test_surface_mode_pole(self, sapphire):
        _, _, w1, _ = reflection_poles(sapphire)
        with pytest.raises(SingularityError):
            reflection_p(sapphire, w1)

    def test_bulk_pole_cancels(self, sapphire):
        # eps has a pole where D = 0, r_p does not
        g, wt = sapphire.gamma, sapphire.omega_t
        w = -0.5j * g + np.sqrt(wt**2 - 0.25 * g**2 + 0j)
        with pytest.raises(SingularityError):
            permittivity(sapphire, w)
        assert reflection_p(sapphire, w) == pytest.approx(1.0)

    @given(models, st.floats(0.1, 5.0))
    def test_partial_fractions(self, m, x):
        a, b, w1, w2 = reflection_poles(m)
        w = x * m.omega_t
        pf = a + (b / (w - w1) ** 2 if w1 == w2 else b * (1 / (w - w1) - 1 / (w - w2)))
        assert rel(pf, reflection_p(m, w)) < 1e-9


class TestDerivatives:
    @pytest.mark.parametrize("order", sorted(DERIVATIVES_AT_OMEGA_L))
    def test_against_series_division(self, sapphire, omega_l, order):
        val = reflection_p_derivative(sapphire, omega_l, order)
        assert rel(val, DERIVATIVES_AT_OMEGA_L[order]) < 1e-11

    def test_first_order_finite_difference(self, sapphire, omega_l):
        h = 1e-6 * omega_l
        fd = (reflection_p(sapphire, omega_l + h) - reflection_p(sapphire, omega_l - h)) / (2 * h)
        assert rel(reflection_p_derivative(sapphire, omega_l, 1), fd) < 1e-6

    def test_second_order_finite_difference(self, sapphire, omega_l):
        h = 1e-5 * omega_l
        r = lambda w: reflection_p(sapphire, w)
        fd = (r(omega_l + h) - 2 * r(omega_l) + r(omega_l - h)) / h**2
        assert rel(reflection_p_derivative(sapphire, omega_l, 2), fd) < 1e-5

    def test_constant_model(self):
        assert reflection_p_derivative(DielectricModel.constant(3.0), 1e14, 1) == 0

    def test_order_zero(self, sapphire, omega_l):
        assert reflection_p_derivative(sapphire, omega_l, 0) == reflection_p(sapphire, omega_l)

    def test_capability(self, sapphire, omega_l):
        with pytest.raises(CapabilityError):
            reflection_p_derivative(sapphire, omega_l, MAX_DERIVATIVE_ORDER + 1)

    @pytest.mark.parametrize("order", [-1, 1.5])
    def test_bad_order(self, sapphire, omega_l, order):
        with pytest.raises(ValueError):
            reflection_p_derivative(sapphire, omega_l, order)

    def test_pole_proximity(self, sapphire):
        _, _, w1, _ = reflection_poles(sapphire)
        with pytest.raises(SingularityError):
            reflection_p_derivative(sapphire, w1, 3)

    def test_scaled_matches_unscaled(self, sapphire, omega_l):
        s = 0.37j * sapphire.gamma
        scaled = scaled_reflection_derivatives(sapphire, omega_l, s, 10)
        for j in range(11):
            assert rel(scaled[j], s**j * reflection_p_derivative(sapphire, omega_l, j)) < 1e-12

    def test_critically_damped(self):
        # wL^2 = gamma^2 / 4 puts both poles together
        m = DielectricModel(eta=1.0, omega_p=np.sqrt(2.0 * (1.0 - 0.0)), omega_t=1.0, gamma=2.0 * np.sqrt(2.0))
        _, _, w1, w2 = reflection_poles(m)
        assert w1 == w2
        for j in (1, 2, 5):
            ref = oracles.rp_derivative_mp(m.eta, m.omega_p, m.omega_t, m.gamma, 0.7, j)
            assert rel(reflection_p_derivative(m, 0.7, j), ref) < 1e-10

    @given(models, st.floats(0.2, 4.0), st.integers(1, 3))
    def test_finite_difference_property(self, m, x, order):
        w = x * m.omega_t
        ref = oracles.rp_derivative_mp(m.eta, m.omega_p, m.omega_t, m.gamma, w, order)
        # differences taken in 40-digit arithmetic so the small step is harmless
        h = oracles.mp.mpf(1e-6 * min(m.gamma, w))
        w = oracles.mp.mpf(w)
        r = lambda t: oracles.rp_mp(m.eta, m.omega_p, m.omega_t, m.gamma, t)
        if order == 1:
            fd = (r(w + h) - r(w - h)) / (2 * h)
        elif order == 2:
            fd = (r(w + h) - 2 * r(w) + r(w - h)) / h**2
        else:
            fd = (r(w + 2 * h) - 2 * r(w + h) + 2 * r(w - h) - r(w - 2 * h)) / (2 * h**3)
        assert rel(complex(fd), ref) < 1e-5
        assert rel(reflection_p_derivative(m, float(w), order), ref) < 1e-9


class TestMarkers:
    def test_sapphire(self, sapphire):
        mk = spectral_markers(sapphire)
        assert mk.omega_l == pytest.approx(2.2345e14, rel=1e-4)
        assert mk.omega_plus - mk.omega_l == pytest.approx(1.56e12, rel=1e-12)

    def test_omega_p_to_zero(self):
        m = DielectricModel(2.0, 1e-9, 1e14, 1e12)
        assert spectral_markers(m).omega_l == pytest.approx(1e14, rel=1e-15)

    @given(models)
    def test_rate_maximum_is_near_omega_l(self, m):
        # Im r_p peaks at omega_L up to O(gamma^2) corrections
        mk = spectral_markers(m)
        assert mk.omega_plus == mk.omega_l + 0.5 * m.gamma
        w = np.linspace(0.9, 1.1, 4001) * mk.omega_l
        peak = w[np.argmax(reflection_p(m, w).imag)]
        assert abs(peak - mk.omega_l) < 0.6 * m.gamma**2 / mk.omega_l + 2 * (w[1] - w[0])
