"""Quadrature hot loops over (kappa, phi[, xi]) nodes.

Each kernel has a numba version and a vectorised numpy twin with identical
summation semantics; ``_accel.USE_NUMBA`` selects which one the public names
point at. The numba versions accumulate in a fixed node order, so results are
bit-reproducible run to run.

Shared argument conventions:
    kappa, w_kappa  Gauss-Laguerre nodes/weights (any consistent scaling)
    cos_phi, w_phi  cos of the periodic nodes and their weights, the latter
                    already multiplied by the angular dipole weight
    v_par, v_perp   in-plane and normal velocity components
    eta, wp2, wt2, gamma   medium parameters (wp2 = omega_p**2, wt2 = omega_t**2)
"""
import numpy as np

from ._accel import USE_NUMBA, njit


@njit(cache=True, nogil=True)
def _rp_scalar(w, eta, wp2, wt2, gamma):
    den = w * w - wt2 + 1j * gamma * w
    return ((eta - 1.0) * den - eta * wp2) / ((eta + 1.0) * den - eta * wp2)


@njit(cache=True, nogil=True)
def _resonant_sum_numba(omega, kappa, w_kappa, cos_phi, w_phi, v_par, v_perp,
                        eta, wp2, wt2, gamma, pointwise_step):
    total = 0.0j
    for i in range(kappa.shape[0]):
        k = kappa[i]
        row = 0.0j
        for j in range(cos_phi.shape[0]):
            wp = omega + k * v_par * cos_phi[j] - 1j * k * v_perp
            if pointwise_step and wp.real <= 0.0:
                continue
            row += w_phi[j] * _rp_scalar(wp, eta, wp2, wt2, gamma)
        total += w_kappa[i] * row
    return total


def _resonant_sum_numpy(omega, kappa, w_kappa, cos_phi, w_phi, v_par, v_perp,
                        eta, wp2, wt2, gamma, pointwise_step):
    wp = omega + kappa[:, None] * (v_par * cos_phi[None, :] - 1j * v_perp)
    den = wp * wp - wt2 + 1j * gamma * wp
    rp = ((eta - 1.0) * den - eta * wp2) / ((eta + 1.0) * den - eta * wp2)
    if pointwise_step:
        rp = np.where(wp.real > 0.0, rp, 0.0)
    return complex(np.sum(w_kappa * (rp @ w_phi)))


@njit(cache=True, nogil=True)
def _nonresonant_sum_numba(omega, kappa, w_kappa, cos_phi, w_phi, v_par, v_perp,
                           xi, w_xi):
    # w_xi already contains the Jacobian and r_p(i xi)
    xi2 = xi * xi
    total = 0.0j
    for i in range(kappa.shape[0]):
        k = kappa[i]
        row = 0.0j
        for j in range(cos_phi.shape[0]):
            wp = omega + k * v_par * cos_phi[j] - 1j * k * v_perp
            wp2_ = wp * wp
            acc = 0.0j
            for m in range(xi.shape[0]):
                acc += w_xi[m] / (wp2_ + xi2[m])
            row += w_phi[j] * wp * acc
        total += w_kappa[i] * row
    return total


def _nonresonant_sum_numpy(omega, kappa, w_kappa, cos_phi, w_phi, v_par, v_perp,
                           xi, w_xi):
    xi2 = xi * xi
    total = 0.0j
    # chunk over kappa to bound memory at n_phi * n_xi complex per row
    for i in range(kappa.shape[0]):
        wp = omega + kappa[i] * (v_par * cos_phi - 1j * v_perp)
        acc = (w_xi[None, :] / (wp[:, None] ** 2 + xi2[None, :])).sum(axis=1)
        total += w_kappa[i] * np.sum(w_phi * wp * acc)
    return complex(total)


@njit(cache=True, nogil=True)
def _image_kernel_numba(tau, z_a, v_perp, v_par, cos_phi, w_phi):
    out = np.empty(tau.shape[0], dtype=np.complex128)
    for n in range(tau.shape[0]):
        acc = 0.0j
        base = 2.0 * z_a - v_perp * tau[n]
        for j in range(cos_phi.shape[0]):
            den = base - 1j * v_par * tau[n] * cos_phi[j]
            acc += w_phi[j] / (den * den * den)
        out[n] = acc
    return out


def _image_kernel_numpy(tau, z_a, v_perp, v_par, cos_phi, w_phi):
    out = np.empty(tau.shape[0], dtype=complex)
    step = 4096
    for start in range(0, tau.shape[0], step):
        t = tau[start:start + step, None]
        den = 2.0 * z_a - v_perp * t - 1j * v_par * t * cos_phi[None, :]
        out[start:start + step] = (w_phi[None, :] / den**3).sum(axis=1)
    return out


numpy_kernels = {
    "resonant_sum": _resonant_sum_numpy,
    "nonresonant_sum": _nonresonant_sum_numpy,
    "image_kernel": _image_kernel_numpy,
}

if USE_NUMBA:
    numba_kernels = {
        "resonant_sum": _resonant_sum_numba,
        "nonresonant_sum": _nonresonant_sum_numba,
        "image_kernel": _image_kernel_numba,
    }
    resonant_sum = _resonant_sum_numba
    nonresonant_sum = _nonresonant_sum_numba
    image_kernel = _image_kernel_numba
else:
    numba_kernels = {}
    resonant_sum = _resonant_sum_numpy
    nonresonant_sum = _nonresonant_sum_numpy
    image_kernel = _image_kernel_numpy
