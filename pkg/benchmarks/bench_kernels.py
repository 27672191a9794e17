"""Time the numba and numpy versions of the quadrature hot loops.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both variants get identical node sets, so the script also reports the
largest relative difference between their results. The numba variants are
called once before timing to keep compilation out of the numbers.
"""
import argparse
import time

import numpy as np

from qfshift import _kernels
from qfshift.atom import CS_DIPOLE_MAGNITUDE, dipole_vector
from qfshift.kernel import _laguerre, _medium_args, _phi_grid, _xi_nodes
from qfshift.medium import DielectricModel, spectral_markers


def cases(n_kappa, n_phi, n_xi, n_tau):
    model = DielectricModel.sapphire()
    w = spectral_markers(model).omega_l
    z, v_par, v_perp = 10e-9, 300.0, -400.0
    x, wx = _laguerre(n_kappa)
    kappa = x / (2 * z)
    cos_phi, w_phi = _phi_grid(dipole_vector(CS_DIPOLE_MAGNITUDE, "isotropic"), n_phi)
    xi, w_xi = _xi_nodes(model, w, n_xi)
    tau = np.linspace(0.0, 40.0 / model.gamma, n_tau)
    return {
        "resonant_sum": (w, kappa, wx, cos_phi, w_phi, v_par, v_perp, *_medium_args(model), False),
        "nonresonant_sum": (w, kappa, wx, cos_phi, w_phi, v_par, v_perp, xi, w_xi),
        "image_kernel": (tau, z, v_perp, v_par, cos_phi, w_phi),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--n-kappa", type=int, default=128)
    p.add_argument("--n-phi", type=int, default=256)
    p.add_argument("--n-xi", type=int, default=256)
    p.add_argument("--n-tau", type=int, default=200_000)
    args = p.parse_args(argv)

    if not _kernels.numba_kernels:
        print("numba kernels disabled (QFSHIFT_NUMBA=0); timing numpy only")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max rel diff':>14}")
    for name, call in cases(args.n_kappa, args.n_phi, args.n_xi, args.n_tau).items():
        t_np, ref = best_of(_kernels.numpy_kernels[name], call, args.repeat)
        fast = _kernels.numba_kernels.get(name)
        if fast is None:
            print(f"{name:<18}{1e3 * t_np:>12.2f}{'-':>12}{'-':>10}{'-':>14}")
            continue
        fast(*call)
        t_nb, out = best_of(fast, call, args.repeat)
        diff = np.max(np.abs(np.asarray(out) - np.asarray(ref)) / np.max(np.abs(ref)))
        print(f"{name:<18}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>14.1e}")


if __name__ == "__main__":
    main()
