"""Timing comparison of the compiled kernels against the NumPy fallback.

Times the two hot paths on baseline-sized problems: response batches as
used by the correlation quadrature, and Monte Carlo trial batches as used
by the sweeps. Both backends are imported directly so a single run
reports the speedup without environment toggles.

Usage: python benchmarks/bench_kernels.py [--trials 4096] [--repeats 5]
"""
import argparse
import time

import numpy as np

from nfris._kernels import _numpy
from nfris.channel import color_factor, complex_normal
from nfris.experiments import baseline_scenario
from nfris.geometry import build_grid

try:
    from nfris._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def response_case(rng):
    spec = baseline_scenario()
    grid = build_grid(spec.geometry())
    n_points = 8 * 32 * 32  # the default quadrature tensor
    points = np.column_stack([
        rng.uniform(5.0, 30.0, n_points),
        rng.uniform(-1.0, 1.0, n_points),
        rng.uniform(-1.0, 1.0, n_points),
    ])
    coords = grid.coordinates
    wavelength = grid.geometry.wavelength
    label = f"response_matrix  {n_points} points x {grid.n_elements} elements"
    return label, lambda impl: impl.response_matrix(points, coords, wavelength, True)


def mc_case(rng, trials):
    model = baseline_scenario().build()
    l_h, l_g, l_e = model.factors
    n = model.grid.n_elements
    n_uses = 15
    vh = complex_normal(rng, (trials, l_h.rank))
    vg = complex_normal(rng, (trials, l_g.rank))
    ve = complex_normal(rng, (trials, n_uses, l_e.rank))
    vz = complex_normal(rng, (trials, n_uses))
    phi = np.exp(2j * np.pi * rng.random((n_uses, n)))
    lam_t = np.ascontiguousarray(complex_normal(rng, (n, n_uses)).T / n)
    args = (vh, vg, ve, vz, l_h.transposed, l_g.transposed, l_e.transposed,
            phi, lam_t, 1.0, 0.56, 1.0)
    label = f"mc_trial_errors  {trials} trials, {n_uses} uses x {n} elements"
    return label, lambda impl: impl.mc_trial_errors(*args)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=4096,
                        help="Monte Carlo batch size (default 4096)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats, best-of reported (default 5)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = [response_case(rng), mc_case(rng, args.trials)]

    if _fast is None:
        print("compiled extension not built; timing the NumPy backend only")
    for label, call in cases:
        call(_numpy)  # warm both paths before timing
        t_numpy = best_of(lambda: call(_numpy), args.repeats)
        line = f"{label:48s} numpy {t_numpy * 1e3:8.2f} ms"
        if _fast is not None:
            call(_fast)
            t_fast = best_of(lambda: call(_fast), args.repeats)
            line += f"   compiled {t_fast * 1e3:8.2f} ms   speedup {t_numpy / t_fast:5.2f}x"
        print(line)


if __name__ == "__main__":
    main()
