#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Covers the two hot paths: batch dual-root solving over many material points
and the discrete stored-energy/gradient evaluation driving the oracle.
Set CDT_NO_NUMBA=1 to confirm the fallback is what ships without numba.
"""
import time

import numpy as np

from triality import LogNeoHookeanEnergy, QuadraticEnergy, QuadraticMeasure
from triality import _kernels as K
from triality.canonical import KIND_LOG_NEOHOOKEAN, KIND_QUADRATIC, kind_params
from triality.dualsolve import _closed_form_geometry


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (JIT compilation for the numba path)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_roots(n_points=200_000):
    rng = np.random.default_rng(0)
    rows = []
    for energy, m in ((QuadraticEnergy(1.0), QuadraticMeasure(0.5, -1.0)),
                      (LogNeoHookeanEnergy(1.0, 1.0), QuadraticMeasure(1.0, 0.0))):
        kind, p1, p2 = kind_params(energy)
        zc, eta_sq, z0 = _closed_form_geometry(energy, m, "derived")
        tau_sq = rng.uniform(0.0, 2.0, size=n_points)
        args = (kind, p1, p2, m.b, 4.0 * m.a, tau_sq, 1e-12, 200, zc, eta_sq, z0)
        t_np = timeit(K.solve_roots_batch_numpy, *args)
        t_nb = timeit(K.solve_roots_batch_numba, *args) if K.HAS_NUMBA else None
        rows.append((f"dual roots / {type(energy).__name__} ({n_points} pts)", t_np, t_nb))
    return rows


def bench_energy(n=256):
    rng = np.random.default_rng(1)
    u2 = np.cumsum(np.cumsum(rng.uniform(0.01, 0.05, size=(n, n)), axis=0), axis=1)
    g2 = np.empty_like(u2)
    u1 = np.cumsum(rng.uniform(0.01, 0.05, size=n * n))
    g1 = np.empty_like(u1)
    rows = []
    for label, np_fn, nb_fn, args in (
        (f"energy+grad 1-D ({n * n} nodes)", K.stored_energy_grad_1d_numpy,
         getattr(K, "stored_energy_grad_1d_numba", None),
         (u1, 1e-3, KIND_QUADRATIC, 1.0, 0.0, 0.5, -1.0, g1)),
        (f"energy+grad 2-D ({n}x{n}, log model)", K.stored_energy_grad_2d_numpy,
         getattr(K, "stored_energy_grad_2d_numba", None),
         (u2, 1e-2, 1e-2, KIND_LOG_NEOHOOKEAN, 1.0, 1.0, 1.0, 0.0, g2)),
    ):
        t_np = timeit(np_fn, *args)
        t_nb = timeit(nb_fn, *args) if nb_fn is not None else None
        rows.append((label, t_np, t_nb))
    return rows


def main():
    print(f"kernel backend selected at import: {K.backend()}")
    print(f"numba kernels built: {K.HAS_NUMBA}")
    print()
    rows = bench_roots() + bench_energy()
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for label, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{label:<{width}}  {t_np * 1e3:>8.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{label:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms  {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
