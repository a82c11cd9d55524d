"""Compare the compiled and pure-numpy kernel paths.

Run twice to cover both backends:

    python3 benchmarks/bench_kernels.py
    NMDESC_NO_NUMBA=1 python3 benchmarks/bench_kernels.py

Each kernel is timed over repeated calls after a warm-up (which also pays
any compilation cost), and the two paths are cross-checked for agreement
on the same inputs.
"""

import time

import numpy as np

from nmdesc import kernels
from nmdesc.kernels import (
    _logistic_loss_terms_np,
    _masked_grads_np,
    _masked_residual_np,
)


def timeit(fn, *args, repeat=20):
    fn(*args)  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n1, n2, r, m = 500, 500, 10, 40000
    U = rng.standard_normal((n1, r))
    V = rng.standard_normal((n2, r))
    rows = rng.integers(0, n1, m)
    cols = rng.integers(0, n2, m)
    obs = rng.standard_normal(m)
    z = rng.standard_normal(200000)
    b = np.where(rng.standard_normal(200000) >= 0, 1.0, -1.0)

    backend = "numba" if kernels.USE_NUMBA else "numpy"
    print(f"active backend: {backend}")

    resid = kernels.masked_residual(U, V, rows, cols, obs)
    resid_ref = _masked_residual_np(U, V, rows, cols, obs)
    assert np.allclose(resid, resid_ref, rtol=1e-12, atol=1e-12)
    gU, gV = kernels.masked_grads(U, V, rows, cols, resid)
    gU_ref, gV_ref = _masked_grads_np(U, V, rows, cols, resid)
    assert np.allclose(gU, gU_ref, rtol=1e-10, atol=1e-10)
    assert np.allclose(gV, gV_ref, rtol=1e-10, atol=1e-10)
    loss, w = kernels.logistic_loss_terms(z, b)
    loss_ref, w_ref = _logistic_loss_terms_np(z, b)
    assert np.allclose(loss, loss_ref, rtol=1e-12, atol=1e-12)
    assert np.allclose(w, w_ref, rtol=1e-12, atol=1e-12)
    print("cross-check against numpy reference: ok")

    cases = [
        ("masked_residual", kernels.masked_residual, (U, V, rows, cols, obs)),
        ("masked_grads", kernels.masked_grads, (U, V, rows, cols, resid)),
        ("logistic_loss_terms", kernels.logistic_loss_terms, (z, b)),
    ]
    for name, fn, args in cases:
        best = timeit(fn, *args)
        print(f"{name:22s} {best * 1e3:9.3f} ms  [{backend}]")


if __name__ == "__main__":
    main()
