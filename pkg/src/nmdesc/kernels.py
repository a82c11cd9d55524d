"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

Set the environment variable ``NMDESC_NO_NUMBA=1`` before import to force
the numpy path (useful on platforms without a working numba install, and
for the kernel benchmark in ``benchmarks/``). Both paths are deterministic;
they may differ in the last few ulps because of summation order.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("NMDESC_NO_NUMBA", "0") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

__all__ = [
    "USE_NUMBA",
    "masked_residual",
    "masked_grads",
    "logistic_loss_terms",
]


# -- numpy reference implementations ----------------------------------------

def _masked_residual_np(U, V, rows, cols, obs):
    """r_t = <U[rows[t]], V[cols[t]]> - obs[t] over the observed index set."""
    return np.einsum("ij,ij->i", U[rows], V[cols]) - obs


def _masked_grads_np(U, V, rows, cols, resid):
    """Gradients of 0.5*||P_Omega(UV^T - M)||_F^2 given the residual values."""
    gU = np.zeros_like(U)
    gV = np.zeros_like(V)
    np.add.at(gU, rows, resid[:, None] * V[cols])
    np.add.at(gV, cols, resid[:, None] * U[rows])
    return gU, gV


def _logistic_loss_terms_np(z, b):
    """Per-sample stable loss log(1+exp(-b*z)) and weight -b/(1+exp(b*z))."""
    t = -b * z
    loss = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
    w = -b / (1.0 + np.exp(b * z))
    return loss, w


# -- numba implementations ---------------------------------------------------

if USE_NUMBA:

    @njit(cache=True)
    def _masked_residual_nb(U, V, rows, cols, obs):
        p = rows.shape[0]
        r = U.shape[1]
        out = np.empty(p)
        for t in range(p):
            acc = 0.0
            i = rows[t]
            j = cols[t]
            for c in range(r):
                acc += U[i, c] * V[j, c]
            out[t] = acc - obs[t]
        return out

    @njit(cache=True)
    def _masked_grads_nb(U, V, rows, cols, resid):
        r = U.shape[1]
        gU = np.zeros_like(U)
        gV = np.zeros_like(V)
        for t in range(rows.shape[0]):
            i = rows[t]
            j = cols[t]
            rt = resid[t]
            for c in range(r):
                gU[i, c] += rt * V[j, c]
                gV[j, c] += rt * U[i, c]
        return gU, gV

    @njit(cache=True)
    def _logistic_loss_terms_nb(z, b):
        n = z.shape[0]
        loss = np.empty(n)
        w = np.empty(n)
        for i in range(n):
            t = -b[i] * z[i]
            if t > 0.0:
                loss[i] = t + np.log1p(np.exp(-t))
            else:
                loss[i] = np.log1p(np.exp(t))
            w[i] = -b[i] / (1.0 + np.exp(-t))
        return loss, w

    masked_residual = _masked_residual_nb
    masked_grads = _masked_grads_nb
    logistic_loss_terms = _logistic_loss_terms_nb
else:
    masked_residual = _masked_residual_np
    masked_grads = _masked_grads_np
    logistic_loss_terms = _logistic_loss_terms_np
