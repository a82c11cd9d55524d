"""Shared test fixtures and toy problems."""

import numpy as np

from nmdesc.problems import CompositeProblem
from nmdesc.prox import ProxSpec


def quadratic_problem(A=None, dim=2, lam=0.0):
    """F(x) = 0.5*x'Ax + lam*||x||_0 with A symmetric positive definite
    (identity by default)."""
    if A is None:
        A = np.eye(dim)
    A = np.asarray(A, dtype=np.float64)
    L = float(np.linalg.eigvalsh(A).max())
    return CompositeProblem(
        f_value=lambda x: 0.5 * float(x @ (A @ x)),
        f_grad=lambda x: A @ x,
        g_spec=ProxSpec(kind="l0_vector", lam=lam),
        lipschitz=L,
        dim=A.shape[0],
    )


def flat_problem(dim=2):
    """F identically zero: every point is a fixed point."""
    return CompositeProblem(
        f_value=lambda x: 0.0,
        f_grad=lambda x: np.zeros_like(x),
        g_spec=ProxSpec(kind="l0_vector", lam=0.0),
        lipschitz=1.0,
        dim=dim,
    )
