"""Experiment problem families: sparse logistic regression and low-rank
matrix completion with column-sparse factors.

Both come with seeded generators, evaluation surfaces matching the solver
interfaces, and a plain-text serialization so an instance can be stored and
reloaded bit-identically.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .linalg import RngStream, gaussian_fill, spectral_norm
from .prox import ProxSpec, prox_l0, prox_ridge_l20_columns


# -- generic problem surfaces -------------------------------------------------

@dataclass(frozen=True)
class CompositeProblem:
    """F(x) = f(x) + g(x) with smooth f and prox-friendly g."""

    f_value: Callable
    f_grad: Callable
    g_spec: ProxSpec
    lipschitz: float
    dim: int

    def g_value(self, x):
        return self.g_spec.value(x)

    def g_prox(self, v, tau):
        return prox_l0(v, tau, self.g_spec)

    def objective(self, x):
        return self.f_value(x) + self.g_value(x)


@dataclass(frozen=True)
class BlockProblem:
    """Psi(x, y) = f(x) + g(y) + H(x, y) over two blocks.

    `lipschitz_ball_bounds(R1, R2)` returns (M, L2bar): a Lipschitz modulus
    of grad_x H jointly in (x, y) over balls of radii R1, R2, and the max of
    L2(x) over the x-ball. Used only by the relative-error diagnostics.
    """

    f_value: Callable
    f_prox: Callable
    g_value: Callable
    g_prox: Callable
    H: Callable
    grad_x: Callable
    grad_y: Callable
    L1: Callable
    L2: Callable
    lipschitz_ball_bounds: Optional[Callable] = None

    def objective(self, x, y):
        return self.f_value(x) + self.g_value(y) + self.H(x, y)


# -- zero-norm regularized logistic regression --------------------------------

@dataclass(frozen=True)
class LogRegInstance:
    """Synthetic classification instance with a planted sparse predictor.

    A_tilde has rows (a_i^T, 1); the intercept is the last coordinate and
    is excluded from the zero-norm penalty.
    """

    A_tilde: np.ndarray
    b: np.ndarray
    lam: float
    mu: float
    support: np.ndarray
    x_hat: np.ndarray
    seed: int
    eps: float

    @property
    def n(self):
        return self.A_tilde.shape[0]

    @property
    def p(self):
        return self.A_tilde.shape[1] - 1

    @property
    def s(self):
        return len(self.support)


def gen_logreg(n, p, s, seed, lam=0.1, mu=1e-10):
    """Gaussian design, planted s-sparse predictor, labels b = sign(Ax + eps*1).

    sign(0) maps to +1. Exact zeros in the planted Gaussian entries are
    redrawn so the support size is exactly s.
    """
    if s > p or n < 1:
        raise ValueError("need s <= p and n >= 1")
    rng = RngStream(seed)
    A = gaussian_fill(rng, (n, p))
    support = rng.choice_subset(p, s)
    vals = rng.standard_normal(s)
    while np.any(vals == 0.0):
        zero = vals == 0.0
        vals[zero] = rng.standard_normal(int(zero.sum()))
    x_hat = np.zeros(p)
    x_hat[support] = vals
    eps = float(rng.uniform(0.0, 1.0))
    margin = A @ x_hat + eps
    b = np.where(margin >= 0.0, 1.0, -1.0)
    A_tilde = np.hstack([A, np.ones((n, 1))])
    return LogRegInstance(
        A_tilde=A_tilde, b=b, lam=float(lam), mu=float(mu),
        support=support, x_hat=x_hat, seed=int(seed), eps=eps,
    )


def logreg_value_grad(x, instance):
    """Objective value of the smooth part and its gradient.

    value = sum_i log(1+exp(-b_i (A_tilde x)_i)) + (mu/2)||x||^2, computed
    overflow-safe; gradient = A_tilde^T d + mu*x.
    """
    z = instance.A_tilde @ x
    loss, w = kernels.logistic_loss_terms(z, instance.b)
    value = float(np.sum(loss)) + 0.5 * instance.mu * float(x @ x)
    grad = instance.A_tilde.T @ w + instance.mu * x
    return value, grad


def logreg_problem(instance, lam=None, use_paper_lipschitz=False):
    """CompositeProblem view of an instance.

    The gradient Lipschitz constant defaults to the conservative
    0.25*||A_tilde||^2 + mu; `use_paper_lipschitz` switches to 0.25*||A_tilde||.
    """
    lam = instance.lam if lam is None else float(lam)
    norm_A = spectral_norm(instance.A_tilde, tol=1e-8)
    if use_paper_lipschitz:
        L = 0.25 * norm_A
    else:
        L = 0.25 * norm_A**2 + instance.mu
    spec = ProxSpec(
        kind="l0_vector", lam=lam, mu=0.0,
        skip_indices=frozenset([instance.p]),  # intercept unregularized
    )
    return CompositeProblem(
        f_value=lambda x: logreg_value_grad(x, instance)[0],
        f_grad=lambda x: logreg_value_grad(x, instance)[1],
        g_spec=spec,
        lipschitz=L,
        dim=instance.p + 1,
    )


# -- column-sparse factor model for matrix completion -------------------------

@dataclass(frozen=True)
class McInstance:
    """Matrix-completion instance with non-uniform sampling.

    rows/cols/obs are parallel arrays over the deduplicated index set Omega.
    """

    n1: int
    n2: int
    r_star: int
    r: int
    rows: np.ndarray
    cols: np.ndarray
    obs: np.ndarray
    sigma: float
    lam: float
    mu: float
    U_star: np.ndarray
    V_star: np.ndarray
    seed: int
    samples_requested: int

    @property
    def num_obs(self):
        return len(self.rows)


def mc_row_marginals(n):
    """Non-uniform marginal distribution: 4x weight on indices in
    (n/10, n/5], 2x on [1, n/10], baseline elsewhere (1-based bands;
    overlap at the band boundary takes the larger multiplier)."""
    k = np.arange(1, n + 1, dtype=np.float64)
    mult = np.ones(n)
    mult[k <= n / 10.0] = 2.0
    mult[(k >= n / 10.0) & (k <= n / 5.0)] = 4.0
    return mult / mult.sum()


def gen_mc(n1, n2, r_star, num_samples, sigma, seed, r=None, lam=1.0, mu=1e-10):
    """Rank-r_star ground truth, non-uniform i.i.d. sampling, relative noise.

    Duplicate draws are collapsed, so num_obs <= num_samples. The planted
    factors have i.i.d. standard normal entries. Noise on entry t is
    sigma * (xi_t/||xi||) * ||M*_Omega||_F with xi standard normal.
    """
    if r_star > min(n1, n2) or num_samples > n1 * n2:
        raise ValueError("invalid generator parameters")
    r = 2 * r_star if r is None else int(r)
    rng = RngStream(seed)
    U_star = gaussian_fill(rng, (n1, r_star))
    V_star = gaussian_fill(rng, (n2, r_star))
    p_row = mc_row_marginals(n1)
    p_col = mc_row_marginals(n2)
    draw_rows = rng.multinomial_indices(p_row, num_samples)
    draw_cols = rng.multinomial_indices(p_col, num_samples)
    # collapse duplicates, keeping first-draw order
    seen = dict.fromkeys(zip(draw_rows.tolist(), draw_cols.tolist()))
    pairs = np.array(list(seen), dtype=np.int64)
    rows, cols = pairs[:, 0], pairs[:, 1]
    m_true = np.einsum("ij,ij->i", U_star[rows], V_star[cols])
    xi = rng.standard_normal(len(rows))
    noise_scale = sigma * np.linalg.norm(m_true) / np.linalg.norm(xi)
    obs = m_true + noise_scale * xi
    return McInstance(
        n1=int(n1), n2=int(n2), r_star=int(r_star), r=r,
        rows=rows, cols=cols, obs=obs, sigma=float(sigma),
        lam=float(lam), mu=float(mu), U_star=U_star, V_star=V_star,
        seed=int(seed), samples_requested=int(num_samples),
    )


def mc_H_and_grads(U, V, instance):
    """H = 0.5*||P_Omega(UV^T - M)||_F^2, its partial gradients, and the
    per-block Lipschitz moduli (||V||^2, ||U||^2, spectral squared)."""
    resid = kernels.masked_residual(U, V, instance.rows, instance.cols, instance.obs)
    H = 0.5 * float(resid @ resid)
    gU, gV = kernels.masked_grads(U, V, instance.rows, instance.cols, resid)
    L1 = _spectral_sq(V)
    L2 = _spectral_sq(U)
    return H, gU, gV, L1, L2


def _spectral_sq(X):
    if not np.any(X):
        return 0.0
    return spectral_norm(X, tol=1e-10) ** 2


def mc_problem(instance, lam=None):
    """BlockProblem view: ridge + column-l20 on each factor, masked residual
    coupling. Ball-based Lipschitz bounds use the closed forms for this H."""
    lam = instance.lam if lam is None else float(lam)
    mu = instance.mu
    spec = ProxSpec(kind="ridge_l20_columns", lam=lam, mu=mu)
    obs_norm = float(np.linalg.norm(instance.obs))

    def ball_bounds(R1, R2):
        # grad_U = P_Omega(UV^T - M) V; entrywise |P_Omega| <= identity.
        # Lipschitz in U at fixed V: ||V||^2 <= R2^2. Lipschitz in V:
        # ||U||*||V||*dV + (||U||*||V'|| + ||M_Omega||_F)*dV.
        M = R2**2 + 2.0 * R1 * R2 + obs_norm
        L2bar = R1**2
        return M, L2bar

    return BlockProblem(
        f_value=spec.value,
        f_prox=lambda v, tau: prox_ridge_l20_columns(v, tau, spec),
        g_value=spec.value,
        g_prox=lambda v, tau: prox_ridge_l20_columns(v, tau, spec),
        H=lambda U, V: mc_H_and_grads(U, V, instance)[0],
        grad_x=lambda U, V: kernels.masked_grads(
            U, V, instance.rows, instance.cols,
            kernels.masked_residual(U, V, instance.rows, instance.cols, instance.obs),
        )[0],
        grad_y=lambda U, V: kernels.masked_grads(
            U, V, instance.rows, instance.cols,
            kernels.masked_residual(U, V, instance.rows, instance.cols, instance.obs),
        )[1],
        L1=lambda V: _spectral_sq(V),
        L2=lambda U: _spectral_sq(U),
        lipschitz_ball_bounds=ball_bounds,
    )


# -- instance metrics ----------------------------------------------------------

def sparsity_metrics(x=None, factors=None, skip_indices=()):
    """Support size of a vector (excluding skip indices) or nonzero-column
    counts of a factor pair."""
    if x is not None:
        x = np.asarray(x)
        keep = np.ones(len(x), dtype=bool)
        for i in skip_indices:
            keep[i] = False
        return {"support": int(np.count_nonzero(x[keep]))}
    U, V = factors
    return {
        "cols_U": int(np.count_nonzero(np.any(U != 0.0, axis=0))),
        "cols_V": int(np.count_nonzero(np.any(V != 0.0, axis=0))),
    }


# -- plain-text serialization ---------------------------------------------------

def _fmt_row(values):
    return " ".join(format(float(v), ".17g") for v in values)


def save_instance(path, instance):
    """Write an instance to the self-describing text format."""
    with open(path, "w") as f:
        if isinstance(instance, LogRegInstance):
            f.write(
                f"logreg n={instance.n} p={instance.p} s={instance.s} "
                f"seed={instance.seed} lambda={instance.lam:.17g} "
                f"mu={instance.mu:.17g} eps={instance.eps:.17g}\n"
            )
            for row in instance.A_tilde[:, :-1]:
                f.write(_fmt_row(row) + "\n")
            f.write(_fmt_row(instance.b) + "\n")
            f.write(_fmt_row(instance.x_hat) + "\n")
            f.write(" ".join(str(i) for i in instance.support) + "\n")
        elif isinstance(instance, McInstance):
            f.write(
                f"mc n1={instance.n1} n2={instance.n2} rstar={instance.r_star} "
                f"r={instance.r} samples={instance.samples_requested} "
                f"seed={instance.seed} sigma={instance.sigma:.17g} "
                f"lambda={instance.lam:.17g} mu={instance.mu:.17g}\n"
            )
            for row in instance.U_star:
                f.write(_fmt_row(row) + "\n")
            for row in instance.V_star:
                f.write(_fmt_row(row) + "\n")
            f.write(" ".join(str(i) for i in instance.rows) + "\n")
            f.write(" ".join(str(i) for i in instance.cols) + "\n")
            f.write(_fmt_row(instance.obs) + "\n")
        else:
            raise TypeError(f"cannot serialize {type(instance).__name__}")


def load_instance(path):
    with open(path) as f:
        header = f.readline().split()
        kind = header[0]
        params = dict(tok.split("=", 1) for tok in header[1:])
        if kind == "logreg":
            n, p, s = int(params["n"]), int(params["p"]), int(params["s"])
            A = np.array([f.readline().split() for _ in range(n)], dtype=np.float64)
            b = np.array(f.readline().split(), dtype=np.float64)
            x_hat = np.array(f.readline().split(), dtype=np.float64)
            support = np.array(f.readline().split(), dtype=np.int64)
            A_tilde = np.hstack([A, np.ones((n, 1))])
            return LogRegInstance(
                A_tilde=A_tilde, b=b, lam=float(params["lambda"]),
                mu=float(params["mu"]), support=support, x_hat=x_hat,
                seed=int(params["seed"]), eps=float(params["eps"]),
            )
        if kind == "mc":
            n1, n2 = int(params["n1"]), int(params["n2"])
            r_star = int(params["rstar"])
            U_star = np.array([f.readline().split() for _ in range(n1)], dtype=np.float64)
            V_star = np.array([f.readline().split() for _ in range(n2)], dtype=np.float64)
            rows = np.array(f.readline().split(), dtype=np.int64)
            cols = np.array(f.readline().split(), dtype=np.int64)
            obs = np.array(f.readline().split(), dtype=np.float64)
            return McInstance(
                n1=n1, n2=n2, r_star=r_star, r=int(params["r"]),
                rows=rows, cols=cols, obs=obs, sigma=float(params["sigma"]),
                lam=float(params["lambda"]), mu=float(params["mu"]),
                U_star=U_star, V_star=V_star, seed=int(params["seed"]),
                samples_requested=int(params["samples"]),
            )
        raise ValueError(f"unknown instance kind {kind!r}")
