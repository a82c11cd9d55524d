"""Proximal gradient with extrapolation and nonmonotone line search, its
degenerations, and the FISTA / restarted-FISTA baselines.

The solver state carries the iterate pair z^k = (x^k, x^{k-1}); acceptance
is tested on the potential H_delta(z) = F(x) + (delta/2)*||x - u||^2. Named
variants:

* pgenls -- full method (window m > 0, extrapolation on)
* pgnls  -- beta_max = 0
* pgels  -- m = 0
* pgls   -- delta = 0, beta_max = 0, m = 0 (plain monotone line search)
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .nls import HistoryWindow, window_max, accept, backtrack_params, BacktrackCapError
from .trace import TraceRecord


@dataclass
class PgConfig:
    m: int = 5
    delta: float = 0.01
    alpha: float = 1e-5
    tau_min: float = None  # default 1e-3/(2*(alpha+delta)+L) at validation
    tau_max: float = 1e6
    beta_max: float = 1.0
    eta1: float = 0.05
    eta2: float = 0.1
    max_backtracks: int = 60
    stop_tol: float = 1e-8
    max_iters: int = 1000
    time_budget: float = math.inf
    tau0: float = None  # default 1/L; logistic experiments use 10/||A~||
    beta_rule: str = "nesterov"  # or "constant" (beta_{k,0} = beta_max)

    def validated(self, lipschitz):
        """Fill step-bound defaults from L and check the config invariants."""
        cfg = replace(self)
        L = float(lipschitz)
        if cfg.delta == 0.0:
            if cfg.beta_max != 0.0 or cfg.m != 0:
                raise ValueError("delta=0 requires beta_max=0 and m=0")
        elif not 0.0 < cfg.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if cfg.delta > 0.0 and not 0.0 < cfg.alpha < cfg.delta / 2.0:
            raise ValueError("alpha must lie in (0, delta/2)")
        if cfg.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        barrier = 1.0 / (2.0 * (cfg.alpha + cfg.delta) + L)
        if cfg.tau_min is None:
            cfg.tau_min = 1e-3 * barrier
        if not 0.0 < cfg.tau_min <= barrier < cfg.tau_max:
            raise ValueError(
                f"need 0 < tau_min <= {barrier:.3e} < tau_max for this problem"
            )
        if cfg.tau0 is None:
            cfg.tau0 = 1.0 / L
        if not (0 < cfg.eta1 < 1 and 0 < cfg.eta2 < 1):
            raise ValueError("eta1, eta2 must lie in (0, 1)")
        if cfg.beta_rule not in ("nesterov", "constant"):
            raise ValueError("beta_rule must be 'nesterov' or 'constant'")
        return cfg


PG_VARIANTS = {
    "pgenls": {},
    "pgnls": {"beta_max": 0.0},
    "pgels": {"m": 0},
    "pgls": {"delta": 0.0, "beta_max": 0.0, "m": 0},
}


def variant_config(name, base=None):
    """PgConfig for a named variant, starting from `base` (or defaults)."""
    if name not in PG_VARIANTS:
        raise ValueError(f"unknown PG variant {name!r}")
    cfg = base if base is not None else PgConfig()
    return replace(cfg, **PG_VARIANTS[name])


@dataclass
class IterateState:
    x: np.ndarray
    x_prev: np.ndarray
    window: HistoryWindow
    t_prev: float = 1.0
    t_cur: float = 1.0
    k: int = 0
    # cached quantities for the BB initialization and the witness replay
    grad_x: np.ndarray = None          # grad f(x^k)
    grad_x_prev: np.ndarray = None     # grad f(x^{k-1})
    x_prev2: np.ndarray = None         # x^{k-2}
    tau_init_prev: float = None
    y_last: np.ndarray = None          # y^{k-1} of the last accepted step
    tau_last: float = None


def _sq(a):
    a = np.ravel(a)
    return float(a @ a)


def potential_H(x, u, problem, delta):
    """H_delta((x, u)) = F(x) + (delta/2)*||x - u||^2."""
    return problem.objective(x) + 0.5 * delta * _sq(x - u)


def nesterov_beta(t_prev, t_cur):
    """Extrapolation weight (t_{k-1}-1)/t_k and the next counter."""
    if t_prev < 1.0 or t_cur < 1.0:
        raise ValueError("Nesterov counters must be >= 1")
    beta0 = (t_prev - 1.0) / t_cur
    t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_cur * t_cur))
    return beta0, t_next


def bb_init_tau(z, z_prev, problem, delta, tau_min, tau_max,
                prev_tau, grads=None):
    """Barzilai-Borwein step initialization on the smoothed pair space.

    z = (x^k, x^{k-1}), z_prev = (x^{k-1}, x^{k-2}). The gradient of the
    smooth part over z = (x, u) is (grad f(x) + delta*(x-u), -delta*(x-u)).
    `grads` may pass precomputed (grad f(x^k), grad f(x^{k-1})).
    """
    x, u = z
    xp, up = z_prev
    dz_a = x - xp
    dz_b = u - up
    dz_sq = _sq(dz_a) + _sq(dz_b)
    if dz_sq == 0.0:
        return prev_tau
    if grads is None:
        gx, gxp = problem.f_grad(x), problem.f_grad(xp)
    else:
        gx, gxp = grads
    dzeta_a = gx + delta * (x - u) - gxp - delta * (xp - up)
    dzeta_b = -delta * (x - u) + delta * (xp - up)
    dzeta_sq = _sq(dzeta_a) + _sq(dzeta_b)
    inner = float(np.ravel(dz_a) @ np.ravel(dzeta_a)) + float(
        np.ravel(dz_b) @ np.ravel(dzeta_b)
    )
    guard = 1e-12 * math.sqrt(dz_sq) * math.sqrt(dzeta_sq)
    if inner <= guard:
        candidate = tau_max
    else:
        candidate = min(dz_sq / inner, inner / dzeta_sq)
    return max(min(candidate, tau_max), tau_min)


def safe_beta_bound_pg(tau, lipschitz, delta):
    """Extrapolation bound under which the acceptance test cannot fail
    (for step sizes below the 1/(2*alpha+2*delta+L) barrier)."""
    radicand = delta * (tau - tau * tau * lipschitz)
    if radicand <= 0.0:
        return 0.0
    return math.sqrt(radicand / (4.0 * (1.0 + tau * lipschitz) ** 2))


def backtrack_bound_pg(tau0, beta0, config, lipschitz):
    """Upper bound on the inner-loop count implied by the safe-step analysis."""
    target = 1.0 / (2.0 * config.alpha + 2.0 * config.delta + lipschitz)
    if tau0 <= target:
        l1 = 0
    else:
        l1 = math.ceil(math.log(target / tau0) / math.log(config.eta2))
    beta_floor = min(
        safe_beta_bound_pg(config.tau_min, lipschitz, config.delta),
        safe_beta_bound_pg(target, lipschitz, config.delta),
    )
    if beta0 <= beta_floor:
        l2 = 0
    elif beta_floor == 0.0:
        l2 = math.inf  # beta must decay to 0; only beta0 == 0 is safe
    else:
        l2 = math.ceil(math.log(beta_floor / beta0) / math.log(config.eta1))
    return l1 + l2 + 1


def subgrad_witness_pg(x_new, x_old, y_last, tau_last, grad_new, grad_y, delta):
    """Subgradient witness at z^{k+1} = (x^{k+1}, x^k), from the prox
    optimality condition of the accepted step (y^k, tau_k)."""
    wa = grad_new - grad_y - (x_new - y_last) / tau_last + delta * (x_new - x_old)
    wb = delta * (x_old - x_new)
    norm = math.sqrt(_sq(wa) + _sq(wb))
    return (wa, wb), norm


def h2_constant_pg(config, lipschitz):
    """Relative-error constant: sqrt(2)*[(L + 1/tau_min)(1+beta_max) + 2*delta]."""
    return math.sqrt(2.0) * (
        (lipschitz + 1.0 / config.tau_min) * (1.0 + config.beta_max)
        + 2.0 * config.delta
    )


@dataclass
class RunResult:
    """Outcome of one solver run.

    `meta` holds one dict per accepted iteration with the line-search
    initializations (beta0, tau0, ...) needed to replay the backtrack-count
    bound; it is diagnostic data, not part of the trace CSV.
    """

    x: object
    records: list
    reason: str
    meta: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


def pg_step(state, problem, config):
    """One outer iteration: backtracking inner loop until acceptance.

    Returns (new state, TraceRecord, init dict). Raises BacktrackCapError
    carrying the last rejected candidate when the inner loop exhausts its
    budget.
    """
    if config.beta_rule == "nesterov":
        beta0, t_next = nesterov_beta(state.t_prev, state.t_cur)
        beta0 = min(beta0, config.beta_max)
    else:
        beta0, t_next = config.beta_max, state.t_cur

    if state.k >= 1 and state.x_prev2 is not None:
        tau0 = bb_init_tau(
            (state.x, state.x_prev),
            (state.x_prev, state.x_prev2),
            problem, config.delta, config.tau_min, config.tau_max,
            prev_tau=state.tau_init_prev,
            grads=(state.grad_x, state.grad_x_prev),
        )
    else:
        tau0 = min(max(config.tau0, config.tau_min), config.tau_max)

    gx = state.grad_x if state.grad_x is not None else problem.f_grad(state.x)
    candidate = None
    for l in range(config.max_backtracks + 1):
        beta, tau = backtrack_params(
            l, beta0, tau0, config.eta1, config.eta2, config.tau_min
        )
        if beta == 0.0:
            y, gy = state.x, gx
        else:
            y = state.x + beta * (state.x - state.x_prev)
            gy = problem.f_grad(y)
        candidate = problem.g_prox(y - tau * gy, tau)
        # with delta = 0 the potential carries no coupling term to pay for
        # the previous step, so the classical single-step criterion applies
        step_sq = _sq(candidate - state.x)
        if config.delta > 0.0:
            step_sq += _sq(state.x - state.x_prev)
        h_cand = potential_H(candidate, state.x, problem, config.delta)
        if accept(h_cand, state.window, config.alpha, step_sq):
            break
    else:
        raise BacktrackCapError(state.k, config.max_backtracks, candidate)

    grad_new = problem.f_grad(candidate)
    _, wnorm = subgrad_witness_pg(
        candidate, state.x, y, tau, grad_new, gy, config.delta
    )

    new_state = IterateState(
        x=candidate,
        x_prev=state.x,
        window=state.window,
        t_prev=state.t_cur,
        t_cur=t_next,
        k=state.k + 1,
        grad_x=grad_new,
        grad_x_prev=gx,
        x_prev2=state.x_prev,
        tau_init_prev=tau0,
        y_last=y,
        tau_last=tau,
    )
    new_state.window.push(state.k + 1, h_cand)
    _, ell = window_max(new_state.window)
    record = TraceRecord(
        k=state.k + 1,
        time_s=0.0,
        objective=problem.objective(candidate),
        potential=h_cand,
        step_norm=math.sqrt(step_sq),
        witness_norm=wnorm,
        beta=beta,
        tau1=tau,
        backtracks=l,
        ell=ell,
    )
    return new_state, record, {"beta0": beta0, "tau0": tau0}


def pg_run(problem, x0, config, trace_sink=None):
    """Run the line-search method from x0 until the stopping rule fires.

    The result's stop reason is "tolerance", "max_iters", or "time_budget".
    """
    cfg = config.validated(problem.lipschitz)
    x0 = np.asarray(x0, dtype=np.float64)
    window = HistoryWindow(cfg.m)
    h0 = potential_H(x0, x0, problem, cfg.delta)
    window.push(0, h0)
    state = IterateState(x=x0.copy(), x_prev=x0.copy(), window=window)
    records = [
        TraceRecord(
            k=0, time_s=0.0, objective=problem.objective(x0), potential=h0,
            step_norm=0.0, witness_norm=math.inf, beta=0.0, tau1=0.0, ell=0,
        )
    ]
    if trace_sink:
        trace_sink(records[0])
    start = time.perf_counter()
    reason = "max_iters"
    meta = []
    for _ in range(cfg.max_iters):
        try:
            state, rec, init = pg_step(state, problem, cfg)
        except BacktrackCapError as e:
            e.records = records  # trace so far, for persistence by callers
            raise
        rec.time_s = time.perf_counter() - start
        records.append(rec)
        meta.append(init)
        if trace_sink:
            trace_sink(rec)
        scale = max(1.0, math.sqrt(_sq(state.x)))
        if rec.witness_norm <= cfg.stop_tol * scale:
            reason = "tolerance"
            break
        if rec.time_s > cfg.time_budget:
            reason = "time_budget"
            break
    return RunResult(
        x=state.x, records=records, reason=reason, meta=meta,
        extras={"config": cfg, "h2_bound": h2_constant_pg(cfg, problem.lipschitz)},
    )


# -- FISTA baselines -----------------------------------------------------------

def fista_run(problem, x0, config, restart=False, trace_sink=None):
    """Fixed-step FISTA (tau = 1/L). With `restart`, the Nesterov counters
    reset to 1 when k is a multiple of 250 or the momentum turns against
    the step direction (<y^k - x^{k+1}, x^{k+1} - x^k> > 0)."""
    x = np.asarray(x0, dtype=np.float64).copy()
    x_prev = x.copy()
    tau = 1.0 / problem.lipschitz
    t_prev, t_cur = 1.0, 1.0
    records = [
        TraceRecord(
            k=0, time_s=0.0, objective=problem.objective(x),
            potential=problem.objective(x), step_norm=0.0,
            witness_norm=math.inf, beta=0.0, tau1=tau, ell=0,
        )
    ]
    if trace_sink:
        trace_sink(records[0])
    start = time.perf_counter()
    reason = "max_iters"
    for k in range(config.max_iters):
        beta, t_next = nesterov_beta(t_prev, t_cur)
        y = x + beta * (x - x_prev)
        gy = problem.f_grad(y)
        x_new = problem.g_prox(y - tau * gy, tau)
        _, wnorm = subgrad_witness_pg(
            x_new, x, y, tau, problem.f_grad(x_new), gy, 0.0
        )
        step = math.sqrt(_sq(x_new - x))
        t_prev, t_cur = t_cur, t_next
        if restart and (
            (k + 1) % 250 == 0
            or float(np.ravel(y - x_new) @ np.ravel(x_new - x)) > 0.0
        ):
            t_prev, t_cur = 1.0, 1.0
        x_prev, x = x, x_new
        rec = TraceRecord(
            k=k + 1, time_s=time.perf_counter() - start,
            objective=problem.objective(x), potential=problem.objective(x),
            step_norm=step, witness_norm=wnorm, beta=beta, tau1=tau,
            ell=k + 1,
        )
        records.append(rec)
        if trace_sink:
            trace_sink(rec)
        if wnorm <= config.stop_tol * max(1.0, math.sqrt(_sq(x))):
            reason = "tolerance"
            break
        if rec.time_s > config.time_budget:
            reason = "time_budget"
            break
    return RunResult(x=x, records=records, reason=reason)


def refista_run(problem, x0, config, trace_sink=None):
    return fista_run(problem, x0, config, restart=True, trace_sink=trace_sink)
