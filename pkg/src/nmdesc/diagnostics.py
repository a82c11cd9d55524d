"""Trace verification and convergence diagnostics.

Everything here is a pure function over lists of TraceRecord: the decrease
condition (H1) and relative-error condition (H2) replays, the index-set
classification driving the summability checks, rate fitting, and the
normalized objective-evolution curves used for solver comparisons.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


def _potentials(records):
    return np.array([r.potential for r in records])


def ell_indices(records, m):
    """ell(k) for every k: the LARGEST index attaining the max potential
    over the window [max(0, k-m), k]."""
    pot = _potentials(records)
    out = np.zeros(len(pot), dtype=np.int64)
    for k in range(len(pot)):
        lo = max(0, k - m)
        win = pot[lo : k + 1]
        # argmax of the reversed window finds the last maximizer
        out[k] = k - int(np.argmax(win[::-1]))
    return out


@dataclass
class H1Report:
    passed: bool
    first_violation: int = None
    checked: int = 0


def verify_H1(records, a, m):
    """Check the nonmonotone decrease condition with zero slack:
    potential(k+1) + a*step(k+1)^2 <= max potential over [k-m, k]."""
    pot = _potentials(records)
    for k in range(len(records) - 1):
        lo = max(0, k - m)
        bound = pot[lo : k + 1].max()
        lhs = pot[k + 1] + a * records[k + 1].step_norm ** 2
        if lhs > bound:
            return H1Report(passed=False, first_violation=k, checked=k + 1)
    return H1Report(passed=True, checked=len(records) - 1)


@dataclass
class H2Report:
    passed: bool
    max_ratio: float
    first_violation: int = None
    zero_step_violation: bool = False


def verify_H2(records, b):
    """Check the relative-error condition witness_norm <= b*step_norm.

    A zero step with a nonzero witness is flagged specially (the ratio is
    infinite); zero witness always passes.
    """
    max_ratio = 0.0
    for r in records:
        if r.k == 0:
            continue
        if r.witness_norm == 0.0:
            continue
        if r.step_norm == 0.0:
            return H2Report(
                passed=False, max_ratio=math.inf,
                first_violation=r.k, zero_step_violation=True,
            )
        ratio = r.witness_norm / r.step_norm
        max_ratio = max(max_ratio, ratio)
        if r.witness_norm > b * r.step_norm:
            return H2Report(passed=False, max_ratio=ratio, first_violation=r.k)
    return H2Report(passed=True, max_ratio=max_ratio)


@dataclass
class KsetReport:
    """Per-step index-set memberships.

    flags[j] gives (in_K1, in_K2, in_K31) for the step producing iterate j
    (j >= 1). gaps[j-1] is the potential gap Phi(x^{ell(j)}) - Phi(x^j);
    steps[j-1] is the logged step norm. The limit value omega_star is
    ESTIMATED by the final window maximum.
    """

    flags: dict
    gaps: np.ndarray
    steps: np.ndarray
    a: float
    theta: float
    m: int
    omega_star: float
    k32: set = field(default_factory=set)


def classify_ksets(records, a, theta, m, omega_star=None):
    """Classify each step into the summability index sets.

    K1: gap >= (a/2)*step^2; K2: additionally gap < (a/2)*step^(1/theta);
    K31 (subset of K1 minus K2): omega* - potential(j) > (a/4)*step^(1/theta).
    K32 collects the rest of K1.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    ells = ell_indices(records, m)
    pot = _potentials(records)
    if omega_star is None:
        omega_star = pot[ells[-1]]
    n = len(records)
    gaps = np.empty(n - 1)
    steps = np.empty(n - 1)
    flags = {}
    k32 = set()
    inv_theta = 1.0 / theta
    for j in range(1, n):
        gap = pot[ells[j]] - pot[j]
        step = records[j].step_norm
        gaps[j - 1] = gap
        steps[j - 1] = step
        in_k1 = gap >= 0.5 * a * step**2
        in_k2 = in_k1 and gap < 0.5 * a * step**inv_theta
        in_k31 = (
            in_k1
            and not in_k2
            and (omega_star - pot[j]) > 0.25 * a * step**inv_theta
        )
        if in_k1 and not (in_k2 or in_k31):
            k32.add(j)
        flags[j] = (bool(in_k1), bool(in_k2), bool(in_k31))
    return KsetReport(
        flags=flags, gaps=gaps, steps=steps, a=a, theta=theta, m=m,
        omega_star=float(omega_star), k32=k32,
    )


def condition_partial_sums(records, report):
    """Cumulative sums of sqrt(gap) over K1 and over K2 u K31, plus the
    fixed power-law reference curve sum_j 3000/sqrt(j^2.1)."""
    n = len(report.gaps)
    sqrt_gap = np.sqrt(np.maximum(report.gaps, 0.0))
    k1_mask = np.array([report.flags[j][0] for j in range(1, n + 1)])
    k231_mask = np.array(
        [report.flags[j][1] or report.flags[j][2] for j in range(1, n + 1)]
    )
    ks = np.arange(1, n + 1, dtype=np.float64)
    return {
        "k1_partial": np.cumsum(np.where(k1_mask, sqrt_gap, 0.0)),
        "k231_partial": np.cumsum(np.where(k231_mask, sqrt_gap, 0.0)),
        "reference": np.cumsum(3000.0 / np.sqrt(ks**2.1)),
    }


@dataclass
class RateFit:
    mode: str
    rate: float        # contraction factor rho (linear) or log-log slope
    r_squared: float
    theta: float = None
    points: int = 0


def fit_rate(gaps, mode):
    """Fit a decay model to a positive gap series.

    linear: least-squares of log(gap) vs k; returns rho = exp(slope).
    sublinear: log(gap) vs log(k); the KL exponent theta is recovered from
    slope = (1-theta)/(1-2*theta).
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    pos = gaps > 0.0
    if not pos.all():
        first_bad = int(np.argmin(pos))
        warnings.warn(
            f"truncating gap series at first nonpositive entry (index {first_bad})"
        )
        gaps = gaps[:first_bad]
    if len(gaps) < 20:
        raise ValueError("need at least 20 positive gap values to fit a rate")
    k = np.arange(1, len(gaps) + 1, dtype=np.float64)
    logg = np.log(gaps)
    if mode == "linear":
        slope, intercept = np.polyfit(k, logg, 1)
        pred = slope * k + intercept
        if slope >= 0.0:
            raise ValueError("gap series does not decay; no linear rate")
        r2 = _r_squared(logg, pred)
        return RateFit(mode=mode, rate=math.exp(slope), r_squared=r2,
                       points=len(gaps))
    if mode == "sublinear":
        logk = np.log(k)
        slope, intercept = np.polyfit(logk, logg, 1)
        if slope >= 0.0:
            raise ValueError("gap series does not decay; no sublinear rate")
        pred = slope * logk + intercept
        theta = (1.0 - slope) / (1.0 - 2.0 * slope)
        return RateFit(mode=mode, rate=slope, r_squared=_r_squared(logg, pred),
                       theta=theta, points=len(gaps))
    raise ValueError(f"unknown fit mode {mode!r}")


def _r_squared(y, pred):
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def rate_fit_tail(records):
    """Objective-gap tail used for rate fitting: the last half of the
    post-transient iterations, where the transient ends at the first
    backtrack-free step. The gap is measured against the final objective."""
    objs = np.array([r.objective for r in records])
    final = objs[-1]
    gaps = objs[:-1] - final
    start = 0
    for r in records[1:]:
        if r.backtracks == 0:
            start = r.k
            break
    post = gaps[start:]
    tail = post[len(post) // 2 :]
    return tail


def evolution_curve(traces, grid):
    """Normalized best-objective-so-far E(t) per solver on a shared grid.

    traces: mapping name -> records, all on the same instance (identical
    starting objective). The floor objective is the best value any solver
    logged, so every curve lies in [0, 1] and ends at 0 for the winner.
    """
    grid = np.asarray(grid, dtype=np.float64)
    f0_values = {name: recs[0].objective for name, recs in traces.items()}
    f0 = next(iter(f0_values.values()))
    f_min = min(min(r.objective for r in recs) for recs in traces.values())
    if f0 == f_min:
        raise ValueError("degenerate instance: starting objective equals the minimum")
    curves = {}
    for name, recs in traces.items():
        times = np.array([r.time_s for r in recs])
        objs = np.array([r.objective for r in recs])
        best = np.minimum.accumulate(objs)
        idx = np.searchsorted(times, grid, side="right") - 1
        e = np.ones_like(grid)
        have = idx >= 0
        e[have] = (best[idx[have]] - f_min) / (f0 - f_min)
        curves[name] = e
    return curves


def average_curves(per_trial):
    """Average E(t) dictionaries (same keys and grid) across trials."""
    names = per_trial[0].keys()
    return {
        name: np.mean([trial[name] for trial in per_trial], axis=0)
        for name in names
    }
