"""Nonmonotone acceptance machinery shared by both solvers.

A HistoryWindow keeps the last m+1 potential values; a candidate step is
accepted when its potential drops below the window maximum by at least
(alpha/2) times the squared step length.
"""

from collections import deque


class HistoryWindow:
    """Ring of the (m+1) most recent (iteration index, potential) pairs."""

    def __init__(self, memory):
        if memory < 0:
            raise ValueError("memory must be nonnegative")
        self.memory = memory
        self._ring = deque(maxlen=memory + 1)

    def push(self, index, value):
        if self._ring and index <= self._ring[-1][0]:
            raise ValueError("indices must be strictly increasing")
        self._ring.append((index, value))

    def __len__(self):
        return len(self._ring)

    def entries(self):
        return list(self._ring)


def window_max(window):
    """(max stored potential, largest index attaining it)."""
    if len(window) == 0:
        raise ValueError("window is empty")
    best_val = None
    best_idx = None
    for idx, val in window.entries():
        if best_val is None or val >= best_val:  # >=: ties go to the larger index
            best_val = val
            best_idx = idx
    return best_val, best_idx


def accept(candidate, window, alpha, step_sq):
    """Nonmonotone acceptance test, non-strict and with zero slack."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if step_sq < 0:
        raise ValueError("step_sq must be nonnegative")
    bound, _ = window_max(window)
    return candidate <= bound - 0.5 * alpha * step_sq


def backtrack_params(l, beta0, tau0, eta1, eta2, tau_min):
    """Backtracking schedule: beta = beta0*eta1^l, tau = max(tau0*eta2^l, tau_min)."""
    if not (0 < eta1 < 1 and 0 < eta2 < 1):
        raise ValueError("eta1, eta2 must lie in (0, 1)")
    if tau_min <= 0:
        raise ValueError("tau_min must be positive")
    beta = beta0 * eta1**l
    tau = max(tau0 * eta2**l, tau_min)
    return beta, tau


class BacktrackCapError(RuntimeError):
    """Inner line search exhausted its backtrack budget."""

    def __init__(self, k, cap, last_candidate):
        super().__init__(f"iteration {k}: line search exceeded {cap} backtracks")
        self.k = k
        self.cap = cap
        self.last_candidate = last_candidate
