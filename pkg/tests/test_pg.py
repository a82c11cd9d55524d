"""Single-block line-search solver and FISTA baselines."""

import math

import numpy as np
import pytest

from conftest import flat_problem, quadratic_problem
from nmdesc.linalg import RngStream
from nmdesc.nls import HistoryWindow
from nmdesc.pg import (
    PgConfig,
    IterateState,
    backtrack_bound_pg,
    bb_init_tau,
    fista_run,
    h2_constant_pg,
    nesterov_beta,
    pg_run,
    pg_step,
    potential_H,
    refista_run,
    safe_beta_bound_pg,
    subgrad_witness_pg,
    variant_config,
)
from nmdesc.trace import trace_csv_string


class TestPotential:
    def test_delta_zero_is_objective(self):
        prob = quadratic_problem()
        x = np.array([1.0, 2.0])
        assert potential_H(x, np.zeros(2), prob, 0.0) == prob.objective(x)

    def test_equal_points_drop_coupling(self):
        prob = quadratic_problem()
        x = np.array([1.0, 2.0])
        assert potential_H(x, x, prob, 0.3) == prob.objective(x)

    def test_hand_value(self):
        prob = quadratic_problem(dim=2)
        x = np.array([1.0, 0.0])
        u = np.array([0.0, 0.0])
        assert potential_H(x, u, prob, 0.4) == pytest.approx(0.7)


class TestNesterov:
    def test_seed_values(self):
        beta0, t1 = nesterov_beta(1.0, 1.0)
        assert beta0 == 0.0
        assert t1 == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0)

    def test_second_beta_zero(self):
        _, t1 = nesterov_beta(1.0, 1.0)
        beta1, t2 = nesterov_beta(1.0, t1)
        assert beta1 == 0.0
        beta2, _ = nesterov_beta(t1, t2)
        assert beta2 == pytest.approx(0.2817, abs=1e-4)
        assert t2 == pytest.approx(2.1935, abs=1e-4)

    def test_counter_domain(self):
        with pytest.raises(ValueError):
            nesterov_beta(0.5, 1.0)


class TestBbInit:
    def test_parallel_secant(self):
        # grad f = 2x and delta = 0: secant ratio is exactly 1/2
        prob = quadratic_problem(A=2.0 * np.eye(2))
        x1, x0 = np.array([1.0, 1.0]), np.array([0.0, 0.0])
        u = np.array([0.5, 0.5])
        tau = bb_init_tau((x1, u), (x0, u), prob, 0.0, 1e-6, 1e6, prev_tau=9.0)
        assert tau == pytest.approx(0.5, rel=1e-12)

    def test_zero_inner_product_guard(self):
        prob = flat_problem()
        x1, x0 = np.array([1.0, 0.0]), np.array([0.0, 0.0])
        u = np.array([0.0, 0.0])
        tau = bb_init_tau((x1, u), (x0, u), prob, 0.0, 1e-6, 1e6, prev_tau=9.0)
        assert tau == 1e6

    def test_zero_displacement_returns_previous(self):
        prob = quadratic_problem()
        x = np.array([1.0, 2.0])
        u = np.array([0.0, 0.0])
        tau = bb_init_tau((x, u), (x, u), prob, 0.1, 1e-6, 1e6, prev_tau=7.0)
        assert tau == 7.0

    def test_matches_hand_formula(self):
        rng = RngStream(5)
        A = np.diag([1.0, 2.0, 3.0])
        prob = quadratic_problem(A=A)
        delta = 0.2
        x1, x0 = rng.standard_normal(3), rng.standard_normal(3)
        u1, u0 = rng.standard_normal(3), rng.standard_normal(3)
        dz = np.concatenate([x1 - x0, u1 - u0])
        g = lambda x, u: np.concatenate([A @ x + delta * (x - u), -delta * (x - u)])
        dzeta = g(x1, u1) - g(x0, u0)
        inner = float(dz @ dzeta)
        expected = max(
            min(float(dz @ dz) / inner, inner / float(dzeta @ dzeta), 1e6), 1e-6
        )
        tau = bb_init_tau((x1, u1), (x0, u0), prob, delta, 1e-6, 1e6, prev_tau=1.0)
        assert tau == pytest.approx(expected, rel=1e-12)


def fresh_state(x0, m=5, delta=0.01, problem=None):
    window = HistoryWindow(m)
    window.push(0, potential_H(x0, x0, problem, delta))
    return IterateState(x=x0.copy(), x_prev=x0.copy(), window=window)


class TestPgStep:
    def test_fixed_point_accepted_immediately(self):
        prob = quadratic_problem()
        cfg = PgConfig().validated(prob.lipschitz)
        x0 = np.zeros(2)
        state = fresh_state(x0, m=cfg.m, delta=cfg.delta, problem=prob)
        new_state, rec, _ = pg_step(state, prob, cfg)
        assert rec.step_norm == 0.0
        assert rec.backtracks == 0
        assert np.array_equal(new_state.x, x0)
        assert rec.witness_norm == 0.0

    def test_gradient_step_closed_form(self):
        prob = quadratic_problem()
        tau = 1.0 / (2.0 * (1e-5 + 0.01) + 1.0 + 1.0)  # below the barrier
        cfg = PgConfig(beta_max=0.0, beta_rule="constant", tau0=tau)
        cfg = cfg.validated(prob.lipschitz)
        x0 = np.array([2.0, -1.0])
        state = fresh_state(x0, m=cfg.m, delta=cfg.delta, problem=prob)
        _, rec, init = pg_step(state, prob, cfg)
        assert init["tau0"] == tau
        expected = (1.0 - tau) * x0
        assert rec.step_norm == pytest.approx(
            np.linalg.norm(np.concatenate([expected - x0, x0 - x0]))
        )

    def test_huge_lambda_thresholds_everything(self):
        prob = quadratic_problem(lam=1e6)
        cfg = PgConfig().validated(prob.lipschitz)
        x0 = np.array([0.5, -0.25])
        state = fresh_state(x0, m=cfg.m, delta=cfg.delta, problem=prob)
        new_state, _, _ = pg_step(state, prob, cfg)
        assert np.array_equal(new_state.x, np.zeros(2))


class TestWitness:
    def test_fixed_point_witness_zero(self):
        prob = quadratic_problem()
        x = np.zeros(2)
        _, norm = subgrad_witness_pg(x, x, x, 0.1, prob.f_grad(x), prob.f_grad(x), 0.01)
        assert norm == 0.0

    def test_replay_recomputation_matches(self):
        prob = quadratic_problem(A=np.diag([1.0, 3.0]))
        cfg = PgConfig(max_iters=10, stop_tol=0.0).validated(prob.lipschitz)
        state = fresh_state(np.array([1.0, -2.0]), m=cfg.m, delta=cfg.delta,
                            problem=prob)
        for _ in range(5):
            prev_x = state.x
            state, rec, _ = pg_step(state, prob, cfg)
            # independent recomputation from the logged quantities
            wa = (
                prob.f_grad(state.x)
                - prob.f_grad(state.y_last)
                - (state.x - state.y_last) / state.tau_last
                + cfg.delta * (state.x - prev_x)
            )
            wb = cfg.delta * (prev_x - state.x)
            norm = math.sqrt(float(wa @ wa) + float(wb @ wb))
            assert rec.witness_norm == pytest.approx(norm, rel=1e-12, abs=1e-15)

    def test_h2_bound_holds_on_quadratic_run(self):
        prob = quadratic_problem(A=np.diag([0.5, 2.0]), lam=0.01)
        cfg = PgConfig(max_iters=200)
        result = pg_run(prob, np.array([3.0, -4.0]), cfg)
        b = result.extras["h2_bound"]
        assert b == h2_constant_pg(result.extras["config"], prob.lipschitz)
        for rec in result.records[1:]:
            assert rec.witness_norm <= b * rec.step_norm + 1e-12


class TestSafeBetaBound:
    def test_vanishes_at_endpoints(self):
        assert safe_beta_bound_pg(1e-12, 1.0, 0.01) < 1e-6
        assert safe_beta_bound_pg(1.0, 1.0, 0.01) == 0.0

    def test_hand_value(self):
        val = safe_beta_bound_pg(0.25, 1.0, 0.01)
        expected = math.sqrt(0.01 * (0.25 - 0.0625) / (4.0 * (1.0 + 0.25) ** 2))
        assert val == pytest.approx(expected, rel=1e-12)
        assert val == pytest.approx(0.01732, abs=1e-5)

    def test_backtrack_counts_within_bound(self):
        prob = quadratic_problem(A=np.diag([1.0, 4.0]), lam=0.05)
        cfg = PgConfig(max_iters=100)
        result = pg_run(prob, np.array([2.0, 2.0]), cfg)
        vcfg = result.extras["config"]
        for rec, init in zip(result.records[1:], result.meta):
            bound = backtrack_bound_pg(init["tau0"], init["beta0"], vcfg,
                                       prob.lipschitz)
            assert rec.backtracks <= bound


class TestRunAndVariants:
    def test_converges_on_quadratic(self):
        prob = quadratic_problem()
        result = pg_run(prob, np.array([1.0, 1.0]), PgConfig(max_iters=500))
        assert result.reason == "tolerance"
        assert np.linalg.norm(result.x) < 1e-6

    def test_h1_replay_from_trace(self):
        from nmdesc.diagnostics import verify_H1

        prob = quadratic_problem(lam=0.02)
        cfg = PgConfig(max_iters=100)
        result = pg_run(prob, np.array([2.0, -3.0]), cfg)
        vcfg = result.extras["config"]
        assert verify_H1(result.records, a=vcfg.alpha / 2.0, m=vcfg.m).passed

    def test_degeneration_equivalence(self):
        prob = quadratic_problem(lam=0.01)
        x0 = np.array([1.5, -0.5])
        via_variant = pg_run(prob, x0, variant_config("pgls", PgConfig(max_iters=50)))
        explicit = pg_run(
            prob, x0, PgConfig(delta=0.0, beta_max=0.0, m=0, max_iters=50)
        )
        assert trace_csv_string(via_variant.records, zero_times=True) == \
            trace_csv_string(explicit.records, zero_times=True)

    def test_config_validation(self):
        prob = quadratic_problem()
        with pytest.raises(ValueError):
            PgConfig(delta=0.0).validated(prob.lipschitz)  # needs beta_max=0, m=0
        with pytest.raises(ValueError):
            PgConfig(alpha=0.01, delta=0.01).validated(prob.lipschitz)
        with pytest.raises(ValueError):
            PgConfig(tau_min=10.0).validated(prob.lipschitz)
        with pytest.raises(ValueError):
            variant_config("nope")


class TestFista:
    def test_periodic_restart_resets_beta(self):
        # flat objective: the gradient trigger never fires (inner product 0),
        # so only the periodic reset can zero the weight
        prob = flat_problem()
        cfg = PgConfig(max_iters=260, stop_tol=-1.0)
        result = refista_run(prob, np.zeros(2), cfg)
        betas = {r.k: r.beta for r in result.records}
        assert betas[250] > 0.9
        assert betas[251] == 0.0

    def test_no_restart_without_flag(self):
        prob = flat_problem()
        cfg = PgConfig(max_iters=260, stop_tol=-1.0)
        result = fista_run(prob, np.zeros(2), cfg)
        betas = {r.k: r.beta for r in result.records}
        assert betas[251] > 0.9

    def test_restarted_run_monotone_on_strongly_convex(self):
        prob = quadratic_problem(A=np.diag([1.0, 50.0]))
        cfg = PgConfig(max_iters=400)
        result = refista_run(prob, np.array([1.0, 1.0]), cfg)
        objs = [r.objective for r in result.records]
        assert objs[-1] < 1e-10
        # gradient-descent oracle with the same step never beats the
        # restarted momentum method at the end
        x = np.array([1.0, 1.0])
        for _ in range(len(objs) - 1):
            x = x - (1.0 / prob.lipschitz) * prob.f_grad(x)
        assert objs[-1] <= prob.objective(x) + 1e-12
