"""Trace verification, index-set classification, rate fits, E(t) curves."""

import math

import numpy as np
import pytest

from nmdesc.diagnostics import (
    average_curves,
    classify_ksets,
    condition_partial_sums,
    ell_indices,
    evolution_curve,
    fit_rate,
    rate_fit_tail,
    verify_H1,
    verify_H2,
)
from nmdesc.trace import TraceRecord


def rec(k, pot, step, obj=None, witness=0.0, backtracks=0, time=None):
    return TraceRecord(
        k=k, time_s=float(k if time is None else time),
        objective=float(pot if obj is None else obj), potential=float(pot),
        step_norm=float(step), witness_norm=float(witness),
        beta=0.0, tau1=0.1, backtracks=backtracks,
    )


def records_from(pots, steps, **kw):
    return [rec(k, p, s, **kw) for k, (p, s) in enumerate(zip(pots, steps))]


class TestEllIndices:
    def test_tie_takes_largest(self):
        recs = records_from([3.0, 5.0, 5.0, 2.0], [0.0] * 4)
        assert ell_indices(recs, m=3).tolist() == [0, 1, 2, 2]

    def test_memory_zero_is_identity(self):
        recs = records_from([4.0, 9.0, 1.0], [0.0] * 3)
        assert ell_indices(recs, m=0).tolist() == [0, 1, 2]

    def test_window_clipping(self):
        recs = records_from([9.0, 1.0, 2.0, 1.5], [0.0] * 4)
        assert ell_indices(recs, m=1).tolist() == [0, 0, 2, 2]


class TestVerifyH1:
    def test_monotone_trace_passes_with_zero_a(self):
        recs = records_from([5.0, 4.0, 3.0], [1.0, 1.0, 1.0])
        report = verify_H1(recs, a=0.0, m=0)
        assert report.passed and report.checked == 2

    def test_exact_bound_passes(self):
        # potential drop exactly a*step^2
        recs = records_from([5.0, 5.0 - 0.5 * 4.0], [0.0, 2.0])
        assert verify_H1(recs, a=0.5, m=5).passed

    def test_inflated_potential_fails_at_index(self):
        recs = records_from([5.0, 4.0, 4.5, 3.0], [0.0, 1.0, 1.0, 1.0])
        report = verify_H1(recs, a=1.0, m=0)
        assert not report.passed
        assert report.first_violation == 1

    def test_window_rescues_spike(self):
        # the same spike passes once the window remembers the older max
        recs = records_from([5.0, 4.0, 4.5, 3.0], [0.0, 1.0, 0.0, 1.0])
        assert verify_H1(recs, a=0.5, m=2).passed


class TestVerifyH2:
    def test_zero_witness_passes(self):
        recs = records_from([2.0, 1.0], [0.0, 1.0])
        report = verify_H2(recs, b=0.0)
        assert report.passed and report.max_ratio == 0.0

    def test_k0_witness_ignored(self):
        recs = [rec(0, 2.0, 0.0, witness=math.inf), rec(1, 1.0, 1.0)]
        assert verify_H2(recs, b=1.0).passed

    def test_ratio_violation_reported(self):
        recs = [rec(0, 2.0, 0.0), rec(1, 1.0, 0.5, witness=2.0)]
        report = verify_H2(recs, b=3.0)
        assert not report.passed
        assert report.first_violation == 1
        assert report.max_ratio == pytest.approx(4.0)

    def test_zero_step_nonzero_witness(self):
        recs = [rec(0, 2.0, 0.0), rec(1, 2.0, 0.0, witness=1.0)]
        report = verify_H2(recs, b=100.0)
        assert not report.passed
        assert report.zero_step_violation
        assert report.max_ratio == math.inf


class TestClassifyKsets:
    def test_memory_zero_with_moving_steps_gives_empty_k1(self):
        recs = records_from([3.0, 2.0, 1.0], [0.0, 0.5, 0.5])
        report = classify_ksets(recs, a=1.0, theta=0.5, m=0)
        assert all(not flags[0] for flags in report.flags.values())

    def test_boundary_gap_is_in_k1(self):
        # gap exactly (a/2)*step^2; membership is non-strict
        recs = records_from([1.0, 1.0 - 0.5 * 2.0 * 0.25], [0.0, 0.5])
        report = classify_ksets(recs, a=2.0, theta=0.5, m=1)
        assert report.flags[1][0]

    def test_hand_table(self):
        pots = [1.0, 0.98, 0.979, 0.779]
        steps = [0.0, 0.1, 2.0, 0.5]
        recs = records_from(pots, steps)
        report = classify_ksets(recs, a=1.0, theta=0.75, m=1,
                                omega_star=0.9)
        assert report.flags[1] == (True, True, False)
        assert report.flags[2] == (False, False, False)
        assert report.flags[3] == (True, False, True)
        assert report.k32 == set()
        assert report.gaps[0] == pytest.approx(0.02)
        assert report.steps[2] == 0.5

    def test_default_omega_star_is_final_window_max(self):
        pots = [1.0, 0.98, 0.979, 0.779]
        recs = records_from(pots, [0.0, 0.1, 2.0, 0.5])
        report = classify_ksets(recs, a=1.0, theta=0.75, m=1)
        assert report.omega_star == pots[2]

    def test_partition_on_solver_trace(self):
        from nmdesc.pg import PgConfig, pg_run
        from conftest import quadratic_problem

        prob = quadratic_problem(A=np.diag([1.0, 3.0]), lam=0.05)
        result = pg_run(prob, np.array([2.0, -1.5]), PgConfig(max_iters=80))
        cfg = result.extras["config"]
        report = classify_ksets(result.records, a=cfg.alpha / 2.0,
                                theta=0.5, m=cfg.m)
        for j, (k1, k2, k31) in report.flags.items():
            if k2 or k31:
                assert k1
            assert not (k2 and k31)
            assert (j in report.k32) == (k1 and not (k2 or k31))

    def test_theta_domain(self):
        recs = records_from([1.0, 0.5], [0.0, 0.1])
        with pytest.raises(ValueError):
            classify_ksets(recs, a=1.0, theta=1.0, m=1)


class TestPartialSums:
    def test_empty_k1_gives_zero_curve(self):
        recs = records_from([3.0, 2.0, 1.0], [0.0, 0.5, 0.5])
        report = classify_ksets(recs, a=1.0, theta=0.5, m=0)
        sums = condition_partial_sums(recs, report)
        assert np.array_equal(sums["k1_partial"], np.zeros(2))
        assert np.array_equal(sums["k231_partial"], np.zeros(2))

    def test_single_gap_jump(self):
        recs = records_from([5.0, 1.0], [0.0, 0.1])
        report = classify_ksets(recs, a=1.0, theta=0.5, m=1)
        sums = condition_partial_sums(recs, report)
        assert sums["k1_partial"].tolist() == [2.0]  # sqrt(4)

    def test_reference_curve(self):
        recs = records_from([5.0, 1.0, 0.5], [0.0, 0.1, 0.1])
        report = classify_ksets(recs, a=1.0, theta=0.5, m=1)
        sums = condition_partial_sums(recs, report)
        assert sums["reference"][0] == pytest.approx(3000.0)
        assert sums["reference"][1] == pytest.approx(
            3000.0 + 3000.0 / math.sqrt(2.0**2.1))


class TestFitRate:
    def test_geometric_series(self):
        gaps = 0.9 ** np.arange(1, 201)
        fit = fit_rate(gaps, "linear")
        assert fit.rate == pytest.approx(0.9, abs=1e-10)
        assert fit.r_squared >= 0.999
        assert fit.points == 200

    def test_power_law_series(self):
        k = np.arange(1, 201, dtype=np.float64)
        fit = fit_rate(k**-2.0, "sublinear")
        assert fit.rate == pytest.approx(-2.0, abs=1e-10)
        assert fit.theta == pytest.approx(0.6, abs=1e-10)

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            fit_rate(np.ones(50), "linear")

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_rate(0.5 ** np.arange(1, 15), "linear")

    def test_nonpositive_truncates_with_warning(self):
        gaps = 0.9 ** np.arange(1, 101)
        gaps[60] = 0.0
        with pytest.warns(UserWarning):
            fit = fit_rate(gaps, "linear")
        assert fit.points == 60

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            fit_rate(0.9 ** np.arange(1, 30), "quadratic")


class TestRateFitTail:
    def test_transient_and_tail_selection(self):
        objs = [10.0, 9.0, 8.0, 4.0, 3.0, 2.0, 1.5, 1.25, 1.0]
        bts = [0, 2, 1, 0, 0, 0, 0, 0, 0]
        recs = [rec(k, o, 0.1, backtracks=b)
                for k, (o, b) in enumerate(zip(objs, bts))]
        tail = rate_fit_tail(recs)
        # transient ends at k=3 (first backtrack-free step); gaps against
        # the final objective over k=3..7 are [3, 2, 1, 0.5, 0.25];
        # the tail keeps the last half
        assert tail.tolist() == [1.0, 0.5, 0.25]


class TestEvolutionCurve:
    def two_solver_traces(self):
        fast = [rec(k, 0.0, 0.0, obj=o, time=t)
                for k, (t, o) in enumerate([(0.0, 4.0), (1.0, 2.0),
                                            (2.0, 0.0)])]
        slow = [rec(k, 0.0, 0.0, obj=o, time=t)
                for k, (t, o) in enumerate([(0.0, 4.0), (2.0, 3.0),
                                            (4.0, 1.0)])]
        return {"fast": fast, "slow": slow}

    def test_hand_table(self):
        curves = evolution_curve(self.two_solver_traces(),
                                 grid=[0.0, 1.5, 2.0, 4.0])
        assert curves["fast"].tolist() == [1.0, 0.5, 0.0, 0.0]
        assert curves["slow"].tolist() == [1.0, 1.0, 0.75, 0.25]

    def test_pre_start_grid_point_is_one(self):
        curves = evolution_curve(self.two_solver_traces(), grid=[-1.0, 0.0])
        assert curves["fast"][0] == 1.0

    def test_range_and_monotonicity(self):
        curves = evolution_curve(self.two_solver_traces(),
                                 grid=np.linspace(0.0, 4.0, 17))
        for e in curves.values():
            assert np.all((0.0 <= e) & (e <= 1.0))
            assert np.all(np.diff(e) <= 0.0 + 1e-15)

    def test_degenerate_instance_rejected(self):
        flat = [rec(0, 0.0, 0.0, obj=1.0, time=0.0),
                rec(1, 0.0, 0.0, obj=1.0, time=1.0)]
        with pytest.raises(ValueError):
            evolution_curve({"only": flat}, grid=[0.0, 1.0])

    def test_average_curves(self):
        a = {"s": np.array([1.0, 0.5])}
        b = {"s": np.array([1.0, 0.0])}
        out = average_curves([a, b])
        assert out["s"].tolist() == [1.0, 0.25]
