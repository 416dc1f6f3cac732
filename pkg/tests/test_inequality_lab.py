"""Tests for the exponent calculus, interpolation samplers and monitors."""

import math

import numpy as np
import pytest

from sdwave.grid import build_annulus
from sdwave.inequality_lab import (
    acceleration_bound_slack,
    convolution_decay,
    energy_budget_monitor,
    exponent_report,
    forcing_integral_monitor,
    gn_ratio,
    interpolation_exponent,
    random_field_modes,
    sample_field,
    weighted_gn_ratio,
)
from sdwave.solver import (
    NonlinearityParams,
    State,
    TimeScheme,
    initial_bump,
    run,
)
from sdwave.weight import WeightParams, default_eps


class TestInterpolationExponent:
    def test_endpoints(self):
        assert interpolation_exponent(2.0) == 0.0
        assert interpolation_exponent(14.0) == pytest.approx(6.0 / 7.0, rel=1e-15)

    def test_strictly_increasing_toward_one(self):
        ms = np.linspace(2.0, 1e4, 200)
        vals = np.array([interpolation_exponent(m) for m in ms])
        assert np.all(np.diff(vals) > 0.0)
        assert vals[-1] < 1.0

    def test_domain(self):
        with pytest.raises(ValueError):
            interpolation_exponent(1.9)


class TestExponentReport:
    def test_beta1_example(self):
        rep = exponent_report(p=7.0, q=7.0, rho=2.0, eta=0.1)
        assert rep.beta1 == pytest.approx(-0.9 / 7.0, rel=1e-14)

    def test_thresholds_at_rho_two(self):
        # gates flip at p, q crossing 6, 7, 10 for rho = 2
        just_below = exponent_report(p=5.999, q=5.999, rho=2.0)
        assert not just_below.square_integral_ok
        mid = exponent_report(p=6.5, q=6.5, rho=2.0)
        assert mid.square_integral_ok and not mid.cross_integral_ok
        higher = exponent_report(p=7.5, q=7.5, rho=2.0)
        assert higher.cross_integral_ok and not higher.velocity_tail_ok
        top = exponent_report(p=10.5, q=10.5, rho=2.0)
        assert top.velocity_tail_ok

    def test_global_gate(self):
        assert exponent_report(p=9.0, q=9.0, rho=1.5).global_ok
        assert not exponent_report(p=8.7, q=9.0, rho=1.5).global_ok

    def test_simplified_forms_match_definitions(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            p = rng.uniform(1.1, 15.0)
            q = rng.uniform(1.1, 15.0)
            rho = rng.uniform(0.1, 6.0)
            eta = rng.uniform(1e-3, 1.0)
            eps1 = rng.uniform(1e-3, 1.0)
            delta = rng.uniform(1e-3, 1.0)
            rep = exponent_report(p, q, rho, eta, eps1, delta)
            th_p = interpolation_exponent(2.0 * p)
            th_q = interpolation_exponent(2.0 * q)
            beta1_def = (2.0 + rho) * (1.0 - th_p) + (1.0 + eta) / p - (1.0 - 1.0 / p)
            beta3_def = (
                (2.0 + rho) * (1.0 - th_p) / 2.0
                + (1.0 + eta) / p
                - 0.5 * (1.0 - 1.0 / p)
            )
            beta6_def = (
                rep.beta5 + (2.0 + rho) * (1.0 - th_q) / 2.0 - (1.0 - delta) / 2.0
            )
            assert rep.beta1 == pytest.approx(beta1_def, abs=1e-12)
            assert rep.beta3 == pytest.approx(beta3_def, abs=1e-12)
            assert rep.beta6 == pytest.approx(beta6_def, abs=1e-12)

    def test_constructive_small_eta_makes_betas_negative(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            rho = rng.uniform(0.1, 4.0)
            p = rng.uniform(4.0 + rho + 0.05, 20.0)
            q = rng.uniform(4.0 + rho + 0.05, 20.0)
            eta = (min(p, q) - 4.0 - rho) / 2.0
            rep = exponent_report(p, q, rho, eta=eta)
            assert rep.square_integral_ok
            assert rep.beta1 < 0.0 and rep.beta2 < 0.0

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            exponent_report(p=1.0, q=2.0, rho=1.0)
        with pytest.raises(ValueError):
            exponent_report(p=2.0, q=2.0, rho=0.0)
        with pytest.raises(ValueError):
            exponent_report(p=2.0, q=2.0, rho=1.0, eta=0.0)


@pytest.fixture(scope="module")
def grid():
    return build_annulus(1.0, 2.0, 48, 64)


class TestGnRatio:

    def test_m_two_is_one(self, grid):
        rng = np.random.default_rng(31)
        for seed in range(5):
            modes = random_field_modes(rng, grid.r_inner, grid.r_outer)
            v = sample_field(grid, modes)
            assert abs(gn_ratio(grid, v, 2.0) - 1.0) < 1e-12

    def test_scale_invariance(self, grid):
        rng = np.random.default_rng(32)
        v = sample_field(grid, random_field_modes(rng, grid.r_inner, grid.r_outer))
        base = gn_ratio(grid, v, 6.0)
        assert gn_ratio(grid, -2.5 * v, 6.0) == pytest.approx(base, rel=1e-12)

    def test_zero_field_rejected(self, grid):
        with pytest.raises(ValueError):
            gn_ratio(grid, grid.zero_field(), 4.0)

    def test_refinement_stability_light(self):
        coarse = build_annulus(1.0, 2.0, 32, 48)
        fine = build_annulus(1.0, 2.0, 64, 96)
        rng = np.random.default_rng(33)
        for _ in range(10):
            modes = random_field_modes(rng, 1.0, 2.0)
            r_coarse = gn_ratio(coarse, sample_field(coarse, modes), 6.0)
            r_fine = gn_ratio(fine, sample_field(fine, modes), 6.0)
            assert math.isfinite(r_coarse) and math.isfinite(r_fine)
            assert abs(r_coarse - r_fine) / r_fine < 0.2

    def test_weighted_ratio_decreases_in_time(self):
        grid = build_annulus(1.0, 2.0, 48, 64)
        rng = np.random.default_rng(34)
        params = WeightParams(rho=2.0, eps=0.9)
        v = sample_field(grid, random_field_modes(rng, 1.0, 2.0))
        early = weighted_gn_ratio(grid, v, 0.0, 6.0, 0.5, params)
        late = weighted_gn_ratio(grid, v, 10.0, 6.0, 0.5, params)
        assert math.isfinite(early) and math.isfinite(late)
        assert late < early

    def test_weighted_ratio_sigma_domain(self):
        grid = build_annulus(1.0, 2.0, 16, 32)
        v = initial_bump(grid, 1.0, (1.2, 1.8))
        with pytest.raises(ValueError):
            weighted_gn_ratio(grid, v, 0.0, 4.0, 0.0, WeightParams(rho=2.0, eps=0.9))


WP = WeightParams(rho=1.5, eps=default_eps(1.5))


@pytest.fixture(scope="module")
def linear_run():
    grid = build_annulus(1.0, 4.0, 32, 32)
    return grid, run(
        grid,
        TimeScheme(dt=0.02, theta=1.0),
        NonlinearityParams(),
        WP,
        initial_bump(grid, 1.0, (1.5, 2.5)),
        initial_bump(grid, 0.5, (1.8, 2.8)),
        t_end=10.0,
        stride=10,
        keep_states=8,
    )


class TestAccelerationBound:
    def test_zero_state(self):
        grid = build_annulus(1.0, 2.0, 16, 32)
        slack = acceleration_bound_slack(
            grid, State(grid.zero_field(), grid.zero_field(), 0.0), NonlinearityParams(), WP
        )
        assert slack == 0.0

    def test_linear_snapshots(self, linear_run):
        grid, result = linear_run
        assert result.status == "completed"
        for st in result.states:
            assert acceleration_bound_slack(grid, st, NonlinearityParams(), WP) >= -1e-8

    def test_nonlinear_snapshots(self):
        grid = build_annulus(1.0, 4.0, 24, 24)
        nlp = NonlinearityParams(a=1.0, b=1.0, p=9.0, q=9.0)
        res = run(
            grid,
            TimeScheme(dt=0.05, theta=1.0),
            nlp,
            WP,
            1e-4 * initial_bump(grid, 1.0, (1.5, 2.5)),
            1e-4 * initial_bump(grid, 1.0, (1.8, 2.8)),
            t_end=5.0,
            stride=10,
            keep_states=5,
        )
        assert res.status == "completed"
        for st in res.states:
            assert acceleration_bound_slack(grid, st, nlp, WP) >= -1e-8

    def test_window_gate_enforced(self, linear_run):
        grid, result = linear_run
        with pytest.raises(ValueError):
            acceleration_bound_slack(
                grid, result.states[0], NonlinearityParams(), WeightParams(rho=1.0)
            )


class TestBudgetMonitors:
    def test_zero_data(self):
        grid = build_annulus(1.0, 2.0, 16, 32)
        res = run(
            grid,
            TimeScheme(dt=0.1, theta=1.0),
            NonlinearityParams(),
            WP,
            grid.zero_field(),
            grid.zero_field(),
            t_end=1.0,
            stride=2,
        )
        for order in ("higher", "lower"):
            rep = energy_budget_monitor(res, WP, order)
            assert rep.max_violation == 0.0
            assert np.all(rep.lhs == 0.0) and np.all(rep.rhs == 0.0)

    def test_forcing_free_budgets(self, linear_run):
        _, result = linear_run
        assert energy_budget_monitor(result, WP, "higher").max_violation <= 5e-2
        assert energy_budget_monitor(result, WP, "lower").max_violation <= 5e-2

    def test_lower_budget_is_monotone_bound(self, linear_run):
        # with zero forcing the lower budget reduces to Wfirst(t) <= Wfirst(0)
        _, result = linear_run
        rep = energy_budget_monitor(result, WP, "lower")
        assert np.all(rep.lhs <= rep.rhs * (1.0 + 5e-2) + 1e-14)

    def test_unknown_order_rejected(self, linear_run):
        _, result = linear_run
        with pytest.raises(ValueError):
            energy_budget_monitor(result, WP, "both")


class TestForcingIntegralMonitor:
    def test_linear_run_is_identically_zero(self, linear_run):
        _, result = linear_run
        rep = forcing_integral_monitor(result, NonlinearityParams(a=0.0, b=0.0, p=9.0, q=9.0), WP)
        assert np.all(rep.a_lhs == 0.0) and np.all(rep.b_lhs == 0.0)
        assert np.all(rep.ratio_a == 0.0) and np.all(rep.ratio_b == 0.0)

    def test_gate_refusal_names_threshold(self, linear_run):
        _, result = linear_run
        with pytest.raises(ValueError, match="5.5"):
            forcing_integral_monitor(
                result, NonlinearityParams(a=1.0, b=0.0, p=5.0, q=9.0), WP
            )
        with pytest.raises(ValueError, match="6.5"):
            forcing_integral_monitor(
                result, NonlinearityParams(a=1.0, b=0.0, p=6.0, q=9.0), WP
            )

    def test_ratios_stable_under_horizon_doubling(self):
        grid = build_annulus(1.0, 4.0, 24, 24)
        nlp = NonlinearityParams(a=1.0, b=1.0, p=9.0, q=9.0)
        u0 = 1e-3 * initial_bump(grid, 1.0, (1.5, 2.5))
        u1 = 1e-3 * initial_bump(grid, 1.0, (1.8, 2.8))
        reports = []
        for t_end in (10.0, 20.0):
            res = run(
                grid, TimeScheme(dt=0.05, theta=1.0), nlp, WP, u0, u1, t_end, stride=10
            )
            reports.append(forcing_integral_monitor(res, nlp, WP))
        a_short, a_long = reports[0].ratio_a[-1], reports[1].ratio_a[-1]
        b_short, b_long = reports[0].ratio_b[-1], reports[1].ratio_b[-1]
        assert math.isfinite(a_long) and math.isfinite(b_long)
        assert abs(a_long - a_short) <= 0.10 * max(a_short, 1e-300)
        assert abs(b_long - b_short) <= 0.10 * max(b_short, 1e-300)


class TestConvolutionDecay:
    def test_empty_integral_at_zero(self):
        rows = convolution_decay(0.5, 2.0, [0.0])
        assert rows[0] == (0.0, 0.0, 0.0)

    def test_against_riemann_oracle(self):
        # brute-force midpoint Riemann sum, one million panels, at t = 1
        t = 1.0
        n = 1_000_000
        s = (np.arange(n) + 0.5) * (t / n)
        oracle = float(np.sum((1.0 + t - s) ** -0.5 * (1.0 + s) ** -2.0)) * (t / n)
        (_, value, _), = convolution_decay(0.5, 2.0, [t])
        assert abs(value - oracle) < 1e-8

    def test_scaled_column_plateaus_light(self):
        ts = np.logspace(2, 4, 9)
        rows = convolution_decay(0.5, 2.0, ts)
        scaled = np.array([r[2] for r in rows])
        last_decade = scaled[ts >= 1e3]
        assert (last_decade.max() - last_decade.min()) / last_decade.min() < 0.01

    def test_regime_refusal(self):
        with pytest.raises(ValueError):
            convolution_decay(1.5, 2.0, [1.0])
        with pytest.raises(ValueError):
            convolution_decay(0.5, 1.0, [1.0])
        with pytest.raises(ValueError):
            convolution_decay(0.0, 2.0, [1.0])
