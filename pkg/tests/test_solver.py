"""Tests for the theta-scheme stepper, bump data, manufactured solutions."""

import math

import numpy as np
import pytest

from sdwave.errors import ConfigError
from sdwave.grid import build_annulus, l2_norm
from sdwave.solver import (
    MMSRow,
    NonlinearityParams,
    State,
    ThetaStepper,
    TimeScheme,
    bump_profile,
    initial_bump,
    manufactured_solution,
    manufactured_source,
    mms_joint_study,
    mms_temporal_study,
    nonlinearity,
    run,
)
from sdwave.weight import WeightParams


@pytest.fixture(scope="module")
def small_grid():
    return build_annulus(1.0, 2.0, 16, 32)


WP = WeightParams(rho=2.0, eps=0.9)


class TestNonlinearity:
    def test_zero_fields(self, small_grid):
        z = small_grid.zero_field()
        out = nonlinearity(z, z, NonlinearityParams(a=1.0, b=1.0, p=2.0, q=2.0))
        assert np.all(out == 0.0)

    def test_pure_power(self, small_grid):
        u = 3.0 * np.ones(small_grid.shape)
        out = nonlinearity(u, small_grid.zero_field(), NonlinearityParams(a=1.0, b=0.0, p=2.0, q=2.0))
        assert np.allclose(out, 9.0, rtol=1e-15)

    def test_mixed_powers(self, small_grid):
        u = 2.0 * np.ones(small_grid.shape)
        v = -2.0 * np.ones(small_grid.shape)
        out = nonlinearity(u, v, NonlinearityParams(a=1.0, b=1.0, p=3.0, q=2.0))
        assert np.allclose(out, 12.0, rtol=1e-15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(p=0.5),
            dict(p=1.0),
            dict(q=0.9),
            dict(a=-1.0),
            dict(b=-0.1),
        ],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ConfigError):
            NonlinearityParams(**kwargs)


class TestTimeScheme:
    def test_theta_range(self):
        TimeScheme(dt=0.1, theta=0.5)
        TimeScheme(dt=0.1, theta=1.0)
        with pytest.raises(ConfigError):
            TimeScheme(dt=0.1, theta=0.4)
        with pytest.raises(ConfigError):
            TimeScheme(dt=0.1, theta=1.1)

    def test_dt_positive(self):
        with pytest.raises(ConfigError):
            TimeScheme(dt=0.0)


class TestBump:
    def test_zero_amplitude(self, small_grid):
        f = initial_bump(small_grid, 0.0, (1.2, 1.8))
        assert np.all(f == 0.0)

    def test_center_value(self):
        # at the support midpoint s = 0 and the profile equals A / e
        assert bump_profile(np.array([1.5]), 1.0, 2.0, amplitude=3.0)[0] == pytest.approx(
            3.0 * math.exp(-1.0), rel=1e-15
        )

    def test_compact_support(self):
        r = np.array([1.0, 1.1999, 1.8001, 2.0])
        assert np.all(bump_profile(r, 1.2, 1.8) == 0.0)

    def test_support_validation(self, small_grid):
        with pytest.raises(ConfigError):
            initial_bump(small_grid, 1.0, (0.9, 1.5))
        with pytest.raises(ConfigError):
            initial_bump(small_grid, 1.0, (1.5, 2.0))
        with pytest.raises(ConfigError):
            initial_bump(small_grid, 1.0, (1.8, 1.2))


class TestManufacturedSolution:
    def test_midpoint_value(self):
        # nr odd so a node sits exactly at the radial midpoint; theta = 0 is j = 0
        g = build_annulus(1.0, 2.0, 31, 16)
        u, v = manufactured_solution(g, 0.0)
        i_mid = 15
        assert g.r[i_mid] == pytest.approx(1.5, rel=1e-14)
        assert u[i_mid, 0] == pytest.approx(1.0, rel=1e-14)
        assert np.allclose(v, -u, rtol=1e-15)

    def test_small_near_dirichlet_rings(self, small_grid):
        # profile vanishes at both radii, so ring values are O(dr)
        u, _ = manufactured_solution(small_grid, 0.0)
        bound = (math.pi / (small_grid.r_outer - small_grid.r_inner)) * small_grid.dr
        assert np.max(np.abs(u[0, :])) <= bound * 1.01
        assert np.max(np.abs(u[-1, :])) <= bound * 1.01

    def test_source_is_displacement_for_linear_runs(self, small_grid):
        # u_t = -u makes the stiffness and damping terms cancel exactly
        g_src = manufactured_source(small_grid, 0.3, NonlinearityParams())
        u, _ = manufactured_solution(small_grid, 0.3)
        assert np.allclose(g_src, u, rtol=1e-15)


class TestStep:
    def test_zero_state_fixed_point(self, small_grid):
        stepper = ThetaStepper(small_grid, TimeScheme(dt=0.05), NonlinearityParams())
        st = stepper.step(State(small_grid.zero_field(), small_grid.zero_field(), 0.0))
        assert np.all(st.u == 0.0) and np.all(st.v == 0.0)
        assert st.t == pytest.approx(0.05)

    def test_backward_scheme_dissipates_energies(self, small_grid):
        from sdwave.energetics import energies

        stepper = ThetaStepper(small_grid, TimeScheme(dt=0.04, theta=1.0), NonlinearityParams())
        st = State(
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            initial_bump(small_grid, 0.7, (1.3, 1.7)),
            0.0,
        )
        e_c_prev, e_h_prev, _ = energies(small_grid, st)
        slack = 1e-12 * e_c_prev
        for _ in range(40):
            st = stepper.step(st)
            e_c, e_h, _ = energies(small_grid, st)
            assert e_c <= e_c_prev + slack
            assert (e_h - e_c) <= (e_h_prev - e_c_prev) + slack
            e_c_prev, e_h_prev = e_c, e_h

    def test_non_convergence_raises(self, small_grid):
        from sdwave.errors import LinearSolveError

        scheme = TimeScheme(dt=0.5, theta=1.0, linear_solve_tol=1e-14, max_linear_iters=1)
        stepper = ThetaStepper(small_grid, scheme, NonlinearityParams())
        st = State(
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            0.0,
        )
        with pytest.raises(LinearSolveError):
            stepper.step(st)


class TestMMSConvergence:
    def test_joint_refinement_ratio(self):
        rows = mms_joint_study(base_nr=16, base_ntheta=32, levels=2, t_end=0.5)
        assert rows[0].error / rows[1].error == pytest.approx(4.0, rel=0.25)

    def test_temporal_orders(self):
        rows = mms_temporal_study(nr=32, ntheta=64, dts=(0.1, 0.05, 0.025), ref_refine=8)
        orders = [r.order for r in rows if not math.isnan(r.order)]
        assert min(orders) >= 1.9

    def test_row_schema(self):
        rows = mms_joint_study(base_nr=16, base_ntheta=32, levels=2, t_end=0.25)
        assert all(isinstance(r, MMSRow) for r in rows)
        assert math.isnan(rows[0].order)


class TestRun:
    def test_zero_data_all_zero(self, small_grid):
        res = run(
            small_grid,
            TimeScheme(dt=0.05, theta=1.0),
            NonlinearityParams(),
            WP,
            small_grid.zero_field(),
            small_grid.zero_field(),
            t_end=1.0,
            stride=5,
        )
        assert res.status == "completed"
        for row in res.rows:
            assert row.E_classical == 0.0 and row.W == 0.0 and row.sup_u == 0.0

    def test_linear_bump_energy_monotone(self, small_grid):
        res = run(
            small_grid,
            TimeScheme(dt=0.02, theta=1.0),
            NonlinearityParams(),
            WP,
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            initial_bump(small_grid, 0.5, (1.3, 1.7)),
            t_end=2.0,
            stride=10,
        )
        e_c = np.array([row.E_classical for row in res.rows])
        assert np.all(np.diff(e_c) <= 1e-12 * e_c[0])

    def test_large_amplitude_low_power_blows_up(self, small_grid):
        res = run(
            small_grid,
            TimeScheme(dt=0.01, theta=1.0),
            NonlinearityParams(a=1.0, b=0.0, p=2.0, q=2.0),
            WP,
            initial_bump(small_grid, 50.0, (1.2, 1.8)),
            small_grid.zero_field(),
            t_end=20.0,
            stride=10,
        )
        assert res.status == "blew_up"
        assert 0.0 < res.t_final < 20.0
        assert len(res.rows) >= 1  # diagnostics up to the last valid stride

    def test_determinism(self, small_grid):
        kwargs = dict(
            grid=small_grid,
            scheme=TimeScheme(dt=0.02, theta=0.5),
            params=NonlinearityParams(a=1.0, b=0.0, p=3.0, q=2.0),
            weight_params=WP,
            u0=initial_bump(small_grid, 0.5, (1.2, 1.8)),
            u1=small_grid.zero_field(),
            t_end=0.5,
            stride=5,
        )
        rows_a = run(**kwargs).rows
        rows_b = run(**kwargs).rows
        assert rows_a == rows_b  # bit-identical diagnostics

    def test_keep_states_thinning(self, small_grid):
        res = run(
            small_grid,
            TimeScheme(dt=0.05, theta=1.0),
            NonlinearityParams(),
            WP,
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            small_grid.zero_field(),
            t_end=2.0,
            stride=2,
            keep_states=5,
        )
        assert 1 <= len(res.states) <= 6
        row_times = {row.t for row in res.rows}
        assert all(st.t in row_times for st in res.states)

    def test_solver_failure_status(self, small_grid):
        scheme = TimeScheme(dt=0.5, theta=1.0, linear_solve_tol=1e-14, max_linear_iters=1)
        res = run(
            small_grid,
            scheme,
            NonlinearityParams(),
            WP,
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            initial_bump(small_grid, 1.0, (1.2, 1.8)),
            t_end=2.0,
            stride=1,
        )
        assert res.status == "solver_failed"

    def test_inconsistent_horizon_rejected(self, small_grid):
        with pytest.raises(ConfigError):
            run(
                small_grid,
                TimeScheme(dt=0.3),
                NonlinearityParams(),
                WP,
                small_grid.zero_field(),
                small_grid.zero_field(),
                t_end=1.0,
            )

    def test_lagged_nonlinearity_splitting_order(self):
        g = build_annulus(1.0, 2.0, 24, 48)
        nlp = NonlinearityParams(a=1.0, b=1.0, p=2.5, q=2.0)
        u0 = initial_bump(g, 0.8, (1.2, 1.8))
        u1 = initial_bump(g, 0.4, (1.3, 1.7))

        def final_u(dt):
            stepper = ThetaStepper(g, TimeScheme(dt=dt, theta=0.5), nlp)
            st = State(u0.copy(), u1.copy(), 0.0)
            for _ in range(int(round(1.0 / dt))):
                st = stepper.step(st)
            return st.u

        diffs = [
            l2_norm(g, final_u(dt) - final_u(dt / 2.0)) for dt in (1 / 16, 1 / 32, 1 / 64)
        ]
        # at least first order: successive state changes shrink by ~2x or more
        assert diffs[0] > diffs[1] > diffs[2]
        for k in range(2):
            assert 1.7 <= diffs[k] / diffs[k + 1] <= 4.5
