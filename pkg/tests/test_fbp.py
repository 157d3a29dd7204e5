import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semifront.fbp import (
    FbpState,
    InitialData,
    WidthCollapseError,
    front_slopes,
    make_initial,
    one_sided_derivative,
    solve,
    step,
    unit_grid,
)
from semifront.nonlinearity import bistable_cubic, kpp_logistic


class TestUnitGrid:
    def test_exact_mirror_symmetry(self):
        for n in (10, 301, 800):
            y = unit_grid(n)
            assert np.all(y + y[::-1] == 1.0)
            assert y[0] == 0.0 and y[-1] == 1.0


class TestMakeInitial:
    def test_flat_delta_stays_put_initially(self):
        st0 = make_initial(InitialData(2.0, "flat_delta", 0.0), 0.5, Ny=200)
        assert np.all(st0.v == 0.5)
        gp, hp = front_slopes(st0, 0.5, 1.0)
        assert gp == 0.0 and hp == 0.0

    def test_bump_peak(self):
        st0 = make_initial(InitialData(2.0, "bump", 0.4), 0.5, Ny=200)
        assert st0.v.max() == pytest.approx(0.9, abs=1e-14)
        assert st0.v.argmax() == 100  # y = 0.5, i.e. x = 0
        assert st0.v[0] == 0.5 and st0.v[-1] == 0.5

    def test_negative_bump_positivity_violation(self):
        with pytest.raises(ValueError, match="not in I"):
            make_initial(InitialData(2.0, "bump", -0.6), 0.5, Ny=200)

    def test_plateau_blends_smoothly(self):
        st0 = make_initial(InitialData(3.0, "plateau", 0.5), 0.5, Ny=400)
        x = st0.x()
        core = np.abs(x) <= 1.4
        assert np.all(st0.v[core] == 1.0)
        assert st0.v[0] == 0.5 and st0.v[-1] == 0.5

    def test_bad_h0(self):
        with pytest.raises(ValueError):
            make_initial(InitialData(-1.0, "bump", 0.4), 0.5)


class TestOneSidedDerivative:
    def test_linear_data_exact(self):
        assert one_sided_derivative((0.5, 0.6, 0.7), 0.1) == pytest.approx(1.0, abs=1e-13)

    def test_quadratic_at_vertex_cancels_exactly(self):
        h = 0.1
        assert one_sided_derivative((0.0, h * h, 4 * h * h), h) == 0.0

    def test_arithmetic_example(self):
        d = 0.5
        assert one_sided_derivative((d, d + 0.1, d + 0.2), 0.1) == pytest.approx(1.0, abs=1e-12)

    def test_spacing_validated(self):
        with pytest.raises(ValueError):
            one_sided_derivative((0.0, 1.0, 2.0), 0.0)

    @settings(max_examples=100, deadline=None)
    @given(b=st.floats(-2, 2), c=st.floats(-2, 2), h=st.floats(1e-3, 1.0))
    def test_exact_on_random_quadratics(self, b, c, h):
        vals = [c, b * h + c, 2 * b * h + c]  # linear part of any quadratic
        got = one_sided_derivative(vals, h)
        assert got == pytest.approx(b, rel=1e-10, abs=1e-10)


class TestStep:
    def test_boundary_pinned_exactly(self):
        nl = kpp_logistic(eps=0.3)
        state = make_initial(InitialData(2.0, "bump", 0.4), 0.5, Ny=200)
        out = step(state, nl, 1.0, 0.5, 1e-3)
        assert out.v[0] == 0.5 and out.v[-1] == 0.5

    def test_symmetry_preserved(self):
        nl = kpp_logistic(eps=0.3)
        state = make_initial(InitialData(2.0, "bump", 0.4), 0.5, Ny=200)
        for _ in range(50):
            state = step(state, nl, 1.0, 0.5, 1e-3)
        assert abs(state.g + state.h) <= 1e-12
        assert np.max(np.abs(state.v - state.v[::-1])) <= 1e-12

    def test_flat_delta_starts_growing(self):
        nl = kpp_logistic(eps=0.0)
        state = make_initial(InitialData(2.0, "flat_delta", 0.0), 0.5, Ny=200)
        out = step(state, nl, 1.0, 0.5, 1e-3)
        assert np.all(out.v[1:-1] > 0.5)
        gp, hp = front_slopes(out, 0.5, 1.0)
        assert hp > 0.0 and gp < 0.0

    def test_width_floor_raises(self):
        nl = kpp_logistic(eps=0.0)
        state = make_initial(InitialData(2.0, "bump", 0.4), 0.5, Ny=100)
        with pytest.raises(WidthCollapseError, match="width collapse"):
            step(state, nl, 1.0, 0.5, 1e-3, width_floor=10.0)


class TestSolve:
    def test_symmetric_run_front_identity(self, short_run):
        bound = 1e-10 * np.maximum(1.0, np.abs(short_run.h))
        assert np.all(np.abs(short_run.g + short_run.h) <= bound)

    def test_recorded_sup_bounds_finite(self, short_run):
        assert np.isfinite(short_run.sup_v)
        assert np.isfinite(short_run.sup_gprime)
        assert np.isfinite(short_run.sup_hprime)
        assert short_run.sup_v <= 1.0 + 1e-8

    def test_time_strictly_increasing(self, short_run):
        assert np.all(np.diff(short_run.t) > 0.0)

    def test_slopes_recomputable_from_snapshots(self, short_run):
        for snap in short_run.snapshots[1:]:
            i = np.searchsorted(short_run.t, snap.t)
            gp, hp = front_slopes(snap, 0.5, 1.0)
            assert gp == pytest.approx(short_run.gprime[i], abs=1e-11)
            assert hp == pytest.approx(short_run.hprime[i], abs=1e-11)

    def test_interior_approaches_one(self, short_run):
        center = short_run.snapshots[-1].v[len(short_run.snapshots[-1].v) // 2]
        assert abs(center - 1.0) < 1e-2

    def test_snapshot_cadence(self, short_run):
        times = [s.t for s in short_run.snapshots]
        assert len(times) == 11  # one per period incl. t = 0
        assert times[1] == pytest.approx(1.0, abs=1e-12)

    def test_refinement_second_order(self):
        # halving dt and the grid spacing shrinks the h(T) change ~4x
        nl = kpp_logistic(eps=0.0)
        init = InitialData(1.0, "bump", 0.3)
        ends = []
        for ny, dt in ((100, 4e-3), (200, 2e-3), (400, 1e-3)):
            traj = solve(init, nl, 1.0, 0.5, horizon=2.0, Ny=ny, dt=dt)
            ends.append(traj.h[-1])
        ratio = abs(ends[0] - ends[1]) / abs(ends[1] - ends[2])
        assert ratio > 2.5

    def test_bistable_shrink_without_failure(self):
        # delta slightly above theta* = 2/3, shallow interior dip: the range
        # contracts for a while, then the run keeps going
        nl = bistable_cubic(theta=0.4)
        traj = solve(InitialData(1.2, "bump", -0.25), nl, 1.0, 0.68,
                     horizon=3.0, Ny=300, dt=1e-3)
        assert traj.hprime[1] < 0.0
        assert traj.h[-1] - traj.g[-1] > 0.0

    def test_width_collapse_reported(self):
        # delta below the middle zero: the reaction drains the range until
        # the floor is hit, which ends the run loudly
        nl = bistable_cubic(theta=0.5)
        with pytest.raises(WidthCollapseError, match="width collapse"):
            solve(InitialData(0.5, "flat_delta", 0.0), nl, 1.0, 0.2,
                  horizon=20.0, Ny=200, dt=1e-3)

    def test_peclet_warning(self):
        nl = kpp_logistic(eps=0.0)
        with pytest.warns(RuntimeWarning, match="Peclet"):
            solve(InitialData(2.0, "bump", 0.4), nl, 0.05, 0.05,
                  horizon=8.0, Ny=25, dt=2e-3)
