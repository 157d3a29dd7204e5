import dataclasses
import math

import numpy as np
import pytest

from semifront.fbp import Trajectory
from semifront.nonlinearity import bistable_cubic, kpp_logistic, monostable_nonkpp
from semifront.semiwave import SemiWavePair, kbar
from semifront.verification import (
    auto_lower_params,
    auto_upper_params,
    bistable_gate,
    build_diagnostics,
    cumulative_speed,
    front_drift,
    lower_solution_check,
    profile_error,
    solve_x_delta,
    solve_z_delta,
    speed_error,
    upper_solution_check,
    _Fields,
    _lower_h,
    _ubar,
    _ulow,
    _upper_hbar,
)


def constant_pair(k=2.0, T=1.0, L=10.0):
    t = np.linspace(0.0, T, 65)
    x = np.linspace(0.0, L, 41)
    phi = np.tile(np.linspace(0.5, 1.0, 41), (65, 1))
    return SemiWavePair(0.5, 1.0, T, L, t, x, np.full(65, k), phi, 0.0)


def synthetic_traj(pair, offset_h=5.0, offset_g=-2.0, horizon=3.0, n=301):
    t = np.linspace(0.0, horizon, n)
    I = cumulative_speed(pair, t)
    k = pair.k_at(t)
    return Trajectory(t=t, g=-I + offset_g, h=I + offset_h, gprime=-k, hprime=k,
                      vmax=np.ones(n), snapshots=[],
                      config={"delta": pair.delta, "d": pair.d, "T": pair.T})


class TestCumulativeSpeed:
    def test_constant_speed(self):
        pair = constant_pair(k=2.0)
        assert cumulative_speed(pair, 3.0) == pytest.approx(6.0, abs=1e-12)

    def test_one_period_equals_mean(self, periodic_pair):
        got = cumulative_speed(periodic_pair, periodic_pair.T)
        assert got == pytest.approx(periodic_pair.T * kbar(periodic_pair), abs=1e-13)

    def test_multiple_periods(self, periodic_pair):
        one = cumulative_speed(periodic_pair, periodic_pair.T)
        assert cumulative_speed(periodic_pair, 7 * periodic_pair.T) == pytest.approx(
            7 * one, abs=1e-12)

    def test_negative_time_rejected(self, periodic_pair):
        with pytest.raises(ValueError):
            cumulative_speed(periodic_pair, -1.0)


class TestFrontDrift:
    def test_synthetic_offsets(self):
        pair = constant_pair()
        traj = synthetic_traj(pair, offset_h=5.0, offset_g=-2.0)
        drift = front_drift(traj, pair)
        assert np.allclose(drift.drift_h, 5.0, atol=1e-10)
        assert np.allclose(drift.drift_g, -2.0, atol=1e-10)
        assert drift.bound_Q == pytest.approx(7.0, abs=1e-9)

    def test_symmetric_run_antisymmetric_drifts(self, short_run, periodic_pair):
        drift = front_drift(short_run, periodic_pair)
        assert np.max(np.abs(drift.drift_h + drift.drift_g)) <= 1e-9

    def test_mismatched_inputs_rejected(self, short_run):
        pair = constant_pair()
        pair.delta = 0.3
        with pytest.raises(ValueError, match="disagree"):
            front_drift(short_run, pair)


class TestSpeedError:
    def test_exact_tracking_is_zero(self):
        pair = constant_pair()
        traj = synthetic_traj(pair)
        assert speed_error(traj, pair) <= 1e-12

    def test_early_window_reported_not_failed(self, short_run, periodic_pair):
        err = speed_error(short_run, periodic_pair, window=1.0)
        assert np.isfinite(err)  # O(1) early transient is data, not an error

    def test_late_window_converged(self, short_run, periodic_pair):
        assert speed_error(short_run, periodic_pair, window=0.2) < 5e-2


class TestProfileError:
    def test_manufactured_snapshot_is_exact(self, periodic_pair):
        from semifront.fbp import FbpState, unit_grid

        h, g = 12.0, -12.0
        t = 3.0
        x = g + unit_grid(400) * (h - g)
        v = periodic_pair.phi_at(t, h - x)
        snap = FbpState(t=t, g=g, h=h, v=v)
        assert profile_error(snap, periodic_pair) <= 1e-12

    def test_symmetric_snapshot_sides_agree(self, short_run, periodic_pair):
        snap = short_run.snapshots[-1]
        right = profile_error(snap, periodic_pair, side="right")
        left = profile_error(snap, periodic_pair, side="left")
        assert right == pytest.approx(left, abs=1e-11)

    def test_late_snapshot_converged(self, short_run, periodic_pair):
        assert profile_error(short_run.snapshots[-1], periodic_pair) < 5e-2


class TestBistableGate:
    def test_admissible_above_threshold(self):
        gate = bistable_gate(bistable_cubic(theta=0.4), 0.8)
        assert gate.admissible
        assert gate.theta_star == pytest.approx(2.0 / 3.0, abs=1e-8)

    def test_inadmissible_below_threshold(self):
        gate = bistable_gate(bistable_cubic(theta=0.4), 0.6)
        assert not gate.admissible

    def test_monostable_bypassed(self):
        for delta in (0.1, 0.5, 0.9):
            assert bistable_gate(monostable_nonkpp(a=2.0), delta).admissible


@pytest.fixture(scope="module")
def upper(periodic_pair, short_run):
    nl = kpp_logistic(eps=0.3)
    return auto_upper_params(periodic_pair, nl, short_run)


@pytest.fixture(scope="module")
def lower(periodic_pair):
    nl = kpp_logistic(eps=0.3)
    return auto_lower_params(periodic_pair, nl)


class TestUpperConstruction:
    def test_gamma_meets_thresholds(self, upper):
        assert upper.gamma >= 2.0 * max(upper.thresholds) * (1 - 1e-12)
        assert 0.0 < upper.q0 < min(upper.eta, upper.gamma)

    def test_z_delta_contract(self, upper, periodic_pair):
        f = _Fields(periodic_pair)
        for t in (upper.tau_star, upper.tau_star + 0.7, upper.tau_star + 25.0):
            z = float(solve_z_delta(upper, periodic_pair, t)[0])
            assert -upper.a < z <= 0.0
            resid = (float(_ubar(upper, periodic_pair, f, np.array([t]),
                                 np.array([float(_upper_hbar(upper, f, t))]))[0][0, 0])
                     - periodic_pair.delta)
            assert abs(resid) <= 1e-12

    def test_z_delta_initial_bound(self, upper, periodic_pair):
        z0 = float(solve_z_delta(upper, periodic_pair, upper.tau_star)[0])
        assert abs(z0) <= upper.B0 * upper.q0 + 1e-12

    def test_z_delta_vanishes_late(self, upper, periodic_pair):
        z = float(solve_z_delta(upper, periodic_pair, upper.tau_star + 80.0)[0])
        assert abs(z) <= 1e-9

    def test_inadmissible_gamma_rejected(self, upper, periodic_pair, short_run):
        bad = dataclasses.replace(upper, gamma=0.0)
        chk = upper_solution_check(bad, periodic_pair, kpp_logistic(eps=0.3), short_run)
        assert chk.verdict == "inadmissible params"

    def test_residual_and_ordering(self, upper, periodic_pair, short_run):
        chk = upper_solution_check(upper, periodic_pair, kpp_logistic(eps=0.3),
                                   short_run, tol_fd=5e-3)
        assert chk.verdict == "pass"
        assert chk.residual >= -5e-3
        assert chk.ordering_ok


class TestLowerConstruction:
    def test_beta_meets_thresholds(self, lower):
        assert lower.beta >= 2.0 * max(lower.thresholds) * (1 - 1e-12)
        assert lower.sigma1 < lower.mu * lower.k_min

    def test_x_delta_contract(self, lower, periodic_pair):
        f = _Fields(periodic_pair)
        ts = np.array([lower.n0 * periodic_pair.T, lower.n0 * periodic_pair.T + 5.0])
        xs = solve_x_delta(lower, periodic_pair, ts, fields=f)
        assert np.all(xs >= 0.0)
        # defining-equation residual at the root
        two_h = 2.0 * _lower_h(lower, f, ts)
        resid = (f.phi(ts, xs) + f.phi(ts, two_h + xs) - 1.0
                 - lower.q1 * np.exp(-lower.sigma1 * ts) - periodic_pair.delta)
        assert np.max(np.abs(resid)) <= 1e-12

    def test_x_delta_decay_bound(self, lower, periodic_pair):
        f = _Fields(periodic_pair)
        ts = np.linspace(lower.n0 * periodic_pair.T,
                         lower.n0 * periodic_pair.T + 30.0, 16)
        xs = solve_x_delta(lower, periodic_pair, ts, fields=f)
        bound = (lower.C1 * lower.q1 * np.exp(-lower.sigma1 * ts)
                 + lower.C1 * np.exp(-lower.mu * lower.k_min * ts))
        assert np.all(xs <= bound + 1e-12)

    def test_sigma1_cap_enforced(self, lower, periodic_pair, short_run):
        bad = dataclasses.replace(lower, sigma1=lower.mu * lower.k_min * 1.5)
        chk = lower_solution_check(bad, periodic_pair, kpp_logistic(eps=0.3), short_run)
        assert chk.verdict == "inadmissible params"

    def test_short_horizon_reported(self, lower, periodic_pair, short_run):
        chk = lower_solution_check(lower, periodic_pair, kpp_logistic(eps=0.3), short_run)
        assert chk.verdict == "horizon too short for the time shift"


class TestDiagnosticsReport:
    def test_verdicts_on_short_run(self, short_run, periodic_pair):
        rep = build_diagnostics(short_run, periodic_pair, kpp_logistic(eps=0.3))
        assert rep.verdicts["drift_bounded"]
        assert rep.verdicts["speed_converged"]
        assert rep.verdicts["profile_converged"]
        assert rep.verdicts["decay_rate"]
        assert rep.drift_bound_Q > 0.0
        assert len(rep.profile_err) == len(rep.profile_t)

    def test_tolerances_echoed(self, short_run, periodic_pair):
        rep = build_diagnostics(short_run, periodic_pair, kpp_logistic(eps=0.3),
                                tolerances={"speed": 1e-9})
        assert rep.tolerances["speed"] == 1e-9
        assert not rep.verdicts["speed_converged"]
