import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semifront.nonlinearity import a0, bistable_cubic, kpp_logistic, monostable_nonkpp
from semifront.semiwave import (
    SemiWavePair,
    autonomous_shooting_oracle,
    boundary_flux,
    estimate_decay_rate,
    kbar,
    mu0,
    semiwave_scalars,
    solve_periodic_parabolic,
    solve_semiwave,
)


class TestPeriodicParabolic:
    def test_zero_speed_matches_first_integral(self):
        # steady state with k = 0: (d/2) Phi'(0)^2 = int_delta^1 f du = 1/12
        nl = kpp_logistic(eps=0.0)
        orbit = solve_periodic_parabolic(nl, 0.0, 0.5, 1.0, L=20.0, Nt=32, Nx=500)
        slope = (0.5 / 1.0) * boundary_flux(orbit, 20.0 / 500, 0.5, 1.0)[0]
        assert slope == pytest.approx(math.sqrt(1.0 / 6.0), abs=2e-4)

    def test_profiles_ordered_in_k(self):
        nl = kpp_logistic(eps=0.0)
        phi_slow = solve_periodic_parabolic(nl, 0.0, 0.5, 1.0, L=16.0, Nt=32, Nx=300)
        phi_fast = solve_periodic_parabolic(nl, 0.5, 0.5, 1.0, L=16.0, Nt=32, Nx=300)
        assert np.all(phi_slow >= phi_fast - 1e-9)
        bulk = (phi_slow[0] < 0.999) & (phi_slow[0] > 0.51)
        assert np.all(phi_slow[:, bulk] > phi_fast[:, bulk])

    def test_boundary_rows_exact(self):
        nl = kpp_logistic(eps=0.4)
        orbit = solve_periodic_parabolic(nl, 0.3, 0.4, 1.0, L=16.0, Nt=32, Nx=300)
        assert np.all(orbit[:, 0] == 0.4)
        assert np.all(orbit[:, -1] == 1.0)

    def test_period_closure_and_descent(self):
        nl = kpp_logistic(eps=0.3)
        orbit, diag = solve_periodic_parabolic(nl, 0.5, 0.5, 1.0, L=16.0, Nt=64,
                                               Nx=300, tol_period=1e-8,
                                               return_diagnostics=True)
        assert np.max(np.abs(orbit[0] - orbit[-1])) <= 1e-8
        # monotone descent from the upper state, up to step-level roundoff
        assert diag["descent_violation"] <= 1e-10

    def test_no_convergence_error(self):
        nl = kpp_logistic(eps=0.3)
        with pytest.raises(RuntimeError, match="no convergence"):
            solve_periodic_parabolic(nl, 0.5, 0.5, 1.0, L=16.0, Nt=32, Nx=200,
                                     tol_period=1e-13, max_periods=3)

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            solve_periodic_parabolic(kpp_logistic(), -0.1, 0.5, 1.0, L=16.0)


class TestBoundaryFlux:
    def test_linear_data_exact(self):
        h = 0.1
        phi = np.array([[0.5 + 0.3 * i * h for i in range(5)]])
        assert boundary_flux(phi, h, 0.5, 1.0)[0] == pytest.approx(0.6, abs=1e-13)

    def test_quadratic_data_second_order(self):
        # Phi = delta + x^2 has zero slope at x = 0; stencil error is O(h^2)
        for h in (0.1, 0.05):
            phi = np.array([[0.5 + (i * h) ** 2 for i in range(5)]])
            assert abs(boundary_flux(phi, h, 0.5, 1.0)[0]) <= 1e-12

    def test_needs_three_nodes(self):
        with pytest.raises(ValueError):
            boundary_flux(np.ones((4, 2)), 0.1, 0.5, 1.0)


class TestShootingOracle:
    def test_wide_delta_slow_front(self):
        k = autonomous_shooting_oracle(lambda u: u * (1.0 - u), 0.999, 1.0)
        assert k < 0.05

    def test_small_delta_approaches_minimal_speed(self):
        k = autonomous_shooting_oracle(lambda u: u * (1.0 - u), 0.001, 1.0)
        assert 1.8 < k < 2.0

    def test_reproducible_across_tolerance(self):
        f = lambda u: u * (1.0 - u)
        k1 = autonomous_shooting_oracle(f, 0.5, 1.0, tol_k=1e-8, rtol=1e-10)
        k2 = autonomous_shooting_oracle(f, 0.5, 1.0, tol_k=1e-8, rtol=1e-8)
        assert abs(k1 - k2) <= 1e-6

    def test_bad_delta_rejected(self):
        with pytest.raises(ValueError):
            autonomous_shooting_oracle(lambda u: u * (1.0 - u), 1.5, 1.0)

    def test_bracket_not_found(self):
        with pytest.raises(RuntimeError, match="bracket not found"):
            autonomous_shooting_oracle(lambda u: u * (1.0 - u), 0.5, 1.0, k_hi=1e-6)


class TestSolveSemiwave:
    def test_autonomous_speed_constant_in_time(self, logistic_pair):
        spread = logistic_pair.k_star.max() - logistic_pair.k_star.min()
        assert spread < 1e-4

    def test_matches_shooting_oracle(self, logistic_pair):
        k_auto = autonomous_shooting_oracle(lambda u: u * (1.0 - u), 0.5, 1.0)
        assert abs(kbar(logistic_pair) - k_auto) / k_auto < 1e-3

    def test_flux_residual_small(self, logistic_pair, periodic_pair):
        assert logistic_pair.flux_residual <= 5e-4
        assert periodic_pair.flux_residual <= 5e-4

    def test_profile_monotone_and_bounded(self, periodic_pair):
        dphi = np.diff(periodic_pair.phi, axis=1)
        assert dphi.min() > 0.0
        assert periodic_pair.phi.min() >= periodic_pair.delta
        assert periodic_pair.phi.max() <= 1.0 + 1e-8

    def test_speed_positive_and_periodic(self, periodic_pair):
        assert periodic_pair.k_star.min() > 0.0
        assert periodic_pair.k_star[0] == periodic_pair.k_star[-1]

    def test_uniqueness_probe(self):
        nl = kpp_logistic(eps=0.3)
        tol_fix = 1e-5
        common = dict(L=16.0, Nt=64, Nx=260, tol_fix=tol_fix)
        pa = solve_semiwave(nl, 0.5, 1.0, k0=0.2, **common)
        pb = solve_semiwave(nl, 0.5, 1.0, k0=0.9, **common)
        assert np.max(np.abs(pa.k_star - pb.k_star)) < 10.0 * tol_fix

    def test_truncation_insensitivity(self):
        nl = kpp_logistic(eps=0.0)
        p1 = solve_semiwave(nl, 0.5, 1.0, L=18.0, Nt=48, Nx=360)
        p2 = solve_semiwave(nl, 0.5, 1.0, L=36.0, Nt=48, Nx=720)
        m = mu0(kbar(p1), a0(nl), 1.0)
        assert abs(kbar(p2) - kbar(p1)) < max(1e-4, 10.0 * math.exp(-m * 18.0))

    def test_bistable_below_threshold_rejected(self):
        with pytest.raises(ValueError, match="hypothesis violation"):
            solve_semiwave(bistable_cubic(theta=0.4), 0.6, 1.0, L=12.0, Nt=32, Nx=200)

    def test_bistable_tanh_front_speed(self):
        # delta = 2 theta: the full tanh front solves the flux condition,
        # so k* = (1 - 2 theta) sqrt(d/2) exactly
        pair = solve_semiwave(bistable_cubic(theta=0.4), 0.8, 1.0,
                              L=18.0, Nt=48, Nx=360)
        assert kbar(pair) == pytest.approx(0.2 / math.sqrt(2.0), rel=2e-3)

    def test_omega_validated(self):
        with pytest.raises(ValueError):
            solve_semiwave(kpp_logistic(), 0.5, 1.0, omega=0.0)


class TestScalars:
    def test_kbar_constant(self):
        t = np.linspace(0.0, 1.0, 65)
        pair = SemiWavePair(0.5, 1.0, 1.0, 10.0, t, np.linspace(0, 10, 11),
                            np.full(65, 2.0), np.ones((65, 11)), 0.0)
        assert kbar(pair) == pytest.approx(2.0, abs=1e-14)

    def test_kbar_sine_averages_out(self):
        t = np.linspace(0.0, 1.0, 257)
        pair = SemiWavePair(0.5, 1.0, 1.0, 10.0, t, np.linspace(0, 10, 11),
                            1.0 + np.sin(2 * np.pi * t), np.ones((257, 11)), 0.0)
        assert kbar(pair) == pytest.approx(1.0, abs=1e-6)

    def test_mu0_values(self):
        assert mu0(0.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert mu0(3.0, 2.0, 1.0) == pytest.approx((-3.0 + math.sqrt(17.0)) / 2.0, abs=1e-15)
        assert mu0(2.0, 1.0, 1.0) == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-15)

    def test_mu0_rejects_bad_args(self):
        for bad in ((1.0, -1.0, 1.0), (1.0, 1.0, 0.0), (-0.5, 1.0, 1.0)):
            with pytest.raises(ValueError):
                mu0(*bad)

    def test_scalars_bundle(self, logistic_pair):
        sc = semiwave_scalars(logistic_pair, kpp_logistic(eps=0.0))
        assert sc.a0 == pytest.approx(1.0, abs=1e-12)
        assert sc.mu0 > 0.0
        assert abs(sc.fitted_mu - sc.mu0) <= 0.1 * sc.mu0


@settings(max_examples=200, deadline=None)
@given(k=st.floats(0.0, 5.0), a=st.floats(1e-3, 10.0), d=st.floats(1e-3, 10.0))
def test_mu0_quadratic_identity(k, a, d):
    m = mu0(k, a, d)
    assert abs(d * m * m + k * m - a) <= 1e-12 * max(1.0, a)


class TestDecayRate:
    def test_synthetic_exponential(self):
        L, mu = 30.0, 0.7
        x = np.linspace(0.0, L, 601)
        t = np.linspace(0.0, 1.0, 33)
        phi = 1.0 - np.exp(-mu * x)[None, :].repeat(33, axis=0)
        phi[:, 0] = 0.0
        pair = SemiWavePair(0.5, 1.0, 1.0, L, t, x, np.full(33, 1.0), phi, 0.0)
        assert estimate_decay_rate(pair, window=(6.0, 15.0)) == pytest.approx(mu, abs=1e-3)

    def test_fitted_rate_near_mu0(self, logistic_pair):
        sc = semiwave_scalars(logistic_pair, kpp_logistic(eps=0.0))
        assert abs(sc.fitted_mu - sc.mu0) <= 0.1 * sc.mu0

    def test_window_shift_stability(self, logistic_pair):
        L = logistic_pair.L
        base = estimate_decay_rate(logistic_pair, window=(0.4 * L, 0.7 * L))
        shifted = estimate_decay_rate(logistic_pair, window=(0.48 * L, 0.78 * L))
        assert abs(shifted - base) / base < 0.05

    def test_underresolved_window_rejected(self, logistic_pair):
        with pytest.raises(ValueError, match="underresolved"):
            estimate_decay_rate(logistic_pair, window=(0.9 * logistic_pair.L,
                                                       0.905 * logistic_pair.L))
