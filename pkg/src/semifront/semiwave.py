"""Semi-wave pair (k*(t), Phi*(t, x)) for the wave-frame periodic problem

    Phi_t - d Phi_xx + k(t) Phi_x = f(t, Phi)   on (0, L),
    Phi(t, 0) = delta,  Phi(t, L) = 1,          Phi T-periodic in t,

coupled to the boundary-flux identity (d/delta) Phi_x(t, 0) = k(t).

The inner problem for a frozen speed series is marched in time with a
Crank-Nicolson treatment of diffusion + advection (one tridiagonal solve
per step, matrices prefactored per time level) and Adams-Bashforth
explicit reaction, starting at the upper state Phi = 1 until the period
map settles.  The speed series is then updated by a damped fixed-point
iteration on the boundary flux.

An independent phase-plane shooting oracle for autonomous reactions pins
the expected speed in the time-independent case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.linalg import get_lapack_funcs

from semifront.nonlinearity import Nonlinearity, a0 as nl_a0, classify, theta_star, time_averaged_reaction

__all__ = [
    "SemiWavePair",
    "SemiWaveScalars",
    "solve_periodic_parabolic",
    "boundary_flux",
    "solve_semiwave",
    "kbar",
    "mu0",
    "semiwave_scalars",
    "estimate_decay_rate",
    "autonomous_shooting_oracle",
]

_gttrf, _gttrs = get_lapack_funcs(("gttrf", "gttrs"), (np.zeros(2),))

# strict profile monotonicity is only meaningful where 1 - Phi clears roundoff
_TIE_FLOOR = 64 * np.finfo(float).eps


@dataclass
class SemiWavePair:
    """Converged semi-wave: speeds on t_grid, profile on t_grid x x_grid."""

    delta: float
    d: float
    T: float
    L: float
    t_grid: np.ndarray
    x_grid: np.ndarray
    k_star: np.ndarray
    phi: np.ndarray
    flux_residual: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def h(self) -> float:
        return self.x_grid[1] - self.x_grid[0]

    def k_at(self, t):
        """Piecewise-linear periodic evaluation of k*."""
        tm = np.mod(np.asarray(t, dtype=float), self.T)
        return np.interp(tm, self.t_grid, self.k_star)

    def k_spline(self) -> CubicSpline:
        if "kspl" not in self._cache:
            self._cache["kspl"] = CubicSpline(self.t_grid, self.k_star, bc_type="periodic")
        return self._cache["kspl"]

    def phi_spline(self) -> RectBivariateSpline:
        """Bicubic interpolant of Phi* on a periodically padded time grid."""
        if "pspl" not in self._cache:
            pad = 3
            nt = len(self.t_grid) - 1
            dt = self.T / nt
            tex = np.concatenate([self.t_grid[0] - dt * np.arange(pad, 0, -1),
                                  self.t_grid,
                                  self.t_grid[-1] + dt * np.arange(1, pad + 1)])
            rows = np.vstack([self.phi[nt - pad:nt], self.phi, self.phi[1:pad + 1]])
            self._cache["pspl"] = RectBivariateSpline(tex, self.x_grid, rows, kx=3, ky=3)
        return self._cache["pspl"]

    def phi_at(self, t, x):
        """Bilinear evaluation of Phi*(t, x); x beyond L clamps to 1."""
        x = np.asarray(x, dtype=float)
        tm = float(np.mod(t, self.T))
        nt = len(self.t_grid) - 1
        s = tm / (self.T / nt)
        i = min(int(s), nt - 1)
        w = s - i
        row = (1.0 - w) * self.phi[i] + w * self.phi[i + 1]
        out = np.interp(np.clip(x, 0.0, self.L), self.x_grid, row)
        return np.where(x > self.L, 1.0, out)

    def phi_eval(self, t, x, dt_order=0, dx_order=0):
        """Smooth (spline) evaluation with far-field clamping, for the
        verification stencils.  t, x are broadcast arrays."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t, x = np.broadcast_arrays(t, x)
        tm = np.mod(t, self.T)
        inside = x <= self.L
        out = np.zeros(t.shape)
        if dt_order == 0 and dx_order == 0:
            out[...] = 1.0
        vals = self.phi_spline().ev(tm[inside], np.maximum(x[inside], 0.0),
                                    dx=dt_order, dy=dx_order)
        out[inside] = vals
        return out


@dataclass(frozen=True)
class SemiWaveScalars:
    """Mean speed, decay budget a0, closed-form mu0, and the fitted tail rate."""

    k_bar: float
    a0: float
    mu0: float
    fitted_mu: float


def _factor_levels(k_nodes, d, h, dt, n):
    """Prefactor the Crank-Nicolson left-hand matrices for every time level."""
    lam = d / (h * h)
    factors = []
    for m in range(1, len(k_nodes)):
        km = k_nodes[m]
        sub = 0.5 * dt * (-lam - km / (2.0 * h))
        dia = 1.0 + dt * lam
        sup = 0.5 * dt * (-lam + km / (2.0 * h))
        dl = np.full(n - 1, sub)
        dd = np.full(n, dia)
        du = np.full(n - 1, sup)
        dl_, dd_, du_, du2_, ipiv, info = _gttrf(dl, dd, du)
        if info != 0:
            raise RuntimeError("tridiagonal factorization failed")
        factors.append((dl_, dd_, du_, du2_, ipiv, sub, sup))
    return factors


def _march_periods(nl, k_nodes, delta, d, L, Nt, Nx, tol_period, max_periods,
                   phi0=None):
    """Time-march from phi0 (default: the upper state 1) until the period
    map contracts below tol_period in sup norm.

    Returns (orbit, periods_used, residual, descent_violation) where orbit
    has shape (Nt+1, Nx+1) holding the last marched period.
    """
    T = nl.T
    h = L / Nx
    dt = T / Nt
    lam = d / (h * h)
    x = np.linspace(0.0, L, Nx + 1)
    factors = _factor_levels(k_nodes, d, h, dt, Nx - 1)

    if phi0 is None:
        phi = np.ones(Nx + 1)
    else:
        phi = np.array(phi0, dtype=float)
    phi[0] = delta
    phi[-1] = 1.0

    t_nodes = np.linspace(0.0, T, Nt + 1)
    orbit = np.empty((Nt + 1, Nx + 1))
    f_prev = None
    residual = np.inf
    descent_viol = 0.0

    for period in range(1, max_periods + 1):
        orbit[0] = phi
        start = orbit[0].copy()
        for m in range(Nt):
            km = k_nodes[m]
            c_sub = -lam - km / (2.0 * h)
            c_sup = -lam + km / (2.0 * h)
            f_m = nl.eval_f(t_nodes[m], phi[1:-1])
            if f_prev is None:
                react = dt * f_m
            else:
                react = dt * (1.5 * f_m - 0.5 * f_prev)
            rhs = (phi[1:-1] * (1.0 - dt * lam)
                   - 0.5 * dt * (c_sub * phi[:-2] + c_sup * phi[2:])
                   + react)
            dl_, dd_, du_, du2_, ipiv, sub_L, sup_L = factors[m]
            rhs[0] -= sub_L * delta
            rhs[-1] -= sup_L
            sol, info = _gttrs(dl_, dd_, du_, du2_, ipiv, rhs)
            if info != 0 or not np.isfinite(sol[0]):
                raise RuntimeError("no convergence: time step produced non-finite values")
            phi = orbit[m + 1]
            phi[1:-1] = sol
            phi[0] = delta
            phi[-1] = 1.0
            f_prev = f_m
        residual = float(np.max(np.abs(phi - start)))
        descent_viol = max(descent_viol, float(np.max(phi - start)))
        if residual < tol_period:
            return orbit, period, residual, descent_viol
        phi = phi.copy()
    raise RuntimeError(
        f"no convergence: period-map residual {residual:.3e} above {tol_period:.1e} "
        f"after {max_periods} periods")


def solve_periodic_parabolic(nl: Nonlinearity, k, delta: float, d: float, L: float,
                             Nt: int = 256, Nx: int = 512, tol_period: float = 1e-8,
                             max_periods: int = 2000, phi0=None,
                             return_diagnostics: bool = False):
    """Maximal T-periodic profile for a frozen nonnegative speed series k.

    k is a scalar or an array of Nt+1 node values on [0, T].  Marching
    starts from the upper state Phi = 1 (unless phi0 warm-starts it), so
    the period map descends onto the maximal solution.  Raises on
    non-convergence and on loss of the strict spatial monotonicity of the
    converged profile.  With return_diagnostics, also returns a dict with
    the period count, final residual and the largest upward excursion of
    the period map (monotone-descent violation).
    """
    k_nodes = np.broadcast_to(np.asarray(k, dtype=float), (Nt + 1,)).copy()
    if np.any(k_nodes < 0.0):
        raise ValueError("speed series must be nonnegative")
    orbit, periods, residual, descent = _march_periods(
        nl, k_nodes, delta, d, L, Nt, Nx, tol_period, max_periods, phi0=phi0)
    interior = np.diff(orbit, axis=1)
    tail_tied = (1.0 - orbit[:, 1:]) <= _TIE_FLOOR
    if np.any((interior <= 0.0) & ~tail_tied):
        raise RuntimeError("monotonicity lost: converged profile not increasing in x")
    if return_diagnostics:
        return orbit, {"periods": periods, "residual": residual,
                       "descent_violation": descent}
    return orbit


def boundary_flux(phi: np.ndarray, h: float, delta: float, d: float) -> np.ndarray:
    """Speed series (d/delta) * Phi_x(t, 0) via the one-sided second-order
    stencil (-3 phi0 + 4 phi1 - phi2) / (2 h), per time row."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] < 3:
        raise ValueError("profile needs at least 3 nodes near x = 0")
    return (d / delta) * (-3.0 * phi[..., 0] + 4.0 * phi[..., 1] - phi[..., 2]) / (2.0 * h)


def kbar(pair: SemiWavePair) -> float:
    """Period mean of k* (trapezoid over one period)."""
    return float(np.trapezoid(pair.k_star, pair.t_grid) / pair.T)


def mu0(k_bar: float, a0: float, d: float) -> float:
    """Tail decay exponent (-kbar + sqrt(kbar^2 + 4 a0 d)) / (2 d)."""
    if not (a0 > 0.0 and d > 0.0 and k_bar >= 0.0):
        raise ValueError("mu0 needs a0 > 0, d > 0 and k_bar >= 0")
    return (-k_bar + math.sqrt(k_bar * k_bar + 4.0 * a0 * d)) / (2.0 * d)


def estimate_decay_rate(pair: SemiWavePair, window=None) -> float:
    """Least-squares slope of -log(1 - Phi*) over a tail window, averaged
    over time rows.  The window must stay above machine noise."""
    if window is None:
        window = (0.4 * pair.L, 0.7 * pair.L)
    x_lo, x_hi = window
    if not (0.0 < x_lo < x_hi < pair.L):
        raise ValueError("window must sit strictly inside (0, L)")
    mask = (pair.x_grid >= x_lo) & (pair.x_grid <= x_hi)
    w = 1.0 - pair.phi[:, mask]
    usable = np.all(w > 1e-12, axis=0)
    if int(usable.sum()) < 10:
        raise ValueError("window underresolved: fewer than 10 usable nodes")
    xs = pair.x_grid[mask][usable]
    ys = -np.log(w[:, usable])
    xc = xs - xs.mean()
    slopes = (ys * xc).sum(axis=1) / (xc * xc).sum()
    return float(slopes.mean())


def semiwave_scalars(pair: SemiWavePair, nl: Nonlinearity, window=None) -> SemiWaveScalars:
    """Bundle mean speed, a0, the closed-form mu0 and the fitted tail rate."""
    kb = kbar(pair)
    a = nl_a0(nl)
    return SemiWaveScalars(k_bar=kb, a0=a, mu0=mu0(kb, a, pair.d),
                           fitted_mu=estimate_decay_rate(pair, window=window))


def autonomous_shooting_oracle(f, delta: float, d: float, tol_k: float = 1e-8,
                               k_hi: float | None = None, x_max: float = 1000.0,
                               rtol: float = 1e-10) -> float:
    """Semi-wave speed for an autonomous reaction via phase-plane shooting.

    Integrates d Phi'' - k Phi' + f(Phi) = 0 with Phi(0) = delta,
    Phi'(0) = (delta/d) k and bisects k on the overshoot/undershoot
    classification of the trajectory.  The default bracket top is
    2*sqrt(d * sup f'), which reduces to the classical 2*sqrt(d f'(0))
    for KPP reactions.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if k_hi is None:
        ug = np.linspace(0.0, 1.0, 513)
        fp = np.gradient(np.asarray(f(ug), dtype=float), ug)
        k_hi = 2.0 * math.sqrt(d * float(fp.max()))

    def rhs(x, y):
        return [y[1], (rhs.k * y[1] - f(y[0])) / d]

    def ev_over(x, y):
        return y[0] - (1.0 + 1e-9)

    def ev_under(x, y):
        return y[1] + 1e-14

    ev_over.terminal = True
    ev_over.direction = 1
    ev_under.terminal = True
    ev_under.direction = -1

    def overshoots(k):
        if k <= 0.0:
            return False
        rhs.k = k
        sol = solve_ivp(rhs, (0.0, x_max), [delta, delta * k / d],
                        events=(ev_over, ev_under), rtol=rtol, atol=1e-12,
                        max_step=x_max / 16)
        if len(sol.t_events[0]):
            return True
        if len(sol.t_events[1]):
            return False
        return bool(sol.y[0, -1] >= 1.0)

    lo, hi = 0.0, k_hi
    if overshoots(lo) or not overshoots(hi):
        raise RuntimeError("bracket not found: same classification at both bracket ends")
    while hi - lo > tol_k:
        mid = 0.5 * (lo + hi)
        if overshoots(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _default_truncation(nl, delta, d, k_guess):
    est = mu0(k_guess, nl_a0(nl), d)
    return 20.0 / est


def _initial_speed_guess(nl, delta, d):
    fbar = time_averaged_reaction(nl)
    return autonomous_shooting_oracle(lambda u: fbar(u), delta, d, tol_k=1e-6)


def solve_semiwave(nl: Nonlinearity, delta: float, d: float, L: float | None = None,
                   Nt: int = 256, Nx: int | None = None, omega: float = 0.5,
                   tol_fix: float = 1e-4, tol_period: float = 1e-8,
                   k0=None, max_iter: int = 200, max_periods: int = 2000,
                   k_min_floor: float = 1e-6) -> SemiWavePair:
    """Damped fixed-point iteration k <- (1-w) k + w * flux(Phi^k).

    The reaction must be monostable, or bistable with delta above the
    envelope threshold (the bistable case then reduces to a monostable
    one on the relevant range).  The first inner solve starts from the
    upper state 1; later iterates warm-start from the previous profile.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if not (0.0 < omega <= 1.0):
        raise ValueError("relaxation omega must lie in (0, 1]")
    report = classify(nl)
    if report.is_bistable:
        thr = theta_star(nl)
        if delta <= thr:
            raise ValueError(
                f"hypothesis violation: bistable delta {delta} not above threshold {thr:.6f}")
    elif not report.is_monostable:
        raise ValueError("hypothesis violation: reaction neither monostable nor bistable")

    k_guess = _initial_speed_guess(nl, delta, d)
    if L is None:
        L = _default_truncation(nl, delta, d, k_guess)
    if Nx is None:
        Nx = int(math.ceil(L / 0.045 / 2.0) * 2)
    h = L / Nx

    if k0 is None:
        k_nodes = np.full(Nt + 1, k_guess)
    else:
        k_nodes = np.broadcast_to(np.asarray(k0, dtype=float), (Nt + 1,)).copy()
    k_nodes = np.maximum(k_nodes, k_min_floor)

    phi_warm = None
    for _ in range(max_iter):
        orbit, _, _, _ = _march_periods(nl, k_nodes, delta, d, L, Nt, Nx,
                                        tol_period, max_periods, phi0=phi_warm)
        flux = boundary_flux(orbit, h, delta, d)
        k_new = (1.0 - omega) * k_nodes + omega * flux
        k_new = np.maximum(k_new, k_min_floor)
        k_new[-1] = k_new[0]
        if not np.all(np.isfinite(k_new)) or np.max(k_new) > 1e3:
            raise RuntimeError("iteration diverged")
        step = float(np.max(np.abs(k_new - k_nodes)))
        k_nodes = k_new
        phi_warm = orbit[-1]
        if step < tol_fix:
            break
    else:
        raise RuntimeError("iteration diverged: fixed point not reached")

    orbit, _, _, _ = _march_periods(nl, k_nodes, delta, d, L, Nt, Nx,
                                    tol_period, max_periods, phi0=phi_warm)
    flux = boundary_flux(orbit, h, delta, d)
    interior = np.diff(orbit, axis=1)
    tail_tied = (1.0 - orbit[:, 1:]) <= _TIE_FLOOR
    if np.any((interior <= 0.0) & ~tail_tied):
        raise RuntimeError("monotonicity lost: converged profile not increasing in x")

    t_grid = np.linspace(0.0, nl.T, Nt + 1)
    x_grid = np.linspace(0.0, L, Nx + 1)
    return SemiWavePair(delta=delta, d=d, T=nl.T, L=L, t_grid=t_grid, x_grid=x_grid,
                        k_star=k_nodes, phi=orbit,
                        flux_residual=float(np.max(np.abs(flux - k_nodes))))
