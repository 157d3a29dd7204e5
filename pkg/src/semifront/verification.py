"""Numeric realizations of the sharp-propagation predictions.

Diagnostics compare a free-boundary trajectory against its semi-wave
pair: front drift h(t) - int_0^t k*, speed mismatch h' - k*, and the
sup-norm distance between the run profile and the reflected, front-
anchored semi-wave.

The explicit super- and subsolution constructions are rebuilt with all
their constants measured from grid data (they are defined as extrema of
computable quantities), and their differential inequalities

    N[ubar]  = ubar_t  - d ubar_xx  - f(t, ubar)  >= 0
    N[ulow]  = ulow_t  - d ulow_xx  - f(t, ulow)  <= 0

are checked by centered finite differences on a verification grid finer
than the solver grids.  The composite upper profile is only C^1 across
the parabolic patch seam, so stencils straddling the seam are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from semifront.fbp import FbpState, Trajectory, unit_grid
from semifront.nonlinearity import Nonlinearity, a0 as nl_a0, classify, theta_star
from semifront.semiwave import SemiWavePair, kbar, mu0

__all__ = [
    "DriftSeries",
    "GateResult",
    "ConstructionCheck",
    "UpperSolutionParams",
    "LowerSolutionParams",
    "DiagnosticsReport",
    "cumulative_speed",
    "front_drift",
    "speed_error",
    "profile_error",
    "bistable_gate",
    "auto_upper_params",
    "auto_lower_params",
    "solve_z_delta",
    "solve_x_delta",
    "upper_solution_check",
    "lower_solution_check",
    "required_horizon_periods",
    "build_diagnostics",
]


# ---------------------------------------------------------------------------
# trajectory-vs-pair diagnostics
# ---------------------------------------------------------------------------

def _check_shared(traj: Trajectory, pair: SemiWavePair):
    cfg = traj.config
    for key, val in (("delta", pair.delta), ("d", pair.d), ("T", pair.T)):
        if key in cfg and abs(cfg[key] - val) > 1e-12:
            raise ValueError(f"trajectory and pair disagree on {key}")


def cumulative_speed(pair: SemiWavePair, t):
    """Trapezoidal integral int_0^t of the periodic extension of k*."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("cumulative speed needs t >= 0")
    tg, ks, T = pair.t_grid, pair.k_star, pair.T
    seg = np.concatenate([[0.0], np.cumsum(0.5 * (ks[1:] + ks[:-1]) * np.diff(tg))])
    I_T = float(np.trapezoid(ks, tg))
    seg[-1] = I_T
    n = np.floor(t / T)
    r = t - n * T
    idx = np.clip(np.searchsorted(tg, r, side="right") - 1, 0, len(tg) - 2)
    k_r = ks[idx] + (ks[idx + 1] - ks[idx]) * (r - tg[idx]) / (tg[idx + 1] - tg[idx])
    part = seg[idx] + 0.5 * (ks[idx] + k_r) * (r - tg[idx])
    return n * I_T + part


@dataclass(frozen=True)
class DriftSeries:
    """Front drifts h - int k* and g + int k* with their sup bound."""

    t: np.ndarray
    drift_h: np.ndarray
    drift_g: np.ndarray
    bound_Q: float


def front_drift(traj: Trajectory, pair: SemiWavePair) -> DriftSeries:
    """Drift series of both fronts against the cumulative semi-wave speed."""
    _check_shared(traj, pair)
    I = cumulative_speed(pair, traj.t)
    dh = traj.h - I
    dg = traj.g + I
    return DriftSeries(t=traj.t, drift_h=dh, drift_g=dg,
                       bound_Q=float(np.max(np.abs(dh)) + np.max(np.abs(dg))))


def speed_error(traj: Trajectory, pair: SemiWavePair, window: float = 0.2) -> float:
    """Sup over the trailing `window` fraction of |h'(t) - k*(t mod T)|."""
    _check_shared(traj, pair)
    if not (0.0 < window <= 1.0):
        raise ValueError("window must be a fraction in (0, 1]")
    t0 = traj.t[-1] - window * (traj.t[-1] - traj.t[0])
    m = traj.t >= t0
    return float(np.max(np.abs(traj.hprime[m] - pair.k_at(traj.t[m]))))


def profile_error(snapshot: FbpState, pair: SemiWavePair, side: str = "right") -> float:
    """Sup-norm mismatch against the front-anchored reflected semi-wave:
    right: sup_{x in [0, h]} |u - Phi*(t, h - x)|, left mirrored."""
    x = snapshot.x()
    guard = 1e-9 * max(1.0, snapshot.width)  # center-node roundoff tolerance
    if side == "right":
        m = x >= -guard
        ref = pair.phi_at(snapshot.t, snapshot.h - x[m])
    elif side == "left":
        m = x <= guard
        ref = pair.phi_at(snapshot.t, x[m] - snapshot.g)
    else:
        raise ValueError("side must be 'right' or 'left'")
    return float(np.max(np.abs(snapshot.v[m] - ref)))


@dataclass(frozen=True)
class GateResult:
    admissible: bool
    theta_star: float | None
    reason: str


def bistable_gate(nl: Nonlinearity, delta: float) -> GateResult:
    """Spreading admissibility: bistable runs need delta above the envelope
    threshold; monostable reactions pass for any delta in (0, 1)."""
    report = classify(nl)
    if report.is_monostable:
        return GateResult(True, None, "monostable: gate bypassed")
    if not report.is_bistable:
        return GateResult(False, None, "reaction neither monostable nor bistable")
    thr = theta_star(nl)
    if delta > thr:
        return GateResult(True, thr, f"delta {delta} above threshold {thr:.6f}")
    return GateResult(False, thr, f"delta {delta} not above threshold {thr:.6f}")


# ---------------------------------------------------------------------------
# shared field helpers
# ---------------------------------------------------------------------------

class _Fields:
    """Smooth evaluations of k*, int k*, and Phi* with far-field clamping."""

    def __init__(self, pair: SemiWavePair):
        self.pair = pair
        self.T = pair.T
        self.kspl = pair.k_spline()
        self.anti = self.kspl.antiderivative()
        self.I_T = float(self.anti(self.T))

    def k(self, t, der=0):
        return self.kspl(np.mod(t, self.T), nu=der)

    def cum(self, t):
        t = np.asarray(t, dtype=float)
        n = np.floor(t / self.T)
        return n * self.I_T + self.anti(t - n * self.T)

    def phi(self, t, x, dt=0, dx=0):
        return self.pair.phi_eval(t, x, dt_order=dt, dx_order=dx)


def _grid_phi_derivatives(pair: SemiWavePair):
    """Phi*_x, Phi*_xx, Phi*_t, Phi*_tx sampled on the pair grid."""
    f = _Fields(pair)
    tt = pair.t_grid[:, None]
    xx = pair.x_grid[None, :]
    px = f.phi(tt, xx, dx=1)
    pxx = f.phi(tt, xx, dx=2)
    pt = f.phi(tt, xx, dt=1)
    ptx = f.phi(tt, xx, dt=1, dx=1)
    return px, pxx, pt, ptx


# ---------------------------------------------------------------------------
# upper solution (parabolic patch glued to the semi-wave)
# ---------------------------------------------------------------------------

@dataclass
class UpperSolutionParams:
    """Constants of the patched supersolution and its admissibility data."""

    gamma: float
    sigma0: float
    q0: float
    a: float
    K0: float
    M: float
    tau_star: float
    h_tau: float
    eta: float
    delta_a: float
    k_min: float
    k_max: float
    k_c1: float
    B0: float
    B1: float
    B2: float
    Q0: float
    Q1: float
    fu_max_band: float
    thresholds: tuple = field(default=())

    def admissible(self) -> bool:
        return (self.gamma >= max(self.thresholds)
                and 0.0 < self.q0 < min(self.eta, 1.0) and self.q0 < 1.0)


def auto_upper_params(pair: SemiWavePair, nl: Nonlinearity, traj: Trajectory,
                      gamma_factor: float = 2.0) -> UpperSolutionParams:
    """Measure every constant of the upper construction from grid data and
    set gamma to `gamma_factor` times the largest of its four thresholds."""
    _check_shared(traj, pair)
    d, delta, T = pair.d, pair.delta, pair.T
    f = _Fields(pair)
    tt = np.linspace(0.0, T, 513)

    k_vals = f.k(tt)
    k_min = float(k_vals.min())
    k_max = float(k_vals.max())
    k_c1 = float(np.max(np.abs(k_vals)) + np.max(np.abs(f.k(tt, der=1))))

    # sigma0 and eta: f_u <= -sigma0 on a band around u = 1
    fu1 = nl.eval_fu(tt, 1.0)
    sigma0 = 0.5 * float(-fu1.max())
    eta = 0.0
    for cand in np.linspace(0.5, 1e-3, 200):
        band = np.linspace(1.0 - cand, 1.0 + cand, 64)
        if float(np.max(nl.eval_fu(tt[:, None], band[None, :]))) <= -sigma0:
            eta = float(cand)
            break
    if eta == 0.0:
        raise ValueError("inadmissible params: no decay band around u = 1")

    ug = np.linspace(0.0, min(1.0, delta + eta), 257)
    f_max = float(np.max(nl.eval_f(tt[:, None], ug[None, :])))
    M = (f_max + (delta / d) * k_c1) / (2.0 * d)

    # patch width a: keep Upsilon(t, -a) at or above delta/2
    b = (delta / d) * k_max
    a = (-b + math.sqrt(b * b + 2.0 * M * delta)) / (2.0 * M) if M > 0 else 0.5
    a = min(a, 0.9)
    delta_a = delta - M * a * a - (delta / d) * k_min * a

    q0 = 0.5 * min(eta, delta - delta_a)

    # K0: semi-wave within q0/2 of 1 beyond K0
    prof_min = pair.phi.min(axis=0)
    above = np.nonzero(prof_min >= 1.0 - q0 / 2.0)[0]
    if len(above) == 0:
        raise ValueError("inadmissible params: truncation too short for K0")
    K0 = float(pair.x_grid[above[0]])

    px, _, _, _ = _grid_phi_derivatives(pair)
    sel = pair.x_grid <= K0
    Q0 = float(px[:, sel].min())
    Q1 = float(px[:, sel].max())
    if Q0 <= 0.0:
        raise ValueError("inadmissible params: semi-wave slope not positive up to K0")

    band = np.linspace(delta, 1.0 + q0, 257)
    fu_max_band = float(np.max(nl.eval_fu(tt[:, None], band[None, :])))

    B0 = d / (delta * k_min)
    B1 = (B0 * delta * k_c1 + d) / (delta * k_min)
    B2 = (d / delta) * 2.0 * M

    g1 = q0 * B2 * B0 / sigma0
    g2 = (d * q0 / (delta * k_min * sigma0)) * (
        (2.0 * M * a + (delta / d) * k_max) * B1 * (1.0 + sigma0) + sigma0)
    g3 = q0 * (B1 * Q1 * (1.0 + sigma0) + sigma0 + max(fu_max_band, 0.0)) / (sigma0 * Q0)
    g4 = B1 * q0 * (1.0 + sigma0) / sigma0
    thresholds = (g1, g2, g3, g4)
    gamma = gamma_factor * max(thresholds)

    # tau*: fronts detached and density within q0/2 above 1 from here on
    run_max = np.maximum.accumulate(traj.vmax[::-1])[::-1]
    ok = (run_max <= 1.0 + q0 / 2.0) & (traj.h > 0.0) & (traj.g < 0.0)
    idx = np.nonzero(ok)[0]
    if len(idx) == 0:
        raise ValueError("inadmissible params: trajectory never settles below 1 + q0/2")
    tau_star = float(traj.t[idx[0]])
    h_tau = float(traj.h[idx[0]])

    return UpperSolutionParams(
        gamma=gamma, sigma0=sigma0, q0=q0, a=a, K0=K0, M=M,
        tau_star=tau_star, h_tau=h_tau, eta=eta, delta_a=delta_a,
        k_min=k_min, k_max=k_max, k_c1=k_c1, B0=B0, B1=B1, B2=B2,
        Q0=Q0, Q1=Q1, fu_max_band=fu_max_band, thresholds=thresholds)


def _upper_hbar(params: UpperSolutionParams, f: _Fields, t):
    decay = 1.0 - np.exp(-params.sigma0 * (np.asarray(t) - params.tau_star))
    return (f.cum(t) - f.cum(params.tau_star) + params.gamma * decay
            + params.h_tau + params.a + params.K0)


def _upsilon(params: UpperSolutionParams, f: _Fields, t, z, dt=0, dz=0):
    """Parabolic patch -M z^2 + (delta/d) k*(t) z + delta and derivatives."""
    delta, d = f.pair.delta, f.pair.d
    if dt == 0 and dz == 0:
        return -params.M * z * z + (delta / d) * f.k(t) * z + delta
    if dt == 0 and dz == 1:
        return -2.0 * params.M * z + (delta / d) * f.k(t)
    if dt == 0 and dz == 2:
        return np.broadcast_to(-2.0 * params.M, np.broadcast_shapes(np.shape(t), np.shape(z))).copy()
    if dt == 1 and dz == 0:
        return (delta / d) * f.k(t, der=1) * z
    raise ValueError("unsupported derivative order")


def _phibar(params, f, t, z, dt=0, dz=0):
    """Composite profile: patch for z <= 0, semi-wave for z > 0."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    t, z = np.broadcast_arrays(t, z)
    out = np.empty(t.shape)
    neg = z <= 0.0
    out[neg] = _upsilon(params, f, t[neg], z[neg], dt=dt, dz=dz)
    out[~neg] = f.phi(t[~neg], z[~neg], dt=dt, dx=dz)
    return out


def solve_z_delta(params: UpperSolutionParams, pair: SemiWavePair, t,
                  fields: _Fields | None = None) -> np.ndarray:
    """Patch offset z(t) in (-a, 0) with Phibar(t, z) + q0 e^{-s0 (t-tau*)} = delta.

    Vectorized bisection; residual driven below 1e-12.
    """
    f = fields or _Fields(pair)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    target = pair.delta - params.q0 * np.exp(-params.sigma0 * (t - params.tau_star))
    lo = np.full(t.shape, -params.a)
    hi = np.zeros(t.shape)
    if np.any(_upsilon(params, f, t, lo) >= target):
        raise ValueError("no bracket: q0 exceeds delta - delta_a")
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        low_side = _upsilon(params, f, t, mid) < target
        lo = np.where(low_side, mid, lo)
        hi = np.where(low_side, hi, mid)
    return 0.5 * (lo + hi)


def _ubar(params, pair, f, ts, xs):
    """Supersolution field on the tensor grid ts x xs (roots solved per t)."""
    ts = np.asarray(ts, dtype=float)
    zd = solve_z_delta(params, pair, ts, fields=f)
    zeta = (_upper_hbar(params, f, ts) + zd)[:, None] - xs[None, :]
    tt = np.broadcast_to(ts[:, None], zeta.shape)
    val = (_phibar(params, f, tt, zeta)
           + params.q0 * np.exp(-params.sigma0 * (ts - params.tau_star))[:, None])
    return val, zeta


@dataclass(frozen=True)
class ConstructionCheck:
    """Outcome of one differential-inequality and ordering check."""

    verdict: str
    residual: float
    ordering_ok: bool
    ordering_margin: float
    n2: int | None = None
    details: dict = field(default_factory=dict)


def upper_solution_check(params: UpperSolutionParams, pair: SemiWavePair,
                         nl: Nonlinearity, traj: Trajectory,
                         refine: int = 4, tol_fd: float = 1e-3,
                         tol_traj: float = 1e-6) -> ConstructionCheck:
    """Verify N[ubar] >= -tol_fd by centered stencils and h <= hbar on the run.

    Stencil steps are the pair grid steps divided by `refine`; points whose
    x-stencil straddles the C^1 seam of the composite profile are skipped.
    """
    if not params.admissible():
        return ConstructionCheck("inadmissible params", math.nan, False, math.nan)
    _check_shared(traj, pair)
    f = _Fields(pair)
    d, T = pair.d, pair.T

    # trajectory ordering h <= hbar for t >= tau*
    m = traj.t >= params.tau_star
    hbar = _upper_hbar(params, f, traj.t[m])
    margin = float(np.min(hbar - traj.h[m]))
    ordering_ok = bool(margin >= -tol_traj)

    dt_fd = (pair.t_grid[1] - pair.t_grid[0]) / refine
    dx_fd = pair.h / refine
    t_end = traj.t[-1]
    windows = [(params.tau_star, min(params.tau_star + 2.0 * T, t_end))]
    if t_end - 2.0 * T > params.tau_star + 2.0 * T:
        windows.append((t_end - 2.0 * T, t_end))

    min_res = math.inf
    for (w0, w1) in windows:
        ts = np.arange(w0 + 2 * dt_fd, w1 - dt_fd, pair.t_grid[1] - pair.t_grid[0])
        g_floor = float(np.interp(ts, traj.t, traj.g).min())
        x_top = float(_upper_hbar(params, f, ts).max())
        xs = np.arange(g_floor, x_top + pair.h, pair.h)
        g_t = np.interp(ts, traj.t, traj.g)[:, None]
        hbar_t = _upper_hbar(params, f, ts)[:, None]
        mask = (xs[None, :] >= g_t) & (xs[None, :] <= hbar_t)

        u0, zeta = _ubar(params, pair, f, ts, xs)
        up, _ = _ubar(params, pair, f, ts + dt_fd, xs)
        um, _ = _ubar(params, pair, f, ts - dt_fd, xs)
        ur, _ = _ubar(params, pair, f, ts, xs + dx_fd)
        ul, _ = _ubar(params, pair, f, ts, xs - dx_fd)
        res = ((up - um) / (2.0 * dt_fd)
               - d * (ur - 2.0 * u0 + ul) / (dx_fd * dx_fd)
               - nl.eval_f(ts[:, None], u0))
        seam = np.abs(zeta) <= 2.0 * dx_fd + 2.0 * dt_fd * (params.k_max + params.gamma * params.sigma0 + 1.0)
        ok = mask & ~seam
        if ok.any():
            min_res = min(min_res, float(res[ok].min()))

    verdict = "pass" if (min_res >= -tol_fd and ordering_ok) else "fail"
    return ConstructionCheck(verdict, min_res, ordering_ok, margin,
                             details={"tol_fd": tol_fd})


# ---------------------------------------------------------------------------
# lower solution (mirrored semi-wave pair minus the far-field defect)
# ---------------------------------------------------------------------------

@dataclass
class LowerSolutionParams:
    """Constants of the subsolution and its admissibility data."""

    beta: float
    sigma1: float
    K1: float
    q1: float
    mu: float
    n0: int
    eps0: float
    k_min: float
    N1: float
    N2: float
    N3: float
    N4: float
    Nt3: float
    Nt4: float
    C1: float
    C2: float
    Lf: float
    x_bar: float
    thresholds: tuple = field(default=())

    def admissible(self) -> bool:
        return (self.sigma1 < self.mu * self.k_min
                and self.beta >= max(self.thresholds)
                and 0.0 < self.q1 < 1.0)


def auto_lower_params(pair: SemiWavePair, nl: Nonlinearity,
                      beta_factor: float = 2.0) -> LowerSolutionParams:
    """Measure the subsolution constants from grid data; beta is set to
    `beta_factor` times the larger of its two lower bounds."""
    d, delta, T = pair.d, pair.delta, pair.T
    f = _Fields(pair)
    tt = np.linspace(0.0, T, 513)
    k_min = float(f.k(tt).min())

    a_0 = nl_a0(nl)
    mu_0 = mu0(kbar(pair), a_0, d)
    mu = 0.8 * mu_0

    m1 = float(np.max(nl.eval_fu(tt, 1.0)))  # negative
    sigma1 = 0.5 * min(-0.5 * m1, mu * k_min)
    q1 = 0.5 * (1.0 - delta)

    px, pxx, pt, ptx = _grid_phi_derivatives(pair)
    decay = (np.abs(1.0 - pair.phi) + np.abs(px) + np.abs(pxx) + np.abs(pt))
    N1 = float(np.max(decay * np.exp(mu * pair.x_grid)[None, :]))

    # worst-case x_delta bound: where Phi reaches delta + q1 + far-field slack
    slack = q1 + 1e-3
    col = np.nonzero(pair.phi.min(axis=0) >= delta + slack)[0]
    if len(col) == 0:
        raise ValueError("inadmissible params: truncation too short for x_delta bound")
    x_bar = float(pair.x_grid[col[0]])

    near = pair.x_grid <= x_bar
    N2 = float(np.max(np.abs(pxx[:, near]) + np.abs(ptx[:, near]) + np.abs(pt[:, near])))
    N3 = float(px[:, near].min())
    N4 = float(px[:, near].max())
    if N3 <= 0.0:
        raise ValueError("inadmissible params: semi-wave slope not positive near 0")
    C1 = max(1.0 / N3, N1 / N3)
    C2 = (N2 * C1 + 2.0 * N1 - sigma1) / N3

    band = np.linspace(2.0 * delta - 1.0 - q1 - 0.05, 1.0 + q1, 257)
    Lf = float(np.max(np.abs(nl.eval_fu(tt[:, None], band[None, :]))))

    # eps0 from the interior-region margin and the decay-band condition
    margin = -(sigma1 + 0.5 * m1)
    if margin <= 0.0:
        raise ValueError("inadmissible params: sigma1 leaves no interior margin")
    eps0 = 0.25 * margin / C2
    for cand in np.linspace(min(eps0, 0.2), 1e-5, 400):
        band = np.linspace(1.0 - 3.0 * cand, 1.0, 32)
        if float(np.max(nl.eval_fu(tt[:, None], band[None, :]))) <= 0.5 * m1:
            eps0 = float(cand)
            break
    else:
        raise ValueError("inadmissible params: no eps0 band")

    # K1 = Ktilde0: semi-wave within eps0 of 1 and slope below eps0/2 beyond
    ok_cols = np.nonzero((pair.phi.min(axis=0) >= 1.0 - eps0)
                         & (np.abs(px).max(axis=0) <= eps0 / 2.0))[0]
    if len(ok_cols) == 0:
        raise ValueError("inadmissible params: truncation too short for K1")
    K1 = float(pair.x_grid[ok_cols[0]])

    Nt4 = 2.0 * float(px.max())
    far = pair.x_grid <= K1 + x_bar
    Nt3 = float(px[:, far].min())

    b1 = (2.0 * N2 * C1 + N1) * d / (sigma1 * delta)
    b2 = 2.0 * (Nt4 * C2 * q1 + sigma1 * q1 + Lf * q1 + Nt4 * C2 + 2.0 * Lf * N1) / (Nt3 * sigma1)
    thresholds = (b1, b2)
    beta = beta_factor * max(thresholds)

    # n0: far-field slack and the interior-region inequality with tails
    n0 = None
    for n in range(1, 200001):
        tail_a = 2.0 * Nt4 * C2 * math.exp(-mu * k_min * n * T)
        lhs_c = (C2 * eps0 + sigma1 + 0.5 * m1
                 + math.exp(-(mu * k_min - sigma1) * n * T)
                 * (C2 * eps0 * (1.0 + sigma1 * beta * math.exp(-sigma1 * n * T)) + 2.0 * Lf * N1))
        if Nt3 >= tail_a and lhs_c <= 0.0:
            n0 = n
            break
    if n0 is None:
        raise ValueError("inadmissible params: no admissible n0")
    # start late enough that the beta offset in hlow has decayed to O(1),
    # keeping the comparison horizon desk-scale (larger n0 stays admissible)
    n0 = max(n0, int(math.ceil(math.log(max(beta, 1.0)) / (sigma1 * T))))

    return LowerSolutionParams(
        beta=beta, sigma1=sigma1, K1=K1, q1=q1, mu=mu, n0=n0, eps0=eps0,
        k_min=k_min, N1=N1, N2=N2, N3=N3, N4=N4, Nt3=Nt3, Nt4=Nt4,
        C1=C1, C2=C2, Lf=Lf, x_bar=x_bar, thresholds=thresholds)


def _lower_h(params: LowerSolutionParams, f: _Fields, t):
    return f.cum(t) + params.beta * np.exp(-params.sigma1 * np.asarray(t)) + params.K1


def solve_x_delta(params: LowerSolutionParams, pair: SemiWavePair, t,
                  fields: _Fields | None = None) -> np.ndarray:
    """Offset x(t) >= 0 with
    Phi*(t, x) + Phi*(t, 2 hlow(t) + x) - 1 - q1 e^{-s1 t} = delta.

    Vectorized bisection; residual driven below 1e-12.
    """
    f = fields or _Fields(pair)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not params.q1 < 1.0 - pair.delta:
        raise ValueError("no bracket: q1 must stay below 1 - delta")
    two_h = 2.0 * _lower_h(params, f, t)
    rhs = pair.delta + 1.0 + params.q1 * np.exp(-params.sigma1 * t)

    def G(x):
        return f.phi(t, x) + f.phi(t, two_h + x) - rhs

    lo = np.zeros(t.shape)
    hi = np.full(t.shape, pair.L)
    if np.any(G(lo) >= 0.0) or np.any(G(hi) <= 0.0):
        raise ValueError("no bracket: x_delta equation has no sign change")
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        low_side = G(mid) < 0.0
        lo = np.where(low_side, mid, lo)
        hi = np.where(low_side, hi, mid)
    return 0.5 * (lo + hi)


def _ulow(params, pair, f, ts, xs):
    """Subsolution field on the tensor grid ts x xs (roots solved per t)."""
    ts = np.asarray(ts, dtype=float)
    xd = solve_x_delta(params, pair, ts, fields=f)
    hl = _lower_h(params, f, ts)
    ksi_m = (hl + xd)[:, None] - xs[None, :]
    ksi_p = (hl + xd)[:, None] + xs[None, :]
    tt = np.broadcast_to(ts[:, None], ksi_m.shape)
    return (f.phi(tt, ksi_m) + f.phi(tt, ksi_p) - 1.0
            - params.q1 * np.exp(-params.sigma1 * ts)[:, None])


def lower_solution_check(params: LowerSolutionParams, pair: SemiWavePair,
                         nl: Nonlinearity, traj: Trajectory,
                         refine: int = 4, tol_fd: float = 1e-3,
                         tol_traj: float = 1e-6) -> ConstructionCheck:
    """Verify N[ulow] <= tol_fd and the front containment
    [-hlow(t), hlow(t)] inside (g(t + n2 T), h(t + n2 T)).

    The shift n2 is found by scanning integers until the initial ordering
    holds on the grid; absence within the horizon fails the check.
    """
    if not params.admissible():
        return ConstructionCheck("inadmissible params", math.nan, False, math.nan)
    _check_shared(traj, pair)
    f = _Fields(pair)
    d, T = pair.d, pair.T
    t_end = traj.t[-1]

    # scan the time shift: fronts clear of hlow(n0 T) and density above the
    # subsolution start level on [-hlow, hlow]
    hl0 = float(_lower_h(params, f, params.n0 * T))
    level = 1.0 - params.q1 * math.exp(-params.sigma1 * params.n0 * T)
    snaps = {int(round(s.t / T)): s for s in traj.snapshots
             if abs(s.t / T - round(s.t / T)) < 1e-9}
    n2 = None
    for n1 in range(params.n0 + 1, int(math.floor(t_end / T)) + 1):
        if n1 not in snaps:
            continue
        s = snaps[n1]
        if not (-s.g > hl0 and s.h > hl0):
            continue
        xs = s.x()
        core = np.abs(xs) <= hl0
        if core.any() and float(s.v[core].min()) >= level:
            n2 = n1 - params.n0
            break
    if n2 is None:
        return ConstructionCheck("horizon too short for the time shift",
                                 math.nan, False, math.nan)

    # containment for t in [n0 T, t_end - n2 T]
    m = (traj.t >= params.n0 * T) & (traj.t <= t_end - n2 * T)
    hl = _lower_h(params, f, traj.t[m])
    h_shift = np.interp(traj.t[m] + n2 * T, traj.t, traj.h)
    g_shift = np.interp(traj.t[m] + n2 * T, traj.t, traj.g)
    margin = float(min(np.min(h_shift - hl), np.min(-g_shift - hl)))
    ordering_ok = bool(margin >= -tol_traj)

    dt_fd = (pair.t_grid[1] - pair.t_grid[0]) / refine
    dx_fd = pair.h / refine
    w_end = t_end - n2 * T
    windows = [(params.n0 * T, min(params.n0 * T + 2.0 * T, w_end))]
    if w_end - 2.0 * T > params.n0 * T + 2.0 * T:
        windows.append((w_end - 2.0 * T, w_end))

    max_res = -math.inf
    for (w0, w1) in windows:
        ts = np.arange(w0 + 2 * dt_fd, w1 - dt_fd, pair.t_grid[1] - pair.t_grid[0])
        if len(ts) == 0:
            continue
        x_top = float(_lower_h(params, f, ts).max())
        xs = np.arange(-x_top, x_top + pair.h, pair.h)
        hl_t = _lower_h(params, f, ts)[:, None]
        mask = np.abs(xs[None, :]) <= hl_t

        u0 = _ulow(params, pair, f, ts, xs)
        up = _ulow(params, pair, f, ts + dt_fd, xs)
        um = _ulow(params, pair, f, ts - dt_fd, xs)
        ur = _ulow(params, pair, f, ts, xs + dx_fd)
        ul = _ulow(params, pair, f, ts, xs - dx_fd)
        res = ((up - um) / (2.0 * dt_fd)
               - d * (ur - 2.0 * u0 + ul) / (dx_fd * dx_fd)
               - nl.eval_f(ts[:, None], u0))
        if mask.any():
            max_res = max(max_res, float(res[mask].max()))

    verdict = "pass" if (max_res <= tol_fd and ordering_ok) else "fail"
    return ConstructionCheck(verdict, max_res, ordering_ok, margin, n2=n2,
                             details={"tol_fd": tol_fd})


def required_horizon_periods(params: LowerSolutionParams, pair: SemiWavePair,
                             h_start: float = 0.0, pad: int = 12) -> int:
    """Horizon (in periods) comfortably covering the subsolution shift scan."""
    f = _Fields(pair)
    T = pair.T
    kb = kbar(pair)
    hl0 = float(_lower_h(params, f, params.n0 * T))
    level_gap = params.q1 * math.exp(-params.sigma1 * params.n0 * T)
    closeness = math.log(max(params.N1, 1.0) / max(level_gap, 1e-300)) / params.mu
    n1 = (hl0 + closeness - h_start) / (kb * T)
    return int(math.ceil(max(n1, params.n0 + 1) + pad))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsReport:
    """Series and verdicts for one trajectory-vs-pair comparison."""

    t: np.ndarray
    drift_h: np.ndarray
    drift_g: np.ndarray
    drift_bound_Q: float
    drift_osc_last: float
    speed_err_t: np.ndarray
    speed_err: np.ndarray
    speed_err_sup: float
    profile_t: np.ndarray
    profile_err: np.ndarray
    fitted_mu: float
    mu0: float
    k_bar: float
    tolerances: dict
    verdicts: dict


def build_diagnostics(traj: Trajectory, pair: SemiWavePair, nl: Nonlinearity,
                      tolerances: dict | None = None,
                      drift_window_periods: float = 5.0,
                      speed_window: float = 0.2) -> DiagnosticsReport:
    """Assemble the drift/speed/profile diagnostics with pass/fail verdicts."""
    from semifront.semiwave import estimate_decay_rate, semiwave_scalars

    tol = {"drift_osc": 2e-2, "speed": 5e-2, "profile": 5e-2, "decay_rel": 0.1}
    if tolerances:
        tol.update(tolerances)

    drift = front_drift(traj, pair)
    t_end = traj.t[-1]
    last = traj.t >= t_end - drift_window_periods * pair.T
    osc = float(drift.drift_h[last].max() - drift.drift_h[last].min())

    sw = traj.t >= t_end - speed_window * (t_end - traj.t[0])
    serr = np.abs(traj.hprime[sw] - pair.k_at(traj.t[sw]))

    prof_t = np.array([s.t for s in traj.snapshots])
    prof = np.array([profile_error(s, pair) for s in traj.snapshots])

    scal = semiwave_scalars(pair, nl)
    verdicts = {
        "drift_bounded": bool(np.isfinite(drift.bound_Q)),
        "drift_converged": bool(osc <= tol["drift_osc"]),
        "speed_converged": bool(serr.max() <= tol["speed"]),
        "profile_converged": bool(prof[-1] <= tol["profile"]),
        "decay_rate": bool(abs(scal.fitted_mu - scal.mu0) <= tol["decay_rel"] * scal.mu0),
    }
    return DiagnosticsReport(
        t=traj.t, drift_h=drift.drift_h, drift_g=drift.drift_g,
        drift_bound_Q=drift.bound_Q, drift_osc_last=osc,
        speed_err_t=traj.t[sw], speed_err=serr, speed_err_sup=float(serr.max()),
        profile_t=prof_t, profile_err=prof,
        fitted_mu=scal.fitted_mu, mu0=scal.mu0, k_bar=scal.k_bar,
        tolerances=tol, verdicts=verdicts)
