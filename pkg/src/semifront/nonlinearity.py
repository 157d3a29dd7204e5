"""Time-periodic reaction terms f(t, u) and their hypothesis checks.

Built-in families share the seasonal modulation r(t) = 1 + eps*sin(2*pi*t/T):

    kpp_logistic        f = r(t) * u * (1 - u)
    monostable_nonkpp   f = r(t) * u * (1 - u) * (1 + a*u),  a > 1
    bistable_cubic      f = r(t) * u * (u - theta) * (1 - u)

All three are polynomials in u (smooth on the whole real line, so the
extension below u = 0 needed by the solvers is automatic) and are written
in factored form so that f(t, 0) = f(t, 1) = 0 holds exactly in floating
point.  The a > 1 steepness of monostable_nonkpp makes f/u increasing
near u = 0, which breaks the strong-KPP monotonicity on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Nonlinearity",
    "ClassificationReport",
    "kpp_logistic",
    "monostable_nonkpp",
    "bistable_cubic",
    "custom_nonlinearity",
    "eval_f",
    "eval_fu",
    "classify",
    "a0",
    "theta_star",
    "time_averaged_reaction",
]

_TWO_PI = 2.0 * np.pi


def _phase(t, T):
    """Reduce t to [0, T) so that exactly representable t and t+T give the
    same phase bit-for-bit (np.fmod is exact on exact inputs)."""
    p = np.fmod(t, T)
    return np.where(p < 0, p + T, p)


@dataclass(frozen=True)
class Nonlinearity:
    """A T-periodic reaction term with its u-derivative.

    eval_f/eval_fu accept scalars or arrays, broadcasting (t, u).
    """

    T: float
    family: str
    eval_f: Callable
    eval_fu: Callable
    eps: float = 0.0
    a: float = 0.0
    theta: float = 0.0

    @property
    def r_min(self) -> float:
        return 1.0 - self.eps

    @property
    def r_max(self) -> float:
        return 1.0 + self.eps

    def __post_init__(self):
        if not (self.T > 0.0):
            raise ValueError("period T must be positive")
        if not (0.0 <= self.eps < 1.0):
            raise ValueError("modulation amplitude eps must lie in [0, 1)")


def _modulation(T, eps):
    if eps == 0.0:
        return lambda t: np.asarray(t) * 0.0 + 1.0
    return lambda t: 1.0 + eps * np.sin(_TWO_PI * _phase(t, T) / T)


def kpp_logistic(T: float = 1.0, eps: float = 0.0) -> Nonlinearity:
    """Seasonally modulated logistic growth r(t)*u*(1-u)."""
    r = _modulation(T, eps)

    def f(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * u * (1.0 - u)

    def fu(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * (1.0 - 2.0 * u)

    return Nonlinearity(T=T, family="kpp_logistic", eval_f=f, eval_fu=fu, eps=eps)


def monostable_nonkpp(a: float = 2.0, T: float = 1.0, eps: float = 0.0) -> Nonlinearity:
    """Monostable growth r(t)*u*(1-u)*(1+a*u); a > 1 violates strong KPP."""
    if not (a > 1.0):
        raise ValueError("steepness a must exceed 1 to break strong KPP")
    r = _modulation(T, eps)

    def f(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * u * (1.0 - u) * (1.0 + a * u)

    def fu(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * (1.0 + 2.0 * (a - 1.0) * u - 3.0 * a * u * u)

    return Nonlinearity(T=T, family="monostable_nonkpp", eval_f=f, eval_fu=fu, eps=eps, a=a)


def bistable_cubic(theta: float = 0.25, T: float = 1.0, eps: float = 0.0) -> Nonlinearity:
    """Bistable cubic r(t)*u*(u-theta)*(1-u) with middle zero theta."""
    if not (0.0 < theta < 1.0):
        raise ValueError("middle zero theta must lie in (0, 1)")
    r = _modulation(T, eps)

    def f(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * u * (u - theta) * (1.0 - u)

    def fu(t, u):
        u = np.asarray(u, dtype=float)
        return r(t) * (-3.0 * u * u + 2.0 * (1.0 + theta) * u - theta)

    return Nonlinearity(T=T, family="bistable_cubic", eval_f=f, eval_fu=fu, eps=eps, theta=theta)


def custom_nonlinearity(T: float, f: Callable, fu: Callable) -> Nonlinearity:
    """Wrap user callables f(t, u), f_u(t, u); caller vouches for periodicity."""
    return Nonlinearity(T=T, family="custom", eval_f=f, eval_fu=fu)


def eval_f(nl: Nonlinearity, t, u):
    """Reaction rate f(t, u); rejects non-finite inputs."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(u))):
        raise ValueError("non-finite input to eval_f")
    return nl.eval_f(t, u)


def eval_fu(nl: Nonlinearity, t, u):
    """Growth-rate derivative f_u(t, u); rejects non-finite inputs."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(u))):
        raise ValueError("non-finite input to eval_fu")
    return nl.eval_fu(t, u)


@dataclass(frozen=True)
class ClassificationReport:
    """Grid-scan verdicts for the monostable/bistable/strong-KPP hypotheses."""

    is_monostable: bool
    is_bistable: bool
    is_strong_kpp: bool
    theta: float | None
    positivity_margin: float


def _default_grids(nl, n=512, margin=0.5):
    t = np.linspace(0.0, nl.T, n)
    # keep u = 0 and u = 1 as exact grid nodes
    u = np.concatenate([np.linspace(0.0, 1.0, n), np.linspace(1.0, 1.0 + margin, n // 4 + 1)[1:]])
    return u, t


def classify(nl: Nonlinearity, u_grid=None, t_grid=None) -> ClassificationReport:
    """Classify the reaction by exhaustive scan on the given grids.

    Grids must cover [0, T] x [0, 1 + margin] with at least 256 points per
    axis; the defaults use 512.  Strong KPP is the grid-level monotonicity
    of u -> f(t, u)/u.
    """
    if u_grid is None or t_grid is None:
        du, dt = _default_grids(nl)
        u_grid = du if u_grid is None else np.asarray(u_grid, dtype=float)
        t_grid = dt if t_grid is None else np.asarray(t_grid, dtype=float)
    else:
        u_grid = np.asarray(u_grid, dtype=float)
        t_grid = np.asarray(t_grid, dtype=float)
    if len(u_grid) < 256 or len(t_grid) < 256:
        raise ValueError("classification grids need at least 256 points per axis")
    if u_grid[-1] <= 1.0 or u_grid[0] > 0.0 or t_grid[-1] < nl.T:
        raise ValueError("classification grids must cover [0, T] x [0, 1 + margin]")

    F = nl.eval_f(t_grid[:, None], u_grid[None, :])
    Fu = nl.eval_fu(t_grid[:, None], u_grid[None, :])
    tol = 1e-12

    inner = (u_grid > 0.0) & (u_grid < 1.0)
    above = u_grid > 1.0
    zero_ends = bool(np.all(np.abs(nl.eval_f(t_grid, 0.0)) <= tol)
                     and np.all(np.abs(nl.eval_f(t_grid, 1.0)) <= tol))
    neg_above = bool(np.all(F[:, above] < 0.0))
    fu1_neg = bool(np.all(nl.eval_fu(t_grid, 1.0) < 0.0))
    fu0 = nl.eval_fu(t_grid, 0.0)

    is_mono = bool(zero_ends and neg_above and fu1_neg
                   and np.all(F[:, inner] > 0.0) and np.all(fu0 > 0.0))

    # bistable: envelope min_t f changes sign - to + once inside (0, 1)
    is_bi = False
    theta = None
    if not is_mono and zero_ends and neg_above and fu1_neg and np.all(fu0 < 0.0):
        env = F.min(axis=0)
        sign = np.sign(env[inner])
        flips = np.nonzero(np.diff(sign) > 0)[0]
        if len(flips) == 1 and sign[0] < 0 and sign[-1] > 0:
            ui = u_grid[inner]
            lo, hi = ui[flips[0]], ui[flips[0] + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if float(np.min(nl.eval_f(t_grid, mid))) < 0.0:
                    lo = mid
                else:
                    hi = mid
            theta = 0.5 * (lo + hi)
            is_bi = bool(np.all(F[:, inner][:, ui > hi] > 0.0)
                         and np.all(F[:, inner][:, ui < lo] < 0.0))
            if not is_bi:
                theta = None

    # strong KPP: f/u nonincreasing along u for every t
    pos = u_grid > 0.0
    G = F[:, pos] / u_grid[pos]
    kpp_monotone = bool(np.all(np.diff(G, axis=1) <= 1e-10))
    is_kpp = is_mono and kpp_monotone

    if is_mono:
        margin_region = inner
    elif is_bi:
        margin_region = inner & (u_grid > theta)
    else:
        margin_region = inner
    positivity_margin = float(F[:, margin_region].min()) if margin_region.any() else np.nan

    return ClassificationReport(
        is_monostable=is_mono,
        is_bistable=is_bi,
        is_strong_kpp=is_kpp,
        theta=theta,
        positivity_margin=positivity_margin,
    )


def _simpson(values, h):
    """Composite Simpson on an odd number of equally spaced samples."""
    n = len(values) - 1
    if n % 2 != 0:
        raise ValueError("Simpson rule needs an even panel count")
    return h / 3.0 * (values[0] + values[-1]
                      + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def a0(nl: Nonlinearity, quad_points: int = 4096) -> float:
    """Period-averaged decay rate at u = 1:  -(1/T) * int_0^T f_u(s, 1) ds."""
    s = np.linspace(0.0, nl.T, quad_points + 1)
    fu1 = np.broadcast_to(np.asarray(nl.eval_fu(s, 1.0), dtype=float), s.shape)
    val = -_simpson(fu1, nl.T / quad_points) / nl.T
    if not val > 0.0:
        raise ValueError("a0 must be positive: f_u(., 1) fails the hypothesis")
    return float(val)


def _envelope_integral(nl, u, t_nodes, panels=4096):
    """int_0^u of the time envelope min_t f(t, .) by composite Simpson."""
    if u == 0.0:
        return 0.0
    s = np.linspace(0.0, u, panels + 1)
    env = nl.eval_f(t_nodes[:, None], s[None, :]).min(axis=0)
    return _simpson(env, u / panels)


def theta_star(nl: Nonlinearity, tol: float = 1e-10) -> float:
    """Threshold level where the envelope integral int_0^u min_t f first
    vanishes with positive integral beyond, for bistable reactions."""
    report = classify(nl)
    if not report.is_bistable:
        raise ValueError("not bistable")
    t_nodes = np.linspace(0.0, nl.T, 1024)
    G1 = _envelope_integral(nl, 1.0, t_nodes)
    if G1 <= 0.0:
        raise ValueError("no admissible root: envelope integral over [0, 1] is nonpositive")
    # bracket between the integral minimum (negative) and u = 1 (positive)
    u_probe = np.linspace(report.theta / 2.0, 1.0, 64)
    g_probe = np.array([_envelope_integral(nl, u, t_nodes, panels=512) for u in u_probe])
    lo = u_probe[int(np.argmin(g_probe))]
    if _envelope_integral(nl, lo, t_nodes) >= 0.0:
        raise ValueError("no admissible root: envelope integral never negative")
    hi = 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _envelope_integral(nl, mid, t_nodes) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    # positivity of the integral on (root, 1]
    for u in np.linspace(root + 32 * max(tol, 1e-12), 1.0, 48):
        if _envelope_integral(nl, float(u), t_nodes, panels=512) <= 0.0:
            raise ValueError("no admissible root: integral not positive beyond the root")
    return float(root)


def time_averaged_reaction(nl: Nonlinearity, quad_points: int = 2048):
    """Autonomous reaction (1/T) * int_0^T f(t, .) dt as a callable of u."""
    s = np.linspace(0.0, nl.T, quad_points + 1)
    w = np.ones(quad_points + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= nl.T / quad_points / 3.0 / nl.T

    def fbar(u):
        u = np.asarray(u, dtype=float)
        vals = nl.eval_f(s.reshape((-1,) + (1,) * u.ndim), u[None, ...])
        return np.tensordot(w, vals, axes=(0, 0))

    return fbar
