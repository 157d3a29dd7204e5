"""Batch front-end: semiwave / fbp / verify / oracle / all.

Exit codes: 0 all requested verdicts pass, 1 a diagnostic missed its
tolerance, 2 config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys

import numpy as np

from semifront import artifacts
from semifront.config import ConfigError, RunConfig, parse_config
from semifront.fbp import InitialData, solve as fbp_solve
from semifront.nonlinearity import (Nonlinearity, bistable_cubic, kpp_logistic,
                                    monostable_nonkpp, time_averaged_reaction)
from semifront.semiwave import autonomous_shooting_oracle, solve_semiwave
from semifront.verification import (auto_lower_params, auto_upper_params,
                                    bistable_gate, build_diagnostics,
                                    lower_solution_check, upper_solution_check)

__all__ = ["main", "build_nonlinearity", "run_semiwave", "run_fbp", "run_verify"]


def build_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    if cfg.family == "kpp_logistic":
        return kpp_logistic(T=cfg.T, eps=cfg.eps)
    if cfg.family == "monostable_nonkpp":
        return monostable_nonkpp(a=cfg.a, T=cfg.T, eps=cfg.eps)
    if cfg.family == "bistable_cubic":
        return bistable_cubic(theta=cfg.theta, T=cfg.T, eps=cfg.eps)
    raise ConfigError(f"unknown family {cfg.family!r}")


def run_semiwave(cfg: RunConfig):
    nl = build_nonlinearity(cfg)
    return solve_semiwave(nl, cfg.delta, cfg.d, L=cfg.L, Nt=cfg.Nt, Nx=cfg.Nx,
                          omega=cfg.omega, tol_fix=cfg.tol_fix,
                          tol_period=cfg.tol_period, max_iter=cfg.max_picard,
                          max_periods=cfg.max_periods)


def run_fbp(cfg: RunConfig):
    nl = build_nonlinearity(cfg)
    init = InitialData(h0=cfg.h0, shape=cfg.shape, amplitude=cfg.amplitude)
    return fbp_solve(init, nl, cfg.d, cfg.delta, horizon=cfg.horizon_periods * cfg.T,
                     Ny=cfg.Ny, dt=cfg.dt, snapshot_stride=cfg.snapshot_stride,
                     sweeps=cfg.sweeps)


def run_verify(cfg: RunConfig, pair, traj):
    """Diagnostics (plus the construction checks when enabled); returns
    (report dict, all verdicts pass)."""
    nl = build_nonlinearity(cfg)
    report = build_diagnostics(
        traj, pair, nl,
        tolerances={"drift_osc": cfg.tol_drift_osc, "speed": cfg.tol_speed,
                    "profile": cfg.tol_profile},
        drift_window_periods=cfg.drift_window_periods,
        speed_window=cfg.speed_window)
    extra = {}
    if cfg.construction:
        up = auto_upper_params(pair, nl, traj)
        upper = upper_solution_check(up, pair, nl, traj, tol_fd=cfg.tol_construction)
        low = auto_lower_params(pair, nl)
        lower = lower_solution_check(low, pair, nl, traj, tol_fd=cfg.tol_construction)
        extra["construction"] = {
            "upper": {"verdict": upper.verdict, "min_residual": upper.residual,
                      "ordering_ok": upper.ordering_ok,
                      "ordering_margin": upper.ordering_margin,
                      "gamma": up.gamma},
            "lower": {"verdict": lower.verdict, "max_residual": lower.residual,
                      "ordering_ok": lower.ordering_ok,
                      "ordering_margin": lower.ordering_margin,
                      "n2": lower.n2, "beta": low.beta, "n0": low.n0},
        }
        report.verdicts["construction_upper"] = upper.verdict == "pass"
        report.verdicts["construction_lower"] = lower.verdict == "pass"
    doc = artifacts.report_to_dict(report, cfg.hash(), extra=extra)
    return doc, all(report.verdicts.values())


def _gate_or_fail(cfg: RunConfig) -> str | None:
    nl = build_nonlinearity(cfg)
    gate = bistable_gate(nl, cfg.delta)
    if not gate.admissible:
        return f"bistable gate failed: {gate.reason}"
    return None


def _traj_config(cfg: RunConfig) -> dict:
    return {"delta": cfg.delta, "d": cfg.d, "T": cfg.T, "family": cfg.family}


def _execute(command: str, cfg_path: str, out_override: str | None) -> int:
    try:
        cfg = parse_config(cfg_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if out_override:
        cfg.out_dir = out_override
    out = cfg.out_dir
    h = cfg.hash()

    if command in ("semiwave", "fbp", "all"):
        msg = _gate_or_fail(cfg)
        if msg is not None:
            print(f"config error: {cfg_path}: {msg}", file=sys.stderr)
            return 2

    try:
        if command == "oracle":
            nl = build_nonlinearity(cfg)
            fbar = time_averaged_reaction(nl)
            k = autonomous_shooting_oracle(lambda u: fbar(u), cfg.delta, cfg.d)
            print(format(k, ".17g"))
            return 0

        if command == "semiwave":
            pair = run_semiwave(cfg)
            artifacts.write_pair(out, pair, h)
            print(f"wrote k_star.csv and phi_star.csv to {out}")
            return 0

        if command == "fbp":
            traj = run_fbp(cfg)
            artifacts.write_trajectory(out, traj, h)
            print(f"wrote trajectory.csv and snapshots/ to {out}")
            return 0

        if command == "verify":
            pair = artifacts.read_pair(out)
            traj = artifacts.read_trajectory(out, config=_traj_config(cfg))
            doc, ok = run_verify(cfg, pair, traj)
            artifacts.write_report(out, doc)
            print(f"wrote report.json to {out}; verdicts "
                  + ("all pass" if ok else "FAILED"))
            return 0 if ok else 1

        if command == "all":
            pair = run_semiwave(cfg)
            artifacts.write_pair(out, pair, h)
            traj = run_fbp(cfg)
            traj.config.update(_traj_config(cfg))
            artifacts.write_trajectory(out, traj, h)
            doc, ok = run_verify(cfg, pair, traj)
            artifacts.write_report(out, doc)
            print(f"wrote artifacts to {out}; verdicts "
                  + ("all pass" if ok else "FAILED"))
            return 0 if ok else 1
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3

    print(f"unknown command {command!r}", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semifront",
                                description="semi-wave and free-boundary batch runs")
    p.add_argument("command", choices=("semiwave", "fbp", "verify", "oracle", "all"))
    p.add_argument("--config", action="append", required=True, metavar="PATH",
                   help="config file; repeat for a sweep")
    p.add_argument("--out", default=None, metavar="DIR",
                   help="output directory (overrides [output] dir)")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel workers for a config sweep")
    p.add_argument("--seedless", action="store_true",
                   help="reserved; the pipeline uses no RNG anywhere")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    paths = args.config
    if args.jobs > 1 and len(paths) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_execute, [args.command] * len(paths), paths,
                                  [args.out] * len(paths)))
        return max(codes)
    code = 0
    for path in paths:
        code = max(code, _execute(args.command, path, args.out))
    return code


if __name__ == "__main__":
    sys.exit(main())
