"""CSV and JSON artifact writers/readers.

All CSVs are comma-separated with '#'-prefixed header lines, floats at 17
significant digits, and carry the originating config hash.  Outputs are
bit-identical for identical configs (fixed iteration orders, no RNG).
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict

import numpy as np

from semifront.fbp import FbpState, Trajectory
from semifront.semiwave import SemiWavePair
from semifront.verification import DiagnosticsReport

__all__ = [
    "write_pair",
    "read_pair",
    "write_trajectory",
    "read_trajectory",
    "write_report",
    "read_report",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _meta_line(**kv) -> str:
    return "# " + " ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in kv.items())


def _parse_meta(line: str) -> dict:
    out = {}
    for tok in line.lstrip("# ").split():
        k, _, v = tok.partition("=")
        out[k] = v
    return out


def write_pair(out_dir: str, pair: SemiWavePair, cfg_hash: str) -> tuple[str, str]:
    """k_star.csv: (t, k*) rows.  phi_star.csv: (Nt+1) x (Nx+1) matrix."""
    os.makedirs(out_dir, exist_ok=True)
    k_path = os.path.join(out_dir, "k_star.csv")
    p_path = os.path.join(out_dir, "phi_star.csv")
    nt = len(pair.t_grid) - 1
    nx = len(pair.x_grid) - 1
    with open(k_path, "w", encoding="utf-8") as fh:
        fh.write(f"# semifront k_star config={cfg_hash}\n")
        fh.write(_meta_line(Nt=nt, Nx=nx, T=pair.T, L=pair.L, delta=pair.delta,
                            d=pair.d, flux_residual=pair.flux_residual) + "\n")
        fh.write("# t,k_star\n")
        for t, k in zip(pair.t_grid, pair.k_star):
            fh.write(f"{_fmt(t)},{_fmt(k)}\n")
    with open(p_path, "w", encoding="utf-8") as fh:
        fh.write(f"# semifront phi_star config={cfg_hash}\n")
        fh.write(_meta_line(Nt=nt, Nx=nx, T=pair.T, L=pair.L, delta=pair.delta,
                            d=pair.d) + "\n")
        for row in pair.phi:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return k_path, p_path


def read_pair(out_dir: str) -> SemiWavePair:
    k_path = os.path.join(out_dir, "k_star.csv")
    p_path = os.path.join(out_dir, "phi_star.csv")
    with open(k_path, "r", encoding="utf-8") as fh:
        fh.readline()
        meta = _parse_meta(fh.readline())
        rows = np.loadtxt(fh, delimiter=",", comments="#")
    phi = np.loadtxt(p_path, delimiter=",", comments="#")
    nt, nx = int(meta["Nt"]), int(meta["Nx"])
    T, L = float(meta["T"]), float(meta["L"])
    if phi.shape != (nt + 1, nx + 1):
        raise ValueError(f"phi_star.csv shape {phi.shape} disagrees with header")
    return SemiWavePair(
        delta=float(meta["delta"]), d=float(meta["d"]), T=T, L=L,
        t_grid=rows[:, 0], x_grid=np.linspace(0.0, L, nx + 1),
        k_star=rows[:, 1], phi=phi, flux_residual=float(meta["flux_residual"]))


def write_trajectory(out_dir: str, traj: Trajectory, cfg_hash: str) -> str:
    """trajectory.csv columns (t, g, h, gprime, hprime); one CSV matrix per
    snapshot under snapshots/ with header (t, g, h, Ny)."""
    os.makedirs(out_dir, exist_ok=True)
    t_path = os.path.join(out_dir, "trajectory.csv")
    with open(t_path, "w", encoding="utf-8") as fh:
        fh.write(f"# semifront trajectory config={cfg_hash}\n")
        fh.write("# t,g,h,gprime,hprime\n")
        for i in range(len(traj.t)):
            fh.write(",".join(_fmt(v) for v in
                              (traj.t[i], traj.g[i], traj.h[i],
                               traj.gprime[i], traj.hprime[i])) + "\n")
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    for i, snap in enumerate(traj.snapshots):
        path = os.path.join(snap_dir, f"snap_{i:05d}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# semifront snapshot config={cfg_hash}\n")
            fh.write(_meta_line(t=float(snap.t), g=float(snap.g), h=float(snap.h),
                                Ny=len(snap.v) - 1) + "\n")
            fh.write("\n".join(_fmt(v) for v in snap.v) + "\n")
    return t_path


def read_trajectory(out_dir: str, config: dict | None = None) -> Trajectory:
    t_path = os.path.join(out_dir, "trajectory.csv")
    data = np.loadtxt(t_path, delimiter=",", comments="#")
    snap_dir = os.path.join(out_dir, "snapshots")
    snapshots = []
    if os.path.isdir(snap_dir):
        for name in sorted(os.listdir(snap_dir)):
            if not name.endswith(".csv"):
                continue
            path = os.path.join(snap_dir, name)
            with open(path, "r", encoding="utf-8") as fh:
                fh.readline()
                meta = _parse_meta(fh.readline())
                v = np.loadtxt(fh, comments="#")
            snapshots.append(FbpState(t=float(meta["t"]), g=float(meta["g"]),
                                      h=float(meta["h"]), v=v))
    # per-step vmax is not part of the CSV contract; rebuild a snapshot-rate
    # stand-in (running max held between snapshot times)
    if snapshots:
        st = np.array([s.t for s in snapshots])
        sv = np.array([float(s.v.max()) for s in snapshots])
        idx = np.clip(np.searchsorted(st, data[:, 0], side="right") - 1, 0, len(st) - 1)
        vmax = sv[idx]
    else:
        vmax = np.full(len(data), np.nan)
    return Trajectory(t=data[:, 0], g=data[:, 1], h=data[:, 2],
                      gprime=data[:, 3], hprime=data[:, 4], vmax=vmax,
                      snapshots=snapshots, config=dict(config or {}),
                      sup_v=float(np.nanmax(vmax)) if len(data) else 0.0,
                      sup_gprime=float(np.max(np.abs(data[:, 3]))),
                      sup_hprime=float(np.max(np.abs(data[:, 4]))))


def _decimate(arr, limit=4000):
    arr = np.asarray(arr)
    stride = max(1, int(np.ceil(len(arr) / limit)))
    return arr[::stride]


def report_to_dict(report: DiagnosticsReport, cfg_hash: str,
                   extra: dict | None = None) -> dict:
    stride = max(1, int(np.ceil(len(report.t) / 4000)))
    doc = {
        "config": cfg_hash,
        "tolerances": report.tolerances,
        "verdicts": report.verdicts,
        "scalars": {
            "drift_bound_Q": report.drift_bound_Q,
            "drift_osc_last": report.drift_osc_last,
            "speed_err_sup": report.speed_err_sup,
            "profile_err_final": float(report.profile_err[-1]),
            "fitted_mu": report.fitted_mu,
            "mu0": report.mu0,
            "k_bar": report.k_bar,
        },
        "series": {
            "t": report.t[::stride].tolist(),
            "drift_h": report.drift_h[::stride].tolist(),
            "drift_g": report.drift_g[::stride].tolist(),
            "profile_t": report.profile_t.tolist(),
            "profile_err": report.profile_err.tolist(),
        },
    }
    if extra:
        doc.update(extra)
    return doc


def write_report(out_dir: str, doc: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def read_report(out_dir: str) -> dict:
    with open(os.path.join(out_dir, "report.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)
