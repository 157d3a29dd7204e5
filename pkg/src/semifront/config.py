"""Run configuration: flat sectioned key=value text, validated with
line-anchored messages.

The format is INI-like on purpose (sections in brackets, one key=value
per line, # or ; comments) so configs stay portable and diffable.  Every
key has a documented default; unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields as dc_fields

__all__ = ["RunConfig", "ConfigError", "parse_config", "config_hash", "DEFAULT_CONFIG_TEXT"]


class ConfigError(ValueError):
    """Schema violation; message carries file and line anchors."""


@dataclass
class RunConfig:
    # nonlinearity
    family: str = "kpp_logistic"
    T: float = 1.0
    eps: float = 0.0
    a: float = 2.0
    theta: float = 0.25
    # physics
    d: float = 1.0
    delta: float = 0.5
    # semiwave
    L: float | None = None
    Nt: int = 256
    Nx: int | None = None
    omega: float = 0.5
    tol_fix: float = 1e-4
    tol_period: float = 1e-8
    max_picard: int = 200
    max_periods: int = 2000
    # fbp
    h0: float = 2.0
    shape: str = "bump"
    amplitude: float = 0.4
    Ny: int = 800
    dt: float | None = None
    horizon_periods: float = 40.0
    snapshot_stride: int | None = None
    sweeps: int = 2
    # verify
    verify_params: str = "auto"
    speed_window: float = 0.2
    drift_window_periods: float = 5.0
    tol_drift_osc: float = 2e-2
    tol_speed: float = 5e-2
    tol_profile: float = 5e-2
    tol_construction: float = 1e-3
    construction: bool = False
    # output
    out_dir: str = "out"
    # provenance
    source_text: str = field(default="", repr=False, compare=False)

    def hash(self) -> str:
        return config_hash(self)


_SCHEMA = {
    ("nonlinearity", "family"): ("family", str),
    ("nonlinearity", "T"): ("T", float),
    ("nonlinearity", "eps"): ("eps", float),
    ("nonlinearity", "a"): ("a", float),
    ("nonlinearity", "theta"): ("theta", float),
    ("physics", "d"): ("d", float),
    ("physics", "delta"): ("delta", float),
    ("semiwave", "L"): ("L", "auto_float"),
    ("semiwave", "Nt"): ("Nt", int),
    ("semiwave", "Nx"): ("Nx", "auto_int"),
    ("semiwave", "omega"): ("omega", float),
    ("semiwave", "tol_fix"): ("tol_fix", float),
    ("semiwave", "tol_period"): ("tol_period", float),
    ("semiwave", "max_picard"): ("max_picard", int),
    ("semiwave", "max_periods"): ("max_periods", int),
    ("fbp", "h0"): ("h0", float),
    ("fbp", "shape"): ("shape", str),
    ("fbp", "amplitude"): ("amplitude", float),
    ("fbp", "Ny"): ("Ny", int),
    ("fbp", "dt"): ("dt", "auto_float"),
    ("fbp", "horizon_periods"): ("horizon_periods", float),
    ("fbp", "snapshot_stride"): ("snapshot_stride", "auto_int"),
    ("fbp", "sweeps"): ("sweeps", int),
    ("verify", "params"): ("verify_params", str),
    ("verify", "speed_window"): ("speed_window", float),
    ("verify", "drift_window_periods"): ("drift_window_periods", float),
    ("verify", "tol_drift_osc"): ("tol_drift_osc", float),
    ("verify", "tol_speed"): ("tol_speed", float),
    ("verify", "tol_profile"): ("tol_profile", float),
    ("verify", "tol_construction"): ("tol_construction", float),
    ("verify", "construction"): ("construction", bool),
    ("output", "dir"): ("out_dir", str),
}

_FAMILIES = ("kpp_logistic", "monostable_nonkpp", "bistable_cubic")
_SHAPES = ("bump", "flat_delta", "plateau")

DEFAULT_CONFIG_TEXT = """\
[nonlinearity]
family = kpp_logistic
T = 1.0
eps = 0.3

[physics]
d = 1.0
delta = 0.5

[semiwave]
Nt = 256

[fbp]
h0 = 2.0
shape = bump
amplitude = 0.4
Ny = 800
horizon_periods = 40

[verify]
params = auto

[output]
dir = out
"""


def _convert(raw, kind, anchor):
    if kind == "auto_float" or kind == "auto_int":
        if raw.lower() == "auto":
            return None
        kind = float if kind == "auto_float" else int
    if kind is bool:
        low = raw.lower()
        if low in ("on", "true", "1", "yes"):
            return True
        if low in ("off", "false", "0", "no"):
            return False
        raise ConfigError(f"{anchor}: expected on/off, got {raw!r}")
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{anchor}: cannot parse {raw!r} as {kind.__name__}") from None


def _validate(cfg: RunConfig, path: str, lines: dict):
    def anchor(attr):
        return f"{path}:{lines.get(attr, 0)}"

    def fail(attr, msg):
        raise ConfigError(f"{anchor(attr)}: {msg}")

    if cfg.family not in _FAMILIES:
        fail("family", f"unknown family {cfg.family!r}; choose from {_FAMILIES}")
    if not cfg.T > 0.0:
        fail("T", "period T must be positive")
    if not (0.0 <= cfg.eps < 1.0):
        fail("eps", "eps must lie in [0, 1)")
    if cfg.family == "monostable_nonkpp" and not cfg.a > 1.0:
        fail("a", "steepness a must exceed 1")
    if cfg.family == "bistable_cubic" and not (0.0 < cfg.theta < 1.0):
        fail("theta", "theta must lie in (0, 1)")
    if not cfg.d > 0.0:
        fail("d", "diffusivity d must be positive")
    if not (0.0 < cfg.delta < 1.0):
        fail("delta", "delta must lie in (0,1)")
    for attr in ("Nt", "Ny", "max_picard", "max_periods", "sweeps"):
        if getattr(cfg, attr) <= 0:
            fail(attr, f"{attr} must be positive")
    for attr in ("Nx", "snapshot_stride"):
        val = getattr(cfg, attr)
        if val is not None and val <= 0:
            fail(attr, f"{attr} must be positive")
    for attr in ("L", "dt"):
        val = getattr(cfg, attr)
        if val is not None and val <= 0.0:
            fail(attr, f"{attr} must be positive")
    if not (0.0 < cfg.omega <= 1.0):
        fail("omega", "omega must lie in (0, 1]")
    for attr in ("tol_fix", "tol_period", "tol_drift_osc", "tol_speed",
                 "tol_profile", "tol_construction", "h0", "horizon_periods"):
        if not getattr(cfg, attr) > 0.0:
            fail(attr, f"{attr} must be positive")
    if cfg.shape not in _SHAPES:
        fail("shape", f"unknown shape {cfg.shape!r}; choose from {_SHAPES}")
    if cfg.shape == "bump" and not cfg.amplitude > -cfg.delta:
        fail("amplitude", "bump amplitude must exceed -delta")
    if not (0.0 < cfg.speed_window <= 1.0):
        fail("speed_window", "speed_window must lie in (0, 1]")
    if cfg.verify_params not in ("auto",):
        fail("verify_params", "verify params supports only 'auto'")


def parse_config(path: str) -> RunConfig:
    """Parse and validate a config file; raises ConfigError with
    file:line anchors on any schema violation."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None

    cfg = RunConfig(source_text=text)
    lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if not any(sec == section for sec, _ in _SCHEMA):
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if section is None:
            raise ConfigError(f"{path}:{lineno}: key outside any section")
        key, _, raw_val = line.partition("=")
        key = key.strip()
        raw_val = raw_val.split("#", 1)[0].split(";", 1)[0].strip()
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in section [{section}]")
        attr, kind = _SCHEMA[(section, key)]
        setattr(cfg, attr, _convert(raw_val, kind, f"{path}:{lineno}"))
        lines[attr] = lineno

    _validate(cfg, path, lines)
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """Deterministic short hash over the effective settings."""
    items = []
    for f in dc_fields(RunConfig):
        if f.name == "source_text":
            continue
        items.append(f"{f.name}={getattr(cfg, f.name)!r}")
    blob = "\n".join(items).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]
