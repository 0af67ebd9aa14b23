"""Run configuration: flat key=value files plus command-line overrides.

A configuration file holds `key = value` lines with `#` comments; keys are
namespaced (flow.alpha, sim.dt, grid.nx, ...). Command-line flags take
precedence over file values, which take precedence over the defaults
below. All validation errors raise ConfigError carrying, for file-sourced
problems, the offending path and line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .units import FlowParams

DEFAULT_FLOW = FlowParams(alpha=1e-3, c2=1500.0, sigma_bar=3000.0)
DEFAULT_R_LIST = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0)

_FLOAT, _INT, _BOOL, _STR, _FLOAT_LIST = "float", "int", "bool", "str", "float_list"

_SCHEMA = {
    "flow.alpha": _FLOAT,
    "flow.c2": _FLOAT,
    "flow.sigma": _FLOAT,
    "flow.sigma_bar": _FLOAT,
    "tlc.d": _FLOAT,
    "tlc.h": _FLOAT,
    "linear.k1": _FLOAT,
    "linear.k2": _FLOAT,
    "sim.rule": _STR,
    "sim.dt": _FLOAT,
    "sim.t_total": _FLOAT,
    "sim.t_warmup": _FLOAT,
    "sim.n_particles": _INT,
    "sim.seed": _INT,
    "sim.workers": _INT,
    "sim.hist_bins": _INT,
    "sim.hist_stride": _INT,
    "grid.nx": _INT,
    "grid.x_max": _FLOAT,
    "grid.scheme": _STR,
    "sweep.R_list": _FLOAT_LIST,
    "pdf.points": _INT,
    "pdf.with_fp": _BOOL,
    "out.dir": _STR,
    "out.precision": _INT,
    "out.plots": _BOOL,
}


@dataclass
class RunConfig:
    """Fully resolved settings for one command invocation.

    Optional fields left None are derived at command time (control
    parameters from the optimizer, time step from the resolution rules,
    durations from the flow's relaxation time).
    """

    flow: FlowParams = DEFAULT_FLOW
    rule: str = "tlc"
    tlc_d: float | None = None
    tlc_h: float | None = None
    k1: float | None = None
    k2: float | None = None
    dt: float | None = None
    t_total: float | None = None
    t_warmup: float | None = None
    n_particles: int = 32
    seed: int = 1
    workers: int = 1
    hist_bins: int = 200
    hist_stride: int | None = None
    grid_nx: int = 2000
    grid_x_max: float | None = None
    grid_scheme: str = "hybrid"
    r_list: list = field(default_factory=lambda: list(DEFAULT_R_LIST))
    pdf_points: int = 2001
    pdf_with_fp: bool = False
    out_dir: str = "tlcontrol-out"
    precision: int = 6
    plots: bool = True


def parse_config_file(path) -> dict:
    """Read a flat key=value file into {key: (raw_value, lineno)}."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def _cast(kind, raw, where):
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            return int(raw, 0)
        if kind == _BOOL:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == _FLOAT_LIST:
            items = [part.strip() for part in raw.split(",")]
            if any(not part for part in items):
                raise ValueError("empty list entry")
            return [float(part) for part in items]
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_run_config(config_path=None, overrides=None) -> RunConfig:
    """Merge defaults, an optional config file, and CLI overrides.

    overrides maps schema keys to already-typed values (CLI flags); they
    win over file entries.
    """
    values = {}
    if config_path is not None:
        for key, (raw, lineno) in parse_config_file(config_path).items():
            values[key] = _cast(_SCHEMA[key], raw, f"{config_path}:{lineno}")
    for key, value in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        if value is not None:
            values[key] = value

    if "flow.sigma" in values and "flow.sigma_bar" in values:
        raise ConfigError("flow.sigma and flow.sigma_bar are aliases; give only one")
    sigma = values.get("flow.sigma", values.get("flow.sigma_bar", DEFAULT_FLOW.sigma_bar))
    try:
        flow = FlowParams(
            alpha=values.get("flow.alpha", DEFAULT_FLOW.alpha),
            c2=values.get("flow.c2", DEFAULT_FLOW.c2),
            sigma_bar=sigma,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid flow parameters: {exc}") from exc

    cfg = RunConfig(flow=flow)
    cfg.rule = values.get("sim.rule", cfg.rule).lower()
    if cfg.rule not in ("tlc", "linear"):
        raise ConfigError(f"sim.rule must be 'tlc' or 'linear', got {cfg.rule!r}")
    cfg.tlc_d = values.get("tlc.d", cfg.tlc_d)
    cfg.tlc_h = values.get("tlc.h", cfg.tlc_h)
    if (cfg.tlc_d is None) != (cfg.tlc_h is None):
        raise ConfigError("tlc.d and tlc.h must be given together")
    cfg.k1 = values.get("linear.k1", cfg.k1)
    cfg.k2 = values.get("linear.k2", cfg.k2)
    if (cfg.k1 is None) != (cfg.k2 is None):
        raise ConfigError("linear.k1 and linear.k2 must be given together")
    cfg.dt = values.get("sim.dt", cfg.dt)
    cfg.t_total = values.get("sim.t_total", cfg.t_total)
    cfg.t_warmup = values.get("sim.t_warmup", cfg.t_warmup)
    cfg.n_particles = values.get("sim.n_particles", cfg.n_particles)
    cfg.seed = values.get("sim.seed", cfg.seed)
    cfg.workers = values.get("sim.workers", cfg.workers)
    cfg.hist_bins = values.get("sim.hist_bins", cfg.hist_bins)
    cfg.hist_stride = values.get("sim.hist_stride", cfg.hist_stride)
    cfg.grid_nx = values.get("grid.nx", cfg.grid_nx)
    cfg.grid_x_max = values.get("grid.x_max", cfg.grid_x_max)
    cfg.grid_scheme = values.get("grid.scheme", cfg.grid_scheme).lower()
    if cfg.grid_scheme not in ("hybrid", "upwind"):
        raise ConfigError(f"grid.scheme must be 'hybrid' or 'upwind', got {cfg.grid_scheme!r}")
    cfg.r_list = list(values.get("sweep.R_list", cfg.r_list))
    if not cfg.r_list:
        raise ConfigError("sweep.R_list must not be empty")
    if any(r <= 0 for r in cfg.r_list):
        raise ConfigError("sweep.R_list entries must be positive")
    cfg.pdf_points = values.get("pdf.points", cfg.pdf_points)
    if cfg.pdf_points < 41:
        raise ConfigError(f"pdf.points must be at least 41, got {cfg.pdf_points}")
    cfg.pdf_with_fp = values.get("pdf.with_fp", cfg.pdf_with_fp)
    cfg.out_dir = values.get("out.dir", cfg.out_dir)
    cfg.precision = values.get("out.precision", cfg.precision)
    if not (1 <= cfg.precision <= 17):
        raise ConfigError(f"out.precision must be in 1..17, got {cfg.precision}")
    cfg.plots = values.get("out.plots", cfg.plots)
    return cfg
