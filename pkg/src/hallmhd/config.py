"""Run configuration: key=value files, validation, defaults.

The format is deliberately plain: one `key = value` per line, `#`
comments, unknown keys rejected.  Validation errors name the offending
key and the violated constraint so a bad file fails loudly before any
compute starts.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n_grid: int = 32
    pad_factor: float = 1.5
    gamma: float = 1.0
    r: float = 2.5
    N: float = 17.0
    n: tuple[float, float, float] | None = None  # explicit background; None -> suggest
    amplitude: float = 1.0
    K: int = 0  # 0 -> smallest radius covering the lattice
    epsilon: float = 1e-2
    seed: int = 1
    spectrum_slope: float = -16.0
    t_end: float = 50.0
    dt_max: float = 0.05
    dt_min: float = 1e-7
    cfl_adv: float = 0.5
    cfl_hall: float = 0.4
    sample_every: int = 10
    checkpoint_every: int = 0
    output_dir: str = "hallmhd_out"
    hs: tuple[float, ...] = ()  # empty -> (3, r+4, (r+4+N)/2)
    decay_check: bool = True
    beta: float = 0.0  # 0 -> r+4
    window_frac: float = 0.5
    margin: float = 0.15


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


_PARSERS = {
    "n_grid": int,
    "pad_factor": float,
    "gamma": float,
    "r": float,
    "N": float,
    "n": _parse_triple,
    "amplitude": float,
    "K": int,
    "epsilon": float,
    "seed": int,
    "spectrum_slope": float,
    "t_end": float,
    "dt_max": float,
    "dt_min": float,
    "cfl_adv": float,
    "cfl_hall": float,
    "sample_every": int,
    "checkpoint_every": int,
    "output_dir": str,
    "hs": _parse_floats,
    "decay_check": _parse_bool,
    "beta": float,
    "window_frac": float,
    "margin": float,
}


def parse_value(key: str, text: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key: {key}")
    try:
        return _PARSERS[key](text)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines into a validated RunConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        values[key] = parse_value(key, val.strip())
    cfg = RunConfig(**values)
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    """Apply derived defaults, then enforce the run constraints."""
    if cfg.n_grid < 8 or cfg.n_grid % 2:
        raise ConfigError(f"n_grid: must be even and >= 8, got {cfg.n_grid}")
    if cfg.pad_factor < 1.0:
        raise ConfigError(f"pad_factor: must be >= 1, got {cfg.pad_factor}")
    if not (0.5 < cfg.gamma <= 2.0):
        raise ConfigError(f"gamma: must lie in (1/2, 2], got {cfg.gamma}")
    if not cfg.r > 2.0:
        raise ConfigError(f"r: Diophantine exponent must exceed 2, got {cfg.r}")
    if cfg.decay_check and cfg.N < 4.0 * cfg.r + 7.0:
        raise ConfigError(
            f"N: decay verdicts require N >= 4r + 7 = {4.0 * cfg.r + 7.0:g}, got {cfg.N:g}"
        )
    if cfg.N <= cfg.r + 4.0:
        raise ConfigError(f"N: must exceed r + 4 = {cfg.r + 4.0:g}, got {cfg.N:g}")
    if cfg.epsilon < 0.0:
        raise ConfigError(f"epsilon: must be non-negative, got {cfg.epsilon}")
    if cfg.t_end <= 0.0:
        raise ConfigError(f"t_end: must be positive, got {cfg.t_end}")
    if not (0.0 < cfg.dt_min <= cfg.dt_max):
        raise ConfigError(
            f"dt_min/dt_max: need 0 < dt_min <= dt_max, got {cfg.dt_min} / {cfg.dt_max}"
        )
    for name in ("cfl_adv", "cfl_hall"):
        v = getattr(cfg, name)
        if not (0.0 < v <= 1.0):
            raise ConfigError(f"{name}: must lie in (0, 1], got {v}")
    if cfg.sample_every < 1:
        raise ConfigError(f"sample_every: must be >= 1, got {cfg.sample_every}")
    if cfg.checkpoint_every < 0:
        raise ConfigError(f"checkpoint_every: must be >= 0, got {cfg.checkpoint_every}")
    if cfg.K < 0:
        raise ConfigError(f"K: must be >= 0 (0 selects the lattice radius), got {cfg.K}")
    if not (0.0 < cfg.window_frac <= 1.0):
        raise ConfigError(f"window_frac: must lie in (0, 1], got {cfg.window_frac}")
    if cfg.margin < 0.0:
        raise ConfigError(f"margin: must be non-negative, got {cfg.margin}")

    updates = {}
    if not cfg.hs:
        updates["hs"] = (3.0, cfg.r + 4.0, (cfg.r + 4.0 + cfg.N) / 2.0)
    if cfg.beta == 0.0:
        updates["beta"] = cfg.r + 4.0
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    if not (cfg.r + 4.0 <= cfg.beta < cfg.N):
        raise ConfigError(
            f"beta: must lie in [r+4, N) = [{cfg.r + 4.0:g}, {cfg.N:g}), got {cfg.beta:g}"
        )
    if cfg.decay_check and cfg.beta not in cfg.hs:
        raise ConfigError(
            f"beta: decay fits need the H^{cfg.beta:g} columns; add {cfg.beta:g} to hs"
        )
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Render a config as parseable key=value text (a parse fixed point)."""
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, tuple):
            text = ",".join(f"{x!r}" for x in v)
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def resolve_background(cfg: RunConfig):
    """Certified background for a run: explicit n, or the suggested family."""
    from .diophantine import certify, lattice_search_radius, suggest_background

    K = cfg.K if cfg.K > 0 else lattice_search_radius(cfg.n_grid)
    if cfg.n is not None:
        return certify(list(cfg.n), cfg.r, K)
    return suggest_background(cfg.r, K, cfg.amplitude)
