"""Flat key-value run configuration: parser, validator, canonical emitter.

Format: one `key = value` per line, `#` starts a comment line, blank lines
ignored. Dotted keys group sections (model.kind, initial.P0, grid.n). The
emitter writes a canonical ordering so parse(emit(cfg)) round-trips exactly.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from .errors import ConfigError
from .models import DEFAULT_PARAMS, KINDS, PARAM_NAMES

METHODS = ("fssh", "qcle", "oracle", "compare")

PairTerm = Tuple[Tuple[int, int], complex]


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters for one ensemble run."""

    method: str
    model_kind: str
    model_mass: float = 2000.0
    model_params: Dict[str, float] = field(default_factory=dict)
    R0: float = -9.0
    P0: float = 0.0
    sigma_R: float = 0.0            # 0 = identical initial conditions
    state: int = 0
    pairs: Optional[Tuple[PairTerm, ...]] = None   # qcle pair-amplitude list
    dt: float = 0.1
    n_steps: int = 4000
    n_traj: int = 1000
    seed: int = 0
    save_every: int = 10
    substeps: int = 10
    filter_bound: float = math.inf
    workers: int = 1
    grid_n: int = 4096
    grid_rmin: float = -30.0
    grid_rmax: float = 30.0
    grid_dt: float = 0.05
    grid_rcut: float = 10.0
    out_dir: str = "out"


def _parse_float(key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}")
    if math.isnan(v):
        raise ConfigError(f"{key}: must not be NaN")
    return v


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")


def _parse_pairs(key: str, raw: str) -> Tuple[PairTerm, ...]:
    terms = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"{key}: term {chunk!r} needs s,s'=amplitude")
        left, right = chunk.split("=", 1)
        idx = left.split(",")
        if len(idx) != 2:
            raise ConfigError(f"{key}: pair {left!r} must be two indices")
        try:
            s, sp = int(idx[0]), int(idx[1])
        except ValueError:
            raise ConfigError(f"{key}: pair {left!r} must be two indices")
        if s not in (0, 1) or sp not in (0, 1):
            raise ConfigError(f"{key}: pair indices must be 0 or 1")
        try:
            amp = complex(right.strip())
        except ValueError:
            raise ConfigError(f"{key}: bad amplitude {right.strip()!r}")
        if amp == 0:
            raise ConfigError(f"{key}: zero amplitude for {left.strip()!r}")
        terms.append(((s, sp), amp))
    if not terms:
        raise ConfigError(f"{key}: empty pair list")
    return tuple(terms)


# key -> (RunConfig attribute, caster) for the simple scalar keys
_SCALARS = {
    "model.mass": ("model_mass", _parse_float),
    "initial.R0": ("R0", _parse_float),
    "initial.P0": ("P0", _parse_float),
    "initial.sigma_R": ("sigma_R", _parse_float),
    "initial.state": ("state", _parse_int),
    "dt": ("dt", _parse_float),
    "n_steps": ("n_steps", _parse_int),
    "n_traj": ("n_traj", _parse_int),
    "seed": ("seed", _parse_int),
    "save_every": ("save_every", _parse_int),
    "electronic.substeps": ("substeps", _parse_int),
    "filter.bound": ("filter_bound", _parse_float),
    "workers": ("workers", _parse_int),
    "grid.n": ("grid_n", _parse_int),
    "grid.rmin": ("grid_rmin", _parse_float),
    "grid.rmax": ("grid_rmax", _parse_float),
    "grid.dt": ("grid_dt", _parse_float),
    "grid.rcut": ("grid_rcut", _parse_float),
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document. Raises ConfigError."""
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, "
                              f"got {stripped!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in raw:
            raise ConfigError(f"{key}: given twice")
        raw[key] = value

    if "method" not in raw:
        raise ConfigError("method: required")
    method = raw.pop("method")
    if method not in METHODS:
        raise ConfigError(f"method: must be one of {'|'.join(METHODS)}, "
                          f"got {method!r}")
    if "model.kind" not in raw:
        raise ConfigError("model.kind: required")
    kind = raw.pop("model.kind")
    if kind not in KINDS:
        raise ConfigError(f"model.kind: unknown kind {kind!r}")
    if "initial.P0" not in raw:
        raise ConfigError("initial.P0: required")

    values: Dict[str, object] = {"method": method, "model_kind": kind}
    params = dict(DEFAULT_PARAMS[kind])
    for key in list(raw):
        if key.startswith("model.") and key[6:] in PARAM_NAMES[kind]:
            params[key[6:]] = _parse_float(key, raw.pop(key))
    values["model_params"] = params

    if "initial.pairs" in raw:
        values["pairs"] = _parse_pairs("initial.pairs",
                                       raw.pop("initial.pairs"))
    for key in list(raw):
        if key in _SCALARS:
            attr, caster = _SCALARS[key]
            values[attr] = caster(key, raw.pop(key))
    if "out.dir" in raw:
        values["out_dir"] = raw.pop("out.dir")
    if raw:
        unknown = sorted(raw)[0]
        raise ConfigError(f"{unknown}: unknown key")

    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.method not in METHODS:
        raise ConfigError(f"method: must be one of {'|'.join(METHODS)}")
    if not cfg.dt > 0 or not math.isfinite(cfg.dt):
        raise ConfigError("dt: must be positive and finite")
    if cfg.n_steps < 1:
        raise ConfigError("n_steps: must be >= 1")
    if cfg.n_traj < 1:
        raise ConfigError("n_traj: must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("seed: must be >= 0")
    if cfg.save_every < 1:
        raise ConfigError("save_every: must be >= 1")
    if cfg.substeps < 1:
        raise ConfigError("electronic.substeps: must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")
    if not cfg.filter_bound > 1.0:
        raise ConfigError("filter.bound: must exceed 1")
    if not cfg.model_mass > 0:
        raise ConfigError("model.mass: must be positive")
    if cfg.state not in (0, 1):
        raise ConfigError("initial.state: must be 0 or 1")
    if cfg.sigma_R != 0.0 and not cfg.sigma_R >= 1e-3:
        raise ConfigError("initial.sigma_R: must be 0 (no sampling) or "
                          ">= 1e-3; arbitrarily narrow Wigner spreads are "
                          "not supported")
    if cfg.method in ("oracle", "compare") and cfg.sigma_R == 0.0:
        raise ConfigError("initial.sigma_R: grid propagation needs a finite "
                          "packet width (>= 1e-3)")
    if cfg.pairs is not None and cfg.method != "qcle":
        raise ConfigError("initial.pairs: only meaningful for method qcle")
    if cfg.grid_n < 8 or (cfg.grid_n & (cfg.grid_n - 1)) != 0:
        raise ConfigError("grid.n: must be a power of two >= 8")
    if not cfg.grid_rmax > cfg.grid_rmin:
        raise ConfigError("grid.rmax: must exceed grid.rmin")
    if not cfg.grid_dt > 0:
        raise ConfigError("grid.dt: must be positive")
    if not cfg.grid_rcut > 0:
        raise ConfigError("grid.rcut: must be positive")
    for name, v in cfg.model_params.items():
        if not math.isfinite(v):
            raise ConfigError(f"model.{name}: must be finite")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(emit_config(cfg)) == cfg."""
    lines = [
        f"method = {cfg.method}",
        f"model.kind = {cfg.model_kind}",
        f"model.mass = {_fmt(cfg.model_mass)}",
    ]
    for name in PARAM_NAMES[cfg.model_kind]:
        lines.append(f"model.{name} = {_fmt(cfg.model_params[name])}")
    lines += [
        f"initial.R0 = {_fmt(cfg.R0)}",
        f"initial.P0 = {_fmt(cfg.P0)}",
        f"initial.sigma_R = {_fmt(cfg.sigma_R)}",
        f"initial.state = {cfg.state}",
    ]
    if cfg.pairs is not None:
        terms = "; ".join(f"{s},{sp}={amp!r}" for (s, sp), amp in cfg.pairs)
        lines.append(f"initial.pairs = {terms}")
    lines += [
        f"dt = {_fmt(cfg.dt)}",
        f"n_steps = {cfg.n_steps}",
        f"n_traj = {cfg.n_traj}",
        f"seed = {cfg.seed}",
        f"save_every = {cfg.save_every}",
        f"electronic.substeps = {cfg.substeps}",
        f"filter.bound = {_fmt(cfg.filter_bound)}",
        f"workers = {cfg.workers}",
        f"grid.n = {cfg.grid_n}",
        f"grid.rmin = {_fmt(cfg.grid_rmin)}",
        f"grid.rmax = {_fmt(cfg.grid_rmax)}",
        f"grid.dt = {_fmt(cfg.grid_dt)}",
        f"grid.rcut = {_fmt(cfg.grid_rcut)}",
        f"out.dir = {cfg.out_dir}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(cfg: RunConfig, *, seed: Optional[int] = None,
                   n_traj: Optional[int] = None,
                   out_dir: Optional[str] = None,
                   method: Optional[str] = None) -> RunConfig:
    """CLI flag overrides; the result is re-validated."""
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if n_traj is not None:
        changes["n_traj"] = n_traj
    if out_dir is not None:
        changes["out_dir"] = out_dir
    if method is not None:
        if method not in METHODS:
            raise ConfigError(f"method: must be one of {'|'.join(METHODS)}")
        changes["method"] = method
    if not changes:
        return cfg
    new = replace(cfg, **changes)
    validate_config(new)
    return new
