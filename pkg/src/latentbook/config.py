"""Experiment configuration: TOML schema, validation, defaults.

Sections: [sim], [flow], [sign], [metaorder], [sweep], [output].  Unknown
keys raise ConfigError listing the offending entries so the CLI can emit a
machine-readable report.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .orderflow import FlowParams

_SIM_KEYS = {
    "seed", "replicas", "warmup_steps", "horizon_steps", "halfwidth",
    "snapshot_interval", "threads", "drop_budget",
}
_FLOW_KEYS = {"lambda", "lam", "mu", "nu", "zeta"}
_SIGN_KEYS = {"gamma", "mode"}
_META_KEYS = {
    "style", "phi", "qv_min", "qv_max", "n_metaorders", "rewarm_steps",
    "twin", "antithetic", "tail", "segment_horizon", "calibration_steps", "q_fixed",
    "duration_target",
}
_SWEEP_KEYS = {"gamma", "zeta", "phi", "style"}
_OUTPUT_KEYS = {"dir"}

_SECTION_KEYS = {
    "sim": _SIM_KEYS, "flow": _FLOW_KEYS, "sign": _SIGN_KEYS,
    "metaorder": _META_KEYS, "sweep": _SWEEP_KEYS, "output": _OUTPUT_KEYS,
}


@dataclass
class MetaorderConfig:
    style: str = "zeta_execution"
    phi: float = 0.3
    qv_min: float = 1e-3
    qv_max: float = 1e-1
    n_metaorders: int = 1000
    rewarm_steps: Optional[int] = None
    twin: bool = False
    antithetic: bool = True
    tail: float = 4.0
    segment_horizon: Optional[int] = None
    calibration_steps: int = 1_000_000
    q_fixed: Optional[int] = None
    duration_target: Optional[float] = None  # target T in lifetimes (unit style)


@dataclass
class SweepConfig:
    gamma: list = field(default_factory=lambda: [0.5])
    zeta: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    style: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    seed: int = 12345
    replicas: int = 2
    warmup_steps: Optional[int] = None
    horizon_steps: int = 1_000_000
    halfwidth: int = 500
    snapshot_interval: int = 1000
    threads: int = 2
    drop_budget: float = 1e-6
    flow: FlowParams = field(default_factory=FlowParams)
    gamma: float = 0.5
    sign_mode: str = "lmf"
    metaorder: MetaorderConfig = field(default_factory=MetaorderConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output_dir: str = "out"

    @property
    def alpha(self) -> float:
        return self.gamma + 1.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["flow"] = asdict(self.flow)
        return d

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.as_dict(), sort_keys=True).encode()
        ).hexdigest()


def _check_keys(section: str, table: dict) -> None:
    extra = set(table) - _SECTION_KEYS[section]
    if extra:
        raise ConfigError(
            f"unknown keys in [{section}]: {sorted(extra)}",
            keys=[f"{section}.{k}" for k in sorted(extra)],
        )


def config_from_tables(tables: dict) -> ExperimentConfig:
    unknown_sections = set(tables) - set(_SECTION_KEYS)
    if unknown_sections:
        raise ConfigError(
            f"unknown config sections: {sorted(unknown_sections)}",
            keys=sorted(unknown_sections),
        )
    for name, table in tables.items():
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table", keys=[name])
        _check_keys(name, table)

    cfg = ExperimentConfig()
    sim = tables.get("sim", {})
    for key in _SIM_KEYS & set(sim):
        setattr(cfg, key, sim[key])
    flow = dict(tables.get("flow", {}))
    if "lambda" in flow:
        flow["lam"] = flow.pop("lambda")
    try:
        cfg.flow = FlowParams(**{k: flow[k] for k in ("lam", "mu", "nu", "zeta")
                                 if k in flow})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [flow] values: {exc}", keys=list(flow)) from exc
    sign = tables.get("sign", {})
    cfg.gamma = float(sign.get("gamma", cfg.gamma))
    cfg.sign_mode = sign.get("mode", cfg.sign_mode)
    if cfg.sign_mode not in ("lmf", "iid"):
        raise ConfigError("sign.mode must be 'lmf' or 'iid'", keys=["sign.mode"])
    if cfg.sign_mode == "lmf" and cfg.gamma <= 0:
        raise ConfigError("sign.gamma must be positive", keys=["sign.gamma"])
    meta = tables.get("metaorder", {})
    cfg.metaorder = MetaorderConfig(**meta)
    sweep = tables.get("sweep", {})
    cfg.sweep = SweepConfig(**sweep)
    out = tables.get("output", {})
    cfg.output_dir = out.get("dir", cfg.output_dir)
    if cfg.replicas < 1:
        raise ConfigError("sim.replicas must be >= 1", keys=["sim.replicas"])
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            tables = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", keys=["--config"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}", keys=["--config"]) from exc
    return config_from_tables(tables)
