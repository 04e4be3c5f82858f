"""Run configuration (JSON).

Schema (all keys optional except ``mechanism`` and exactly one of
``strut_length`` / ``target_side``)::

    {
      "mechanism": "orthoglide2" | "biglide" | ["biglide", "orthoglide2"],
      "strut_length": 1.0,          # analysis at a fixed L (m)
      "target_side": 1.0,           # design for this square side (m)
      "bounds": [0.3333333, 3.0],   # VAF interval
      "orientations_deg": [0, 45],  # 0 = orientation A, 45 = orientation B
      "n_side": 257,                # samples per square side
      "tol_side": 1e-4,             # growth tolerance, units of L
      "scan_step": 0.02,            # center scan step, units of L
      "pitch": 0.01,                # C-workspace grid pitch, units of L
      "rail_gap": 0.0,              # Biglide rail offset, units of L
      "output_dir": "out",
      "plots": true
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from pkmsizing.errors import ConfigError
from pkmsizing.mechanisms import MechanismKind


@dataclass(frozen=True)
class RunConfig:
    mechanisms: tuple[str, ...]
    strut_length: float | None = None
    target_side: float | None = None
    bounds: tuple[float, float] = (1.0 / 3.0, 3.0)
    orientations_deg: tuple[float, ...] = (0.0, 45.0)
    n_side: int = 257
    tol_side: float = 1e-4
    scan_step: float = 0.02
    pitch: float = 0.01
    rail_gap: float = 0.0
    output_dir: str = "out"
    plots: bool = True

    def __post_init__(self):
        validate(self)

    @property
    def kinds(self) -> tuple[MechanismKind, ...]:
        return tuple(MechanismKind.parse(m) for m in self.mechanisms)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mechanism"] = list(d.pop("mechanisms"))
        d["bounds"] = list(self.bounds)
        d["orientations_deg"] = list(self.orientations_deg)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        if "mechanism" not in data:
            raise ConfigError("missing required field 'mechanism'")
        mech = data.pop("mechanism")
        mechanisms = (mech,) if isinstance(mech, str) else tuple(mech)
        known = {f.name for f in fields(cls)} - {"mechanisms"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown field '{unknown[0]}'")
        for key in ("bounds", "orientations_deg"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(mechanisms=mechanisms, **data)


def _positive(cfg: RunConfig, name: str):
    value = getattr(cfg, name)
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"field '{name}' must be a positive number, got {value!r}")


def validate(cfg: RunConfig) -> None:
    if not cfg.mechanisms:
        raise ConfigError("field 'mechanism' must name at least one mechanism")
    for m in cfg.mechanisms:
        try:
            MechanismKind.parse(m)
        except ValueError as exc:
            raise ConfigError(f"field 'mechanism': {exc}") from None
    if (cfg.strut_length is None) == (cfg.target_side is None):
        raise ConfigError("exactly one of 'strut_length' and 'target_side' must be given")
    for name in ("strut_length", "target_side"):
        if getattr(cfg, name) is not None:
            _positive(cfg, name)
    if len(cfg.bounds) != 2:
        raise ConfigError("field 'bounds' must be [lo, hi]")
    lo, hi = cfg.bounds
    if not (0 < lo <= 1 <= hi):
        raise ConfigError(f"field 'bounds' must satisfy 0 < lo <= 1 <= hi, got [{lo}, {hi}]")
    if not cfg.orientations_deg:
        raise ConfigError("field 'orientations_deg' must not be empty")
    for name in ("tol_side", "scan_step", "pitch"):
        _positive(cfg, name)
    if not (isinstance(cfg.n_side, int) and cfg.n_side >= 33):
        raise ConfigError("field 'n_side' must be an integer >= 33")
    if cfg.rail_gap < 0:
        raise ConfigError("field 'rail_gap' must be non-negative")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
