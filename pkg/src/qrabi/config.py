"""Run configuration: a flat ``key = value`` text format plus command-line overrides.

Floats are written with repr() so a config read back compares equal.
Lists are comma separated; an empty value means "not set".
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .model import ModelParams, Sector

FORMAT_TAG = "qrabi-config 1"


@dataclass(frozen=True)
class RunConfig:
    command: str = "spectrum"
    omega: float = 1.0
    omega0: float = 1.0
    g: float = 0.99
    delta: float = 0.0
    delta_list: tuple[float, ...] | None = None
    delta_points: int = 200
    dim: int | None = None
    sector: str = "plus"
    levels: int = 11
    keep_fraction: float = 0.6
    bins: float = 0.01
    k_orders: tuple[int, ...] = (1, 2)
    allow_unconverged: bool = False
    mode: str = ""
    grid: int = 64
    window: tuple[float, ...] | None = None
    n: tuple[int, ...] = (0, 5, 10)
    x: float = 0.0
    mu: float = 0.5
    k_max: int = 20
    workers: int = 1
    out: str = "out"

    def model(self, delta: float | None = None) -> ModelParams:
        return ModelParams(omega=self.omega, omega0=self.omega0, g=self.g,
                           delta=self.delta if delta is None else float(delta))

    @property
    def sector_enum(self) -> Sector:
        return Sector.parse(self.sector)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_text(self) -> str:
        lines = [f"# {FORMAT_TAG}"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = {}
        known = {f.name: f for f in fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = parse_value(key, val)
        return cls(**values)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


_FLOAT_KEYS = {"omega", "omega0", "g", "delta", "keep_fraction", "bins", "x", "mu"}
_INT_KEYS = {"delta_points", "levels", "grid", "k_max", "workers"}
_OPT_INT_KEYS = {"dim"}
_FLOAT_LIST_KEYS = {"delta_list", "window"}
_INT_LIST_KEYS = {"n", "k_orders"}
_BOOL_KEYS = {"allow_unconverged"}


def parse_value(key: str, val: str):
    """Parse one config value (also used for command-line overrides)."""
    val = val.strip()
    if key in _FLOAT_KEYS:
        return float(val)
    if key in _INT_KEYS:
        return int(val)
    if key in _OPT_INT_KEYS:
        return int(val) if val else None
    if key in _FLOAT_LIST_KEYS:
        return tuple(float(v) for v in val.split(",")) if val else None
    if key in _INT_LIST_KEYS:
        return tuple(int(v) for v in val.split(",")) if val else ()
    if key in _BOOL_KEYS:
        low = val.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {val!r}")
        return low in ("true", "1", "yes")
    return val


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    return v
