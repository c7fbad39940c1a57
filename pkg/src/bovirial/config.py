"""Sectioned ``key = value`` experiment configuration with strict keys."""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import FromFile, Gaussian, ModelSpec, RunConfig, Soliton
from .spectral import Grid


class ConfigError(ValueError):
    pass


_REQUIRED = object()

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {"k": (int, 1)},
    "grid": {"L": (float, _REQUIRED), "N": (int, _REQUIRED)},
    "time": {
        "dt": (float, _REQUIRED),
        "t_end": (float, _REQUIRED),
        "t0": (float, 0.0),
        "n_out": (int, 1),
        "dealias_fraction": (float, None),
    },
    "initial": {"soliton": (str, ""), "gaussian": (str, ""), "file": (str, "")},
    "weights": {
        "b": (float, 0.5),
        "m": (float, 0.0),
        "q": (float, 1.1),
        "sign": (int, 1),
        "corollary": (bool, False),
        "sigma": (float, 1.0),
        "delta": (float, 1.0),
        "C0": (float, 3.0),
        "right_c1": (float, 0.0),
        "left_c1": (float, 0.0),
        "left_c2": (float, 1.0),
        "eta": (float, 0.5),
        "omega_c": (float, 1.0),
        "gamma": (float, 1.0),
        "omega_exponent": (float, 0.6),
        "virial_weight": (str, "smooth_step"),
        "step_x0": (float, 0.0),
        "step_width": (float, 2.0),
        "step_speed": (float, 0.0),
    },
    "scan": {
        "t_start": (float, 10.0),
        "stride": (int, 1),
        "source": (str, ""),
        "seed": (int, 0),
        "family_size": (int, 20),
        "lab_N": (int, 256),
        "claim_resolution": (int, 2000),
        "p": (float, 2.0),
    },
}

_BOOLS = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _convert(kind, raw: str, where: str):
    try:
        if kind is bool:
            return _BOOLS[raw.strip().lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except (KeyError, ValueError):
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


def _numbers(text: str, count: int, where: str) -> list[tuple[float, ...]]:
    """``a, b; c, d`` -> ``[(a, b), (c, d)]``."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        vals = [v.strip() for v in part.split(",")]
        if len(vals) != count:
            raise ConfigError(f"{where}: expected {count} comma-separated numbers, got {part!r}")
        out.append(tuple(_convert(float, v, where) for v in vals))
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    text: bytes
    values: dict = field(repr=False)
    base_dir: Path = Path(".")

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text).hexdigest()

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def run_config(self) -> RunConfig:
        g, t = self["grid"], self["time"]
        for section, key in (("grid", "L"), ("grid", "N"), ("time", "dt"), ("time", "t_end")):
            if self[section][key] is None:
                raise ConfigError(f"missing required key [{section}] {key}")
        try:
            grid = Grid(g["L"], g["N"])
            return RunConfig(grid=grid, dt=t["dt"], t_end=t["t_end"], initial=self.initial(),
                             model=ModelSpec(self["model"]["k"]), t0=t["t0"], n_out=t["n_out"],
                             dealias_fraction=t["dealias_fraction"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def initial(self) -> tuple:
        ini = self["initial"]
        comps = []
        try:
            comps += [Soliton(c, x0) for c, x0 in _numbers(ini["soliton"], 2, "[initial] soliton")]
            comps += [Gaussian(a, w, x0) for a, w, x0 in _numbers(ini["gaussian"], 3, "[initial] gaussian")]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if ini["file"]:
            path = Path(ini["file"])
            comps.append(FromFile(str(path if path.is_absolute() else self.base_dir / path)))
        return tuple(comps)


def parse_config(text: bytes, base_dir: Path = Path(".")) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text.decode("utf-8"))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    for section, keys in SCHEMA.items():
        given = dict(parser[section]) if parser.has_section(section) else {}
        unknown = sorted(set(given) - set(keys))
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
        sec = {}
        for key, (kind, default) in keys.items():
            if key in given:
                sec[key] = _convert(kind, given[key], f"[{section}] {key}")
            else:
                sec[key] = None if default is _REQUIRED else default
        values[section] = sec
    return ExperimentConfig(text, values, base_dir)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)
