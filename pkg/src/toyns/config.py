"""Run configuration: INI-style or JSON files, defaults and ``section.key=value`` overrides."""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .initdata import BumpSpec, CGSpec, ProfileSpec
from .models import ModelSpec, StepperConfig
from .spectral import FrequencyLattice, make_lattice

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "resolve", "parse_override"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _float(v) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    return float(Fraction(str(v).strip()))


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError(f"expected an integer, got {v!r}")
    f = _float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _floats(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [_float(x) for x in v]
    s = str(v).strip().strip("()[]")
    return [_float(x) for x in s.split(",") if x.strip()] if s else []


def _optional(conv):
    def parse(v):
        if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none")):
            return None
        return conv(v)

    return parse


def _str(v) -> str:
    return str(v).strip()


SCHEMA = {
    "model": {"kind": _str, "dim": _int, "alpha": _float},
    "lattice": {"N": _int, "h": _float, "padded": _bool},
    "stepper": {
        "dt": _float,
        "t_end": _float,
        "scheme": _str,
        "adaptive": _bool,
        "dt_min": _float,
        "blowup_norm_cap": _float,
        "record_interval": _optional(_float),
        "monitor": _str,
    },
    "data": {
        "kind": _str,
        "center": _floats,
        "radius": _float,
        "amplitude": _float,
        "component": _int,
        "eps": _float,
        "alpha": _float,
        "profile_center": _floats,
        "profile_radius": _float,
        "profile_amplitude": _float,
        "path": _str,
    },
    "run": {
        "seed": _int,
        "snapshot_times": _floats,
        "k_max": _optional(_int),
        "simulate": _bool,
        "positivity_samples": _int,
        "compare_rtol": _float,
    },
    "sweep": {"command": _str},
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "model": {"kind": "TNS", "dim": 2, "alpha": 1.0},
    "lattice": {"N": 256, "h": 1 / 32, "padded": True},
    "stepper": {
        "dt": 1e-4,
        "t_end": 0.4,
        "scheme": "ETD1_POSITIVE",
        "adaptive": True,
        "dt_min": 1e-9,
        "blowup_norm_cap": 1e6,
        "record_interval": 1e-3,
        "monitor": "l1",
    },
    "data": {
        "kind": "ms_bump",
        "center": [0.6, -0.6],
        "radius": 0.05,
        "amplitude": 1.0,
        "component": 0,
        "eps": 1e-2,
        "alpha": 0.5,
        "profile_center": [0.6, -0.08],
        "profile_radius": 0.07,
        "profile_amplitude": 1.0,
        "path": "",
    },
    "run": {
        "seed": 0,
        "snapshot_times": [],
        "k_max": None,
        "simulate": True,
        "positivity_samples": 1_000_000,
        "compare_rtol": 1e-2,
    },
    "sweep": {"command": "simulate", "grid": {}},
}

DATA_KINDS = ("ms_bump", "cg_data", "vorticity_bump", "checkpoint")


def _sweep_values(axis: str, value) -> list[str]:
    """A sweep axis ``section.key`` and its values, each checked against the schema."""
    sec, _, name = axis.partition(".")
    if sec not in SCHEMA or name not in SCHEMA[sec] or sec == "sweep":
        raise ConfigError(f"unknown sweep axis {axis!r}")
    if SCHEMA[sec][name] is _floats:
        raise ConfigError(f"sweep axis {axis!r} is vector-valued; sweep scalar keys only")
    vals = [str(v).strip() for v in value] if isinstance(value, (list, tuple)) else [v.strip() for v in str(value).split(",") if v.strip()]
    for v in vals:
        try:
            SCHEMA[sec][name](v)
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"sweep axis {axis}: {e}") from None
    return vals


def parse_override(text: str) -> tuple[str, str, str]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    key, value = text.split("=", 1)
    if "." not in key:
        raise ConfigError(f"override key {key!r} must be section.key")
    section, name = key.strip().split(".", 1)
    return section, name, value.strip()


def _read_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise ConfigError(f"{path}: expected an object of sections")
        return raw
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def resolve(raw: dict | None = None, overrides=()) -> dict:
    """Merge ``raw`` and overrides onto the defaults and type-check every value."""
    out = {s: dict(v) for s, v in DEFAULTS.items()}
    out["sweep"]["grid"] = {}
    items = [(s, k, v) for s, sec in (raw or {}).items() for k, v in sec.items()]
    items += [parse_override(o) if isinstance(o, str) else tuple(o) for o in overrides]
    for section, key, value in items:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if section == "sweep" and key == "grid":
            for axis, vals in dict(value).items():
                out["sweep"]["grid"][axis] = _sweep_values(axis, vals)
            continue
        if section == "sweep" and "." in key:
            out["sweep"]["grid"][key] = _sweep_values(key, value)
            continue
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {section}.{key}")
        try:
            out[section][key] = SCHEMA[section][key](value)
        except (ValueError, ZeroDivisionError, TypeError) as e:
            raise ConfigError(f"{section}.{key}: {e}") from None
    if out["data"]["kind"] not in DATA_KINDS:
        raise ConfigError(f"data.kind must be one of {DATA_KINDS}, got {out['data']['kind']!r}")
    return out


def load_config(path: str | Path | None = None, overrides=()) -> dict:
    raw = None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        raw = _read_file(path)
    return resolve(raw, overrides)


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    lattice: FrequencyLattice
    stepper: StepperConfig
    data_kind: str
    data: Any
    resolved: dict

    @classmethod
    def from_dict(cls, cfg: dict) -> "RunConfig":
        try:
            m = cfg["model"]
            model = ModelSpec(m["kind"], m["dim"], m["alpha"])
            la = cfg["lattice"]
            lattice = make_lattice(model.dim, la["N"], la["h"], la["padded"])
            stepper = StepperConfig(**cfg["stepper"])
            d = cfg["data"]
            kind = d["kind"]
            if kind == "ms_bump":
                data = BumpSpec(model.dim, tuple(d["center"]), d["radius"], d["amplitude"], d["component"])
            elif kind == "cg_data":
                data = CGSpec(d["eps"], d["alpha"], ProfileSpec(tuple(d["profile_center"]), d["profile_radius"], d["profile_amplitude"]))
            elif kind == "vorticity_bump":
                data = {"amplitude": d["amplitude"], "center": tuple(d["center"]), "radius": d["radius"]}
            else:
                if not d["path"]:
                    raise ValueError("data.path is required for checkpoint data")
                data = Path(d["path"])
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(str(e)) from None
        return cls(model, lattice, stepper, kind, data, cfg)
