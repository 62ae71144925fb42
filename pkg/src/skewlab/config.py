"""Experiment configuration: flat key=value files plus equivalent flags.

One registry defines every key once: its type, default, and validation.
Files and command-line flags feed the same registry; flags win over file
values (with a recorded warning).  ``seed`` is mandatory everywhere — no
wall-clock fallback — so identical configs reproduce identical outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any

from .dynamics import GOLDEN_MEAN
from .errors import ConfigError

COMMANDS = ("lyapunov", "positivity", "ldt", "weyl", "green", "localize",
            "spectrum", "parametrize", "continuity")
FORMATS = ("csv", "json", "plot")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_intlist(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in str(text).split(",") if part.strip())


# key -> (python type tag, default, validator or None, help)
# ``lambda`` is spelled out in files/flags but stored as ``lam``.
_REGISTRY: dict[str, tuple[str, Any, Any, str]] = {
    "command": ("str", None, lambda v: v in COMMANDS, f"one of {COMMANDS}"),
    "potential_file": ("str", "cosine", None,
                       "named potential (cosine, zero, constant[:c]) or a file path"),
    "lambda": ("float", 1.0, lambda v: v > 0, "coupling constant, > 0"),
    "omega": ("float", GOLDEN_MEAN, lambda v: math.isfinite(v), "frequency"),
    "energy": ("float", 0.0, lambda v: math.isfinite(v), "energy E"),
    "energy2": ("float", None, lambda v: math.isfinite(v),
                "second energy E' (continuity command)"),
    "energy_min": ("float", None, lambda v: math.isfinite(v),
                   "lower end of the positivity energy grid"),
    "energy_max": ("float", None, lambda v: math.isfinite(v),
                   "upper end of the positivity energy grid"),
    "energy_grid": ("int", 64, lambda v: v >= 2, "number of energy grid points"),
    "d": ("int", 2, lambda v: v >= 1, "torus dimension"),
    "n": ("int", 100, lambda v: v >= 1, "cocycle length"),
    "n_list": ("intlist", (100, 200, 400),
               lambda v: len(v) >= 1 and all(x >= 1 for x in v),
               "comma-separated cocycle lengths"),
    "N": ("int", 128, lambda v: v >= 8, "volume size"),
    "samples": ("int", 100, lambda v: v >= 1, "number of phase samples"),
    "grid": ("int", 1024, lambda v: v >= 16, "x-grid size"),
    "y_samples": ("int", 8, lambda v: v >= 1, "number of y samples"),
    "y": ("float", 0.0, lambda v: math.isfinite(v), "fixed second coordinate"),
    "x": ("float", 0.0, lambda v: math.isfinite(v), "fixed first coordinate"),
    "seed": ("int", None, lambda v: v >= 0, "RNG seed (required)"),
    "output_path": ("str", None, None, "output file path"),
    "format": ("str", "csv", lambda v: v in FORMATS, f"one of {FORMATS}"),
    "workers": ("int", 1, lambda v: v >= 1, "worker threads inside module calls"),
    "threshold_factor": ("float", 1.0 / 40.0, lambda v: v > 0,
                         "deviation threshold as a fraction of L_n"),
    "delta": ("float", 1.0, lambda v: v > 0, "derivative floor / extension tolerance"),
    "epsilon": ("float", 0.2, lambda v: v > 0, "isolation radius (units of v)"),
    "epsilon2": ("float", 0.1, lambda v: v > 0, "isolation radius at the larger window"),
    "l_cap": ("float", 0.13, lambda v: v > 0, "slope budget for zeta"),
    "m": ("int", 0, lambda v: v >= 0, "window half-width"),
    "m2": ("int", None, lambda v: v >= 0, "second window half-width (extension)"),
    "probe_count": ("int", 200, lambda v: v >= 10, "coverage probes"),
    "tol": ("float", None, lambda v: v > 0, "coverage tolerance (default 0.01*lambda)"),
    "n0": ("int", 50, lambda v: v >= 1, "ladder base scale"),
    "levels": ("int", 4, lambda v: v >= 1, "ladder levels"),
    "instances": ("int", 100, lambda v: v >= 1, "random instances for the weyl suite"),
    "order": ("int", 1, lambda v: v >= 1, "differencing order"),
    "strict": ("bool", False, None, "positivity strict mode"),
}

_ATTR_FOR_KEY = {key: ("lam" if key == "lambda" else key) for key in _REGISTRY}
_KEY_FOR_ATTR = {attr: key for key, attr in _ATTR_FOR_KEY.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    potential_file: str
    lam: float
    omega: float
    energy: float
    energy2: float | None
    energy_min: float | None
    energy_max: float | None
    energy_grid: int
    d: int
    n: int
    n_list: tuple[int, ...]
    N: int
    samples: int
    grid: int
    y_samples: int
    y: float
    x: float
    seed: int
    output_path: str | None
    format: str
    workers: int
    threshold_factor: float
    delta: float
    epsilon: float
    epsilon2: float
    l_cap: float
    m: int
    m2: int | None
    probe_count: int
    tol: float | None
    n0: int
    levels: int
    instances: int
    order: int
    strict: bool

    def echo(self) -> dict[str, Any]:
        """Config as a flat key -> value dict (file spelling), for embedding
        in every output file.

        ``workers`` and ``output_path`` are execution details with no
        effect on the numbers, so they are left out: the same experiment
        must produce byte-identical files at any worker count or location.
        """
        out = {}
        for f in fields(self):
            if f.name in ("workers", "output_path"):
                continue
            val = getattr(self, f.name)
            if val is None:
                continue
            key = _KEY_FOR_ATTR[f.name]
            if isinstance(val, tuple):
                val = ",".join(str(v) for v in val)
            out[key] = val
        return out


def _coerce(key: str, value: Any) -> Any:
    kind = _REGISTRY[key][0]
    try:
        if kind == "int":
            if isinstance(value, bool):
                raise ValueError("boolean is not an integer")
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "str":
            return str(value)
        if kind == "bool":
            return value if isinstance(value, bool) else _parse_bool(str(value))
        if kind == "intlist":
            if isinstance(value, (tuple, list)):
                return tuple(int(v) for v in value)
            return _parse_intlist(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    raise ConfigError(f"unhandled kind {kind!r} for key {key!r}")


def _unknown_key_error(key: str) -> ConfigError:
    valid = ", ".join(sorted(_REGISTRY))
    return ConfigError(f"unknown config key {key!r}; valid keys: {valid}")


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; blank lines skipped."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, "
                                  f"got {raw.strip()!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _REGISTRY:
                raise _unknown_key_error(key)
            values[key] = val.strip()
    return values


def parse_config(path: str | None = None,
                 flags: dict[str, Any] | None = None
                 ) -> tuple[ExperimentConfig, list[str]]:
    """Merge a config file and flag overrides into a validated config.

    Flag keys use the file spelling (``lambda``, ``n_list``, ...).  A flag
    that overrides a file value produces a warning string; unknown keys
    and a missing seed are errors.
    """
    merged: dict[str, Any] = {}
    warnings: list[str] = []
    if path is not None:
        for key, text in read_config_file(path).items():
            merged[key] = _coerce(key, text)
    if flags:
        for key, value in flags.items():
            if value is None:
                continue
            if key not in _REGISTRY:
                raise _unknown_key_error(key)
            coerced = _coerce(key, value)
            if key in merged and merged[key] != coerced:
                warnings.append(
                    f"flag --{key.replace('_', '-')} = {coerced!r} overrides "
                    f"file value {merged[key]!r}")
            merged[key] = coerced
    if "command" not in merged or merged["command"] is None:
        raise ConfigError("missing required key: command")
    if "seed" not in merged or merged["seed"] is None:
        raise ConfigError("missing required key: seed (no wall-clock default)")
    final: dict[str, Any] = {}
    for key, (kind, default, validator, help_text) in _REGISTRY.items():
        value = merged.get(key, default)
        if value is not None and validator is not None and not validator(value):
            raise ConfigError(f"invalid value for {key!r}: {value!r} "
                              f"(expected: {help_text})")
        final[_ATTR_FOR_KEY[key]] = value
    return ExperimentConfig(**final), warnings
