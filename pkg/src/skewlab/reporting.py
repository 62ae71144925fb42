"""Output emission: CSV, JSON, and plot-data files plus the run report.

Numeric CSV cells use 17 significant digits (%.17g), enough to round-trip
float64 exactly, locale-free.  Every file opens with a commented config
echo so any artifact can be traced to the run that made it.  Wall-clock
time lives only in the stdout report, never in files, keeping outputs
byte-reproducible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


def format_number(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(value)


def _echo_lines(config_echo: dict[str, Any]) -> list[str]:
    return [f"# {key} = {config_echo[key]}" for key in sorted(config_echo)]


def write_csv(path: str, header: Sequence[str],
              rows: Sequence[Sequence[Any]],
              config_echo: dict[str, Any]) -> None:
    """Commented config echo, one header row, then data rows."""
    lines = _echo_lines(config_echo)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_number(cell) for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_plot(path: str, series: dict[str, tuple[Sequence[Any], Sequence[Any]]],
               config_echo: dict[str, Any]) -> None:
    """Plot-data variant: per series, a comment marker then (x, y) pairs."""
    lines = _echo_lines(config_echo)
    for name in series:
        xs, ys = series[name]
        lines.append(f"# series: {name}")
        lines.append("x,y")
        for xv, yv in zip(xs, ys):
            lines.append(f"{format_number(xv)},{format_number(yv)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays for JSON emission."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        return v
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def write_json(path: str, payload: dict[str, Any],
               config_echo: dict[str, Any]) -> None:
    """JSON with stable (sorted) key order; config embedded under 'config'."""
    doc = {"config": jsonable(config_echo), **jsonable(payload)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class RunReport:
    """Summary of one CLI run.  ``wall_time`` is reported to stdout only."""

    command: str
    version: str
    config_echo: dict[str, Any]
    outputs: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    output_files: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    property_ok: bool = True

    def summary_lines(self) -> list[str]:
        lines = [f"command: {self.command} (skewlab {self.version})"]
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for key in sorted(self.outputs):
            lines.append(f"{key}: {format_number(self.outputs[key])}")
        for f in self.output_files:
            lines.append(f"wrote: {f}")
        lines.append(f"wall_time_s: {self.wall_time:.3f}")
        if not self.property_ok:
            lines.append("property check FAILED")
        return lines
