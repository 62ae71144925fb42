"""Command-line front end: parse config, dispatch, emit, report.

Exit codes: 0 success, 2 when the run completed but a checked property
failed (a bound violated, coverage missed, an extension flag false), 1 for
configuration or runtime errors.  All randomness flows through the seeded
counter-based streams, so a config reproduces its outputs byte-for-byte
regardless of worker count.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__, streams
from .config import _REGISTRY, COMMANDS, ExperimentConfig, parse_config
from .cocycle import lyapunov_curve, positivity_scan
from .deviation import deviation_measure, minsum_bound, weyl_difference_bound
from .dynamics import SkewShiftDriver, SkewShiftFamily, SkewShiftParams, named_potential
from .errors import SkewlabError
from .lattice import build_operator, decay_fit, eigen_all, green_decay_scan
from .regularity import scale_ladder, trotter_check
from .reporting import RunReport, write_csv, write_json, write_plot
from .spectrum import (admissible_energies, extension_check,
                       interval_coverage, parametrize, spectrum_union)


@dataclass
class CommandResult:
    header: list[str]
    rows: list[tuple]
    payload: dict[str, Any]
    series: dict[str, tuple] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    property_ok: bool = True


def _family(cfg: ExperimentConfig) -> SkewShiftFamily:
    return SkewShiftFamily(d=cfg.d, omega=cfg.omega)


def _initial_point(cfg: ExperimentConfig) -> tuple[float, ...]:
    coords = (cfg.x, cfg.y) + (0.0,) * max(0, cfg.d - 2)
    return coords[:cfg.d]


def _run_lyapunov(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    curve = lyapunov_curve(_family(cfg), p, cfg.lam, cfg.energy,
                           list(cfg.n_list), cfg.samples, cfg.seed,
                           workers=cfg.workers)
    rows = [(e.n, e.L_n, e.stderr, e.samples) for e in curve.entries]
    payload = {"entries": [{"n": e.n, "L_n": e.L_n, "stderr": e.stderr}
                           for e in curve.entries]}
    series = {"L_n": ([e.n for e in curve.entries],
                      [e.L_n for e in curve.entries])}
    return CommandResult(header=["n", "L_n", "stderr", "samples"], rows=rows,
                         payload=payload, series=series,
                         summary={"L_n_final": curve.entries[-1].L_n})


def _run_positivity(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    if cfg.energy_min is not None and cfg.energy_max is not None:
        union = None
        emin, emax = cfg.energy_min, cfg.energy_max
    else:
        union = spectrum_union(p, cfg.lam, cfg.omega, cfg.d, cfg.N,
                               x_samples=min(cfg.samples, 16), seed=cfg.seed,
                               workers=cfg.workers)
        emin, emax = float(union[0]), float(union[-1])
    energies = np.linspace(emin, emax, cfg.energy_grid)
    scan = positivity_scan(p, cfg.lam, energies, cfg.n, cfg.samples, cfg.seed,
                           family=_family(cfg), spectrum_ref=union,
                           strict=cfg.strict, workers=cfg.workers)
    rows = [(r.energy, r.L_n, r.stderr, r.ratio, r.near_spectrum)
            for r in scan.table]
    payload = {"min_ratio": scan.min_ratio,
               "argmin_energy": scan.argmin_energy,
               "rows": [{"energy": r.energy, "L_n": r.L_n, "ratio": r.ratio}
                        for r in scan.table]}
    series = {"ratio": ([r.energy for r in scan.table],
                        [r.ratio for r in scan.table])}
    return CommandResult(header=["energy", "L_n", "stderr", "ratio",
                                 "near_spectrum"],
                         rows=rows, payload=payload, series=series,
                         summary={"min_ratio": scan.min_ratio})


def _run_ldt(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    rows = []
    entries = []
    for n in cfg.n_list:
        dm = deviation_measure(p, cfg.lam, cfg.energy, cfg.omega, n,
                               x_grid=cfg.grid, y_samples=cfg.y_samples,
                               threshold_factor=cfg.threshold_factor,
                               seed=cfg.seed, d=cfg.d, workers=cfg.workers)
        rows.append((dm.n, dm.threshold, dm.fraction, dm.x_grid, dm.seed))
        entries.append({"n": dm.n, "threshold": dm.threshold,
                        "fraction": dm.fraction, "L_n_ref": dm.L_n_ref})
    series = {"fraction": ([r[0] for r in rows], [r[2] for r in rows])}
    return CommandResult(header=["n", "threshold", "fraction", "grid", "seed"],
                         rows=rows, payload={"entries": entries},
                         series=series,
                         summary={"fraction_final": rows[-1][2]})


def _run_weyl(cfg: ExperimentConfig) -> CommandResult:
    rows = []
    weyl_fails = 0
    minsum_fails = 0
    for i in range(cfg.instances):
        g = streams.stream(cfg.seed, streams.DOMAIN_WEYL, i)
        k = int(g.integers(1, 33))
        y = float(g.random())
        om = float(g.random())
        nn = int(g.integers(8, 65))
        wrec = weyl_difference_bound(k, y, om, nn, cfg.order)
        om2 = float(g.random())
        pp = int(g.integers(2, 1001))
        qq = int(g.integers(1, 1001))
        beta = float(g.random())
        mrec = minsum_bound(om2, pp, qq, beta)
        weyl_fails += not wrec.holds
        minsum_fails += not mrec.holds
        rows.append((i, wrec.lhs, wrec.rhs, wrec.holds,
                     mrec.lhs, mrec.rhs, mrec.holds))
    ok = weyl_fails == 0 and minsum_fails == 0
    payload = {"instances": cfg.instances, "order": cfg.order,
               "weyl_failures": weyl_fails, "minsum_failures": minsum_fails,
               "all_hold": ok}
    return CommandResult(
        header=["instance", "weyl_lhs", "weyl_rhs", "weyl_holds",
                "minsum_lhs", "minsum_rhs", "minsum_holds"],
        rows=rows, payload=payload, property_ok=ok,
        summary={"weyl_failures": weyl_fails, "minsum_failures": minsum_fails})


def _run_green(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    scan = green_decay_scan(p, cfg.lam, cfg.energy, cfg.N,
                            x_samples=cfg.samples, seed=cfg.seed,
                            family=_family(cfg), workers=cfg.workers)
    rows = [(scan.N, scan.energy, scan.threshold, scan.violation_fraction,
             scan.violations, scan.skipped, scan.samples)]
    payload = {"N": scan.N, "energy": scan.energy,
               "threshold": scan.threshold,
               "violation_fraction": scan.violation_fraction,
               "violations": scan.violations, "skipped": scan.skipped}
    return CommandResult(
        header=["N", "energy", "threshold", "violation_fraction",
                "violations", "skipped", "samples"],
        rows=rows, payload=payload,
        summary={"violation_fraction": scan.violation_fraction})


def _run_localize(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    driver = SkewShiftDriver(SkewShiftParams(cfg.d, cfg.omega,
                                             _initial_point(cfg)))
    op = build_operator(driver, p, cfg.lam, (1, cfg.N))
    pairs = eigen_all(op)
    order = sorted(range(len(pairs)),
                   key=lambda i: abs(pairs[i].value - cfg.energy))
    count = min(10, len(pairs))
    rows = []
    entries = []
    for idx in sorted(order[:count]):
        q = pairs[idx]
        fit = decay_fit(q)
        rows.append((idx, q.value, q.residual, fit.rate, fit.r2))
        entries.append({"index": idx, "value": q.value,
                        "residual": q.residual, "rate": fit.rate,
                        "r2": fit.r2})
    min_rate = min(r[3] for r in rows)
    min_r2 = min(r[4] for r in rows)
    return CommandResult(
        header=["index", "value", "residual", "decay_rate", "r2"],
        rows=rows, payload={"entries": entries},
        series={"decay_rate": ([r[0] for r in rows], [r[3] for r in rows])},
        summary={"min_rate": min_rate, "min_r2": min_r2})


def _run_spectrum(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    adm = admissible_energies(p, cfg.delta)
    union = spectrum_union(p, cfg.lam, cfg.omega, cfg.d, cfg.N,
                           x_samples=cfg.samples, seed=cfg.seed,
                           workers=cfg.workers)
    tol = cfg.tol if cfg.tol is not None else 0.01 * cfg.lam
    cov = interval_coverage(adm, cfg.lam, union, cfg.probe_count, tol)
    rows = list(zip(cov.probes, cov.dists))
    payload = {"max_gap": cov.max_gap, "worst_E": cov.worst_E,
               "covered": cov.covered, "tol": cov.tol,
               "intervals": [list(iv) for iv in adm.intervals],
               "spectrum_size": len(union)}
    return CommandResult(header=["E", "dist"], rows=rows, payload=payload,
                         series={"dist": (list(cov.probes), list(cov.dists))},
                         summary={"max_gap": cov.max_gap,
                                  "covered": cov.covered},
                         property_ok=cov.covered)


def _run_parametrize(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    rec1 = parametrize(p, cfg.lam, cfg.omega, cfg.energy, cfg.m, cfg.grid,
                       cfg.epsilon, cfg.l_cap, workers=cfg.workers)
    records = [{"x": float(x), "zeta": float(z), "isolation_gap": float(g)}
               for x, z, g in zip(rec1.x_samples, rec1.zeta_values, rec1.gaps)]
    payload: dict[str, Any] = {
        "M": rec1.M, "E0": rec1.E0, "epsilon": rec1.epsilon,
        "measure_est": rec1.measure_est, "slope_sup": rec1.slope_sup,
        "valid": rec1.valid, "diagnostics": rec1.diagnostics,
        "records": records}
    ok = rec1.valid
    summary = {"measure_est": rec1.measure_est, "valid": rec1.valid}
    rows = [(r["x"], r["zeta"], r["isolation_gap"]) for r in records]
    if cfg.m2 is not None:
        rec2 = parametrize(p, cfg.lam, cfg.omega, cfg.energy, cfg.m2,
                           cfg.grid, cfg.epsilon2, cfg.l_cap,
                           workers=cfg.workers)
        ext = extension_check(rec1, rec2, cfg.delta)
        payload["extension"] = {
            "delta": ext.delta, "subset_ok": ext.subset_ok,
            "epsilon_ok": ext.epsilon_ok, "scale_ok": ext.scale_ok,
            "slope_ok": ext.slope_ok, "zeta_close_ok": ext.zeta_close_ok,
            "eigenfunction_ok": ext.eigenfunction_ok,
            "weighted_distance": ext.weighted_distance,
            "passed": ext.passed}
        payload["records_M2"] = [
            {"x": float(x), "zeta": float(z), "isolation_gap": float(g)}
            for x, z, g in zip(rec2.x_samples, rec2.zeta_values, rec2.gaps)]
        rows = [(r["x"], r["zeta"], r["isolation_gap"])
                for r in payload["records_M2"]]
        ok = ok and rec2.valid and ext.passed
        summary["extension_passed"] = ext.passed
        summary["weighted_distance"] = ext.weighted_distance
    return CommandResult(header=["x", "zeta", "isolation_gap"], rows=rows,
                         payload=payload,
                         series={"zeta": ([r[0] for r in rows],
                                          [r[1] for r in rows])},
                         summary=summary, property_ok=ok)


def _run_continuity(cfg: ExperimentConfig) -> CommandResult:
    p = named_potential(cfg.potential_file)
    ladder = scale_ladder(p, cfg.lam, cfg.energy, cfg.omega, cfg.n0,
                          cfg.levels, cfg.samples, cfg.seed,
                          workers=cfg.workers)
    rows = []
    for j, n in enumerate(ladder.n_list):
        sd = ladder.second_diffs[j] if j < len(ladder.second_diffs) else float("nan")
        rows.append((j, n, ladder.L_values[j], ladder.stderrs[j], sd))
    payload: dict[str, Any] = {
        "n_list": list(ladder.n_list), "L_values": list(ladder.L_values),
        "stderrs": list(ladder.stderrs),
        "second_diffs": list(ladder.second_diffs),
        "second_diff_stderrs": list(ladder.second_diff_stderrs),
        "truncated": ladder.truncated}
    ok = True
    summary: dict[str, Any] = {"levels": len(ladder.n_list),
                               "truncated": ladder.truncated}
    if cfg.energy2 is not None:
        trec = trotter_check(p, cfg.lam, cfg.energy, cfg.energy2, cfg.n,
                             cfg.samples, cfg.seed, omega=cfg.omega,
                             workers=cfg.workers)
        payload["trotter"] = {"lhs": trec.lhs, "rhs": trec.rhs,
                              "log_rhs": trec.log_rhs, "holds": trec.holds}
        ok = trec.holds
        summary["trotter_holds"] = trec.holds
    return CommandResult(
        header=["j", "n_j", "L", "stderr", "second_diff"], rows=rows,
        payload=payload,
        series={"L": (list(ladder.n_list), list(ladder.L_values))},
        summary=summary, property_ok=ok)


_HANDLERS = {
    "lyapunov": _run_lyapunov,
    "positivity": _run_positivity,
    "ldt": _run_ldt,
    "weyl": _run_weyl,
    "green": _run_green,
    "localize": _run_localize,
    "spectrum": _run_spectrum,
    "parametrize": _run_parametrize,
    "continuity": _run_continuity,
}


def _output_path(cfg: ExperimentConfig) -> str:
    if cfg.output_path is not None:
        path = cfg.output_path
    else:
        ext = {"csv": "csv", "json": "json", "plot": "plot.csv"}[cfg.format]
        path = f"{cfg.command}.{ext}"
    outdir = os.environ.get("SKEWLAB_OUTDIR")
    if outdir and not os.path.isabs(path):
        path = os.path.join(outdir, path)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewlab",
        description=("Numerical laboratory for skew-shift Schroedinger "
                     "operators: Lyapunov exponents, large deviations, Green "
                     "functions, localization, and spectrum coverage."))
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="experiment to run (may also come from --config)")
    parser.add_argument("--config", help="flat key=value config file")
    for key, (kind, _default, _validator, help_text) in _REGISTRY.items():
        if key == "command":
            continue
        option = "--" + key.replace("_", "-")
        dest = f"opt_{key}"
        if kind == "bool":
            parser.add_argument(option, dest=dest, action="store_const",
                                const=True, default=None, help=help_text)
        else:
            parser.add_argument(option, dest=dest, default=None,
                                metavar=kind.upper(), help=help_text)
    return parser


def run(cfg: ExperimentConfig, warnings: list[str]) -> tuple[RunReport, int]:
    t0 = time.perf_counter()
    result = _HANDLERS[cfg.command](cfg)
    path = _output_path(cfg)
    echo = cfg.echo()
    if cfg.format == "csv":
        write_csv(path, result.header, result.rows, echo)
    elif cfg.format == "json":
        write_json(path, result.payload, echo)
    else:
        write_plot(path, result.series, echo)
    report = RunReport(command=cfg.command, version=__version__,
                       config_echo=echo, outputs=result.summary,
                       warnings=list(warnings), output_files=[path],
                       wall_time=time.perf_counter() - t0,
                       property_ok=result.property_ok)
    return report, (0 if result.property_ok else 2)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {}
    for key in _REGISTRY:
        if key == "command":
            continue
        value = getattr(args, f"opt_{key}")
        if value is not None:
            flags[key] = value
    if args.command is not None:
        flags["command"] = args.command
    try:
        cfg, warnings = parse_config(args.config, flags)
        report, code = run(cfg, warnings)
    except SkewlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in report.summary_lines():
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
