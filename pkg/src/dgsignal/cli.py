"""Command-line front end: ``dgsignal {run,oracle,sweep,validate}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, oracle
from .evolution import SolverError
from .hydro import CoefficientClass, DGCoefficients, classify, density
from .signaling import EXPECTED_PARTITION, SignalReport, sweep, twin_run
from .states import build_state
from .validate import run_validation

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_PARTITION = 0, 1, 2, 3

log = logging.getLogger("dgsignal")


def _err(msg: str) -> None:
    print(f"dgsignal: {msg}", file=sys.stderr)


def _header(cfg: dict) -> dict:
    return {"version": __version__, "config": config.public(cfg)}


def _header_lines(cfg: dict) -> list[str]:
    return [f"dgsignal {__version__}", "config: " + json.dumps(config.public(cfg), sort_keys=True)]


def _write_json(path: Path, obj) -> None:
    # json writes floats with repr, the shortest string that round-trips (at most 17 digits)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_rows(path: Path, header_lines, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _output_dir(cfg: dict, override: str | None) -> Path:
    out = Path(override if override else cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plots(report: SignalReport, out: Path, cfg: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "dgsignal"
    meta = {"Date": None, "Creator": f"dgsignal {__version__}",
            "Description": json.dumps(config.public(cfg), sort_keys=True)}

    t, d = report.delta_moment.times, report.delta_moment.values
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, d, ".", ms=3, label="delta <x1>")
    fit = report.fit
    tt = np.linspace(0.0, fit.window, 200)
    ax.plot(tt, np.polyval(fit.coefficients[::-1], tt), "-", label=f"Taylor fit (window {fit.window:g})")
    ax.set_xlabel("t")
    ax.set_ylabel("<x1>_V - <x1>_0")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "delta_moment.svg", metadata=meta)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    x = report.x1
    image = ax.imshow(report.marginal_difference, aspect="auto", origin="lower", cmap="RdBu_r",
                      extent=(x[0], x[-1], t[0], t[-1]))
    fig.colorbar(image, ax=ax, label="rho1_V - rho1_0")
    ax.set_xlabel("x1")
    ax.set_ylabel("t")
    fig.tight_layout()
    fig.savefig(out / "marginal_difference.svg", metadata=meta)
    plt.close(fig)


def cmd_run(args) -> int:
    try:
        cfg = config.load(args.config)
        scenario = config.build_scenario(cfg)
    except config.ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        report = twin_run(scenario, workers=args.threads)
    except SolverError as exc:
        _err(f"solver aborted: {exc}")
        return EXIT_SOLVER
    except oracle.OracleError as exc:
        _err(f"oracle failed: {exc}")
        return EXIT_SOLVER

    out = _output_dir(cfg, args.output_dir)
    formats = cfg["output"]["formats"]
    if "json" in formats:
        _write_json(out / "report.json", {**_header(cfg), "report": report.to_dict()})
    if "csv" in formats:
        report.delta_moment.to_csv(out / "delta_moment.csv", _header_lines(cfg))
        rows = zip(report.x1, report.marginal_baseline, report.marginal_potential,
                   report.marginal_potential - report.marginal_baseline)
        _write_rows(out / "marginals.csv", _header_lines(cfg) + [f"t = {report.delta_moment.times[-1]!r}"],
                    ["x1", "rho1_baseline", "rho1_potential", "difference"], (map(float, r) for r in rows))
    if "svg" in formats:
        _plots(report, out, cfg)
    print(json.dumps(report.summary(), sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        cfg = config.load(args.config)
        scenario = config.build_scenario(cfg)
    except config.ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    grid, coeffs = scenario.grid, scenario.coeffs
    psi0, norm_factor = build_state(grid, scenario.state)
    V = scenario.potential.field(grid)
    order = cfg["oracle"]["order"]
    cls = classify(coeffs)
    try:
        if order == "auto":
            pred = oracle.predict(grid, psi0, V, coeffs)
        elif order == 3:
            pred = oracle.ess3_moment(grid, psi0, V, coeffs)
        else:
            pred = oracle.ess4_werner(grid, psi0, V, coeffs)
        case1 = oracle.ess4_case1(grid, psi0, V)
        case2 = oracle.ess4_case2(grid, density(psi0), V)
    except oracle.OutOfScopeError as exc:
        _err(f"coefficients are {cls.value}: {exc}")
        return EXIT_CONFIG
    except oracle.OracleError as exc:
        _err(str(exc))
        return EXIT_SOLVER
    if pred is not None:
        pred.normalization_factor = norm_factor
    body = {
        "class": cls.value,
        "prediction": None if pred is None else pred.to_dict(),
        "ess4_case1": case1,
        "ess4_case2": case2,
        "normalization_factor": norm_factor,
    }
    out = _output_dir(cfg, args.output_dir)
    _write_json(out / "oracle.json", {**_header(cfg), "oracle": body})
    print(json.dumps({"class": cls.value, "order": None if pred is None else pred.order,
                      "value": None if pred is None else pred.value}, sort_keys=True))
    return EXIT_OK


def parse_points(path: str | None, inline: list[str]) -> list[DGCoefficients]:
    """Coefficient points: one ``c1,c2,c3,c4,c5`` line per point (blank lines and # comments skipped)."""
    lines = list(inline or [])
    if path:
        lines += Path(path).read_text().splitlines()
    points = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        values = [float(v) for v in line.replace(",", " ").split()]
        if len(values) != 5:
            raise ValueError(f"expected 5 coefficients, got {line!r}")
        points.append(DGCoefficients.from_sequence(values))
    return points


def cmd_sweep(args) -> int:
    try:
        cfg = config.load(args.config)
        base = config.build_scenario(cfg)
        points = parse_points(args.points, args.point)
    except (config.ConfigError, ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if not points:
        _err("empty coefficient grid: give --point or --points")
        return EXIT_CONFIG
    rows = sweep(base, points, workers=args.threads)

    out = _output_dir(cfg, args.output_dir)
    table = []
    for row in rows:
        r = row.report
        table.append([*row.coeffs.as_tuple(), row.classification.value, EXPECTED_PARTITION[row.classification],
                      "none" if row.detected_order is None else row.detected_order,
                      None if r is None else r.fitted_coefficient, None if r is None else r.uncertainty,
                      None if r is None else r.oracle_prediction,
                      None if r is None else r.agreement_ratio, row.consistent, row.error or ""])
    _write_rows(out / "sweep.csv", _header_lines(cfg),
                ["c1", "c2", "c3", "c4", "c5", "class", "expected_order", "detected_order", "fitted",
                 "uncertainty", "oracle", "agreement_ratio", "consistent", "error"], table)

    partition = []
    for cls in CoefficientClass:
        members = [r for r in rows if r.classification == cls]
        if members:
            orders = sorted({"none" if r.detected_order is None else str(r.detected_order) for r in members})
            partition.append([cls.value, EXPECTED_PARTITION[cls], " ".join(orders), len(members),
                              all(r.consistent for r in members)])
    _write_rows(out / "partition.csv", _header_lines(cfg),
                ["class", "expected_order", "observed_orders", "points", "holds"], partition)

    print(f"{'class':<28}{'expected':>10}{'observed':>12}{'points':>8}  holds")
    for cls, exp, obs, count, holds in partition:
        print(f"{cls:<28}{exp:>10}{obs:>12}{count:>8}  {holds}")
    failed = [r for r in rows if r.error]
    for r in failed:
        _err(f"point {r.coeffs.as_tuple()} failed: {r.error}")
    if any(not r.consistent for r in rows if not r.error):
        _err("detected orders contradict the expected class partition")
        return EXIT_PARTITION
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    checks = run_validation(n=args.n, dt=args.dt, seed=0 if args.seed is None else args.seed)
    print(f"{'check':<40}{'value':>14}{'limit':>12}  result")
    for c in checks:
        print(f"{c.name:<40}{c.value:>14.3e}{c.threshold:>12.1e}  {'PASS' if c.passed else 'FAIL'}"
              + (f"  ({c.detail})" if c.detail else ""))
    ok = all(c.passed for c in checks)
    print(f"{'all passed' if ok else 'FAILED'} in {time.perf_counter() - t0:.1f} s")
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: number of cores)")
    common.add_argument("--output-dir", default=None, help="overrides [output] directory")
    common.add_argument("--seed", type=int, default=None, help="seed for the random pairs of validate; the dynamics are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dgsignal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dgsignal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="twin run: baseline vs potential")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", parents=[common], help="t = 0 predictions only, no time stepping")
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", parents=[common], help="twin runs over a list of coefficient points")
    p.add_argument("config")
    p.add_argument("--points", help="file with one 'c1,c2,c3,c4,c5' line per point")
    p.add_argument("--point", action="append", default=[], help="a single 'c1,c2,c3,c4,c5' point (repeatable)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="fast invariant suite")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--n", type=int, default=128)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.threads = max(1, args.threads)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
