"""
Command-line entry point.

Subcommands ``kdv``, ``corrections``, ``sweep`` and ``regime`` each take
``--config PATH`` (INI, see :mod:`ionkdv.config`; defaults when omitted) and
``--out DIR`` (overrides ``[output] dir``).

Exit status: 0 on success, 1 on solver failure, 2 on configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .harness import Pipeline, ReportError, emit_report, initial_profile, run_sweep
from .hierarchy import hierarchy_residuals
from .kdv import StepFailure, kdv_invariants, kdv_solve, soliton_exact
from .profile import InadmissibleProfile
from .scaling import FINITE_TIME, GLOBAL, ScalingParams, check_regime
from .spectral import TruncationWarning, make_grid

log = logging.getLogger("ionkdv")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def cmd_kdv(config: RunConfig, out: Path) -> None:
    g = make_grid(config.length, config.n)
    traj = kdv_solve(g, initial_profile(config, g), config.T, config.dt)
    np.savez(out / "kdv.npz", x=g.x, times=traj.times, phi0=traj.phi0)
    inv = [kdv_invariants(g, p) for p in traj.phi0]
    _write_csv(out / "invariants.csv", ("time", "mass", "momentum", "hamiltonian"),
               [[repr(float(t)), *(repr(v) for v in i)] for t, i in zip(traj.times, inv)])
    summary = {"config_digest": config.digest(), "final_time": float(traj.times[-1])}
    for j, name in enumerate(("mass", "momentum", "hamiltonian")):
        ref = inv[0][j]
        drift = max(abs(i[j] - ref) for i in inv)
        summary[f"{name}_drift_rel"] = drift / abs(ref) if ref else drift
    if config.profile == "soliton":
        exact = soliton_exact(g, config.k, config.T)
        summary["soliton_rel_l2_error"] = g.l2(traj.phi0[-1] - exact) / g.l2(exact)
    _write_json(out / "kdv_summary.json", summary)
    log.info("kdv: %s", summary)


def cmd_corrections(config: RunConfig, out: Path) -> None:
    pipe = Pipeline(config)
    traj = pipe.hierarchy
    np.savez(out / "corrections.npz", x=pipe.grid.x, **traj.arrays())
    res = hierarchy_residuals(traj)
    _write_csv(out / "residuals.csv", ("equation", "residual_l2"), [[k, repr(v)] for k, v in res.items()])
    _write_json(out / "corrections_summary.json",
                {"config_digest": config.digest(), "metadata": traj.metadata, "residuals": res})
    log.info("corrections: max residual %.3e", max(res.values()))


def cmd_sweep(config: RunConfig, out: Path) -> None:
    report = run_sweep(config)
    files = emit_report(report, out)
    log.info("sweep: %d cases, wrote %s", len(report.records), ", ".join(sorted(files)))


def cmd_regime(config: RunConfig, out: Path) -> None:
    rows = []
    for eps, nu, _ in config.cases():
        p = ScalingParams(eps, nu, config.c0, config.c1)
        ft, gl = check_regime(p, FINITE_TIME), check_regime(p, GLOBAL)
        rows.append([repr(eps), repr(nu), repr(p.beta), repr(p.delta), repr(p.epsdelta),
                     int(ft.in_band), repr(ft.lower_margin), repr(ft.upper_margin), ft.boundary or "",
                     int(gl.in_band), repr(gl.lower_margin), repr(gl.upper_margin), gl.boundary or ""])
    header = ("epsilon", "nu", "beta", "delta", "epsdelta",
              "finite_time", "ft_lower_margin", "ft_upper_margin", "ft_boundary",
              "global", "gl_lower_margin", "gl_upper_margin", "gl_boundary")
    _write_csv(out / "regime.csv", header, rows)
    for r in rows:
        print(f"eps={float(r[0]):<8g} beta={float(r[2]):<6.3g} delta={float(r[3]):<10.4g} "
              f"finite-time={'yes' if r[5] else 'no ':3} global={'yes' if r[9] else 'no'}")


COMMANDS = {"kdv": cmd_kdv, "corrections": cmd_corrections, "sweep": cmd_sweep, "regime": cmd_regime}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ionkdv", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "kdv": "solve the KdV profile and report invariants",
        "corrections": "solve the correction hierarchy and its residuals",
        "sweep": "full epsilon/nu convergence study",
        "regime": "weak-collision band report",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--out", type=Path, help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = RunConfig.from_file(args.config) if args.config else RunConfig()
        if args.out is not None:
            config = replace(config, out_dir=str(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default", TruncationWarning)
            COMMANDS[args.command](config, out)
    except (StepFailure, InadmissibleProfile) as exc:
        detail = getattr(exc, "diagnostics", {})
        print(f"solver failure: {exc} {json.dumps(detail, default=str) if detail else ''}", file=sys.stderr)
        return EXIT_SOLVER
    except (ReportError, OSError) as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
