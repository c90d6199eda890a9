"""
Sweep orchestration: one case is KdV -> corrections -> profile -> EP and NSP
fluid runs with well-prepared data, reduced to residual and error norms.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.stats import linregress

from . import __version__
from .config import RunConfig
from .fluid import FluidTrajectory, poisson_solve, run_fluid, FluidState
from .hierarchy import CorrectionTrajectory, solve_hierarchy
from .kdv import soliton_exact
from .profile import ProfileTrajectory, build_profile_trajectory, profile_residual_ep, profile_residual_nsp
from .scaling import FINITE_TIME, GLOBAL, ScalingParams, check_regime
from .spectral import Grid1D, make_grid

WORKERS_ENV = "IONKDV_WORKERS"


class RegimeWarning(UserWarning):
    """Case parameters fall outside the weak-collision band."""


class ReportError(OSError):
    """Report files could not be written."""


# -- records -----------------------------------------------------------------------


@dataclass(frozen=True)
class CaseRecord:
    """One row of the convergence table.  Norms are sup over stored times."""

    epsilon: float
    nu: float
    beta: float
    delta: float
    epsdelta: float
    finite_time_band: bool
    global_band: bool
    r_mass: float
    r_velocity: float
    r_temperature: float
    r_poisson: float
    r_velocity_nsp: float
    r_temperature_nsp: float
    err_phi_bar_l2: float
    err_phi_bar_linf: float
    err_phi0_l2: float
    err_phi0_linf: float
    err_macro_l2: float
    err_macro_linf: float
    nsp_ep_l2: float
    nsp_ep_linf: float
    mass_drift: float
    poisson_constraint: float
    config_digest: str
    wall_ms: float = field(default=0.0, compare=False)

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls) if f.name != "wall_ms")

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in self.columns()]


class OrderFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float


@dataclass(frozen=True)
class SlopeRecord:
    metric: str
    abscissa: str
    group: str
    group_value: float
    slope: float
    intercept: float
    stderr: float
    points: int

    COLUMNS = ("metric", "abscissa", "group", "group_value", "slope", "intercept", "stderr", "points")

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in self.COLUMNS]


@dataclass(frozen=True)
class SweepReport:
    config: RunConfig
    records: tuple[CaseRecord, ...] = ()
    slopes: tuple[SlopeRecord, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- fitting --------------------------------------------------------------------------


def fit_order(pairs) -> OrderFit:
    """Least-squares fit of ``log(norm)`` against ``log(x)``."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("need at least 3 points to fit an order")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("order fit needs positive abscissae and norms")
    res = linregress(np.log(x), np.log(y))
    return OrderFit(float(res.slope), float(res.intercept), float(res.stderr))


# -- pipeline ------------------------------------------------------------------------


def initial_profile(config: RunConfig, grid: Grid1D) -> np.ndarray:
    if config.profile == "soliton":
        return soliton_exact(grid, config.k, 0.0)
    if config.profile == "samples":
        return np.array(config.samples, dtype=float)
    return np.zeros(grid.n)


def _row_norms(grid: Grid1D, diff: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.sqrt(np.sum(diff * diff, axis=-1) * grid.spacing), np.max(np.abs(diff), axis=-1)


class Pipeline:
    """
    Per-config cache.  The correction hierarchy does not depend on ``eps``;
    the profile and the EP run do not depend on ``nu``.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.grid = make_grid(config.length, config.n)
        self.coeffs = config.coeffs()
        self._profiles: dict[float, ProfileTrajectory] = {}
        self._ep: dict[float, FluidTrajectory] = {}

    @cached_property
    def hierarchy(self) -> CorrectionTrajectory:
        c = self.config
        return solve_hierarchy(self.grid, initial_profile(c, self.grid), c.T, c.dt,
                               mean_tol=c.antideriv_mean_tol)

    def profile(self, eps: float) -> ProfileTrajectory:
        if eps not in self._profiles:
            self._profiles[eps] = build_profile_trajectory(self.hierarchy, eps)
        return self._profiles[eps]

    def initial_state(self, eps: float) -> FluidState:
        p = self.profile(eps)
        rho = p.rho_bar[0]
        return FluidState(self.grid, 0.0, rho, p.u1_bar[0], p.theta_bar[0], poisson_solve(self.grid, rho, eps))

    def fluid(self, eps: float, epsdelta: float) -> FluidTrajectory:
        c = self.config
        if epsdelta == 0.0 and eps in self._ep:
            return self._ep[eps]
        run = run_fluid(self.initial_state(eps), eps, epsdelta, self.coeffs, c.T, c.dt, c.stride)
        if epsdelta == 0.0:
            self._ep[eps] = run
        return run


def run_case(config: RunConfig, epsilon: float, nu: float, pipeline: Pipeline | None = None) -> CaseRecord:
    """
    Execute one ``(eps, nu)`` case.  A case outside the finite-time band is
    reported through :class:`RegimeWarning` and still run.
    """
    t0 = time.perf_counter()
    pipe = pipeline or Pipeline(config)
    params = ScalingParams(epsilon, nu, config.c0, config.c1)
    ft = check_regime(params, FINITE_TIME)
    gl = check_regime(params, GLOBAL)
    if not ft.in_band:
        warnings.warn(f"eps={epsilon}, nu={nu:.6g} lies outside the finite-time band", RegimeWarning,
                      stacklevel=2)

    g = pipe.grid
    prof = pipe.profile(epsilon)
    res = profile_residual_ep(prof)
    res_nsp = profile_residual_nsp(prof, pipe.coeffs, params.epsdelta)
    ep = pipe.fluid(epsilon, 0.0)
    nsp = pipe.fluid(epsilon, params.epsdelta)

    idx = np.rint(ep.times / prof.dt).astype(int)
    U0 = pipe.hierarchy.U0[idx]
    phi_bar = prof.phi_bar[idx]
    e_bar = _row_norms(g, ep.phi - phi_bar)
    e_0 = _row_norms(g, ep.phi - U0)
    parts = [_row_norms(g, a - b) for a, b in ((ep.rho, prof.rho_bar[idx]), (ep.u1, prof.u1_bar[idx]),
                                               (ep.theta, prof.theta_bar[idx]))]
    macro_l2 = np.sqrt(sum(p[0] ** 2 for p in parts))
    macro_linf = np.max([p[1] for p in parts], axis=0)
    d_nsp = _row_norms(g, nsp.phi - ep.phi)

    return CaseRecord(
        epsilon=float(epsilon),
        nu=float(nu),
        beta=params.beta,
        delta=params.delta,
        epsdelta=params.epsdelta,
        finite_time_band=ft.in_band,
        global_band=gl.in_band,
        r_mass=res.mass,
        r_velocity=res.velocity,
        r_temperature=res.temperature,
        r_poisson=res.poisson,
        r_velocity_nsp=res_nsp.velocity,
        r_temperature_nsp=res_nsp.temperature,
        err_phi_bar_l2=float(e_bar[0].max()),
        err_phi_bar_linf=float(e_bar[1].max()),
        err_phi0_l2=float(e_0[0].max()),
        err_phi0_linf=float(e_0[1].max()),
        err_macro_l2=float(macro_l2.max()),
        err_macro_linf=float(macro_linf.max()),
        nsp_ep_l2=float(d_nsp[0].max()),
        nsp_ep_linf=float(d_nsp[1].max()),
        mass_drift=max(ep.diagnostics["mass_drift"], nsp.diagnostics["mass_drift"]),
        poisson_constraint=max(ep.diagnostics["poisson_residual"], nsp.diagnostics["poisson_residual"]),
        config_digest=config.digest(),
        wall_ms=1e3 * (time.perf_counter() - t0),
    )


# -- sweep ------------------------------------------------------------------------------

EPS_METRICS = (
    "r_mass", "r_velocity", "r_temperature", "r_poisson",
    "err_phi_bar_l2", "err_phi_bar_linf", "err_phi0_l2", "err_phi0_linf",
    "err_macro_l2", "err_macro_linf",
)
EPSDELTA_METRICS = ("nsp_ep_l2", "nsp_ep_linf")

_SHARED: Pipeline | None = None


def _run_group(args) -> list[CaseRecord]:
    config, eps, nus = args
    pipe = _SHARED if (_SHARED is not None and _SHARED.config == config) else Pipeline(config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        return [run_case(config, eps, nu, pipe) for nu in nus]


def _fit_slopes(records) -> tuple[SlopeRecord, ...]:
    out = []
    by_beta: dict[float, list[CaseRecord]] = {}
    by_eps: dict[float, list[CaseRecord]] = {}
    for r in records:
        by_beta.setdefault(round(r.beta, 12), []).append(r)
        by_eps.setdefault(r.epsilon, []).append(r)

    def add(metric, abscissa, group, value, pts):
        if len(pts) < 3:
            return
        try:
            fit = fit_order(pts)
        except ValueError:
            fit = OrderFit(math.nan, math.nan, math.nan)
        out.append(SlopeRecord(metric, abscissa, group, float(value), *fit, len(pts)))

    for beta in sorted(by_beta):
        rows = sorted(by_beta[beta], key=lambda r: r.epsilon)
        for m in EPS_METRICS:
            add(m, "epsilon", "beta", beta, [(r.epsilon, getattr(r, m)) for r in rows])
    for eps in sorted(by_eps):
        rows = sorted(by_eps[eps], key=lambda r: r.epsdelta)
        for m in EPSDELTA_METRICS:
            add(m, "epsdelta", "epsilon", eps, [(r.epsdelta, getattr(r, m)) for r in rows])
    return tuple(out)


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    return max(1, workers)


def run_sweep(config: RunConfig, workers: int | None = None) -> SweepReport:
    """
    Run every configured case.  Cases sharing an epsilon form one work unit
    (they reuse the profile and the EP run); units run in parallel when
    ``workers > 1`` (default from ``IONKDV_WORKERS``).  Records are merged
    in ``(eps, nu)`` order, so the result does not depend on scheduling.
    """
    global _SHARED
    workers = resolve_workers(workers)
    groups: dict[float, list[float]] = {}
    for eps, nu, _ in config.cases():
        groups.setdefault(eps, []).append(nu)
    units = [(config, eps, nus) for eps, nus in groups.items()]

    pipe = Pipeline(config)
    pipe.hierarchy  # computed once, inherited by forked workers
    _SHARED = pipe
    try:
        if workers > 1 and len(units) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(units))) as ex:
                chunks = list(ex.map(_run_group, units))
        else:
            chunks = [_run_group(u) for u in units]
    finally:
        _SHARED = None
    records = tuple(sorted((r for c in chunks for r in c), key=lambda r: (r.epsilon, r.nu)))
    meta = {"hierarchy": dict(pipe.hierarchy.metadata)}
    return SweepReport(config, records, _fit_slopes(records), meta)


# -- report emission --------------------------------------------------------------------

PLOT_SCRIPT = '''\
"""Log-log convergence plots from results.csv (run from the report directory)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

METRICS = ["r_mass", "r_velocity", "r_temperature", "r_poisson",
           "err_phi_bar_l2", "err_phi0_l2", "err_macro_l2"]

path = sys.argv[1] if len(sys.argv) > 1 else "results.csv"
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))

groups = defaultdict(list)
for r in rows:
    groups[float(r["beta"])].append(r)

fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for beta, rs in sorted(groups.items()):
    rs.sort(key=lambda r: float(r["epsilon"]))
    eps = [float(r["epsilon"]) for r in rs]
    for m in METRICS:
        vals = [float(r[m]) for r in rs]
        if min(vals) <= 0:
            continue
        ax = axes[0] if m.startswith("r_") else axes[1]
        ax.loglog(eps, vals, "o-", label=f"{m} (beta={beta:g})")
for ax, title in zip(axes, ["profile residuals", "fluid errors"]):
    ax.set_xlabel("epsilon")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("convergence.png", dpi=150)
print("wrote convergence.png")
'''


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def results_table(report: SweepReport) -> str:
    return _csv_text(CaseRecord.columns(), [r.row() for r in report.records])


def slopes_table(report: SweepReport) -> str:
    return _csv_text(SlopeRecord.COLUMNS, [s.row() for s in report.slopes])


def environment_stamp() -> dict:
    import scipy

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "system": platform.system(),
        "machine": platform.machine(),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def emit_report(report: SweepReport, directory: str | Path) -> dict[str, Path]:
    """
    Write ``results.csv``, ``slopes.csv``, ``manifest.json``,
    ``plot_convergence.py`` and ``timings.csv`` into ``directory``.

    Everything except ``timings.csv`` is a pure function of the report, so
    re-emission is byte-identical.
    """
    d = Path(directory)
    texts = {
        "results.csv": results_table(report),
        "slopes.csv": slopes_table(report),
        "plot_convergence.py": PLOT_SCRIPT,
    }
    manifest = {
        "format": "ionkdv-sweep/1",
        "config": {k: v for k, v in report.config.to_dict().items() if k != "out_dir"},
        "config_digest": report.config.digest(),
        "environment": environment_stamp(),
        "cases": len(report.records),
        "regime": [
            {"epsilon": r.epsilon, "nu": r.nu, "beta": r.beta, "delta": r.delta,
             "finite_time_band": r.finite_time_band, "global_band": r.global_band}
            for r in report.records
        ],
        "metadata": report.metadata,
        "sha256": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(texts.items())},
    }
    texts["manifest.json"] = json.dumps(_jsonable(manifest), sort_keys=True, indent=2) + "\n"
    texts["timings.csv"] = _csv_text(
        ("epsilon", "nu", "wall_ms"), [[_fmt(r.epsilon), _fmt(r.nu), f"{r.wall_ms:.1f}"] for r in report.records]
    )
    written = {}
    try:
        d.mkdir(parents=True, exist_ok=True)
        for name, text in texts.items():
            path = d / name
            path.write_text(text)
            written[name] = path
    except OSError as exc:
        raise ReportError(f"cannot write report to {d}: {exc}") from exc
    return written
