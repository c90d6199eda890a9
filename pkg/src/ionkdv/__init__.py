"""Pseudospectral laboratory for the ion-acoustic KdV limit of the Euler-Poisson system."""

__version__ = "0.1.0"

from .spectral import Grid1D, Norms, TruncationWarning, make_grid  # noqa: E402
from .kdv import (  # noqa: E402
    KdVState, StepFailure, kdv_invariants, kdv_rhs, kdv_solve, kdv_step, soliton_exact,
)
from .hierarchy import (  # noqa: E402
    CorrectionSet, CorrectionTrajectory, hierarchy_residuals, solve_hierarchy,
)
from .fluid import (  # noqa: E402
    FluidState, TransportCoeffs, ep_rhs, ep_step, nsp_rhs, poisson_solve, run_fluid,
)
from .profile import (  # noqa: E402
    ApproxProfile, build_profile, build_profile_trajectory, profile_residual_ep, profile_residual_nsp,
)
from .scaling import ScalingParams, check_regime, delta_from_nu, from_lab_frame, to_lab_frame  # noqa: E402
from .config import ConfigError, RunConfig  # noqa: E402
from .harness import CaseRecord, SweepReport, emit_report, fit_order, run_case, run_sweep  # noqa: E402

__all__ = [
    "Grid1D", "Norms", "TruncationWarning", "make_grid",
    "KdVState", "StepFailure", "kdv_invariants", "kdv_rhs", "kdv_solve", "kdv_step", "soliton_exact",
    "CorrectionSet", "CorrectionTrajectory", "hierarchy_residuals", "solve_hierarchy",
    "FluidState", "TransportCoeffs", "ep_rhs", "ep_step", "nsp_rhs", "poisson_solve", "run_fluid",
    "ApproxProfile", "build_profile", "build_profile_trajectory", "profile_residual_ep",
    "profile_residual_nsp",
    "ScalingParams", "check_regime", "delta_from_nu", "from_lab_frame", "to_lab_frame",
    "ConfigError", "RunConfig",
    "CaseRecord", "SweepReport", "emit_report", "fit_order", "run_case", "run_sweep",
]
