"""IRS-assisted multiuser wireless energy transfer.

Max-min harvested-energy optimization over the passive reflection pattern of
an intelligent reflecting surface, with non-linear harvester circuits at the
energy receivers. Four schemes: a semidefinite-relaxation upper bound, a
static pattern recovered by Gaussian randomization, a dynamic multi-pattern
schedule found by successive convex approximation, and a TDMA baseline that
serves one receiver per slot with its matched phase.
"""

from .channel import (
    ChannelRealization,
    SystemConfig,
    aligned_amplitude,
    db_to_linear,
    dbm_to_watts,
    path_loss,
    received_rf_power,
    sample_channels,
)
from .conic import ConicProgram, ConicSolution, SolverFailureError, check_feasibility, solve
from .dynamic_sca import ScaIterate, Schedule, Solution, audit_schedule, solve_dynamic, warm_start_from
from .eh import EhParams, InfeasibleTargetError, dc_power, derive_constants, per_er, required_rf_power
from .experiments import (
    CSV_HEADER,
    SCHEMES,
    RunRecord,
    Scenario,
    build_scenario,
    default_eh,
    emit_csv,
    emit_json,
    load_config,
    read_csv,
    run_scenario,
    run_single,
)
from .static_sdr import (
    SdrResult,
    achieved_static_e,
    gaussian_randomization,
    rank_profile,
    solve_sdr_upper_bound,
    static_transmit_power,
)
from .tdma import matched_phase, solve_tdma

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "SystemConfig",
    "aligned_amplitude",
    "db_to_linear",
    "dbm_to_watts",
    "path_loss",
    "received_rf_power",
    "sample_channels",
    "ConicProgram",
    "ConicSolution",
    "SolverFailureError",
    "check_feasibility",
    "solve",
    "ScaIterate",
    "Schedule",
    "Solution",
    "audit_schedule",
    "solve_dynamic",
    "warm_start_from",
    "EhParams",
    "InfeasibleTargetError",
    "dc_power",
    "derive_constants",
    "per_er",
    "required_rf_power",
    "CSV_HEADER",
    "SCHEMES",
    "RunRecord",
    "Scenario",
    "build_scenario",
    "default_eh",
    "emit_csv",
    "emit_json",
    "load_config",
    "read_csv",
    "run_scenario",
    "run_single",
    "SdrResult",
    "achieved_static_e",
    "gaussian_randomization",
    "rank_profile",
    "solve_sdr_upper_bound",
    "static_transmit_power",
    "matched_phase",
    "solve_tdma",
    "__version__",
]
