"""Nudging-based continuous data assimilation for 2D incompressible flow."""

from .conditions import (
    ConditionReport,
    FlowScales,
    chi_condition_2d,
    chi_condition_3d,
    h_condition,
    re_scalings,
    refined_h_condition,
)
from .control import (
    ControllerConfig,
    StepOutcome,
    StepRecord,
    algo1_decide,
    algo2_band_3d,
    algo2_decide,
    assimilate_step,
    make_controller,
    trapezoid_band,
)
from .fields import (
    Grid,
    NormReport,
    SpectralField,
    dealias,
    from_physical,
    h1_seminorm,
    inner,
    l2_norm,
    leray_project,
    norms,
    to_physical,
    zero_field,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    TwinRun,
    emit_csv,
    preset_config,
    run_convergence,
    run_twin,
)
from .observers import CellAverage, FourierLowPass, interp_defect_ratio
from .solver import (
    ForcingSpec,
    NudgeTerm,
    SolverConfig,
    SolverState,
    bdf2_step,
    manufactured_forcing,
    manufactured_truth,
    nonlinear_term,
    trilinear_skew,
)

__version__ = "0.1.0"
