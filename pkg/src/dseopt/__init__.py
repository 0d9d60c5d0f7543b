"""Black-box design-space exploration toolkit.

Gaussian-process surrogate modeling, four acquisition functions, a
sequential optimization loop, scalarized multi-objective handling with
Pareto extraction, a budget-matched genetic-algorithm baseline, and
pluggable evaluators (synthetic benchmarks, a synthetic PPA surface, and
external command-line tools).
"""

from .acquisition import AcquisitionSpec, Incumbent, ei, lcb, poi, propose, ucb
from .baseline_ga import GaConfig, budget_match, ga_run
from .bo_loop import BoConfig, incumbent_curve, multi_run_pareto, run
from .evaluators import (
    Evaluation,
    ExternalEvaluator,
    ParseRule,
    PpaSurfaceEvaluator,
    ScriptTemplate,
    SyntheticEvaluator,
    eval_external,
    eval_ppa_surface,
    eval_synthetic,
    render_script,
)
from .experiment_log import ExperimentLog, IterationRecord
from .gp import GpModel, KernelParams, Prediction, fit_hyperparams, kernel
from .objective import (
    ObjectiveSpec,
    pareto_filter,
    scalarize,
    scale,
    single,
    weight_sweep,
)
from .param_space import ParamDef, ParameterSpace, default_cad_space, space_from_config

__version__ = "0.1.0"

__all__ = [
    "AcquisitionSpec",
    "BoConfig",
    "Evaluation",
    "ExperimentLog",
    "ExternalEvaluator",
    "GaConfig",
    "GpModel",
    "Incumbent",
    "IterationRecord",
    "KernelParams",
    "ObjectiveSpec",
    "ParamDef",
    "ParameterSpace",
    "ParseRule",
    "PpaSurfaceEvaluator",
    "Prediction",
    "ScriptTemplate",
    "SyntheticEvaluator",
    "budget_match",
    "default_cad_space",
    "ei",
    "eval_external",
    "eval_ppa_surface",
    "eval_synthetic",
    "fit_hyperparams",
    "ga_run",
    "incumbent_curve",
    "kernel",
    "lcb",
    "multi_run_pareto",
    "pareto_filter",
    "poi",
    "propose",
    "render_script",
    "run",
    "scalarize",
    "scale",
    "single",
    "space_from_config",
    "ucb",
    "weight_sweep",
]
