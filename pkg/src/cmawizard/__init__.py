"""Tunable CMA-ES, benchmark suites, racing tuner, selection wizard, evaluation."""

from .engine import (
    BASELINE_NAMES,
    CmaConfig,
    CmaEs,
    DEFAULT_CONFIG,
    RunRecord,
    population_size,
    run,
    run_baseline,
)
from .evaluation import (
    ConvergenceCurve,
    ScoreMatrix,
    convergence_curves,
    format_rank_label,
    score_matrix,
)
from .racing import (
    RaceState,
    TuneResult,
    TunerSettings,
    default_cma_space,
    race,
    refine,
    sample_initial,
    tune,
)
from .suites import (
    Block,
    InstanceSpec,
    SuiteSpec,
    evaluate,
    evaluate_many,
    function_catalog,
    generate_suite,
    order_blocks,
    suite_spec,
)
from .validation import ValidationReport, validate
from .wizard import (
    CONFIG_NAMES,
    ConfigRegistry,
    ProblemDescriptor,
    builtin_configs,
    descriptor_for,
    load_registry,
    save_registry,
    select_config,
    wizard_run,
)

__all__ = [
    "BASELINE_NAMES",
    "Block",
    "CmaConfig",
    "CmaEs",
    "CONFIG_NAMES",
    "ConfigRegistry",
    "ConvergenceCurve",
    "DEFAULT_CONFIG",
    "InstanceSpec",
    "ProblemDescriptor",
    "RaceState",
    "RunRecord",
    "ScoreMatrix",
    "SuiteSpec",
    "TuneResult",
    "TunerSettings",
    "ValidationReport",
    "builtin_configs",
    "convergence_curves",
    "default_cma_space",
    "descriptor_for",
    "evaluate",
    "evaluate_many",
    "format_rank_label",
    "function_catalog",
    "generate_suite",
    "load_registry",
    "order_blocks",
    "population_size",
    "race",
    "refine",
    "run",
    "run_baseline",
    "sample_initial",
    "save_registry",
    "score_matrix",
    "select_config",
    "suite_spec",
    "tune",
    "validate",
    "wizard_run",
]

__version__ = "0.1.0"
