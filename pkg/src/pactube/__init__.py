"""pactube: PAC tube models for black-box continuous-time dynamical systems.

Learn a simple function z(x0, t) plus a half-width xi from finitely many
noise-free trajectory samples, so that with prescribed confidence the true
output stays inside z +/- xi except on a small certified fraction of the
time horizon — then turn that tube into a finite-time safety verdict.
"""

from .bounds import (
    PacBudget,
    TwoLevelBudget,
    achieved_epsilon,
    min_samples,
    two_level_budget,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .lp import (
    InsufficientSamplesError,
    LinearProgram,
    LpSolution,
    ModelDomainError,
    SolverStallError,
    build_lp,
    learn,
    solve_lp,
    staged_learn,
)
from .model_io import ModelFileError, load_model, save_model
from .montecarlo import (
    ValidationReport,
    validate_ensemble,
    validate_trajectory,
    write_report,
)
from .pipeline import (
    RunArtifacts,
    build_oracle,
    learn_stage,
    run_pipeline,
    sample_stage,
    staged_learn_stage,
    validate_stage,
    verify_stage,
)
from .sampling import (
    Ball,
    Box,
    Dataset,
    DatasetParseError,
    InputSet,
    PointSet,
    Stream,
    collect_dataset,
    parse_input_set,
    read_dataset,
    rng_stream,
    sample_inputs,
    sample_times,
    write_dataset,
)
from .systems import (
    BENCHMARK_HORIZONS,
    BenchmarkSystem,
    ConfigurationError,
    DenseTrajectory,
    IntegrationDivergedError,
    OutOfHorizonError,
    SimulatedOracle,
    benchmark_system,
    integrate_dde,
    integrate_ode,
    make_benchmark,
    make_oracle,
    query_state,
)
from .templates import (
    CoefficientMismatchError,
    CustomTemplate,
    FrozenTemplate,
    LearnedModel,
    ModelTemplate,
    PolynomialTemplate,
    Provenance,
    evaluate,
    freeze,
    poly_input_time_template,
    poly_time_template,
)
from .verify import (
    ConfidenceStatement,
    ProvenanceMismatchError,
    TubeRange,
    UnsafeSet,
    Verdict,
    check_safety,
    tube_range,
    unsafe_time_budget,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # bounds
    "PacBudget",
    "TwoLevelBudget",
    "min_samples",
    "achieved_epsilon",
    "two_level_budget",
    # systems
    "BenchmarkSystem",
    "SimulatedOracle",
    "DenseTrajectory",
    "benchmark_system",
    "make_benchmark",
    "make_oracle",
    "integrate_ode",
    "integrate_dde",
    "query_state",
    "BENCHMARK_HORIZONS",
    "IntegrationDivergedError",
    "OutOfHorizonError",
    "ConfigurationError",
    # sampling
    "Stream",
    "rng_stream",
    "InputSet",
    "Box",
    "Ball",
    "PointSet",
    "parse_input_set",
    "sample_times",
    "sample_inputs",
    "Dataset",
    "collect_dataset",
    "write_dataset",
    "read_dataset",
    "DatasetParseError",
    # templates
    "ModelTemplate",
    "PolynomialTemplate",
    "FrozenTemplate",
    "CustomTemplate",
    "poly_time_template",
    "poly_input_time_template",
    "evaluate",
    "freeze",
    "Provenance",
    "LearnedModel",
    "CoefficientMismatchError",
    # lp
    "LinearProgram",
    "LpSolution",
    "build_lp",
    "solve_lp",
    "learn",
    "staged_learn",
    "InsufficientSamplesError",
    "ModelDomainError",
    "SolverStallError",
    # verification
    "UnsafeSet",
    "TubeRange",
    "ConfidenceStatement",
    "Verdict",
    "tube_range",
    "unsafe_time_budget",
    "check_safety",
    "ProvenanceMismatchError",
    # monte carlo
    "ValidationReport",
    "validate_trajectory",
    "validate_ensemble",
    "write_report",
    # model files
    "save_model",
    "load_model",
    "ModelFileError",
    # config + pipeline
    "ExperimentConfig",
    "ConfigError",
    "parse_config",
    "load_config",
    "build_oracle",
    "sample_stage",
    "learn_stage",
    "staged_learn_stage",
    "verify_stage",
    "validate_stage",
    "run_pipeline",
    "RunArtifacts",
]
