"""Second-order optimization toolkit built around momentum-accelerated
adaptive cubic regularization, with exact and Krylov subproblem solvers,
benchmark objectives, and trace diagnostics."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .data import Dataset, SyntheticSpec, gen_synthetic, load_csv, load_libsvm, standardize
from .diagnostics import (
    AuditReport,
    MeasureConfig,
    audit_trace,
    classify_momentum_events,
    fit_rate,
    optimality_measure,
)
from .objective import (
    DENSE_CAP,
    ModelSpec,
    ObjectiveModel,
    check_derivatives,
    make_objective,
    quadratic_objective,
    rosenbrock_objective,
)
from .optimizers import (
    HyperParams,
    IterationRecord,
    SolverState,
    StopCriteria,
    Trace,
    arcm_step,
    baseline_step,
    make_state,
    momentum_search,
    rho,
    run,
    sigma_update,
)
from .subproblem import (
    CrsSolution,
    CubicModel,
    InexactnessCertificate,
    cauchy_point,
    certify_inexact,
    model_gradient,
    model_value,
    solve_exact,
    solve_krylov,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "CrsSolution", "CubicModel", "Dataset", "DENSE_CAP",
    "HyperParams", "InexactnessCertificate", "IterationRecord",
    "KERNEL_BACKEND", "MeasureConfig", "ModelSpec", "ObjectiveModel",
    "SolverState", "StopCriteria", "SyntheticSpec", "Trace", "arcm_step",
    "audit_trace", "baseline_step", "cauchy_point", "certify_inexact",
    "check_derivatives", "classify_momentum_events", "fit_rate",
    "gen_synthetic", "load_csv", "load_libsvm", "make_objective",
    "make_state", "model_gradient", "model_value", "momentum_search",
    "optimality_measure", "quadratic_objective", "rho",
    "rosenbrock_objective", "run", "sigma_update", "solve_exact",
    "solve_krylov", "standardize",
]
