"""Euler-alpha and Euler flows in a periodic channel with spectral collocation."""
from .errors import (
    CFLError,
    EulerAlphaError,
    NumericalError,
    PicardConvergenceError,
    SingularModeError,
    ValidationError,
)
from .grid import (
    Grid,
    NormReport,
    ScalarField,
    VectorField,
    curl,
    divergence,
    gradient,
    h1,
    h1_semi,
    l2,
    laplacian,
    make_grid,
    norms,
    perp_gradient,
)
from .elliptic import (
    AlphaEllipticSolver,
    EulerStreamSolver,
    apply_forward,
    biot_savart_alpha,
    euler_stream,
    make_solver,
)
from .transport import AdvectionScheme, advect, step_error_estimate
from .stepper import (
    AlphaState,
    FlowModel,
    StepConfig,
    Trajectory,
    alpha_energy,
    compute_v,
    integrate,
    picard_step,
)
from .initdata import (
    ApproximationFamily,
    EigenBasis,
    certify_E1,
    project_family,
    stokes_eigenbasis,
)
from .corrector import Cutoff, CorrectorBundle, build_corrector, delta_schedule, scaling_study
from .experiments import (
    ConvergenceRow,
    ParallelFlowCase,
    SweepConfig,
    parallel_flow_verify,
    reconstruct_parallel_pressure,
    lift_family,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AdvectionScheme",
    "advect",
    "step_error_estimate",
    "AlphaEllipticSolver",
    "AlphaState",
    "ApproximationFamily",
    "CFLError",
    "ConvergenceRow",
    "CorrectorBundle",
    "Cutoff",
    "EigenBasis",
    "EulerAlphaError",
    "EulerStreamSolver",
    "FlowModel",
    "Grid",
    "NormReport",
    "NumericalError",
    "ParallelFlowCase",
    "PicardConvergenceError",
    "ScalarField",
    "SingularModeError",
    "StepConfig",
    "SweepConfig",
    "Trajectory",
    "ValidationError",
    "VectorField",
    "alpha_energy",
    "apply_forward",
    "biot_savart_alpha",
    "build_corrector",
    "certify_E1",
    "compute_v",
    "curl",
    "delta_schedule",
    "divergence",
    "euler_stream",
    "gradient",
    "h1",
    "h1_semi",
    "integrate",
    "l2",
    "laplacian",
    "lift_family",
    "make_grid",
    "make_solver",
    "norms",
    "parallel_flow_verify",
    "perp_gradient",
    "picard_step",
    "project_family",
    "reconstruct_parallel_pressure",
    "run_sweep",
    "scaling_study",
    "stokes_eigenbasis",
]
