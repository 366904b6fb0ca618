"""Newton method for affine phase retrieval.

Recovers ``x`` in ``C^n`` from ``y_j = |a_j^* x + b_j|^2`` by Newton steps on
the least-squares loss in Wirtinger coordinates, starting from ``z_0 = 0``.
"""
from .ensemble import (
    MeasurementEnsemble,
    ObservationSet,
    derive_seed,
    from_rows,
    gen_cdp,
    gen_gaussian,
    load_ensemble,
    measure,
    random_signal,
    sample_octanary,
    save_ensemble,
)
from .estimator import AffinePhaseRetrieval
from .exceptions import (
    AffinePRError,
    CheckFailure,
    ConditionViolated,
    InvalidArgumentError,
    SolverBreakdown,
)
from .newton import RunTrace, SolverConfig, newton_step, partition_blocks, run, solve_newton_system
from .wirtinger import WirtingerHessian, eval_f, gradient, hessian, hessian_apply

__version__ = "0.1.0"

__all__ = [
    "AffinePRError",
    "AffinePhaseRetrieval",
    "CheckFailure",
    "ConditionViolated",
    "InvalidArgumentError",
    "MeasurementEnsemble",
    "ObservationSet",
    "RunTrace",
    "SolverBreakdown",
    "SolverConfig",
    "WirtingerHessian",
    "derive_seed",
    "eval_f",
    "from_rows",
    "gen_cdp",
    "gen_gaussian",
    "gradient",
    "hessian",
    "hessian_apply",
    "load_ensemble",
    "measure",
    "newton_step",
    "partition_blocks",
    "random_signal",
    "run",
    "sample_octanary",
    "save_ensemble",
    "solve_newton_system",
]
