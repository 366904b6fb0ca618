"""Newton iteration for affine phase retrieval, with and without resampling.

Each step solves the paired system ``H(z_k) w = grad f(z_k)`` in ``C^{2n}`` and
updates ``z_{k+1} = z_k - w[:n]``.  ``run`` starts from ``z_0 = 0`` and either
reuses every measurement at each step (``"fullbatch"``) or consumes one of
``T`` disjoint row blocks per step (``"resampled"``).
"""
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from ._validation import check_complex_vector, check_observations, check_positive_int, check_seed
from .exceptions import InvalidArgumentError, SolverBreakdown
from .wirtinger import WirtingerHessian, eval_f, gradient, hessian

FULLBATCH = "fullbatch"
RESAMPLED = "resampled"
MODES = (FULLBATCH, RESAMPLED)

# experiments use |b| = 52 ||x||; the local convergence guarantee only needs |b|^2 >= 52
DEFAULT_B_MAGNITUDE = 52.0
MIN_B_MAGNITUDE = math.sqrt(52.0)

COND_LIMIT = 1e12


@dataclass
class SolverConfig:
    """Settings for :func:`run`.

    ``n_blocks`` is the number of resampling blocks ``T``; it is required in
    resampled mode and must divide the number of rows.  ``b_magnitude`` and
    ``b_phase`` describe the offset used by drivers that build ensembles; the
    solver itself reads offsets from the ensemble.
    """

    mode: str = FULLBATCH
    max_iters: int = 15
    tol: float = 1e-10
    b_magnitude: float = DEFAULT_B_MAGNITUDE
    b_phase: float = 0.0
    regularization_floor: float = 1e-8
    n_blocks: Optional[int] = None
    seed: int = 0
    track_lambda_min: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        check_positive_int(self.max_iters, "max_iters", minimum=0)
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if not self.b_magnitude > 0:
            raise InvalidArgumentError(f"b_magnitude must be positive, got {self.b_magnitude}")
        if self.regularization_floor < 0:
            raise InvalidArgumentError("regularization_floor must be nonnegative")
        if self.mode == RESAMPLED:
            if self.n_blocks is None:
                raise InvalidArgumentError("resampled mode needs n_blocks (T)")
            check_positive_int(self.n_blocks, "n_blocks")
        check_seed(self.seed)

    @property
    def b(self):
        return self.b_magnitude * complex(math.cos(self.b_phase), math.sin(self.b_phase))


@dataclass
class IterationRecord:
    k: int
    rel_err: Optional[float]
    f: float
    grad_norm: float
    lambda_min: Optional[float] = None
    wall_time: float = 0.0
    # diagnostics of the step taken from this iterate
    regularized: bool = False
    symmetry_residual: Optional[float] = None
    rcond: Optional[float] = None


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    z: Optional[np.ndarray] = None
    stop_reason: str = ""
    error: Optional[str] = None
    mode: str = FULLBATCH

    @property
    def n_iter(self):
        """Number of Newton steps taken."""
        return max(len(self.records) - 1, 0)

    @property
    def rel_errors(self):
        return np.array([r.rel_err for r in self.records], dtype=float)

    @property
    def final_rel_err(self):
        return self.records[-1].rel_err if self.records else None

    def to_rows(self):
        return [asdict(r) for r in self.records]


@dataclass
class NewtonSolution:
    """Update ``step`` (length ``n``) plus diagnostics of the linear solve."""

    step: np.ndarray
    method: str
    rcond: float
    regularized: bool
    symmetry_residual: float


def contraction_constant(delta, b_magnitude):
    """``beta = 26 (1 + sqrt(delta)) / |b|^2`` from the quadratic error recursion."""
    return 26.0 * (1.0 + math.sqrt(delta)) / b_magnitude ** 2


def partition_blocks(m, T):
    """Split ``range(m)`` into ``T`` contiguous equal blocks, returned as slices."""
    m = check_positive_int(m, "m")
    T = check_positive_int(T, "T")
    if m % T:
        suggestion = max(d for d in range(1, T + 1) if m % d == 0)
        raise InvalidArgumentError(
            f"T={T} does not divide m={m}; the largest valid T <= {T} is {suggestion}")
    size = m // T
    return [slice(i * size, (i + 1) * size) for i in range(T)]


def _factor_solve(H, rhs):
    """Solve with Cholesky, falling back to Bunch-Kaufman; ``None`` if near-singular."""
    anorm = np.linalg.norm(H, 1)
    b = rhs.reshape(-1, 1)
    c, info = lapack.zpotrf(H, lower=0)
    if info == 0:
        rcond, _ = lapack.zpocon(c, anorm, uplo="U")
        if rcond < 1.0 / COND_LIMIT:
            return None, "cholesky", rcond
        x, info = lapack.zpotrs(c, b, lower=0)
        if info == 0:
            return x.ravel(), "cholesky", rcond
    ldu, ipiv, info = lapack.zhetrf(H, lower=0)
    if info > 0:
        return None, "ldl", 0.0
    rcond, _ = lapack.zhecon(ldu, ipiv, anorm, lower=0)
    if rcond < 1.0 / COND_LIMIT:
        return None, "ldl", rcond
    x, info = lapack.zhetrs(ldu, ipiv, b, lower=0)
    if info != 0:
        return None, "ldl", rcond
    return x.ravel(), "ldl", rcond


def solve_newton_system(hess, grad, regularization=0.0, iteration=None):
    """Solve ``H w = g`` and return the conjugate-symmetrized upper half of ``w``.

    Cholesky is tried first and demoted to a Hermitian-indefinite (Bunch-Kaufman)
    factorization when ``H`` is not positive definite.  If the reciprocal
    condition estimate falls below ``1e-12`` the solve is retried on
    ``H + regularization * I``; if that also fails, :class:`SolverBreakdown` is
    raised.
    """
    H = hess.dense() if isinstance(hess, WirtingerHessian) else np.asarray(hess, dtype=np.complex128)
    g = np.asarray(grad, dtype=np.complex128)
    dim = H.shape[0]
    if H.shape != (dim, dim) or dim % 2 or g.shape != (dim,):
        raise InvalidArgumentError(f"incompatible shapes H{H.shape}, g{g.shape}")
    n = dim // 2
    if not np.any(g):
        return NewtonSolution(np.zeros(n, dtype=np.complex128), "trivial", 1.0, False, 0.0)

    regularized = False
    w, method, rcond = _factor_solve(H, g)
    if w is None and regularization > 0:
        regularized = True
        w, method, rcond = _factor_solve(H + regularization * np.eye(dim), g)
    if w is None:
        raise SolverBreakdown(
            f"Newton system is singular (rcond={rcond:.3g})"
            + (f" at iteration {iteration}" if iteration is not None else ""),
            iteration=iteration, rcond=rcond)

    upper, lower = w[:n], w[n:]
    asym = np.linalg.norm(upper - np.conj(lower)) / max(np.linalg.norm(w), np.finfo(float).tiny)
    step = 0.5 * (upper + np.conj(lower))
    return NewtonSolution(step, method, float(rcond), regularized, float(asym))


def newton_step(ensemble, y, z, regularization=0.0, return_info=False):
    """One Newton update ``z - step`` on the given rows."""
    z = check_complex_vector(z, ensemble.n, name="z")
    sol = solve_newton_system(hessian(ensemble, y, z), gradient(ensemble, y, z),
                              regularization=regularization)
    z_new = z - sol.step
    if return_info:
        return z_new, sol
    return z_new


def _error(z, x):
    if x is None:
        return None
    scale = np.linalg.norm(x)
    err = np.linalg.norm(z - x)
    return float(err / scale) if scale > 0 else float(err)


def run(ensemble, y, config=None, x=None):
    """Run the Newton method from ``z_0 = 0`` and return the full trace.

    Stops when the relative error drops below ``tol`` (only when the ground
    truth ``x`` is given), when ``||grad f|| < tol * |b|^2``, or when the
    iteration budget is spent, whichever comes first.  In resampled mode the
    budget is ``min(max_iters, T)`` and step ``k`` uses block ``k``.  A solver
    breakdown ends the run; the trace up to that point is returned with
    ``stop_reason="breakdown"``.
    """
    config = config or SolverConfig()
    y = check_observations(getattr(y, "y", y), ensemble.m)
    if x is not None:
        x = check_complex_vector(x, ensemble.n)

    if config.mode == RESAMPLED:
        blocks = partition_blocks(ensemble.m, config.n_blocks)
        budget = min(config.max_iters, len(blocks))
    else:
        blocks = None
        budget = config.max_iters

    b_sq = ensemble.b_magnitude ** 2
    grad_tol = config.tol * (b_sq if b_sq > 0 else 1.0)
    trace = RunTrace(mode=config.mode)
    z = np.zeros(ensemble.n, dtype=np.complex128)
    start = time.perf_counter()

    for k in range(budget + 1):
        g = gradient(ensemble, y, z)
        record = IterationRecord(
            k=k,
            rel_err=_error(z, x),
            f=eval_f(ensemble, y, z),
            grad_norm=float(np.linalg.norm(g)),
            wall_time=time.perf_counter() - start,
        )
        trace.records.append(record)

        if record.rel_err is not None and record.rel_err < config.tol:
            trace.stop_reason = "tolerance"
            break
        if record.grad_norm < grad_tol:
            trace.stop_reason = "gradient"
            break
        if k == budget:
            trace.stop_reason = "max_iters"
            break

        if blocks is None:
            block_ens, block_y, block_g = ensemble, y, g
        else:
            block_ens = ensemble.subset(blocks[k])
            block_y = y[blocks[k]]
            block_g = gradient(block_ens, block_y, z)
        H = hessian(block_ens, block_y, z)
        if config.track_lambda_min:
            record.lambda_min = float(np.linalg.eigvalsh(H.dense())[0])
        try:
            sol = solve_newton_system(H, block_g, config.regularization_floor, iteration=k)
        except SolverBreakdown as exc:
            trace.stop_reason = "breakdown"
            trace.error = str(exc)
            break
        record.regularized = sol.regularized
        record.symmetry_residual = sol.symmetry_residual
        record.rcond = sol.rcond
        z = z - sol.step

    trace.z = z
    return trace
