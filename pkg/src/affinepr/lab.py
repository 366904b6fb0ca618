"""Experiment harness: convergence traces and success-rate sweeps.

Every trial is fully determined by ``(spec, trial index)``: the trial seed is
``derive_seed(base_seed, trial)``, from which the ground-truth signal (unit
norm complex Gaussian) and the measurement ensemble draw their own streams.
The same trial index reuses its seed at every grid point of a sweep.
"""
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from ._validation import check_positive_int, check_seed
from .ensemble import CDP, GAUSSIAN, derive_seed, generate, measure, random_signal
from .exceptions import InvalidArgumentError
from .newton import FULLBATCH, MODES, SolverConfig, run

CONVERGENCE = "convergence"
SUCCESS_RATE = "success-rate"
KINDS = (CONVERGENCE, SUCCESS_RATE)

CONVERGENCE_HEADER = ["trial", "iter", "rel_err", "f", "grad_norm"]
SWEEP_HEADER = ["param", "trials", "successes", "rate", "mean_iters"]

ORDER_WINDOW = (1e-8, 1e-1)


@dataclass
class ExperimentSpec:
    """Configuration of one experiment.

    ``grid`` holds ``m/n`` ratios for the Gaussian model and pattern counts
    ``L`` for the CDP model; a convergence experiment uses a single grid point.
    """

    kind: str = CONVERGENCE
    model: str = GAUSSIAN
    n: int = 128
    grid: List[float] = field(default_factory=lambda: [4.0])
    b_magnitude: float = 52.0
    b_phase: float = 0.0
    trials: int = 1
    max_iters: int = 15
    success_threshold: float = 1e-5
    tol: float = 1e-12
    mode: str = FULLBATCH
    n_blocks: Optional[int] = None
    base_seed: int = 0
    output: Optional[str] = None
    formats: List[str] = field(default_factory=lambda: ["csv", "json", "dat"])

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.model not in (GAUSSIAN, CDP):
            raise InvalidArgumentError(f"model must be gaussian or cdp, got {self.model!r}")
        check_positive_int(self.n, "n")
        check_positive_int(self.trials, "trials")
        check_positive_int(self.max_iters, "max_iters", minimum=0)
        check_seed(self.base_seed)
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        grid = [float(g) for g in self.grid]
        if not grid:
            raise InvalidArgumentError("grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgumentError("grid must be strictly increasing")
        if grid[0] <= 0:
            raise InvalidArgumentError("grid values must be positive")
        if self.model == CDP and any(g != int(g) for g in grid):
            raise InvalidArgumentError("CDP grid values are pattern counts and must be integers")
        if self.kind == CONVERGENCE and len(grid) != 1:
            raise InvalidArgumentError("a convergence experiment takes a single grid point")
        bad = set(self.formats) - {"csv", "json", "dat"}
        if bad:
            raise InvalidArgumentError(f"unknown output formats {sorted(bad)}")
        self.grid = grid

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown spec keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def rows_for(self, param):
        """``(m, L)`` for one grid value; fractional ``m/n`` rounds to the nearest row count."""
        if self.model == GAUSSIAN:
            return max(1, int(round(self.n * param))), None
        return None, int(param)

    def solver_config(self):
        return SolverConfig(mode=self.mode, max_iters=self.max_iters, tol=self.tol,
                            b_magnitude=self.b_magnitude, b_phase=self.b_phase,
                            n_blocks=self.n_blocks, seed=self.base_seed)


@dataclass
class TrialResult:
    trial: int
    param: float
    trace: object
    x: np.ndarray
    success: bool
    breakdown: bool
    wall_time: float


@dataclass
class SweepPoint:
    param: float
    trials: int
    successes: int
    rate: float
    mean_iters: float
    mean_wall_time: float
    ci_halfwidth: float


@dataclass
class SweepResult:
    spec: ExperimentSpec
    points: List[SweepPoint]


@dataclass
class ConvergenceResult:
    spec: ExperimentSpec
    trials: List[TrialResult]
    summary: dict


def max_workers():
    """Worker cap from ``AFFINEPR_THREADS`` (default: 1)."""
    raw = os.environ.get("AFFINEPR_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"AFFINEPR_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def run_trial(spec, param, trial):
    """Draw one signal and ensemble, run the solver, and score the result."""
    seed = derive_seed(spec.base_seed, trial)
    x = random_signal(spec.n, derive_seed(seed, 1))
    m, L = spec.rows_for(param)
    config = spec.solver_config()
    ens = generate(spec.model, spec.n, derive_seed(seed, 0), m=m, L=L, b=config.b)
    y = measure(ens, x)
    start = time.perf_counter()
    trace = run(ens, y, config, x=x)
    elapsed = time.perf_counter() - start
    # success is judged on the raw iterate: no global phase is removed
    err = np.linalg.norm(trace.z - x) / np.linalg.norm(x)
    return TrialResult(trial, param, trace, x, bool(err < spec.success_threshold),
                       trace.stop_reason == "breakdown", elapsed)


def _run_all(spec, jobs, workers=None):
    workers = workers or max_workers()
    if workers <= 1 or len(jobs) <= 1:
        results = [run_trial(spec, p, t) for p, t in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(run_trial, [spec] * len(jobs), *zip(*jobs)))
    return sorted(results, key=lambda r: (r.param, r.trial))


def error_pairs(rel_errors, window=ORDER_WINDOW):
    """Consecutive ``(e_k, e_{k+1})`` pairs with ``e_k`` inside ``window`` and ``e_{k+1} > 0``."""
    lo, hi = window
    e = np.asarray(rel_errors, dtype=float)
    return [(a, b) for a, b in zip(e[:-1], e[1:]) if lo <= a <= hi and b > 0]


def fit_convergence_order(traces, window=ORDER_WINDOW):
    """Least-squares slope of ``log e_{k+1}`` against ``log e_k`` pooled over traces."""
    pairs = [p for errs in traces for p in error_pairs(errs, window)]
    if len(pairs) < 2:
        return float("nan")
    a, b = np.log(np.array(pairs)).T
    if np.ptp(a) == 0:
        return float("nan")
    return float(np.polyfit(a, b, 1)[0])


def binomial_halfwidth(successes, trials):
    """Normal-approximation 95% confidence half-width of a success rate."""
    p = successes / trials
    return 1.96 * math.sqrt(p * (1.0 - p) / trials)


def convergence_experiment(spec, workers=None):
    """Run ``spec.trials`` convergence traces at the single grid point."""
    if spec.kind != CONVERGENCE:
        raise InvalidArgumentError("spec.kind must be 'convergence'")
    if spec.max_iters == 0:
        trials = []
    else:
        trials = _run_all(spec, [(spec.grid[0], t) for t in range(spec.trials)], workers)
    errors = [tr.trace.rel_errors for tr in trials]
    per_trial = [fit_convergence_order([e]) for e in errors]
    summary = {
        "trials": len(trials),
        "successes": sum(tr.success for tr in trials),
        "breakdowns": sum(tr.breakdown for tr in trials),
        "convergence_order": fit_convergence_order(errors),
        "per_trial_order": per_trial,
        "iterations": [tr.trace.n_iter for tr in trials],
        "final_rel_err": [tr.trace.final_rel_err for tr in trials],
    }
    return ConvergenceResult(spec, trials, summary)


def success_rate_experiment(spec, workers=None):
    """Success rate at every grid point over ``spec.trials`` seeded trials."""
    if spec.kind != SUCCESS_RATE:
        raise InvalidArgumentError("spec.kind must be 'success-rate'")
    jobs = [(p, t) for p in spec.grid for t in range(spec.trials)]
    results = _run_all(spec, jobs, workers)
    points = []
    for p in spec.grid:
        group = [r for r in results if r.param == p]
        wins = [r for r in group if r.success]
        points.append(SweepPoint(
            param=p,
            trials=len(group),
            successes=len(wins),
            rate=len(wins) / len(group),
            mean_iters=float(np.mean([r.trace.n_iter for r in wins])) if wins else float("nan"),
            mean_wall_time=float(np.mean([r.wall_time for r in group])),
            ci_halfwidth=binomial_halfwidth(len(wins), len(group)),
        ))
    return SweepResult(spec, points)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return float(f"{v:.17g}") if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def result_rows(result):
    """Header and CSV rows for either result type."""
    if isinstance(result, SweepResult):
        rows = [[pt.param, pt.trials, pt.successes, pt.rate, pt.mean_iters] for pt in result.points]
        return SWEEP_HEADER, rows
    rows = [[tr.trial, rec.k, rec.rel_err, rec.f, rec.grad_norm]
            for tr in result.trials for rec in tr.trace.records]
    return CONVERGENCE_HEADER, rows


def write_results(result, out_dir, formats=None):
    """Write CSV, a JSON mirror with the full spec, and a gnuplot ``.dat`` file.

    Returns the list of written paths.  Numbers are written with 17
    significant digits.
    """
    formats = formats or result.spec.formats
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = "convergence" if isinstance(result, ConvergenceResult) else "success_rate"
    header, rows = result_rows(result)
    written = []

    if "csv" in formats:
        path = out_dir / f"{stem}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[_fmt(v) for v in row] for row in rows])
        written.append(path)

    if "json" in formats:
        path = out_dir / f"{stem}.json"
        payload = {"spec": result.spec.to_dict()}
        if isinstance(result, SweepResult):
            payload["points"] = [asdict(pt) for pt in result.points]
        else:
            payload["summary"] = result.summary
            payload["traces"] = [
                {"trial": tr.trial, "stop_reason": tr.trace.stop_reason,
                 "success": tr.success, "records": tr.trace.to_rows()}
                for tr in result.trials
            ]
        path.write_text(json.dumps(_json_safe(payload), indent=2, allow_nan=False) + "\n")
        written.append(path)

    if "dat" in formats:
        path = out_dir / f"{stem}.dat"
        lines = ["# " + " ".join(header)]
        if isinstance(result, SweepResult):
            lines[0] += " ci_halfwidth"
            for pt, row in zip(result.points, rows):
                lines.append(" ".join(_fmt(v) or "nan" for v in row + [pt.ci_halfwidth]))
        else:
            last = None
            for row in rows:
                if last is not None and row[0] != last:
                    lines += ["", ""]  # gnuplot dataset separator
                last = row[0]
                lines.append(" ".join(_fmt(v) or "nan" for v in row))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def load_spec_json(path):
    """Read the ExperimentSpec embedded in a results JSON file."""
    data = json.loads(Path(path).read_text())
    return ExperimentSpec.from_dict(data["spec"])
