"""Acceptance criteria, one test each.  Every test prints a single PASS/FAIL line."""
import math

import numpy as np
import pytest

from affinepr import ensemble as E
from affinepr import lab
from affinepr.newton import contraction_constant, newton_step
from affinepr.oracle import (
    check_gradient_fd, check_hessian_fd, eig_bounds, mc_expectation_check, structured_matrix,
)
from affinepr.wirtinger import eval_f, gradient, hessian

from helpers import crandn


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if passed else 'FAIL'}: {detail}")
    return emit


def _convergence(model, grid):
    spec = lab.ExperimentSpec(kind="convergence", model=model, n=128, grid=[grid],
                              b_magnitude=52.0, trials=100, max_iters=10, tol=1e-12,
                              base_seed=2024)
    return lab.convergence_experiment(spec)


@pytest.fixture(scope="module")
def gaussian_runs():
    return _convergence("gaussian", 4.0)


@pytest.fixture(scope="module")
def cdp_runs():
    return _convergence("cdp", 6)


@pytest.fixture(scope="module")
def sweep():
    spec = lab.ExperimentSpec(kind="success-rate", n=64, grid=list(np.arange(1.0, 5.01, 0.5)),
                              trials=50, max_iters=15, success_threshold=1e-5, base_seed=7)
    return lab.success_rate_experiment(spec)


def _reached(result, level=1e-10, within=10):
    return sum(any(r.rel_err < level for r in tr.trace.records[:within + 1])
               for tr in result.trials)


def _convergence_criterion(number, result, report):
    hits = _reached(result)
    order = result.summary["convergence_order"]
    passed = hits >= 95 and order >= 1.8
    report(number, passed, f"{hits}/100 trials below 1e-10 within 10 steps, order {order:.3f}")
    assert hits >= 95
    assert order >= 1.8


def test_criterion_01_gaussian_quadratic_convergence(gaussian_runs, report):
    _convergence_criterion(1, gaussian_runs, report)


def test_criterion_02_cdp_quadratic_convergence(cdp_runs, report):
    _convergence_criterion(2, cdp_runs, report)


def test_criterion_03_success_rate_trend(sweep, report):
    rates = [pt.rate for pt in sweep.points]
    drops = [max(rates[:i]) - rates[i] for i in range(1, len(rates))]
    worst_drop = max(drops)
    tail = [pt.rate for pt in sweep.points if pt.param >= 4.0]
    passed = worst_drop <= 0.15 and all(r == 1.0 for r in tail)
    report(3, passed, "rates " + " ".join(f"{pt.param:g}:{pt.rate:.2f}" for pt in sweep.points))
    assert worst_drop <= 0.15
    assert all(r == 1.0 for r in tail)


def test_criterion_04_contraction_constant(gaussian_runs, report):
    beta = contraction_constant(1.0, 52.0)
    ratios = [b / (10 * beta * a * a)
              for tr in gaussian_runs.trials for a, b in lab.error_pairs(tr.trace.rel_errors)]
    worst = max(ratios)
    report(4, worst <= 1.0, f"worst e_(k+1) / (10 beta e_k^2) = {worst:.3f} over {len(ratios)} steps")
    assert len(ratios) > 0
    assert worst <= 1.0


def test_criterion_05_hessian_floor(report):
    n = 32
    m = math.ceil(8 * n * math.log(n))
    b_sq = 52.0
    lams = []
    for i in range(20):
        ens = E.gen_gaussian(n, m, seed=500 + i, b=math.sqrt(b_sq))
        x = E.random_signal(n, 600 + i)
        radius = np.random.default_rng(700 + i).uniform(0.0, 1.0)
        z = x + radius * E.random_signal(n, 800 + i)
        assert b_sq >= 4 * (np.vdot(x, x).real + np.vdot(z, z).real)
        lams.append(np.linalg.eigvalsh(hessian(ens, E.measure(ens, x), z).dense())[0])
    low = min(lams)
    report(5, low >= b_sq / 4, f"smallest lambda_min {low:.3f} (floor {b_sq / 4:g})")
    assert low >= b_sq / 4


def test_criterion_06_derivatives_match_finite_differences(report):
    rng = np.random.default_rng(6)
    grad_worst = hess_worst = 0.0
    for i in range(20):
        n = 1 + i % 8
        b = complex(*rng.uniform(-3, 3, size=2))
        ens = E.gen_gaussian(n, 5 * n, seed=1000 + i, b=b)
        y = E.measure(ens, E.random_signal(n, 2000 + i))
        z = crandn(rng, n)
        grad_worst = max(grad_worst, check_gradient_fd(ens, y, z))
        hess_worst = max(hess_worst, check_hessian_fd(ens, y, z, crandn(rng, n)))
    passed = grad_worst < 1e-6 and hess_worst < 1e-5
    report(6, passed, f"gradient {grad_worst:.2e} (< 1e-6), Hessian form {hess_worst:.2e} (< 1e-5)")
    assert grad_worst < 1e-6
    assert hess_worst < 1e-5


def test_criterion_07_expectation_oracle(report):
    n = 8
    x = E.random_signal(n, 71)
    z = x + 0.5 * E.random_signal(n, 72)
    seeds = range(5)
    big = [mc_expectation_check("gaussian", n, x, z, 52.0, 200_000, s) for s in seeds]
    small = [mc_expectation_check("gaussian", n, x, z, 52.0, 50_000, 100 + s) for s in seeds]
    ratio = np.mean(big) / np.mean(small)
    passed = big[0] < 0.02 and 0.35 <= ratio <= 0.65
    report(7, passed, f"deviation {big[0]:.4f} at m=2e5 (< 0.02); quadrupling ratio {ratio:.3f}")
    assert big[0] < 0.02
    assert 0.35 <= ratio <= 0.65


def test_criterion_08_structured_eigenvalues(report):
    rng = np.random.default_rng(8)
    min_gap = max_excess = -np.inf
    for _ in range(100):
        n = int(rng.integers(1, 9))
        u, v = crandn(rng, n), crandn(rng, n)
        beta = np.vdot(u, u).real + rng.uniform(1e-3, 5.0)
        rep = eig_bounds(u, v, beta)
        ev = np.linalg.eigvalsh(structured_matrix(u, v, beta))
        min_gap = max(min_gap, abs(rep.lambda_min - ev[0]) / (1 + beta))
        max_excess = max(max_excess, ev[-1] - rep.lambda_max_bound)
    passed = min_gap < 1e-10 and max_excess <= 1e-10
    report(8, passed, f"lambda_min gap {min_gap:.2e}, lambda_max excess {max_excess:.2e}")
    assert min_gap < 1e-10
    assert max_excess <= 1e-10


def test_criterion_09_no_phase_ambiguity(gaussian_runs, cdp_runs, report):
    checked = 0
    worst = 0.0
    for result in (gaussian_runs, cdp_runs):
        for tr in result.trials:
            if tr.success:
                checked += 1
                worst = max(worst, np.linalg.norm(tr.trace.z - tr.x))
    passed = checked > 0 and worst < 1e-5
    report(9, passed, f"{checked} successful trials, worst raw ||z - x|| = {worst:.2e}")
    assert checked > 0
    assert worst < 1e-5


def test_criterion_10_micro_instance(report):
    ens = E.from_rows([[1.0]], b=10.0)
    y = E.measure(ens, [1.0])
    f0 = eval_f(ens, y, [0.0])
    g = gradient(ens, y, [0.0])[0]
    H = hessian(ens, y, [0.0])
    z1 = newton_step(ens, y, [0.0])[0]
    errs = [abs(f0 - 220.5), abs(g + 210), abs(H.P[0, 0] - 79), abs(H.Q[0, 0] - 100),
            abs(z1 - 210 / 179)]
    worst = max(errs)
    report(10, worst < 1e-12, f"f={f0:g} grad={g.real:g} P={H.P[0, 0].real:g} "
                              f"Q={H.Q[0, 0].real:g} z1={z1.real:.12f} (max err {worst:.1e})")
    assert worst < 1e-12
