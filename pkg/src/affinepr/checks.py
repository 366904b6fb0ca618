"""Oracle suites run by ``affinepr check``.

Each suite returns a list of ``(name, value, limit, passed)`` tuples.
"""
import numpy as np

from .ensemble import gen_gaussian, measure, random_signal
from .oracle import (
    check_gradient_fd,
    check_hessian_fd,
    eig_bounds,
    mc_expectation_check,
    structured_matrix,
)
from .wirtinger import hessian, hessian_apply

GRADIENT_LIMIT = 1e-6
HESSIAN_LIMIT = 1e-5
EXPECTATION_LIMIT = 0.02
EIG_TOL = 1e-10


def _instance(n, seed, b=2.0 + 1.0j):
    rng = np.random.default_rng(seed)
    ens = gen_gaussian(n, 5 * n, seed, b=b)
    x = random_signal(n, seed + 1)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return ens, measure(ens, x), x, z, v


def gradient_suite(n=6, seed=0, instances=5):
    out = []
    for i in range(instances):
        ens, y, _, z, _ = _instance(n, seed + i)
        d = check_gradient_fd(ens, y, z)
        out.append((f"gradient fd #{i}", d, GRADIENT_LIMIT, d < GRADIENT_LIMIT))
    return out


def hessian_suite(n=6, seed=0, instances=5):
    out = []
    for i in range(instances):
        ens, y, _, z, v = _instance(n, seed + i)
        d = check_hessian_fd(ens, y, z, v)
        out.append((f"hessian fd #{i}", d, HESSIAN_LIMIT, d < HESSIAN_LIMIT))
        H = hessian(ens, y, z)
        dense = H.dense()
        herm = float(np.max(np.abs(dense - dense.conj().T)))
        out.append((f"hermitian #{i}", herm, 1e-12, herm < 1e-12))
        vv = np.concatenate([v, v[::-1]])
        ref = dense @ vv
        gap = float(np.linalg.norm(hessian_apply(ens, y, z, vv) - ref) / np.linalg.norm(ref))
        out.append((f"matrix-free product #{i}", gap, 1e-12, gap < 1e-12))
    return out


def expectation_suite(n=8, seed=0, m=None, b=52.0):
    m = m or 25_000 * n
    x = random_signal(n, seed + 1)
    z = x + 0.5 * random_signal(n, seed + 2)
    d = mc_expectation_check("gaussian", n, x, z, b, m, seed)
    return [(f"expectation n={n} m={m}", d, EXPECTATION_LIMIT, d < EXPECTATION_LIMIT)]


def eig_suite(n=6, seed=0, triples=100):
    rng = np.random.default_rng(seed)
    out = []
    worst_min = 0.0
    worst_max = -np.inf
    for _ in range(triples):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        beta = np.vdot(u, u).real + 1.0 + abs(rng.standard_normal())
        rep = eig_bounds(u, v, beta)
        ev = np.linalg.eigvalsh(structured_matrix(u, v, beta))
        worst_min = max(worst_min, abs(rep.lambda_min - ev[0]) / (1.0 + beta))
        worst_max = max(worst_max, ev[-1] - rep.lambda_max_bound)
    out.append(("closed-form lambda_min", worst_min, EIG_TOL, worst_min < EIG_TOL))
    out.append(("lambda_max overshoot", worst_max, EIG_TOL, worst_max <= EIG_TOL))
    return out


SUITES = {
    "gradient": gradient_suite,
    "hessian": hessian_suite,
    "expectation": expectation_suite,
    "eig": eig_suite,
}
