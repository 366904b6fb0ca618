"""Closed-form reference quantities and independent numerical checkers.

The closed forms are the expected Hessian at the solution and at a general
iterate (for Gaussian or admissible CDP rows with a constant offset ``b``),
and the spectrum of the structured matrix

    E = [[beta I - u u^* + 2 v v^*, 2 v v^T], [2 conj(v) v^*, beta I - conj(u) u^T + 2 conj(v) v^T]].

The checkers compare the analytic Wirtinger derivatives against finite
differences of the objective, and the empirical Hessian against its
expectation by Monte Carlo.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_complex_vector, check_positive_int
from .ensemble import CDP, GAUSSIAN, generate, measure
from .exceptions import ConditionViolated, InvalidArgumentError
from .wirtinger import WirtingerHessian, eval_f, gradient, hessian

FD_STEP = 1e-6
SECOND_FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class ExpectedHessian(WirtingerHessian):
    """Expected Hessian blocks together with the parameters they came from."""

    form: str = "at_x"
    params: dict = field(default_factory=dict)


def expected_hessian_at_x(x, b):
    """``E(S)`` at the solution: ``P = (||x||^2 + |b|^2) I + x x^*``, ``Q = 2 x x^T``."""
    x = check_complex_vector(x)
    n = x.shape[0]
    scale = np.vdot(x, x).real + abs(b) ** 2
    P = scale * np.eye(n) + np.outer(x, x.conj())
    Q = 2.0 * np.outer(x, x)
    return ExpectedHessian(P, Q, "at_x", {"x": x, "b": complex(b)})


def expected_hessian_general(z, x, b):
    """``E(S)`` of the Hessian at ``z`` when the data were generated from ``x``.

    ``P = beta I - x x^* + 2 z z^*`` and ``Q = 2 z z^T`` with
    ``beta = 2||z||^2 - ||x||^2 + |b|^2``.
    """
    x = check_complex_vector(x)
    z = check_complex_vector(z, x.shape[0], name="z")
    n = x.shape[0]
    beta = 2.0 * np.vdot(z, z).real - np.vdot(x, x).real + abs(b) ** 2
    P = beta * np.eye(n) - np.outer(x, x.conj()) + 2.0 * np.outer(z, z.conj())
    Q = 2.0 * np.outer(z, z)
    return ExpectedHessian(P, Q, "general", {"x": x, "z": z, "b": complex(b), "beta": beta})


@dataclass
class EigReport:
    lambda_min: float
    lambda_max_bound: float
    roots: list


def structured_matrix(u, v, beta):
    """Dense assembly of ``E(u, v, beta)``."""
    u = check_complex_vector(u, name="u")
    v = check_complex_vector(v, u.shape[0], name="v")
    n = u.shape[0]
    P = beta * np.eye(n) - np.outer(u, u.conj()) + 2.0 * np.outer(v, v.conj())
    Q = 2.0 * np.outer(v, v)
    return WirtingerHessian(P, Q).dense()


def eig_bounds(u, v, beta):
    """Closed-form extreme eigenvalues of ``E(u, v, beta)``; needs ``beta > ||u||^2``.

    ``roots`` holds the four distinct eigenvalue expressions: ``beta``,
    ``beta - ||u||^2`` and the two roots of the secular equation of the
    rank-one update.
    """
    u = check_complex_vector(u, name="u")
    v = check_complex_vector(v, u.shape[0], name="v")
    uu = np.vdot(u, u).real
    vv = np.vdot(v, v).real
    if not beta > uu:
        raise ConditionViolated(f"beta={beta} must exceed ||u||^2={uu}")
    uv = abs(np.vdot(u, v)) ** 2
    disc = math.sqrt(max((4.0 * vv + uu) ** 2 - 16.0 * uv, 0.0))
    centre = 0.5 * uu - 2.0 * vv
    roots = [beta, beta - uu, beta - (centre + 0.5 * disc), beta - (centre - 0.5 * disc)]
    return EigReport(lambda_min=beta - uu, lambda_max_bound=beta + 4.0 * vv, roots=roots)


def _directional_scale(a, b):
    # relative discrepancy; falls back to absolute when the reference is exactly zero
    scale = np.max(np.abs(a))
    diff = np.max(np.abs(a - b))
    return float(diff / scale) if scale > 0 else float(diff)


def fd_gradient(ensemble, y, z, h=None):
    """Central differences of ``f`` over the ``2n`` real coordinates ``(Re z, Im z)``."""
    z = check_complex_vector(z, ensemble.n, name="z")
    if h is None:
        h = FD_STEP * (1.0 + np.linalg.norm(z))
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    n = ensemble.n
    out = np.empty(2 * n)
    for i in range(n):
        for part, unit in ((0, 1.0), (1, 1j)):
            e = np.zeros(n, dtype=np.complex128)
            e[i] = unit * h
            out[part * n + i] = (eval_f(ensemble, y, z + e) - eval_f(ensemble, y, z - e)) / (2 * h)
    return out


def check_gradient_fd(ensemble, y, z, h=None):
    """Max discrepancy between the Wirtinger gradient and central differences.

    Uses ``df/dRe(z_i) = 2 Re(g_i)`` and ``df/dIm(z_i) = 2 Im(g_i)``.  The result
    is relative to the largest analytic component, or absolute when the
    analytic gradient vanishes.
    """
    n = ensemble.n
    g = gradient(ensemble, y, z)[:n]
    analytic = np.concatenate([2.0 * g.real, 2.0 * g.imag])
    return _directional_scale(analytic, fd_gradient(ensemble, y, z, h))


def check_hessian_fd(ensemble, y, z, v, h=None):
    """Relative gap between ``v_hat^* H v_hat`` and the second difference of ``f`` along ``v``."""
    z = check_complex_vector(z, ensemble.n, name="z")
    v = check_complex_vector(v, ensemble.n, name="v")
    v = v / np.linalg.norm(v)
    if h is None:
        h = SECOND_FD_STEP * (1.0 + np.linalg.norm(z))
    vhat = np.concatenate([v, v.conj()])
    analytic = np.vdot(vhat, hessian(ensemble, y, z).matvec(vhat)).real
    fd = (eval_f(ensemble, y, z + h * v) - 2.0 * eval_f(ensemble, y, z)
          + eval_f(ensemble, y, z - h * v)) / h ** 2
    return abs(fd - analytic) / max(abs(analytic), np.finfo(float).tiny)


def taylor_remainders(ensemble, y, z, v, ts=(1e-2, 1e-3, 1e-4)):
    """``|f(z + t v) - quadratic model|`` for each ``t``; should scale like ``t^3``."""
    z = check_complex_vector(z, ensemble.n, name="z")
    v = check_complex_vector(v, ensemble.n, name="v")
    vhat = np.concatenate([v, v.conj()])
    f0 = eval_f(ensemble, y, z)
    lin = np.vdot(gradient(ensemble, y, z), vhat).real
    quad = np.vdot(vhat, hessian(ensemble, y, z).matvec(vhat)).real
    return np.array([abs(eval_f(ensemble, y, z + t * v) - (f0 + t * lin + 0.5 * t * t * quad))
                     for t in ts])


def spectral_norm(M):
    """Largest singular value of a Hermitian matrix via its eigenvalues."""
    return float(np.max(np.abs(np.linalg.eigvalsh(M))))


def mc_expectation_check(model, n, x, z, b, m, seed):
    """Relative spectral deviation ``||S - E(S)|| / ||E(S)||`` on a fresh ensemble.

    ``S`` is the Hessian at ``z`` with data generated from ``x``.  For the CDP
    model ``m`` must be a multiple of ``n`` (``L = m / n``).
    """
    n = check_positive_int(n, "n")
    m = check_positive_int(m, "m")
    x = check_complex_vector(x, n)
    z = check_complex_vector(z, n, name="z")
    if model == CDP:
        if m % n:
            raise InvalidArgumentError("CDP needs m to be a multiple of n")
        ens = generate(CDP, n, seed, L=m // n, b=b)
    elif model == GAUSSIAN:
        ens = generate(GAUSSIAN, n, seed, m=m, b=b)
    else:
        raise InvalidArgumentError(f"unknown model {model!r}")
    S = hessian(ens, measure(ens, x), z).dense()
    E = expected_hessian_general(z, x, b).dense()
    return spectral_norm(S - E) / spectral_norm(E)


def segment_points(z, x, count):
    """``count`` equispaced points ``t x + (1 - t) z`` on the segment from ``z`` to ``x``."""
    return [t * x + (1.0 - t) * z for t in np.linspace(0.0, 1.0, count)]


def lipschitz_estimate(ensemble, y, z, x, count=6):
    """Largest ``||H(s1) - H(s2)|| / ||s1 - s2||`` over pairs of segment points."""
    pts = segment_points(check_complex_vector(z, ensemble.n, name="z"),
                         check_complex_vector(x, ensemble.n), count)
    Hs = [hessian(ensemble, y, s).dense() for s in pts]
    best = 0.0
    for i in range(count):
        for j in range(i + 1, count):
            best = max(best, spectral_norm(Hs[i] - Hs[j]) / np.linalg.norm(pts[i] - pts[j]))
    return best


def lipschitz_reference(delta):
    """The Hessian Lipschitz constant ``13 (1 + sqrt(delta))``."""
    return 13.0 * (1.0 + math.sqrt(delta))
