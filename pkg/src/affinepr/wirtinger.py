"""Objective, Wirtinger gradient and Wirtinger Hessian of the affine loss.

The loss is

    f(z) = 1/(2m) * sum_j (|a_j^* z + b_j|^2 - y_j)^2

and derivatives are taken in the conjugate coordinates ``(z, conj(z))``.  With
``w_j = a_j^* z + b_j`` and ``r_j = |w_j|^2 - y_j``:

* gradient, upper half: ``1/m * sum_j r_j w_j a_j`` (this is ``df/dconj(z)``);
  the lower half is its conjugate;
* Hessian blocks: ``P = 1/m * sum_j (2|w_j|^2 - y_j) a_j a_j^*`` and
  ``Q = 1/m * sum_j w_j^2 a_j a_j^T``; the full matrix is
  ``[[P, Q], [conj(Q), conj(P)]]``.

With these conventions ``f(z + t v) = f(z) + t * Re(g^* v_hat) + t^2/2 * v_hat^* H v_hat + O(t^3)``
where ``v_hat = (v; conj(v))``.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import check_complex_vector, check_observations
from .exceptions import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class WirtingerHessian:
    """Hessian stored by its ``P`` (Hermitian) and ``Q`` (complex-symmetric) blocks."""

    P: np.ndarray
    Q: np.ndarray

    @property
    def n(self):
        return self.P.shape[0]

    def dense(self):
        """Assemble the full ``2n x 2n`` Hermitian matrix."""
        return np.block([[self.P, self.Q], [np.conj(self.Q), np.conj(self.P)]])

    def matvec(self, v):
        n = self.n
        v1, v2 = v[:n], v[n:]
        return np.concatenate([
            self.P @ v1 + self.Q @ v2,
            np.conj(self.Q) @ v1 + np.conj(self.P) @ v2,
        ])


def _prepare(ensemble, y, z):
    z = check_complex_vector(z, ensemble.n, name="z")
    y = getattr(y, "y", y)
    y = check_observations(y, ensemble.m)
    w = ensemble.rows @ z + ensemble.offsets
    return y, z, w


def residuals(ensemble, y, z):
    """Return ``(w, r)``: the affine values ``a_j^* z + b_j`` and residuals ``|w_j|^2 - y_j``."""
    y, z, w = _prepare(ensemble, y, z)
    return w, (w.real ** 2 + w.imag ** 2) - y


def eval_f(ensemble, y, z):
    """The objective ``f(z)``; exactly zero when ``z`` reproduces every observation."""
    _, r = residuals(ensemble, y, z)
    return float(np.dot(r, r) / (2 * ensemble.m))


def gradient(ensemble, y, z):
    """Wirtinger gradient as a length-``2n`` vector ``(g; conj(g))``."""
    w, r = residuals(ensemble, y, z)
    upper = ensemble.rows.conj().T @ (r * w) / ensemble.m
    return np.concatenate([upper, np.conj(upper)])


def hessian(ensemble, y, z, sequential=False):
    """Wirtinger Hessian at ``z``.

    ``sequential=True`` accumulates the rank-one terms one row at a time in
    index order; it is slow but its rounding does not depend on the BLAS build,
    which makes it suitable for golden files.
    """
    y, z, w = _prepare(ensemble, y, z)
    A = ensemble.rows
    m = ensemble.m
    c = 2.0 * (w.real ** 2 + w.imag ** 2) - y
    w2 = w * w
    if sequential:
        n = ensemble.n
        P = np.zeros((n, n), dtype=np.complex128)
        Q = np.zeros((n, n), dtype=np.complex128)
        for j in range(m):
            a = np.conj(A[j])
            P += c[j] * np.outer(a, np.conj(a))
            Q += w2[j] * np.outer(a, a)
        return WirtingerHessian(P / m, Q / m)
    AH = A.conj().T
    P = (AH * c) @ A / m
    Q = (AH * w2) @ A.conj() / m
    # remove rounding asymmetry so the structural invariants hold exactly
    P = 0.5 * (P + P.conj().T)
    Q = 0.5 * (Q + Q.T)
    return WirtingerHessian(P, Q)


def hessian_apply(ensemble, y, z, v):
    """Matrix-free product ``H(z) @ v`` in ``O(mn)`` time."""
    y, z, w = _prepare(ensemble, y, z)
    v = np.asarray(v, dtype=np.complex128)
    n = ensemble.n
    if v.shape != (2 * n,):
        raise InvalidArgumentError(f"v has shape {v.shape}, expected ({2 * n},)")
    A = ensemble.rows
    AH = A.conj().T
    m = ensemble.m
    c = 2.0 * (w.real ** 2 + w.imag ** 2) - y
    w2 = w * w

    def p_times(u):
        return AH @ (c * (A @ u)) / m

    def q_times(u):
        return AH @ (w2 * (A.conj() @ u)) / m

    v1, v2 = v[:n], v[n:]
    upper = p_times(v1) + q_times(v2)
    lower = np.conj(q_times(np.conj(v1))) + np.conj(p_times(np.conj(v2)))
    return np.concatenate([upper, lower])
