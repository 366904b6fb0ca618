"""scikit-learn compatible estimator around the Newton solver."""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_matrix, check_complex_vector, check_observations
from .ensemble import from_rows
from .newton import DEFAULT_B_MAGNITUDE, FULLBATCH, SolverConfig, run


class AffinePhaseRetrieval(RegressorMixin, BaseEstimator):
    """Recover a complex signal from affine phaseless measurements.

    ``fit(A, y)`` treats row ``j`` of ``A`` as ``a_j^*`` and ``y`` as the
    observations ``|a_j^* x + b_j|^2``; the recovered signal is stored in
    ``coef_``.  ``predict(A)`` returns ``|A coef_ + b|^2``.

    Parameters
    ----------
    b : complex or array-like of shape (m,), default=52.0
        Affine offsets.  A scalar is replicated over all rows.
    mode : {"fullbatch", "resampled"}, default="fullbatch"
        Reuse all rows per step, or consume one of ``n_blocks`` disjoint
        blocks per step.
    max_iter : int, default=15
    tol : float, default=1e-10
        Stop once ``||grad f|| < tol * |b|^2`` (or the relative error drops
        below ``tol`` when ``x_true`` is passed to :meth:`fit`).
    n_blocks : int, optional
        Number of resampling blocks; required in resampled mode.
    regularization : float, default=1e-8
        Ridge added to the Newton system when it is numerically singular.
    track_lambda_min : bool, default=False
        Record the smallest Hessian eigenvalue at every iterate.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,), complex
    trace_ : RunTrace
    n_iter_ : int
    stop_reason_ : str
    """

    def __init__(self, b=DEFAULT_B_MAGNITUDE, mode=FULLBATCH, max_iter=15, tol=1e-10,
                 n_blocks=None, regularization=1e-8, track_lambda_min=False):
        self.b = b
        self.mode = mode
        self.max_iter = max_iter
        self.tol = tol
        self.n_blocks = n_blocks
        self.regularization = regularization
        self.track_lambda_min = track_lambda_min

    def _config(self, b_mag):
        return SolverConfig(mode=self.mode, max_iters=self.max_iter, tol=self.tol,
                            b_magnitude=b_mag if b_mag > 0 else 1.0,
                            regularization_floor=self.regularization,
                            n_blocks=self.n_blocks, track_lambda_min=self.track_lambda_min)

    def fit(self, X, y, x_true=None):
        X = check_complex_matrix(X, "X")
        y = check_observations(y, X.shape[0])
        ens = from_rows(X, b=self.b)
        if x_true is not None:
            x_true = check_complex_vector(x_true, X.shape[1], name="x_true")
        trace = run(ens, y, self._config(ens.b_magnitude), x=x_true)
        self.coef_ = trace.z
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.stop_reason_ = trace.stop_reason
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_complex_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        w = X @ self.coef_ + np.broadcast_to(np.asarray(self.b, dtype=np.complex128), X.shape[:1])
        return w.real ** 2 + w.imag ** 2
