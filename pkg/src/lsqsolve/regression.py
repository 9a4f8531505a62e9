"""Estimator-style wrapper around the sketch solver.

``LowRankRegression`` follows the common fit/predict convention: ``fit``
interprets the design matrix X and target y as the regression
``min ||X beta - y||`` and stores an implicit minimum-norm coefficient
description built from length-square sketches.  ``predict`` materializes
the coefficients once and applies them densely; entry queries and
index sampling stay sublinear through ``query`` and ``sample_indices``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import check_positive, check_positive_int
from .errors import InvalidParameter
from .lsaccess import LsMatrix
from .rng import stream
from .solver import SolverConfig, sample_solutions, solve_pipeline


class LowRankRegression(RegressorMixin, BaseEstimator):
    """Minimum-norm linear regression through low-rank sketches.

    Parameters mirror the solver configuration: ``rank`` is the assumed
    rank of the design matrix, ``kappa`` an upper bound on its condition
    number restricted to the span, ``r``/``c`` the sketch sizes.  The
    design matrix is rescaled internally so its top singular value is at
    most 1; fitted coefficients are reported in the original scale.
    """

    def __init__(self, rank=1, kappa=2.0, r=200, c=800, epsilon=0.25,
                 eta=0.1, lambda_backend="exact", seed=0):
        self.rank = rank
        self.kappa = kappa
        self.r = r
        self.c = c
        self.epsilon = epsilon
        self.eta = eta
        self.lambda_backend = lambda_backend
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        check_positive_int(self.rank, "rank")
        check_positive(self.kappa, "kappa")
        if self.kappa < 1.0:
            raise InvalidParameter("kappa must be at least 1")
        # the spectral pipeline assumes singular values in (0, 1]
        top = float(np.linalg.norm(X, 2))
        scale = max(top, 1.0)
        ls = LsMatrix(X / scale)
        config = SolverConfig(epsilon=self.epsilon, eta=self.eta,
                              kappa=self.kappa, k=self.rank, mode="manual",
                              r=self.r, c=self.c,
                              lambda_backend=self.lambda_backend,
                              seed=self.seed)
        handle, timings = solve_pipeline(ls, np.asarray(y, dtype=np.float64),
                                         config)
        self.scale_ = scale
        self.solution_ = handle
        self.timings_ = timings
        self.singular_values_ = handle.spectrum.sigmas * scale
        self.detected_rank_ = handle.spectrum.detected_rank
        self.coef_ = np.real_if_close(handle.materialize() / scale)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise InvalidParameter(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_

    def query(self, indices):
        """Coefficient entries at 0-based positions without materializing."""
        check_is_fitted(self, "coef_")
        idx = np.asarray(indices, dtype=np.int64)
        return self.solution_.query_entries(idx) / self.scale_

    def sample_indices(self, size, seed=None):
        """Draw coefficient indices with probability |beta_j|^2 / ||beta||^2."""
        check_is_fitted(self, "coef_")
        check_positive_int(size, "size")
        gen = stream(self.seed if seed is None else seed, "estimator-samples")
        indices, _ = sample_solutions(self.solution_, gen, size)
        return indices
