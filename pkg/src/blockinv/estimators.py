"""scikit-learn style wrappers.

``SpinInverse`` and ``LUInverse`` learn the inverse of a square matrix in
``fit`` and apply it to samples in ``transform``.  ``CostModelRegressor``
calibrates the level-sum model to measured wall-clock times.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_square_matrix
from .bench import fit_constant
from .blockmatrix import densify, partition
from .cost import CostParams, CostWeights, levelsum
from .executor import ExecConfig
from .lu import lu_invert
from .spin import spin_invert

DEFAULT_BLOCK = 64


class _BlockInverse(BaseEstimator, TransformerMixin):
    _algorithm = None

    def __init__(self, block_size=None, cores=1):
        self.block_size = block_size
        self.cores = cores

    def _invert(self, a, config):
        raise NotImplementedError

    def fit(self, X, y=None):
        """Invert the square matrix `X`.

        Parameters
        ----------
        X : array-like of shape (n, n)
            Order must be a power of two.
        y : ignored

        Returns
        -------
        self
        """
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        X = check_square_matrix(X, "X")
        n = X.shape[0]
        bs = self.block_size if self.block_size is not None else min(n, DEFAULT_BLOCK)
        inv, trace = self._invert(partition(X, bs), ExecConfig(cores=self.cores))
        self.inverse_ = densify(inv)
        self.trace_ = trace
        self.n_features_in_ = n
        return self

    def transform(self, X):
        """Apply the inverse to each row: returns ``X @ inverse_.T``."""
        check_is_fitted(self, "inverse_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.inverse_.T


class SpinInverse(_BlockInverse):
    """Strassen-style block-recursive inverse.

    Parameters
    ----------
    block_size : int, optional
        Tile side; defaults to ``min(n, 64)``.
    cores : int
        Executor parallelism cap.
    """

    def _invert(self, a, config):
        return spin_invert(a, config)


class LUInverse(_BlockInverse):
    """Block-recursive LU inverse; same parameters as SpinInverse."""

    def _invert(self, a, config):
        return lu_invert(a, config)


class CostModelRegressor(BaseEstimator, RegressorMixin):
    """Level-sum cost model with a fitted time-per-unit constant.

    Features are rows ``(n, b, cores)``; targets are measured times in any
    unit.  The only fitted parameter is ``constant_``, the least-squares
    scale from model units to the target unit.
    """

    def __init__(self, algorithm="spin", comm_weight=None, block_weight=None):
        self.algorithm = algorithm
        self.comm_weight = comm_weight
        self.block_weight = block_weight

    def _weights(self):
        d = CostWeights()
        return CostWeights(
            comm=d.comm if self.comm_weight is None else self.comm_weight,
            block=d.block if self.block_weight is None else self.block_weight,
        )

    def _units(self, X):
        X = check_array(X, dtype=None)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 feature columns (n, b, cores), got {X.shape[1]}")
        w = self._weights()
        return np.array(
            [levelsum(self.algorithm, CostParams(int(n), int(b), int(c), w)).total for n, b, c in X]
        )

    def fit(self, X, y):
        y = check_array(np.asarray(y, dtype=np.float64).reshape(-1, 1)).ravel()
        units = self._units(X)
        if len(units) != len(y):
            raise ValueError("X and y have different lengths")
        self.constant_ = fit_constant(units, y)
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        check_is_fitted(self, "constant_")
        return self.constant_ * self._units(X)
