"""scikit-learn style wrappers around the metric construction.

The estimators are thin: ``fit`` takes a Hamiltonian matrix, and
``transform`` maps kets (one per row) into the physical space.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .linalg import DEFAULT_TOL, eig
from .metric import band_metric, build_metric, dyson_from_metric, hermitize, quasi_hermiticity_residual

__all__ = ["MetricEstimator", "BandMetricEstimator"]


def _kets(X, dim):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected kets of length {dim} as rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("kets contain non-finite entries")
    return X


class _DysonTransformer(TransformerMixin, BaseEstimator):
    def _set_fitted(self, H, metric):
        dyson = dyson_from_metric(metric, self.tol)
        self.hamiltonian_ = H
        self.metric_ = metric
        self.theta_ = metric.theta
        self.omega_ = dyson.omega
        self.omega_inv_ = dyson.inverse
        self.dyson_ = dyson
        self.n_features_in_ = H.shape[0]
        return self

    def transform(self, X):
        """Physical-space images ``Omega psi`` of the rows of ``X``."""
        check_is_fitted(self, "omega_")
        return _kets(X, self.n_features_in_) @ self.omega_.T

    def inverse_transform(self, X):
        """Friendly-space preimages ``Omega^-1 phi`` of the rows of ``X``."""
        check_is_fitted(self, "omega_")
        return _kets(X, self.n_features_in_) @ self.omega_inv_.T

    def physical_hamiltonian(self):
        """Certified physical Hamiltonian ``Omega H Omega^-1``."""
        check_is_fitted(self, "omega_")
        return hermitize(self.hamiltonian_, self.dyson_, self.tol)

    def inner(self, phi, psi):
        """Metric inner product ``phi^H Theta psi``."""
        check_is_fitted(self, "theta_")
        return complex(np.conj(np.asarray(phi, dtype=complex)) @ self.theta_ @ np.asarray(psi, dtype=complex))

    def score(self, H, y=None):
        """Negative quasi-Hermiticity residual of the fitted metric on ``H``."""
        check_is_fitted(self, "theta_")
        return -quasi_hermiticity_residual(check_matrix(H, "H"), self.theta_)


class MetricEstimator(_DysonTransformer):
    """Spectral metric ``sum kappa_n l_n l_n^H`` and its principal Dyson map.

    Parameters
    ----------
    kappa : array_like, optional
        Positive weights, one per eigenvector; all ones by default.
    tol : float
        Certification tolerance.

    Examples
    --------
    >>> import numpy as np
    >>> est = MetricEstimator().fit(np.array([[0.5j, 1], [1, -0.5j]]))
    >>> bool(est.metric_.quasi_residual < 1e-10)
    True
    """

    def __init__(self, kappa=None, tol=DEFAULT_TOL):
        self.kappa = kappa
        self.tol = tol

    def fit(self, H, y=None):
        H = check_matrix(H, "H")
        metric = build_metric(H, self.kappa, self.tol)
        self.spectrum_ = eig(H, self.tol)
        return self._set_fitted(H, metric)


class BandMetricEstimator(_DysonTransformer):
    """Metric with suppressed entries beyond ``theta_range`` diagonals.

    Parameters
    ----------
    theta_range : int
        Allowed bandwidth (the fundamental length in lattice units).
    tol : float
        Certification tolerance.
    kappa_min : float
        Lower bound on the spectral weights.
    """

    def __init__(self, theta_range=1, tol=DEFAULT_TOL, kappa_min=1e-3):
        self.theta_range = theta_range
        self.tol = tol
        self.kappa_min = kappa_min

    def fit(self, H, y=None):
        H = check_matrix(H, "H")
        metric = band_metric(H, int(self.theta_range), self.tol, self.kappa_min)
        self.out_of_band_mass_ = metric.out_of_band_mass
        return self._set_fitted(H, metric)
