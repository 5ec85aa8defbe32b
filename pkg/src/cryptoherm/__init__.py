"""Quasi-Hermitian (crypto-Hermitian) quantum mechanics toolkit.

Metric operators and Dyson maps for non-Hermitian Hamiltonians with real
spectra, evolution under time-dependent metrics, Sturm-Schroedinger
rectification of complex paths, lattice models and lattice scattering.
"""

__version__ = "0.1.0"

from .exceptions import *  # noqa: F401,F403
from .linalg import Spectrum, eig, geig, herm_sqrt
from .metric import (
    DysonMap,
    MetricOperator,
    band_metric,
    brabra,
    build_metric,
    dyson_from_metric,
    hermitize,
    quasi_hermiticity_residual,
)
from .estimators import BandMetricEstimator, MetricEstimator

__all__ = [
    "Spectrum",
    "eig",
    "geig",
    "herm_sqrt",
    "DysonMap",
    "MetricOperator",
    "band_metric",
    "brabra",
    "build_metric",
    "dyson_from_metric",
    "hermitize",
    "quasi_hermiticity_residual",
    "MetricEstimator",
    "BandMetricEstimator",
]
