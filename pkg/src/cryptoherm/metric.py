"""Metric operators, Dyson maps and the hermitized (physical) picture.

A metric for a Hamiltonian ``H`` with real spectrum is built from its left
eigenvectors,

    Theta = sum_n kappa_n l_n l_n^H,        H^H Theta = Theta H,

with every ``l_n`` normalized to unit Euclidean length, so the weights
``kappa`` carry a scale-free meaning.  The Dyson map is the principal
Hermitian square root ``Omega = Theta^(1/2)``.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from ._validation import check_matrix, check_same_dim, check_tol, check_vector
from .exceptions import (
    CertificateFailed,
    ComplexSpectrum,
    HermitizationFailed,
    InfeasibleBand,
)
from .linalg import DEFAULT_TOL, eig, herm_sqrt

__all__ = [
    "MetricOperator",
    "DysonMap",
    "Brabra",
    "build_metric",
    "quasi_hermiticity_residual",
    "dyson_from_metric",
    "hermitize",
    "brabra",
    "band_metric",
    "masked_metric",
    "out_of_band_mass",
]


@dataclass(frozen=True)
class MetricOperator:
    theta: np.ndarray
    kappa: np.ndarray
    quasi_residual: float
    min_eigenvalue: float
    hamiltonian: np.ndarray = field(default=None, repr=False)
    out_of_band_mass: float = None
    theta_range: int = None

    @property
    def dim(self):
        return self.theta.shape[0]


@dataclass(frozen=True)
class DysonMap:
    omega: np.ndarray
    inverse: np.ndarray
    source_metric: MetricOperator = field(default=None, repr=False)


@dataclass(frozen=True)
class Brabra:
    """Dual vector ``<<psi| = <psi| Theta``."""

    row_vector: np.ndarray
    source_ket: np.ndarray = field(repr=False)

    def __call__(self, ket):
        """The metric inner product ``<<self|ket>``."""
        return complex(self.row_vector @ np.asarray(ket, dtype=complex))


def quasi_hermiticity_residual(H, theta):
    """``|H^H Theta - Theta H|_F / (|H|_F |Theta|_F)``; zero for an exact metric."""
    H = check_matrix(H, "H")
    theta = check_matrix(theta, "theta")
    check_same_dim(H, theta)
    denom = np.linalg.norm(H) * np.linalg.norm(theta)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(H.conj().T @ theta - theta @ H) / denom)


def _real_spectrum(H, tol):
    spec = eig(H, tol)
    if not spec.reality_flag:
        bad = spec.values[np.abs(spec.values.imag) > spec.reality_tolerance]
        raise ComplexSpectrum(
            f"{len(bad)} eigenvalue(s) are not real within {spec.reality_tolerance:.2e}; "
            "no metric exists",
            offending=bad.tolist(),
        )
    return spec


def _unit_left(spec):
    L = spec.left_vectors
    return L / np.linalg.norm(L, axis=0)


def _certify(H, theta, kappa, tol, **extra):
    theta = (theta + theta.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(theta)[0])
    if not min_eig > 0:
        raise CertificateFailed(f"metric is not positive definite (min eigenvalue {min_eig:.3e})")
    resid = quasi_hermiticity_residual(H, theta)
    if resid > tol:
        raise CertificateFailed(f"quasi-Hermiticity residual {resid:.3e} exceeds {tol:.3e}")
    return MetricOperator(
        theta=theta,
        kappa=np.asarray(kappa, dtype=float),
        quasi_residual=resid,
        min_eigenvalue=min_eig,
        hamiltonian=H,
        **extra,
    )


def _check_kappa(kappa, dim):
    if kappa is None:
        return np.ones(dim)
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (dim,):
        raise ValueError(f"kappa must have length {dim}, got shape {kappa.shape}")
    if not np.all(kappa > 0) or not np.all(np.isfinite(kappa)):
        raise ValueError("kappa entries must be finite and strictly positive")
    return kappa


def build_metric(H, kappa=None, tol=DEFAULT_TOL):
    """Spectral-representation metric ``sum_n kappa_n l_n l_n^H``.

    Parameters
    ----------
    H : array_like, shape (n, n)
        Hamiltonian with real spectrum.
    kappa : array_like of positive float, optional
        One weight per eigenvector, in the eigenvalue order of :func:`eig`.
        Defaults to all ones.
    tol : float
        Eigen-solver tolerance and bound on the stored quasi-Hermiticity residual.

    Raises
    ------
    ComplexSpectrum
        Some eigenvalue is not real; ``offending`` lists them.
    DefectiveMatrix
        Propagated from :func:`eig`.
    """
    H = check_matrix(H, "H")
    tol = check_tol(tol)
    kappa = _check_kappa(kappa, H.shape[0])
    spec = _real_spectrum(H, tol)
    L = _unit_left(spec)
    theta = (L * kappa) @ L.conj().T
    return _certify(H, theta, kappa, tol)


def dyson_from_metric(metric, tol=DEFAULT_TOL):
    """Principal-root Dyson map ``Omega = Theta^(1/2)`` with certified inverse."""
    theta = metric.theta if isinstance(metric, MetricOperator) else check_matrix(metric, "theta")
    omega = herm_sqrt(theta, tol)
    inverse = np.linalg.solve(omega, np.eye(omega.shape[0], dtype=complex))
    n_theta = np.linalg.norm(theta)
    err_fact = np.linalg.norm(omega.conj().T @ omega - theta)
    err_inv = np.linalg.norm(omega @ inverse - np.eye(omega.shape[0]))
    if err_fact > tol * n_theta or err_inv > tol:
        raise CertificateFailed(
            f"Dyson map certificate failed: |O^H O - Theta| = {err_fact:.2e}, "
            f"|O O^-1 - I| = {err_inv:.2e}"
        )
    source = metric if isinstance(metric, MetricOperator) else None
    return DysonMap(omega=omega, inverse=inverse, source_metric=source)


def hermitize(H, dyson, tol=DEFAULT_TOL):
    """Physical Hamiltonian ``h = Omega H Omega^-1``.

    The result is certified Hermitian (``|h - h^H| <= 10 tol |h|``) and
    isospectral with ``H`` to 1e-8 relative to the spectral radius.

    Raises
    ------
    HermitizationFailed
        If the metric behind ``dyson`` does not hermitize ``H``.
    """
    H = check_matrix(H, "H")
    tol = check_tol(tol)
    check_same_dim(H, dyson.omega)
    if dyson.source_metric is not None and dyson.source_metric.hamiltonian is not None:
        if dyson.source_metric.quasi_residual > tol:
            raise HermitizationFailed("source metric is not certified to tol")
    h = dyson.omega @ H @ dyson.inverse
    nh = np.linalg.norm(h)
    asym = np.linalg.norm(h - h.conj().T)
    if asym > 10 * tol * max(nh, np.finfo(float).tiny):
        raise HermitizationFailed(
            f"|h - h^H| = {asym:.3e} exceeds {10 * tol * nh:.3e}; metric is inconsistent with H"
        )
    h = (h + h.conj().T) / 2
    ev_h = np.linalg.eigvalsh(h)
    ev_H = np.sort(np.linalg.eigvals(H).real)
    scale = 1.0 + np.abs(ev_h).max()
    if np.abs(ev_h - ev_H).max() > 1e-8 * scale:
        raise HermitizationFailed("hermitized operator is not isospectral with H")
    return h


def brabra(ket, theta):
    """S-space dual ``<<ket| = ket^H Theta``."""
    theta = check_matrix(theta, "theta")
    ket = check_vector(ket, theta.shape[0], "ket")
    return Brabra(row_vector=ket.conj() @ theta, source_ket=ket.copy())


def _band_mask(dim, theta_range):
    i, j = np.indices((dim, dim))
    return np.abs(i - j) > theta_range


def out_of_band_mass(theta, theta_range):
    """Frobenius mass of ``theta`` outside ``|i-j| <= theta_range``.

    Normalized by ``tr(Theta) / sqrt(dim)``, the Frobenius norm of the
    multiple of the identity with the same trace.
    """
    theta = check_matrix(theta, "theta")
    dim = theta.shape[0]
    mask = _band_mask(dim, theta_range)
    tr = abs(np.trace(theta).real)
    return float(np.linalg.norm(theta[mask]) * np.sqrt(dim) / tr) if tr else 0.0


def _gram(L, mask):
    """Real Gram matrix of the projectors ``l_n l_n^H`` restricted to ``mask``."""
    P = np.einsum("in,jn->nij", L, L.conj())
    Pm = P[:, mask] if mask is not None else P.reshape(P.shape[0], -1)
    return (Pm.conj() @ Pm.T).real


def _smo_qp(G, kappa_min, total, max_iter, gap_tol):
    """Minimize k^T G k over {k >= kappa_min, sum k = total} by pairwise descent.

    G is positive semidefinite so the problem is convex; each step is an exact
    line search along e_j - e_i for the most violating pair.
    """
    n = G.shape[0]
    k = np.full(n, total / n)
    grad = 2 * G @ k
    scale = max(np.abs(np.diag(G)).max(), np.finfo(float).tiny)
    for it in range(max_iter):
        movable = k > kappa_min * (1 + 1e-15)
        if not movable.any():
            break
        i = int(np.flatnonzero(movable)[np.argmax(grad[movable])])
        j = int(np.argmin(grad))
        gap = grad[i] - grad[j]
        if gap <= gap_tol * scale or i == j:
            break
        curv = G[i, i] + G[j, j] - 2 * G[i, j]
        step = k[i] - kappa_min
        if curv > 0:
            step = min(step, gap / (2 * curv))
        k[i] -= step
        k[j] += step
        grad += 2 * step * (G[:, j] - G[:, i])
    return k, it


def _masked_weights(H, mask, tol, kappa_min, max_iter):
    """Spectral weights minimizing the Frobenius mass of ``Theta[mask]`` at fixed trace."""
    spec = _real_spectrum(H, tol)
    L = _unit_left(spec)
    G = _gram(L, mask)
    kappa, _ = _smo_qp(G, kappa_min, float(H.shape[0]), max_iter, gap_tol=1e-15)
    return (L * kappa) @ L.conj().T, kappa


def masked_metric(H, mask, tol=DEFAULT_TOL, kappa_min=1e-3, max_iter=200_000):
    """Spectral metric with the least Frobenius mass on the entries selected by ``mask``.

    Same optimization as :func:`band_metric` with an arbitrary boolean
    ``mask``; the stored ``out_of_band_mass`` is the trace-relative mass on
    ``mask``.
    """
    H = check_matrix(H, "H")
    tol = check_tol(tol)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != H.shape:
        raise ValueError(f"mask must have shape {H.shape}")
    if not 0 < kappa_min < 1:
        raise ValueError("kappa_min must lie in (0, 1)")
    theta, kappa = _masked_weights(H, mask, tol, kappa_min, max_iter)
    tr = abs(np.trace(theta).real)
    mass = float(np.linalg.norm(theta[mask]) * np.sqrt(H.shape[0]) / tr)
    return _certify(H, theta, kappa, max(tol, 1e-10), out_of_band_mass=mass)


def band_metric(H, theta_range, tol=DEFAULT_TOL, kappa_min=1e-3, max_iter=200_000):
    """Metric concentrated in a band of half-width ``theta_range``.

    The weights are chosen to minimize the Frobenius mass of ``Theta``
    outside ``|i - j| <= theta_range`` over ``kappa_n >= kappa_min`` with the
    trace fixed at ``dim`` (which fixes the otherwise free overall scale).
    The problem is a convex quadratic program; it is solved by deterministic
    pairwise coordinate descent started from ``kappa = 1``.  With
    ``theta_range = 0`` the target is a diagonal (local) metric.

    If the relative out-of-band mass stays above ``tol`` an
    :class:`InfeasibleBand` warning is issued and the best metric is returned.
    """
    H = check_matrix(H, "H")
    tol = check_tol(tol)
    dim = H.shape[0]
    theta_range = int(theta_range)
    if not 0 <= theta_range < dim:
        raise ValueError(f"theta_range must lie in [0, {dim - 1}], got {theta_range}")
    if not 0 < kappa_min < 1:
        raise ValueError("kappa_min must lie in (0, 1)")
    theta, kappa = _masked_weights(H, _band_mask(dim, theta_range), tol, kappa_min, max_iter)
    mass = out_of_band_mass(theta, theta_range)
    if mass > tol:
        warnings.warn(
            f"out-of-band mass {mass:.3e} for theta_range={theta_range} exceeds tol={tol:.1e}",
            InfeasibleBand,
            stacklevel=2,
        )
    return _certify(H, theta, kappa, max(tol, 1e-10), out_of_band_mass=mass, theta_range=theta_range)
