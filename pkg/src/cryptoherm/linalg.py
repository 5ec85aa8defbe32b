"""Dense complex spectral kernels.

Operators are carried as plain ``numpy`` complex arrays; :func:`check_matrix`
enforces the square/finite invariants at every entry point.  Spectra come
back as a :class:`Spectrum` holding right eigenvectors (unit columns) and the
dual left basis, normalized so that ``left.conj().T @ right == I``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import check_matrix, check_same_dim, check_tol, is_hermitian
from .exceptions import (
    DefectiveMatrix,
    NonConvergence,
    NotHermitian,
    NotPositiveDefinite,
    SingularWeight,
)

DEFAULT_TOL = 1e-10
REALITY_RTOL = 1e-9
# numerically coincident eigenvalues are grouped and given an orthonormal basis
_CLUSTER_RTOL = 1e-12
_MAX_WEIGHT_COND = 1e13


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with paired right and left eigenvectors.

    ``right_vectors[:, n]`` and ``left_vectors[:, n]`` belong to
    ``values[n]``.  For a generalized problem ``H r = E W r`` the left
    vectors are those of ``W^-1 H``, i.e. ``W^H l`` in terms of the left
    generalized eigenvectors ``l``, so the biorthogonality relation is the
    plain ``L^H R = I`` in both cases.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    reality_flag: bool
    reality_tolerance: float
    max_residual: float = 0.0
    weight_condition: float = 1.0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.values)

    @property
    def dim(self):
        return self.right_vectors.shape[0]

    def biorthogonality_error(self):
        G = self.left_vectors.conj().T @ self.right_vectors
        return float(np.abs(G - np.diag(np.diag(G))).max(initial=0.0))

    def reconstruct(self):
        """``sum_n lambda_n r_n l_n^H / (l_n^H r_n)``."""
        R, L = self.right_vectors, self.left_vectors
        d = np.einsum("ij,ij->j", L.conj(), R)
        return (R * (self.values / d)) @ L.conj().T


def fro_norm(M):
    """Frobenius norm of a complex matrix."""
    return float(np.linalg.norm(check_matrix(M), "fro"))


def _reality(values, rtol=REALITY_RTOL):
    scale = 1.0 + (np.abs(values).max() if len(values) else 0.0)
    tol = rtol * scale
    flag = bool(np.all(np.abs(values.imag) <= tol))
    return flag, tol


def _sort_order(values):
    return np.lexsort((values.imag, values.real))


def _orthonormalize_clusters(values, R, scale, tol):
    """Give each group of coincident eigenvalues an orthonormal eigenbasis."""
    R = R.copy()
    n = len(values)
    i = 0
    thresh = _CLUSTER_RTOL * max(scale, 1.0)
    while i < n:
        j = i + 1
        while j < n and abs(values[j] - values[i]) <= thresh:
            j += 1
        if j - i > 1:
            sv = np.linalg.svd(R[:, i:j], compute_uv=False)
            if sv[-1] < tol * sv[0]:
                raise DefectiveMatrix(
                    f"eigenvalue {values[i]} has {j - i} coincident copies but a "
                    "rank-deficient eigenspace"
                )
            Q, _ = np.linalg.qr(R[:, i:j])
            R[:, i:j] = Q
        i = j
    return R


def _finish(values, R, tol, residual_fn, scale, weight_condition=1.0):
    order = _sort_order(values)
    values = values[order]
    R = R[:, order]
    norms = np.linalg.norm(R, axis=0)
    if np.any(norms == 0):
        raise DefectiveMatrix("eigensolver returned a zero eigenvector")
    R = R / norms
    R = _orthonormalize_clusters(values, R, scale, tol)

    try:
        Rinv = np.linalg.solve(R, np.eye(R.shape[0], dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise DefectiveMatrix("eigenvector matrix is singular") from exc
    if not np.all(np.isfinite(Rinv)):
        raise DefectiveMatrix("eigenvector matrix is singular")
    L = Rinv.conj().T

    # |l^H r| = 1 after the dual-basis construction, so the defectiveness test
    # |l^H r| < tol |l| |r| reduces to |l| > 1/tol
    lnorm = np.linalg.norm(L, axis=0)
    bad = np.flatnonzero(lnorm * tol > 1.0)
    if bad.size:
        raise DefectiveMatrix(
            f"near-Jordan structure at eigenvalues {values[bad].tolist()}; "
            f"eigenvalue condition {lnorm[bad].max():.3e} exceeds 1/tol"
        )
    res_r, res_l = residual_fn(values, R, L)
    if np.any(res_r > tol * scale):
        raise NonConvergence(
            f"right eigenvector residual {res_r.max():.3e} exceeds {tol * scale:.3e}"
        )
    if np.any(res_l > tol * scale * lnorm):
        raise DefectiveMatrix(
            f"left eigenvector residual {res_l.max():.3e} too large; "
            "eigenbasis is too ill-conditioned"
        )
    flag, rtol = _reality(values)
    return Spectrum(
        values=values,
        right_vectors=R,
        left_vectors=L,
        reality_flag=flag,
        reality_tolerance=rtol,
        max_residual=float(max(res_r.max(initial=0.0), (res_l / lnorm).max(initial=0.0))),
        weight_condition=weight_condition,
    )


def eig(M, tol=DEFAULT_TOL):
    """Right and left eigenpairs of a dense complex matrix.

    Eigenvalues are sorted by (real, imaginary) part.  Residuals
    ``|M r - lambda r|`` and ``|l^H M - lambda l^H|`` are certified against
    ``tol * |M|_F``.

    Raises
    ------
    NonConvergence
        LAPACK failed, or a right residual is out of bounds.
    DefectiveMatrix
        The eigenbasis is (numerically) incomplete.
    """
    M = check_matrix(M, "M")
    tol = check_tol(tol)
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    try:
        if is_hermitian(M, 1e-14):
            w, R = sla.eigh((M + M.conj().T) / 2)
            w = w.astype(complex)
        else:
            w, R = sla.eig(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(str(exc)) from exc

    def residuals(values, R, L):
        rr = np.linalg.norm(M @ R - R * values, axis=0)
        rl = np.linalg.norm(M.conj().T @ L - L * values.conj(), axis=0)
        return rr, rl

    return _finish(w, R, tol, residuals, scale)


def geig(H, W, tol=DEFAULT_TOL):
    """Generalized eigenproblem ``H r = E W r``.

    Hermitian ``H`` with Hermitian positive-definite ``W`` goes through
    ``eigh``; everything else through the QZ algorithm.  The returned left
    vectors are the left eigenvectors of ``W^-1 H`` (see :class:`Spectrum`).
    """
    H = check_matrix(H, "H")
    W = check_matrix(W, "W")
    check_same_dim(H, W)
    tol = check_tol(tol)
    cond = float(np.linalg.cond(W))
    if not np.isfinite(cond) or cond > _MAX_WEIGHT_COND:
        raise SingularWeight(f"weight operator is numerically singular (cond={cond:.3e})")
    scale = max(np.linalg.norm(H) + np.linalg.norm(W), np.finfo(float).tiny)
    try:
        w = None
        if is_hermitian(H, 1e-14) and is_hermitian(W, 1e-14):
            Wh = (W + W.conj().T) / 2
            if np.linalg.eigvalsh(Wh).min() > 0:
                w, R = sla.eigh((H + H.conj().T) / 2, Wh)
                w = w.astype(complex)
        if w is None:
            w, R = sla.eig(H, W)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SingularWeight("infinite generalized eigenvalues")

    def residuals(values, R, L):
        rr = np.linalg.norm(H @ R - (W @ R) * values, axis=0)
        # left vectors of W^-1 H: l^H W^-1 H = E l^H, i.e. H^H m = E^* W^H m with m = W^-H l
        Mv = np.linalg.solve(W.conj().T, L)
        rl = np.linalg.norm(H.conj().T @ Mv - (W.conj().T @ Mv) * values.conj(), axis=0)
        return rr, rl

    return _finish(w, R, tol, residuals, scale, weight_condition=cond)


def herm_sqrt(P, tol=DEFAULT_TOL):
    """Principal square root of a Hermitian positive-definite matrix.

    Raises
    ------
    NotHermitian
        If ``|P - P^H| > tol |P|``.
    NotPositiveDefinite
        If the smallest eigenvalue does not exceed ``tol |P|``.
    """
    P = check_matrix(P, "P")
    tol = check_tol(tol)
    scale = np.linalg.norm(P)
    if np.linalg.norm(P - P.conj().T) > tol * scale:
        raise NotHermitian(
            f"|P - P^H| = {np.linalg.norm(P - P.conj().T):.3e} exceeds {tol * scale:.3e}"
        )
    Ph = (P + P.conj().T) / 2
    w, V = np.linalg.eigh(Ph)
    if w[0] <= tol * scale:
        raise NotPositiveDefinite(
            f"minimum eigenvalue {w[0]:.3e} is not above {tol * scale:.3e}", min_eigenvalue=float(w[0])
        )
    S = (V * np.sqrt(w)) @ V.conj().T
    S = (S + S.conj().T) / 2
    resid = np.linalg.norm(S @ S - P)
    if resid > tol * max(scale, 1.0):
        raise NonConvergence(f"square-root residual {resid:.3e} exceeds {tol * scale:.3e}")
    return S
