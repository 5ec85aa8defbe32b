"""Input validation helpers, in the spirit of ``sklearn.utils.validation``.

scikit-learn's own ``check_array`` rejects complex input, so the checks are
reimplemented here for complex operators and state vectors.
"""

import numpy as np


def check_matrix(M, name="matrix", *, copy=False):
    """Return ``M`` as a finite, square, complex 2-D array."""
    A = np.array(M, dtype=complex, copy=copy) if copy else np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValueError(f"{name} must have positive dimension")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def check_vector(v, dim=None, name="vector"):
    """Return ``v`` as a finite complex 1-D array of length ``dim``."""
    x = np.asarray(v, dtype=complex)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return x


def check_same_dim(*mats):
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def check_tol(tol, name="tol"):
    tol = float(tol)
    if not (tol >= 0 and np.isfinite(tol)):
        raise ValueError(f"{name} must be a finite nonnegative number, got {tol}")
    return tol


def is_hermitian(M, tol=1e-12):
    scale = max(np.linalg.norm(M), 1.0)
    return np.linalg.norm(M - M.conj().T) <= tol * scale
