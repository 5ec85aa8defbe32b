"""One-dimensional lattice scattering through a finite region.

The region is any ``n x n`` matrix ``M`` (a chain Hamiltonian or its
hermitized, possibly non-local, image) attached at sites ``1`` and ``n`` to
semi-infinite free leads with the same kinetic block as the model.  The
leads have dispersion ``E = mass_sign * (onsite - 2 hopping cos k)``; for the
standard chain this is ``E = 2 - 2 cos k`` with band ``[0, 4]``.

Wave-function convention (region sites ``j = 1..n``):
``psi_j = e^{ikj} + R e^{-ikj}`` on the left lead and ``T e^{ikj}`` on the
right lead.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from ._validation import check_matrix
from .exceptions import BandEdge, CertificateFailed, NoPolesFound, SupportTouchesLead
from .metric import dyson_from_metric, masked_metric, quasi_hermiticity_residual

__all__ = [
    "ScatteringResult",
    "LocalityReport",
    "PoleTable",
    "lead_phase",
    "transmission",
    "scatter",
    "unitarity_deficit_weighted",
    "asymptotic_locality_check",
    "locality_profile",
    "lead_local_metric",
    "pole_scan",
]


@dataclass(frozen=True)
class ScatteringResult:
    energy: float
    R: complex
    T: complex
    unitarity_deficit: float
    wavenumber: float


def lead_phase(energy, mass_sign=1, onsite=2.0, hopping=1.0):
    """``w = e^{ik}`` for a (possibly complex) energy.

    Off the band the decaying root ``|w| < 1`` is chosen (physical sheet);
    on the band the root whose group velocity is positive.
    """
    z = (onsite - energy / mass_sign) / (2 * hopping)
    root = np.sqrt(complex(z * z - 1))
    w1, w2 = z + root, z - root
    a1, a2 = abs(w1), abs(w2)
    if abs(a1 - 1) > 1e-12 or abs(a2 - 1) > 1e-12:
        return w1 if a1 < a2 else w2
    # on the band: velocity dE/dk = 2 mass_sign hopping sin k, sin k = Im w
    return w1 if mass_sign * hopping * w1.imag > 0 else w2


def _solve_amplitudes(M, energy, mass_sign, onsite, hopping):
    n = M.shape[0]
    w = lead_phase(energy, mass_sign, onsite, hopping)
    c = -mass_sign * hopping  # lead-to-region coupling matrix element
    A = energy * np.eye(n, dtype=complex) - M
    A[0, 0] -= c * w
    A[n - 1, n - 1] -= c * w
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = c * (1 - w * w)
    psi = np.linalg.solve(A, rhs)
    T = psi[n - 1] * w ** (-n)
    R = (psi[0] - w) * w
    return R, T, w


def transmission(M, energy, mass_sign=1, onsite=2.0, hopping=1.0):
    """``(R, T)`` for region matrix ``M`` at (possibly complex) ``energy``."""
    M = check_matrix(M, "region")
    R, T, _ = _solve_amplitudes(M, complex(energy), mass_sign, onsite, hopping)
    return R, T


def _check_model(model, energy):
    lo, hi = model.band
    if not lo < energy < hi:
        raise BandEdge(f"energy {energy} is outside the open band ({lo}, {hi})")
    supp = model.support
    if supp.size and (supp[0] == 0 or supp[-1] == model.dim - 1):
        raise SupportTouchesLead("interaction support reaches the first or last site")


def _scatter_region(M, model, energy):
    R, T, w = _solve_amplitudes(M, complex(energy), model.mass_sign, model.onsite, model.hopping)
    k = float(np.angle(w))
    if abs(np.sin(k)) < 1e-8:
        raise BandEdge(f"group velocity vanishes at energy {energy}")
    deficit = abs(abs(R) ** 2 + abs(T) ** 2 - 1)
    return ScatteringResult(energy=float(energy), R=complex(R), T=complex(T), unitarity_deficit=float(deficit), wavenumber=k)


def scatter(model, energy):
    """Reflection and transmission amplitudes of a chain model at a band energy.

    Raises
    ------
    BandEdge
        ``energy`` is outside the open band or the group velocity vanishes.
    SupportTouchesLead
        The potential reaches the first or last site of the region.
    """
    energy = float(energy)
    _check_model(model, energy)
    return _scatter_region(model.H, model, energy)


def unitarity_deficit_weighted(model, theta, energy, tol=1e-8):
    """Deficit ``| |R|^2 + |T|^2 - 1 |`` of the hermitized region ``Omega H Omega^-1``."""
    theta = check_matrix(theta, "theta")
    resid = quasi_hermiticity_residual(model.H, theta)
    if resid > tol:
        raise CertificateFailed(f"theta is not a metric for the model (residual {resid:.3e})")
    energy = float(energy)
    _check_model(model, energy)
    d = dyson_from_metric(theta)
    h = d.omega @ model.H @ d.inverse
    h = (h + h.conj().T) / 2
    return _scatter_region(h, model, energy).unitarity_deficit


@dataclass(frozen=True)
class LocalityReport:
    measure: float
    threshold: float
    passed: bool
    lead_width: int


def _lead_measure(theta, rows):
    diag = np.sqrt(np.abs(np.diag(theta)))
    worst = 0.0
    for i in rows:
        row = np.abs(theta[i]) / (diag[i] * diag)
        row[i] = 0.0
        worst = max(worst, float(row.max()))
    return worst


def asymptotic_locality_check(theta, lead_width, threshold=1e-6):
    """Off-diagonal size of ``theta`` in the outer ``lead_width`` rows.

    Entries ``|Theta_ij| / sqrt(Theta_ii Theta_jj)`` with ``i`` in the first or
    last ``lead_width`` rows and ``j != i`` are compared with ``threshold``.
    """
    theta = check_matrix(theta, "theta")
    n = theta.shape[0]
    lead_width = int(lead_width)
    if not 0 < lead_width < n / 2:
        raise ValueError(f"lead_width must lie in (0, {n / 2})")
    rows = list(range(lead_width)) + list(range(n - lead_width, n))
    m = _lead_measure(theta, rows)
    return LocalityReport(measure=m, threshold=threshold, passed=m <= threshold, lead_width=lead_width)


def locality_profile(theta):
    """Per-row normalized off-diagonal maximum; decays away from a local interaction."""
    theta = check_matrix(theta, "theta")
    return np.array([_lead_measure(theta, [i]) for i in range(theta.shape[0])])


def lead_local_metric(model, lead_width, tol=1e-10):
    """Spectral metric of ``model.H`` closest to diagonal in the lead rows.

    Minimizes the off-diagonal mass of ``Theta`` in the outer ``lead_width``
    rows and columns (see :func:`cryptoherm.metric.masked_metric`).  For
    non-Hermitian models the lead rows keep a residual floor that scales
    with the strength of the non-Hermitian part.
    """
    n = model.dim
    lead_width = int(lead_width)
    if not 0 < lead_width < n / 2:
        raise ValueError(f"lead_width must lie in (0, {n / 2})")
    i, j = np.indices((n, n))
    lead = (i < lead_width) | (i >= n - lead_width)
    return masked_metric(model.H, (i != j) & (lead | lead.T), tol)


@dataclass(frozen=True)
class PoleTable:
    poles: np.ndarray
    eigenvalues: np.ndarray
    matches: list
    max_mismatch: float

    def __len__(self):
        return len(self.poles)


def _inverse_t(model, E):
    _, T, _ = _solve_amplitudes(model.H, complex(E), model.mass_sign, model.onsite, model.hopping)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / T


def _secant(f, z0, z1, tol, max_iter=60):
    f0, f1 = f(z0), f(z1)
    for _ in range(max_iter):
        if f1 == f0 or not (np.isfinite(f0) and np.isfinite(f1)):
            break
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        z0, f0 = z1, f1
        z1, f1 = z2, f(z2)
        if abs(z1 - z0) < tol:
            return z1, True
    return z1, abs(z1 - z0) < tol


def pole_scan(model, window, grid_density=60, margin=1e-3, tol=1e-8):
    """Poles of ``T(E)`` in a complex rectangle versus the out-of-band eigenvalues.

    ``window = (re_min, re_max, im_min, im_max)``.  Local minima of
    ``|1/T|`` on a ``grid_density x grid_density`` mesh seed secant
    iterations on ``1/T``; converged roots inside the window are kept.
    Every eigenvalue of ``model.H`` in the window is matched to its nearest
    pole.
    """
    re0, re1, im0, im1 = map(float, window)
    lo, hi = model.band
    for edge in (lo, hi):
        if re0 - margin < edge < re1 + margin and im0 - margin <= 0 <= im1 + margin:
            raise BandEdge(f"window must stay {margin} away from the band edge {edge}")
    xs = np.linspace(re0, re1, grid_density)
    ys = np.linspace(im0, im1, max(grid_density // 4, 3)) if im1 > im0 else np.array([im0])
    Z = xs[None, :] + 1j * ys[:, None]
    F = np.abs(np.vectorize(lambda z: _inverse_t(model, z))(Z))
    seeds = []
    rows, cols = F.shape
    for i in range(rows):
        for j in range(cols):
            nb = F[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if F[i, j] <= nb.min():
                seeds.append(Z[i, j])
    dx = (re1 - re0) / max(grid_density - 1, 1)
    poles = []
    for z in seeds:
        with np.errstate(all="ignore"):
            root, ok = _secant(lambda e: _inverse_t(model, e), z, z + 0.1 * dx + 1e-3j * dx, tol)
        if not ok or not (re0 <= root.real <= re1 and im0 - tol <= root.imag <= im1 + tol):
            continue
        if abs(_inverse_t(model, root)) > 1e-6:
            continue
        if all(abs(root - p) > 10 * tol for p in poles):
            poles.append(root)
    poles = np.array(sorted(poles, key=lambda z: (z.real, z.imag)), dtype=complex)
    ev = np.linalg.eigvals(model.H)
    inside = ev[(ev.real >= re0) & (ev.real <= re1) & (ev.imag >= im0 - 1e-9) & (ev.imag <= im1 + 1e-9)]
    inside = np.sort_complex(inside)
    matches, worst = [], 0.0
    for e in inside:
        if poles.size:
            j = int(np.argmin(np.abs(poles - e)))
            d = float(abs(poles[j] - e))
            matches.append((complex(e), complex(poles[j]), d))
            worst = max(worst, d)
        else:
            matches.append((complex(e), None, np.inf))
            worst = np.inf
    if not poles.size:
        warnings.warn("no transmission poles found in the window", NoPolesFound, stacklevel=2)
    return PoleTable(poles=poles, eigenvalues=inside, matches=matches, max_mismatch=worst)
