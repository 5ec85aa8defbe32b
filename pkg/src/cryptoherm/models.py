"""Concrete lattice models: SUSY partner pairs, the singular oscillator,
PT-symmetric chains and smeared (Gaussian-profile) point interactions.

Every chain model is ``H = mass_sign * K + diag(V)`` with the kinetic block
``K = onsite * I - hopping * (S + S^T)`` (``S`` the shift), so the sign of
the bare mass flips the kinetic block only.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import check_matrix, is_hermitian
from .exceptions import CenterOutOfRange, GridTooCoarse, SingularTMap
from .linalg import eig

__all__ = [
    "LatticeModel",
    "SusyPair",
    "PairingReport",
    "chain_kinetic",
    "first_difference",
    "susy_pair",
    "isospectrality_report",
    "singular_oscillator",
    "singular_levels_exact",
    "fig1_table",
    "pt_chain",
    "smeared_interaction",
    "pt_two_center",
    "reality_scan",
    "make_model",
    "list_models",
]


def chain_kinetic(n, onsite=2.0, hopping=1.0):
    """``onsite * I - hopping * (S + S^T)`` on ``n`` sites with open ends."""
    off = np.full(n - 1, -float(hopping))
    return np.diag(np.full(n, float(onsite))) + np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class LatticeModel:
    """Finite chain Hamiltonian with its kinetic/potential split."""

    H: np.ndarray
    potential: np.ndarray
    mass_sign: int = 1
    onsite: float = 2.0
    hopping: float = 1.0
    label: str = ""
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mass_sign not in (1, -1):
            raise ValueError("mass_sign must be +1 or -1")
        check_matrix(self.H, "H")

    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def kinetic(self):
        return self.mass_sign * chain_kinetic(self.dim, self.onsite, self.hopping)

    @property
    def band(self):
        """Energy interval of the free chain with the same kinetic block."""
        lo, hi = self.onsite - 2 * abs(self.hopping), self.onsite + 2 * abs(self.hopping)
        return (lo, hi) if self.mass_sign == 1 else (-hi, -lo)

    @property
    def support(self):
        """Indices of sites carrying a nonzero potential."""
        return np.flatnonzero(self.potential != 0)

    def with_mass_sign(self, mass_sign):
        return _chain_model(
            self.potential, mass_sign, self.onsite, self.hopping, self.label, dict(self.parameters)
        )

    def levels(self, k=None):
        """Eigenvalues sorted by (real, imag); the lowest ``k`` if given.

        Real symmetric tridiagonal Hamiltonians go through the banded solver.
        """
        H = self.H
        if np.all(H.imag == 0) and np.all(self.potential.imag == 0):
            d = H.diagonal().real
            e = H.diagonal(1).real
            if k is None:
                return sla.eigh_tridiagonal(d, e, eigvals_only=True).astype(complex)
            return sla.eigh_tridiagonal(
                d, e, eigvals_only=True, select="i", select_range=(0, k - 1)
            ).astype(complex)
        vals = eig(H).values
        return vals if k is None else vals[:k]


def _chain_model(potential, mass_sign, onsite, hopping, label, parameters):
    potential = np.asarray(potential, dtype=complex)
    H = mass_sign * chain_kinetic(len(potential), onsite, hopping) + np.diag(potential)
    return LatticeModel(
        H=H.astype(complex),
        potential=potential,
        mass_sign=int(mass_sign),
        onsite=float(onsite),
        hopping=float(hopping),
        label=label,
        parameters=parameters,
    )


# ---------------------------------------------------------------- SUSY pairs


def first_difference(n, h):
    """Central first-difference operator with Dirichlet ends."""
    return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * h)


@dataclass(frozen=True)
class SusyPair:
    A: np.ndarray
    B: np.ndarray
    H_minus: np.ndarray
    H_plus: np.ndarray
    T_map: np.ndarray
    nodes: np.ndarray = field(default=None, repr=False)

    @property
    def intertwining_residual(self):
        """``|A H_minus - H_plus A| / (|A| |B| |A|)``."""
        A = self.A
        scale = np.linalg.norm(A) ** 2 * np.linalg.norm(self.B)
        return float(np.linalg.norm(A @ self.H_minus - self.H_plus @ A) / scale) if scale else 0.0


def susy_pair(superpotential, grid, T_map=None):
    """Lattice partner pair ``H_minus = B A``, ``H_plus = A B`` with

        A = -T D + T diag(W),    B = D T^-1 + diag(W) T^-1,

    ``D`` the central first difference on the interior nodes of
    ``grid = (x_min, x_max, n)``.  ``T = I`` gives ordinary SUSY QM.
    """
    x_min, x_max, n = grid
    n = int(n)
    h = (x_max - x_min) / (n + 1)
    x = x_min + h * np.arange(1, n + 1)
    Wd = np.diag(np.asarray(superpotential(x), dtype=complex) * np.ones(n))
    if T_map is None:
        T = np.eye(n, dtype=complex)
        Tinv = T
    else:
        T = check_matrix(T_map, "T_map")
        if T.shape[0] != n:
            raise ValueError(f"T_map must be {n}x{n}")
        cond = np.linalg.cond(T)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularTMap(f"T_map is not invertible (cond={cond:.3e})")
        Tinv = np.linalg.inv(T)
    D = first_difference(n, h)
    A = -T @ D + T @ Wd
    B = D @ Tinv + Wd @ Tinv
    return SusyPair(A=A, B=B, H_minus=B @ A, H_plus=A @ B, T_map=T, nodes=x)


@dataclass(frozen=True)
class PairingReport:
    pairs: list
    max_mismatch: float
    unpaired: list
    zero_modes_plus: list
    unmatched_plus: list
    zero_tol: float
    match_tol: float

    @property
    def all_paired(self):
        return not self.unpaired and not self.unmatched_plus

    @property
    def paired_fraction(self):
        n = len(self.pairs) + len(self.unpaired)
        return len(self.pairs) / n if n else 1.0


def _spectrum(M):
    if is_hermitian(M, 1e-13):
        return np.linalg.eigvalsh((M + M.conj().T) / 2).astype(complex)
    return np.sort_complex(np.linalg.eigvals(M))


def isospectrality_report(pair, zero_tol=1e-6, match_tol=1e-8):
    """Pair each level of ``H_minus`` above ``zero_tol`` with a level of ``H_plus``.

    Matching is greedy nearest-neighbour in increasing order of ``|E|``.
    Levels of ``H_minus`` at or below ``zero_tol`` are zero modes and are
    listed as unpaired, together with any level lacking a partner within
    ``match_tol``.  ``pair`` is a :class:`SusyPair` or a tuple
    ``(H_minus, H_plus)``.
    """
    Hm, Hp = (pair.H_minus, pair.H_plus) if isinstance(pair, SusyPair) else pair
    em, ep = _spectrum(np.asarray(Hm)), _spectrum(np.asarray(Hp))
    em = em[np.argsort(np.abs(em))]
    zero_plus = [complex(e) for e in ep if abs(e) <= zero_tol]
    available = [complex(e) for e in ep if abs(e) > zero_tol]
    pairs, unpaired, worst = [], [], 0.0
    for e in em:
        if abs(e) <= zero_tol or not available:
            unpaired.append(complex(e))
            continue
        dist = np.abs(np.array(available) - e)
        j = int(np.argmin(dist))
        if dist[j] <= match_tol * max(1.0, abs(e)):
            pairs.append((complex(e), available.pop(j)))
            worst = max(worst, float(dist[j]))
        else:
            unpaired.append(complex(e))
    return PairingReport(
        pairs=pairs,
        max_mismatch=worst,
        unpaired=unpaired,
        zero_modes_plus=zero_plus,
        unmatched_plus=available,
        zero_tol=zero_tol,
        match_tol=match_tol,
    )


# ----------------------------------------------------- singular oscillator


def singular_oscillator(gamma, L=8.0, n=4000, mass_sign=1):
    """Half-line lattice Hamiltonian ``-D^2 + x^2 + gamma (gamma + 1) / x^2``.

    Nodes ``x_j = j h`` (``j = 1..n``, ``h = L / (n + 1)``) with Dirichlet
    ends, so the singular point itself is excluded.
    """
    gamma = float(gamma)
    if not gamma > -1:
        raise ValueError("gamma must exceed -1")
    n = int(n)
    if n < 1000:
        raise GridTooCoarse(
            f"n={n} under-resolves the 1/x^2 singularity; use n >= 1000 (e.g. n={max(1000, 4 * n)})"
        )
    h = L / (n + 1)
    x = h * np.arange(1, n + 1)
    V = x**2 + gamma * (gamma + 1) / x**2
    return _chain_model(
        V, mass_sign, 2.0 / h**2, 1.0 / h**2, "singular-osc", {"gamma": gamma, "L": L, "n": n}
    )


def singular_levels_exact(gamma, k):
    """Levels ``4m + 2 nu + 1`` of the half-line problem, ``nu = max(gamma + 1, -gamma)``.

    ``nu`` is the larger of the two indicial exponents, the solution
    selected by the Dirichlet condition at the origin.
    """
    nu = max(gamma + 1.0, -gamma)
    return 4.0 * np.arange(k) + 2 * nu + 1


def fig1_table(gammas, k=6, L=8.0, n=1000):
    """Rows ``(gamma, level_index, energy)`` of the low singular-oscillator spectrum."""
    rows = []
    for g in gammas:
        levels = singular_oscillator(g, L, n).levels(k).real
        rows.extend((float(g), i, float(e)) for i, e in enumerate(levels))
    return rows


# ------------------------------------------------------------ PT chains


def pt_chain(n, gamma, g=1.0, mass_sign=1, sites=1):
    """Hopping chain with ``+i gamma`` on the first ``sites`` sites and ``-i gamma`` on the last.

    The kinetic block is pure hopping ``g`` (zero on-site term), so
    ``pt_chain(2, gamma)`` is ``[[i gamma, g], [g, -i gamma]]``.
    """
    n = int(n)
    if n < 2:
        raise ValueError("pt_chain needs n >= 2")
    sites = int(sites)
    if not 1 <= sites <= n // 2:
        raise ValueError(f"sites must lie in [1, {n // 2}]")
    V = np.zeros(n, dtype=complex)
    V[:sites] = 1j * gamma
    V[n - sites:] = -1j * gamma
    return _chain_model(V, mass_sign, 0.0, -float(g), "pt-chain", {"n": n, "gamma": gamma, "g": g, "sites": sites})


def smeared_interaction(n, centers, width, strength, mass_sign=1, cutoff=4.0):
    """Free chain (band ``[0, 4]``) plus Gaussian-profile potentials.

    ``V_j = sum_c strength_c exp(-(j - c)^2 / (2 width^2))``, truncated to
    zero beyond ``cutoff * width`` so that the support is finite.
    """
    n = int(n)
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    strength = np.broadcast_to(np.asarray(strength, dtype=complex), centers.shape)
    if width < 1:
        raise ValueError("width must be at least one lattice site")
    bad = centers[(centers < 0) | (centers > n - 1)]
    if bad.size:
        raise CenterOutOfRange(f"centers {bad.tolist()} lie outside [0, {n - 1}]")
    j = np.arange(n)
    V = np.zeros(n, dtype=complex)
    for c, s in zip(centers, strength):
        prof = np.exp(-((j - c) ** 2) / (2 * width**2))
        prof[np.abs(j - c) > cutoff * width] = 0.0
        V += s * prof
    params = {"n": n, "centers": centers.tolist(), "width": width, "strength": strength.tolist()}
    return _chain_model(V, mass_sign, 2.0, 1.0, "smeared", params)


def pt_two_center(n=60, depth=1.0, s=0.05, width=1.0, mass_sign=1):
    """Mirror pair of centers with strengths ``-depth +/- i s`` on adjacent mid sites.

    PT-symmetric under ``j -> n - 1 - j`` with complex conjugation; the
    spectrum is real for small ``s``.
    """
    mid = (n - 1) / 2
    model = smeared_interaction(
        n, [mid - 0.5, mid + 0.5], width, [-depth + 1j * s, -depth - 1j * s], mass_sign
    )
    params = dict(model.parameters, depth=depth, s=s)
    return LatticeModel(
        H=model.H, potential=model.potential, mass_sign=model.mass_sign, onsite=model.onsite,
        hopping=model.hopping, label="pt-two-center", parameters=params,
    )


def reality_scan(build, values, tol=1e-9):
    """``[(value, reality_flag, max|Im E|)]`` for models ``build(value)``."""
    out = []
    for v in values:
        ev = np.linalg.eigvals(build(v).H)
        im = float(np.abs(ev.imag).max())
        out.append((float(v), im <= tol * (1 + np.abs(ev).max()), im))
    return out


# ------------------------------------------------------------ registry

_SUPERPOTENTIALS = {
    "x": lambda x: x,
    "zero": lambda x: np.zeros_like(x),
    "tanh": lambda x: np.tanh(x),
}


def _susy(name, x_min=-8.0, x_max=8.0, n=1500):
    if name not in _SUPERPOTENTIALS:
        raise KeyError(f"unknown superpotential {name!r}; known: {sorted(_SUPERPOTENTIALS)}")
    return susy_pair(_SUPERPOTENTIALS[name], (x_min, x_max, n))


_REGISTRY = {
    "singular-osc": singular_oscillator,
    "pt-chain": pt_chain,
    "smeared": smeared_interaction,
    "pt-two-center": pt_two_center,
}


def list_models():
    return sorted(_REGISTRY) + [f"susy:{w}" for w in sorted(_SUPERPOTENTIALS)]


def make_model(label, **params):
    """Build a registered model, e.g. ``make_model("pt-chain", n=2, gamma=0.5)``."""
    if label.startswith("susy:"):
        return _susy(label.split(":", 1)[1], **params)
    if label not in _REGISTRY:
        raise KeyError(f"unknown model {label!r}; known: {list_models()}")
    return _REGISTRY[label](**params)
