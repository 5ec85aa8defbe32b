"""Rectification of complex integration paths into Sturm-Schroedinger pairs.

For ``-psi''(x) + V(x) psi(x) = E psi(x)`` along a path ``x = q(s)`` the
substitution ``psi(q(s)) = q'(s)^(1/2) chi(s)`` removes the first-derivative
term and leaves

    -chi'' + [q'^2 V(q) + Delta] chi = E q'^2 chi,
    Delta = 3/4 (q''/q')^2 - 1/2 q'''/q',

a generalized eigenproblem ``H chi = E W chi`` on a real grid in ``s``.
Both operators are tridiagonal and are stored in sparse form; the low
levels are found by shift-invert Arnoldi.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import check_matrix, check_tol
from .exceptions import DegeneratePath, GridTooCoarse, NonConvergence
from .linalg import DEFAULT_TOL, Spectrum, _reality

__all__ = [
    "PathSpec",
    "Grid",
    "SturmProblem",
    "SturmHermiticityReport",
    "identity_path",
    "scale_path",
    "shift_bump_path",
    "power_path",
    "path_from_spec",
    "potential_from_spec",
    "rectify",
    "solve_sturm",
    "sturm_hermiticity_check",
    "physical_pair",
    "grid_convergence",
]


@dataclass(frozen=True)
class PathSpec:
    """Complex path ``x = q(s)`` with its first three derivatives.

    Missing derivative closures are replaced by central finite differences
    of the previous one.
    """

    q: callable
    q_prime: callable = None
    q_double_prime: callable = None
    q_triple_prime: callable = None
    label: str = "custom"

    def __post_init__(self):
        h = 1e-4
        prev = self.q
        for name in ("q_prime", "q_double_prime", "q_triple_prime"):
            f = getattr(self, name)
            if f is None:
                f = _central_difference(prev, h)
                object.__setattr__(self, name, f)
            prev = f

    def derivatives(self, s):
        s = np.asarray(s, dtype=float)
        return tuple(
            np.broadcast_to(np.asarray(f(s), dtype=complex), s.shape)
            for f in (self.q, self.q_prime, self.q_double_prime, self.q_triple_prime)
        )


def _central_difference(f, h):
    return lambda s: (np.asarray(f(s + h), dtype=complex) - np.asarray(f(s - h), dtype=complex)) / (2 * h)


def identity_path():
    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return PathSpec(lambda s: np.asarray(s, dtype=float), lambda s: np.ones_like(np.asarray(s, dtype=float)), zero, zero, "identity")


def scale_path(a):
    a = float(a)
    if a == 0:
        raise DegeneratePath("scale factor must be nonzero")
    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return PathSpec(lambda s: a * np.asarray(s, dtype=float), lambda s: np.full_like(np.asarray(s, dtype=float), a), zero, zero, f"scale:{a:g}")


def shift_bump_path(eps):
    """``q(s) = s - i eps exp(-s^2)``: a local excursion into the lower half plane."""
    eps = float(eps)

    def g(s):
        return np.exp(-np.asarray(s, dtype=float) ** 2)

    return PathSpec(
        q=lambda s: s - 1j * eps * g(s),
        q_prime=lambda s: 1 + 2j * eps * s * g(s),
        q_double_prime=lambda s: 2j * eps * (1 - 2 * s**2) * g(s),
        q_triple_prime=lambda s: 4j * eps * s * (2 * s**2 - 3) * g(s),
        label=f"shift-bump:{eps:g}",
    )


def power_path(alpha):
    """Real monotone path ``q(s) = s (1 + s^2)^((alpha - 1)/2)``; ``alpha = 1`` is the identity."""
    a = float(alpha)
    if a <= 0:
        raise DegeneratePath("power path needs alpha > 0")
    b = (a - 1) / 2

    def q(s):
        s = np.asarray(s, dtype=float)
        return s * (1 + s**2) ** b

    def qp(s):
        s = np.asarray(s, dtype=float)
        return (1 + s**2) ** (b - 1) * (1 + a * s**2)

    def qpp(s):
        s = np.asarray(s, dtype=float)
        u = 1 + s**2
        return u ** (b - 2) * (2 * (b - 1) * s * (1 + a * s**2) + 2 * a * s * u)

    return PathSpec(q, qp, qpp, None, f"power:{a:g}")


_PATHS = {
    "identity": lambda: identity_path(),
    "scale": scale_path,
    "shift-bump": shift_bump_path,
    "power": power_path,
}

_POTENTIALS = {
    "harmonic": lambda: (lambda x: x**2),
    "anharmonic": lambda g: (lambda x: x**2 + float(g) * x**4),
    "ix3": lambda: (lambda x: 1j * x**3),
}


def _parse(spec, table, kind):
    name, _, arg = str(spec).partition(":")
    if name not in table:
        raise KeyError(f"unknown {kind} {name!r}; known: {sorted(table)}")
    return table[name](float(arg)) if arg else table[name]()


def path_from_spec(spec):
    """Built-in path by name: ``identity``, ``scale:a``, ``shift-bump:eps``, ``power:alpha``."""
    return _parse(spec, _PATHS, "path")


def potential_from_spec(spec):
    """Built-in potential by name: ``harmonic``, ``anharmonic:g``, ``ix3``."""
    return _parse(spec, _POTENTIALS, "potential")


@dataclass(frozen=True)
class Grid:
    """Interior nodes ``s_j = s_min + j h``, ``j = 1..n_points``; Dirichlet at both ends."""

    s_min: float
    s_max: float
    n_points: int

    def __post_init__(self):
        if not self.s_max > self.s_min:
            raise ValueError("grid needs s_min < s_max")
        if int(self.n_points) < 3:
            raise ValueError("grid needs at least 3 interior points")

    @property
    def spacing(self):
        return (self.s_max - self.s_min) / (self.n_points + 1)

    @property
    def nodes(self):
        return self.s_min + self.spacing * np.arange(1, self.n_points + 1)


@dataclass(frozen=True)
class SturmProblem:
    """Rectified pair ``(H, W)``; both tridiagonal, kept as sparse CSR matrices."""

    H: sp.csr_matrix
    W: sp.csr_matrix
    grid: Grid
    path: PathSpec
    potential_label: str = ""
    correction: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self):
        return self.grid.n_points

    def dense(self):
        return self.H.toarray(), self.W.toarray()

    @property
    def weight(self):
        return self.W.diagonal()

    def weight_is_hermitian(self, tol=1e-14):
        w = self.weight
        return bool(np.all(np.abs(w.imag) <= tol * np.abs(w).max()))


def _second_difference(n, h):
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


def rectify(path, V, grid, potential_label=""):
    """Build the Liouville-transformed pair for potential ``V`` along ``path``.

    Raises
    ------
    DegeneratePath
        ``q'`` vanishes (numerically) somewhere on the grid.
    GridTooCoarse
        ``W`` or the correction term jumps by more than 50% between neighbours.
    """
    if not isinstance(grid, Grid):
        grid = Grid(*grid)
    s = grid.nodes
    q, qp, qpp, qppp = path.derivatives(s)
    aqp = np.abs(qp)
    if aqp.min() <= 1e-8 * max(aqp.max(), 1.0):
        raise DegeneratePath(f"q'(s) vanishes near s={s[np.argmin(aqp)]:.6g} on path {path.label!r}")
    w = qp**2
    delta = 0.75 * (qpp / qp) ** 2 - 0.5 * (qppp / qp)
    jump_w = np.abs(np.diff(w)) / np.maximum(np.abs(w[:-1]), np.abs(w[1:]))
    if jump_w.max(initial=0) > 0.5:
        raise GridTooCoarse(f"weight varies by {jump_w.max():.0%} between neighbouring nodes")
    dscale = np.abs(delta).max()
    if dscale > 0 and np.abs(np.diff(delta)).max() > 0.5 * dscale:
        raise GridTooCoarse("derivative-elimination correction is under-resolved")
    pot = w * np.asarray(V(q), dtype=complex) + delta
    if not np.all(np.isfinite(pot)):
        raise ValueError("potential is not finite along the path")
    n = grid.n_points
    H = (-_second_difference(n, grid.spacing) + sp.diags(pot)).astype(complex).tocsr()
    W = sp.diags(w).astype(complex).tocsr()
    return SturmProblem(H=H, W=W, grid=grid, path=path, potential_label=potential_label, correction=delta)


def _lower_bound(H, w):
    """Gershgorin lower bound on the real parts of the spectrum of ``W^-1 H``."""
    d = H.diagonal()
    radius = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min((d / w).real - radius / np.abs(w)))


def solve_sturm(problem, k=5, tol=DEFAULT_TOL, sigma=None):
    """Lowest ``k`` (by real part) levels of ``H chi = E W chi``.

    Only the lowest tenth of the levels is resolved by the grid, so
    ``k <= dim / 10`` is required.  Eigenvalues nearest ``sigma`` (default: a
    Gershgorin lower bound) are found by shift-invert Arnoldi; left vectors
    follow from one step of inverse iteration on the adjoint pencil.  The
    residuals ``|H r - E W r| <= tol (|H| + |W|)`` are certified.
    """
    tol = check_tol(tol)
    n = problem.dim
    if not 1 <= k <= n // 10:
        raise ValueError(f"k must lie in [1, {n // 10}] for a grid of {n} points")
    H = problem.H.tocsc()
    W = problem.W.tocsc()
    w = problem.weight
    if sigma is None:
        sigma = _lower_bound(problem.H, w) - 1.0
    nev = min(k + 4, n - 2)
    # shift-invert by hand: (H - sigma W)^-1 W r = r / (E - sigma); ARPACK's
    # own generalized mode assumes a Hermitian W
    lu = spla.splu((H - sigma * W).tocsc())
    op = spla.LinearOperator((n, n), matvec=lambda x: lu.solve(W @ x), dtype=complex)
    try:
        nu, R = spla.eigs(op, k=nev, which="LM", tol=1e-14, v0=np.ones(n, dtype=complex))
    except spla.ArpackError as exc:
        raise NonConvergence(str(exc)) from exc
    vals = sigma + 1.0 / nu
    order = np.lexsort((vals.imag, vals.real))[:k]
    vals, R = vals[order], R[:, order]
    R = R / np.linalg.norm(R, axis=0)

    Hn = spla.norm(H) + spla.norm(W)
    L = np.empty_like(R)
    rng = np.random.default_rng(0)
    for i, E in enumerate(vals):
        shift = E + 1e-10 * max(1.0, abs(E))
        lu = spla.splu((H - shift * W).conj().T.tocsc())
        m = lu.solve(rng.standard_normal(n).astype(complex))
        m = lu.solve(m / np.linalg.norm(m))
        l_t = W.conj().T @ m
        L[:, i] = l_t / np.conj(np.vdot(l_t, R[:, i]))
    res = np.linalg.norm(H @ R - (W @ R) * vals, axis=0)
    if np.any(res > tol * Hn):
        raise NonConvergence(f"generalized residual {res.max():.3e} exceeds {tol * Hn:.3e}")
    flag, rtol = _reality(vals)
    return Spectrum(
        values=vals,
        right_vectors=R,
        left_vectors=L,
        reality_flag=flag,
        reality_tolerance=rtol,
        max_residual=float(res.max() / Hn),
        weight_condition=float(np.abs(w).max() / np.abs(w).min()),
        extra={"sigma": sigma, "method": "shift-invert"},
    )


@dataclass(frozen=True)
class SturmHermiticityReport:
    H_residual: float
    W_residual: float
    reduced_residual: float
    weight_hermitian: bool
    weight_spectrum_real: bool
    tol: float
    passed: bool


def _normalized_commutator(A, theta):
    denom = np.linalg.norm(A) * np.linalg.norm(theta)
    return float(np.linalg.norm(A.conj().T @ theta - theta @ A) / denom) if denom else 0.0


def sturm_hermiticity_check(problem, theta, tol=1e-8):
    """Residuals of ``H^H Theta - Theta H`` and ``W^H Theta - Theta W``.

    ``Theta`` hermitizes the pair only if both vanish.  That is impossible
    when ``W`` has non-real entries, since a Theta-self-adjoint ``W`` has a
    real spectrum; ``weight_spectrum_real`` flags this case.  The residual of
    the reduced operator ``W^-1 H``, which a spectral metric of the pencil
    does hermitize, is reported alongside.
    """
    H, W = problem.dense() if isinstance(problem, SturmProblem) else problem
    theta = check_matrix(theta, "theta")
    w = np.diag(W)
    K = H / w[:, None]
    rH = _normalized_commutator(H, theta)
    rW = _normalized_commutator(W, theta)
    rK = _normalized_commutator(K, theta)
    scale = np.abs(w).max()
    return SturmHermiticityReport(
        H_residual=rH,
        W_residual=rW,
        reduced_residual=rK,
        weight_hermitian=bool(np.linalg.norm(W - W.conj().T) <= 1e-14 * np.linalg.norm(W)),
        weight_spectrum_real=bool(np.all(np.abs(w.imag) <= 1e-14 * scale)),
        tol=tol,
        passed=rH <= tol and rW <= tol,
    )


def physical_pair(problem, dyson):
    """``(h, w) = (Omega H Omega^-1, Omega W Omega^-1)`` for a Dyson map of the pair."""
    H, W = problem.dense()
    om, inv = dyson.omega, dyson.inverse
    return om @ H @ inv, om @ W @ inv


def grid_convergence(path, V, box, ns, exact, k=5):
    """Errors of the lowest ``k`` levels against ``exact`` on a sequence of grids.

    Returns ``(errors, orders)`` where ``errors[i]`` is the max level error
    on grid ``ns[i]`` and ``orders`` the observed orders between successive
    grids, ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})``.
    """
    exact = np.asarray(exact)[:k]
    errors, hs = [], []
    for n in ns:
        g = Grid(box[0], box[1], n)
        spec = solve_sturm(rectify(path, V, g), k)
        errors.append(np.abs(spec.values - exact).max())
        hs.append(g.spacing)
    errors = np.array(errors)
    orders = np.log(errors[:-1] / errors[1:]) / np.log(np.array(hs[:-1]) / np.array(hs[1:]))
    return errors, orders
