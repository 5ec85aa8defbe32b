"""Time-dependent evolution with a moving (time-dependent) Dyson map.

With ``Omega = Omega(t)`` the kets and the brabras of the standardized
space evolve under the common generator

    H_gen(t) = H(t) - i Omega(t)^-1 dOmega/dt,

kets by ``i d/dt |Phi> = H_gen |Phi>`` and the brabra column vectors
``|Phi>> = Theta |Phi>`` by the adjoint equation
``i d/dt |Phi>> = H_gen^H |Phi>>``.  The adjoint is what makes the metric
overlap ``<<Phi(t)|Psi(t)>`` a constant of motion; see :func:`evolve_brabra`.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix, check_tol, check_vector
from .exceptions import (
    CertificateFailed,
    GridMismatch,
    IllConditionedOmega,
    StepSizeUnderflow,
    WindowViolation,
)

COND_LIMIT = 1e12
FD_REL_STEP = 1e-5

__all__ = [
    "DysonFamily",
    "EvolutionResult",
    "PullbackReport",
    "h_gen",
    "physical_generator",
    "integrate",
    "evolve_ket",
    "evolve_brabra",
    "evolve_doublet",
    "physical_overlap",
    "brabra_compatibility",
    "pullback_check",
    "rotating_family",
]


@dataclass(frozen=True)
class DysonFamily:
    """A time-parametrized pair ``(H(t), Omega(t))``.

    ``omega_dot`` is the analytic derivative of ``Omega``; when it is
    ``None`` a central difference with step ``h_fd`` is used instead
    (default ``1e-5`` times the window length).
    """

    dim: int
    H_of_t: callable
    Omega_of_t: callable
    window: tuple = (0.0, 10.0)
    omega_dot: callable = None
    h_fd: float = None
    label: str = ""
    cond_limit: float = COND_LIMIT

    def __post_init__(self):
        t0, t1 = map(float, self.window)
        if not t1 > t0:
            raise ValueError(f"window must satisfy t0 < t1, got {self.window}")
        object.__setattr__(self, "window", (t0, t1))
        if self.h_fd is None:
            object.__setattr__(self, "h_fd", FD_REL_STEP * (t1 - t0))
        if self.omega_dot is not None:
            for t in (t0, t1):
                exact = np.asarray(self.omega_dot(t), dtype=complex)
                fd = self._fd_derivative(t)
                scale = max(np.linalg.norm(exact), np.linalg.norm(self.Omega_of_t(t)))
                if np.linalg.norm(exact - fd) > 1e-6 * scale:
                    raise CertificateFailed(
                        f"analytic dOmega/dt disagrees with finite differences at t={t}"
                    )

    @property
    def strategy(self):
        return "analytic" if self.omega_dot is not None else "finite-difference"

    def _fd_derivative(self, t):
        h = self.h_fd
        return (
            np.asarray(self.Omega_of_t(t + h), dtype=complex)
            - np.asarray(self.Omega_of_t(t - h), dtype=complex)
        ) / (2 * h)

    def _check_time(self, t):
        t0, t1 = self.window
        slack = 1e-12 * (t1 - t0)
        if not (t0 - slack <= t <= t1 + slack):
            raise WindowViolation(f"t={t} outside the family window [{t0}, {t1}]")

    def H(self, t):
        return check_matrix(self.H_of_t(t), "H(t)")

    def omega(self, t):
        self._check_time(t)
        om = check_matrix(self.Omega_of_t(t), "Omega(t)")
        cond = np.linalg.cond(om)
        if not np.isfinite(cond) or cond > self.cond_limit:
            raise IllConditionedOmega(f"cond(Omega({t})) = {cond:.3e} exceeds {self.cond_limit:.1e}")
        return om

    def omega_derivative(self, t):
        if self.omega_dot is not None:
            return np.asarray(self.omega_dot(t), dtype=complex)
        return self._fd_derivative(t)

    def theta(self, t):
        om = self.omega(t)
        return om.conj().T @ om

    @classmethod
    def static(cls, H, omega, window=(0.0, 10.0), label="static"):
        """Time-independent ``H`` and ``Omega`` (the quasistationary case)."""
        H = check_matrix(H, "H")
        omega = check_matrix(omega, "omega")
        zero = np.zeros_like(omega)
        return cls(
            dim=H.shape[0],
            H_of_t=lambda t: H,
            Omega_of_t=lambda t: omega,
            omega_dot=lambda t: zero,
            window=window,
            label=label,
        )

    @classmethod
    def from_physical(cls, h_of_t, Omega_of_t, omega_dot=None, window=(0.0, 10.0), label=""):
        """Family with ``H(t) = Omega^-1 h(t) Omega`` for a Hermitian ``h(t)``."""

        def H_of_t(t):
            om = np.asarray(Omega_of_t(t), dtype=complex)
            return np.linalg.solve(om, np.asarray(h_of_t(t), dtype=complex) @ om)

        dim = np.asarray(h_of_t(window[0])).shape[0]
        return cls(
            dim=dim,
            H_of_t=H_of_t,
            Omega_of_t=Omega_of_t,
            omega_dot=omega_dot,
            window=window,
            label=label,
        )


@dataclass
class EvolutionResult:
    times: np.ndarray
    kets: np.ndarray = None
    brabras: np.ndarray = None
    overlap_log: np.ndarray = None
    step_stats: dict = field(default_factory=dict)

    def overlap_drift(self):
        if self.overlap_log is None:
            return None
        return float(np.abs(self.overlap_log - self.overlap_log[0]).max())


@dataclass(frozen=True)
class PullbackReport:
    max_error: float
    tol: float
    passed: bool
    generator_hermiticity: float
    propagator_unitarity: float
    brabra_law_error: float
    times: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)


def h_gen(family, t):
    """Evolution generator ``H(t) - i Omega^-1(t) dOmega/dt``."""
    om = family.omega(t)
    return family.H(t) - 1j * np.linalg.solve(om, family.omega_derivative(t))


def physical_generator(family, t):
    """Generator of ``u(t) = Omega(t) U_ket(t) Omega(0)^-1``.

    Differentiating the relation gives
    ``Omega H_gen Omega^-1 + i dOmega/dt Omega^-1``, which equals the
    hermitized ``Omega H Omega^-1`` when ``H_gen`` is the generator above.
    """
    om = family.omega(t)
    od = family.omega_derivative(t)
    G = h_gen(family, t)
    om_inv = np.linalg.solve(om, np.eye(family.dim, dtype=complex))
    return om @ G @ om_inv + 1j * od @ om_inv


def _rk4(generator, y, t, dt, m):
    """``m`` classical Runge-Kutta steps of ``dy/dt = -i G(t) y``."""
    h = dt / m
    for k in range(m):
        tk = t + k * h
        G0 = generator(tk)
        Gh = generator(tk + h / 2)
        G1 = generator(tk + h)
        k1 = -1j * (G0 @ y)
        k2 = -1j * (Gh @ (y + h / 2 * k1))
        k3 = -1j * (Gh @ (y + h / 2 * k2))
        k4 = -1j * (G1 @ (y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def integrate(generator, y0, times, tol=1e-8, substeps=8, adaptive=True, max_doublings=20):
    """Integrate ``i dy/dt = G(t) y`` and report ``y`` on ``times``.

    Each report interval is integrated with a fixed number of RK4 substeps.
    With ``adaptive`` the count is doubled until two successive refinements
    agree to ``tol`` per unit time, and the finer result is kept.
    ``y0`` may be a vector or a matrix of column vectors.

    Returns
    -------
    states : ndarray, shape (len(times),) + y0.shape
    stats : dict
    """
    times = np.asarray(times, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(times),) + y.shape, dtype=complex)
    out[0] = y
    total_steps = 0
    max_sub = substeps
    worst = 0.0
    span = max(times[-1] - times[0], np.finfo(float).tiny)
    for i in range(1, len(times)):
        t, dt = times[i - 1], times[i] - times[i - 1]
        m = substeps
        coarse = _rk4(generator, y, t, dt, m)
        total_steps += m
        if adaptive:
            for _ in range(max_doublings):
                if dt / (2 * m) < 1e-13 * span:
                    raise StepSizeUnderflow(f"substep underflow on [{t}, {t + dt}]")
                fine = _rk4(generator, y, t, dt, 2 * m)
                total_steps += 2 * m
                m *= 2
                diff = np.linalg.norm(fine - coarse)
                coarse = fine
                if diff <= tol * abs(dt):
                    break
            else:
                raise StepSizeUnderflow(f"no convergence on [{t}, {t + dt}] after {max_doublings} doublings")
            worst = max(worst, diff / abs(dt))
        y = coarse
        out[i] = y
        max_sub = max(max_sub, m)
    stats = {
        "scheme": "rk4",
        "order": 4,
        "total_substeps": total_steps,
        "max_substeps_per_interval": max_sub,
        "max_residual_per_unit_time": worst,
    }
    return out, stats


def _report_times(family, window, n_report, times):
    if times is not None:
        times = np.asarray(times, dtype=float)
    else:
        t0, t1 = family.window if window is None else map(float, window)
        times = np.linspace(t0, t1, int(n_report))
    if len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("report times must be strictly increasing with at least two entries")
    family._check_time(times[0])
    family._check_time(times[-1])
    return times


def evolve_ket(family, psi0, window=None, tol=1e-8, n_report=101, times=None, substeps=8):
    """Solve ``i d/dt |Phi> = H_gen(t) |Phi>`` on the report grid."""
    tol = check_tol(tol)
    psi0 = check_vector(psi0, family.dim, "psi0")
    if not np.any(psi0):
        raise ValueError("psi0 must be nonzero")
    times = _report_times(family, window, n_report, times)
    kets, stats = integrate(lambda t: h_gen(family, t), psi0, times, tol, substeps)
    return EvolutionResult(times=times, kets=kets, step_stats=stats)


def evolve_brabra(family, phi0_bb, window=None, tol=1e-8, n_report=101, times=None, substeps=8):
    """Evolve the brabra column vector ``|Phi>>``.

    The column vector obeys ``i d/dt |Phi>> = H_gen(t)^H |Phi>>``.  The
    functional ``<<Phi|`` is its conjugate transpose, so
    ``d/dt <<Phi|Psi> = 0`` for every ket ``Psi`` evolving under ``H_gen``,
    and ``|Phi>> = Theta(t) |Phi>`` is preserved once it holds initially.
    """
    tol = check_tol(tol)
    phi0_bb = check_vector(phi0_bb, family.dim, "phi0_bb")
    if not np.any(phi0_bb):
        raise ValueError("phi0_bb must be nonzero")
    times = _report_times(family, window, n_report, times)
    bbs, stats = integrate(lambda t: h_gen(family, t).conj().T, phi0_bb, times, tol, substeps)
    return EvolutionResult(times=times, brabras=bbs, step_stats=stats)


def physical_overlap(bb, ket, t):
    """``<<Phi(t)|Psi(t)>`` from a brabra and a ket trajectory.

    ``t`` is a report time (matched exactly) or an integer index.
    """
    if bb.brabras is None or ket.kets is None:
        raise ValueError("need a brabra trajectory and a ket trajectory")
    if bb.times.shape != ket.times.shape or not np.array_equal(bb.times, ket.times):
        raise GridMismatch("brabra and ket trajectories use different report grids")
    if isinstance(t, (int, np.integer)):
        i = int(t)
    else:
        hits = np.flatnonzero(bb.times == float(t))
        if not hits.size:
            raise GridMismatch(f"t={t} is not a report time")
        i = int(hits[0])
    return complex(bb.brabras[i].conj() @ ket.kets[i])


def evolve_doublet(family, ket0, bb0, window=None, tol=1e-8, n_report=101, times=None):
    """Evolve a ket and a brabra together and log their overlap."""
    k = evolve_ket(family, ket0, window, tol, n_report, times)
    b = evolve_brabra(family, bb0, window, tol, n_report, times=k.times)
    overlap = np.array([physical_overlap(b, k, i) for i in range(len(k.times))])
    stats = {"ket": k.step_stats, "brabra": b.step_stats}
    return EvolutionResult(times=k.times, kets=k.kets, brabras=b.brabras, overlap_log=overlap, step_stats=stats)


def brabra_compatibility(family, result):
    """``max_t |(|Phi>>(t) - Theta(t)|Phi(t)>)|`` for a doublet result."""
    errs = [
        np.linalg.norm(bb - family.theta(t) @ k)
        for t, k, bb in zip(result.times, result.kets, result.brabras)
    ]
    return float(max(errs))


def pullback_check(family, psi0, window=None, tol=1e-8, n_report=41, bb0=None):
    """Compare the ket law ``U_R(t) = Omega^-1(t) u(t) Omega(0)`` with direct evolution.

    ``u(t)`` is obtained by integrating the P-space generator of
    :func:`physical_generator` as a dense propagator.  The brabra law
    ``U_L^H(t) = Omega^H(t) u(t) Omega(0)^-H`` is checked as well, on
    ``bb0`` (default ``Theta(0) psi0``).
    """
    if family.dim > 64:
        raise ValueError("pullback_check builds a dense propagator; dim must be <= 64")
    tol = check_tol(tol)
    psi0 = check_vector(psi0, family.dim, "psi0")
    times = _report_times(family, window, n_report, None)
    t0 = times[0]
    ident = np.eye(family.dim, dtype=complex)
    U, _ = integrate(lambda t: physical_generator(family, t), ident, times, tol * 1e-2)
    kets = evolve_ket(family, psi0, tol=tol * 1e-2, times=times).kets
    om0 = family.omega(t0)
    if bb0 is None:
        bb0 = om0.conj().T @ om0 @ psi0
    bbs = evolve_brabra(family, bb0, tol=tol * 1e-2, times=times).brabras
    om0_inv_h = np.linalg.solve(om0, ident).conj().T

    errors, bb_errors, herm, unit = [], [], 0.0, 0.0
    for t, u, k, b in zip(times, U, kets, bbs):
        om = family.omega(t)
        U_R = np.linalg.solve(om, u @ om0)
        errors.append(np.linalg.norm(U_R @ psi0 - k))
        bb_errors.append(np.linalg.norm(om.conj().T @ u @ om0_inv_h @ bb0 - b))
        G = physical_generator(family, t)
        herm = max(herm, np.linalg.norm(G - G.conj().T) / max(np.linalg.norm(G), 1e-300))
        unit = max(unit, np.linalg.norm(u.conj().T @ u - ident))
    errors = np.array(errors)
    max_err = float(errors.max())
    return PullbackReport(
        max_error=max_err,
        tol=tol,
        passed=max_err <= tol,
        generator_hermiticity=float(herm),
        propagator_unitarity=float(unit),
        brabra_law_error=float(max(bb_errors)),
        times=times,
        errors=errors,
    )


def rotating_family(theta_a=None, theta_b=None, frequency=0.7, window=(0.0, 10.0), h_of_t=None):
    """2x2 family whose Dyson map interpolates between two metrics.

    ``Omega(t) = (1 - s) Omega_a + s Omega_b`` with
    ``s = (1 - cos(frequency t)) / 2`` and ``Omega_x`` the principal roots of
    the two metrics.  ``H(t) = Omega^-1 h(t) Omega`` for a Hermitian
    ``h(t)`` (default: a driven two-level system), so ``Theta(t)`` is a
    valid metric for ``H(t)`` at every instant.
    """
    from .linalg import herm_sqrt

    if theta_a is None:
        theta_a = np.eye(2)
    if theta_b is None:
        # metric of [[i/2, 1], [1, -i/2]] with unit weights
        theta_b = np.array([[1, -0.5j], [0.5j, 1]])
    om_a = herm_sqrt(theta_a)
    om_b = herm_sqrt(theta_b)
    w = float(frequency)
    if h_of_t is None:
        def h_of_t(t):
            return np.array([[1.0, 0.5 * np.cos(0.3 * t)], [0.5 * np.cos(0.3 * t), -1.0]], dtype=complex)

    def Omega_of_t(t):
        s = (1 - np.cos(w * t)) / 2
        return (1 - s) * om_a + s * om_b

    def omega_dot(t):
        return (om_b - om_a) * (w * np.sin(w * t) / 2)

    return DysonFamily.from_physical(h_of_t, Omega_of_t, omega_dot, window=window, label="rotating-2x2")
