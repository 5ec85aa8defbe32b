"""Dispatch of experiment configs to the numerical modules."""

from datetime import datetime, timezone
import warnings

import numpy as np

from .. import evolution, metric, models, scattering, sturm
from ..exceptions import CryptoHermError, ConfigError
from .emit import ResultRecord, Table, certify

__all__ = ["ExperimentFailed", "run_experiment", "random_real_spectrum_matrix"]


class ExperimentFailed(CryptoHermError):
    """A module error raised while running an experiment, with its context."""

    def __init__(self, exp_id, kind, cause):
        super().__init__(f"experiment {exp_id!r} ({kind}) failed: {type(cause).__name__}: {cause}")
        self.experiment_id = exp_id
        self.cause = cause


def random_real_spectrum_matrix(rng, dim):
    """``S diag(e) S^-1`` with real ``e`` and a random complex ``S``."""
    e = np.sort(rng.uniform(-5, 5, dim))
    S = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return S @ np.diag(e) @ np.linalg.inv(S)


def _cplx_rows(values):
    return [[i, float(np.real(v)), float(np.imag(v))] for i, v in enumerate(values)]


def _run_metric(cfg, model, num, rng):
    H = model.H
    tol = num["tol"]
    if num["theta_range"] is None:
        met = metric.build_metric(H, tol=tol)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            met = metric.band_metric(H, num["theta_range"], tol=tol)
    dyson = metric.dyson_from_metric(met, tol)
    h = metric.hermitize(H, dyson, tol)
    ev = np.sort(np.linalg.eigvals(H).real)
    iso = float(np.abs(np.linalg.eigvalsh(h) - ev).max())
    certs = [
        certify("quasi_residual", met.quasi_residual, tol),
        certify("min_eigenvalue", met.min_eigenvalue, 0.0, ">"),
        certify("isospectrality", iso, 1e-8 * (1 + np.abs(ev).max())),
    ]
    if met.out_of_band_mass is not None:
        certify_mass = certify("out_of_band_mass", met.out_of_band_mass, tol)
        certs.append(certify_mass)
    n = met.dim
    theta_rows = [
        [i, j, float(met.theta[i, j].real), float(met.theta[i, j].imag)] for i in range(n) for j in range(n)
    ]
    tables = {
        "eigenvalues": Table(["index", "re", "im"], _cplx_rows(np.sort_complex(np.linalg.eigvals(H)))),
        "theta": Table(["row", "col", "re", "im"], theta_rows),
    }
    if num["random_instances"]:
        worst_res, worst_min = 0.0, np.inf
        rows = []
        for i in range(num["random_instances"]):
            Hr = random_real_spectrum_matrix(rng, num["random_dim"])
            m = metric.build_metric(Hr, tol=tol)
            worst_res = max(worst_res, m.quasi_residual)
            worst_min = min(worst_min, m.min_eigenvalue)
            rows.append([i, m.quasi_residual, m.min_eigenvalue])
        tables["random_controls"] = Table(["instance", "quasi_residual", "min_eigenvalue"], rows)
        certs += [
            certify("random_quasi_residual", worst_res, tol),
            certify("random_min_eigenvalue", worst_min, 0.0, ">"),
        ]
    return tables, certs


def _run_evolve(cfg, model, num, rng):
    fam = evolution.rotating_family(frequency=num["frequency"], window=tuple(num["window"]))
    psi0 = np.asarray(num["psi0"], dtype=complex)
    res = evolution.evolve_doublet(fam, psi0, fam.theta(num["window"][0]) @ psi0, tol=num["tol"], n_report=num["n_report"])
    pb = evolution.pullback_check(fam, psi0, tol=num["pullback_tol"], n_report=min(num["n_report"], 41))
    rows = [
        [float(t), float(o.real), float(o.imag), float(k[0].real), float(k[0].imag), float(k[1].real), float(k[1].imag)]
        for t, o, k in zip(res.times, res.overlap_log, res.kets)
    ]
    tables = {"trajectory": Table(["t", "overlap_re", "overlap_im", "psi0_re", "psi0_im", "psi1_re", "psi1_im"], rows)}
    certs = [
        certify("overlap_drift", res.overlap_drift(), num["drift_tol"]),
        certify("brabra_compatibility", evolution.brabra_compatibility(fam, res), num["drift_tol"]),
        certify("pullback_error", pb.max_error, num["pullback_tol"]),
        certify("brabra_law_error", pb.brabra_law_error, num["pullback_tol"]),
    ]
    return tables, certs


def _run_sturm(cfg, model, num, rng):
    path = sturm.path_from_spec(num["path"])
    V = sturm.potential_from_spec(num["potential"])
    grid = sturm.Grid(num["box"][0], num["box"][1], num["n"])
    prob = sturm.rectify(path, V, grid, num["potential"])
    spec = sturm.solve_sturm(prob, num["k"], num["tol"])
    exact = None
    if num["potential"] == "harmonic":
        exact = 2.0 * np.arange(num["k"]) + 1.0
    rows = []
    for i, E in enumerate(spec.values):
        err = float(abs(E - exact[i])) if exact is not None else float("nan")
        rows.append([i, float(E.real), float(E.imag), err])
    certs = [certify("generalized_residual", spec.max_residual, num["tol"])]
    if num["level_tol"] is not None:
        if exact is None:
            raise ConfigError("level_tol needs a potential with known levels (harmonic)", field="numerics.level_tol")
        certs.append(certify("level_error", max(r[3] for r in rows), num["level_tol"]))
    return {"levels": Table(["index", "re", "im", "error"], rows)}, certs


def _run_susy(cfg, model, num, rng):
    rep = models.isospectrality_report(model, num["zero_tol"], num["match_tol"])
    pair_rows = [[float(a.real), float(a.imag), float(b.real), float(b.imag)] for a, b in rep.pairs]
    tables = {
        "pairs": Table(["minus_re", "minus_im", "plus_re", "plus_im"], pair_rows),
        "unpaired": Table(["index", "re", "im"], _cplx_rows(rep.unpaired)),
    }
    certs = [
        certify("intertwining_residual", model.intertwining_residual, num["intertwining_tol"]),
        certify("pairing_mismatch", rep.max_mismatch, num["match_tol"]),
    ]
    if num["expected_zero_modes"] is not None:
        zero = sum(abs(e) <= num["zero_tol"] for e in rep.unpaired)
        certs.append(certify("unpaired_zero_modes", zero, num["expected_zero_modes"], "=="))
    return tables, certs


def _run_scatter(cfg, model, num, rng):
    start, stop, count = num["energies"]
    energies = np.linspace(start, stop, int(count))
    theta = metric.build_metric(model.H).theta if num["weighted"] else None
    hermitian = bool(np.allclose(model.H, model.H.conj().T, rtol=0, atol=1e-14))
    rows, worst, worst_w = [], 0.0, 0.0
    for E in energies:
        r = scattering.scatter(model, E)
        row = [float(E), r.R.real, r.R.imag, r.T.real, r.T.imag, r.unitarity_deficit]
        worst = max(worst, r.unitarity_deficit)
        if theta is not None:
            dw = scattering.unitarity_deficit_weighted(model, theta, E, num["tol"])
            worst_w = max(worst_w, dw)
            row.append(dw)
        rows.append(row)
    columns = ["energy", "R_re", "R_im", "T_re", "T_im", "deficit"]
    if theta is not None:
        columns.append("deficit_weighted")
    certs = []
    if hermitian:
        certs.append(certify("hermitian_deficit", worst, num["hermitian_tol"]))
    if theta is not None:
        certs.append(certify("weighted_deficit", worst_w, num["tol"]))
    return {"sweep": Table(columns, rows)}, certs


def _run_pole_scan(cfg, model, num, rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = scattering.pole_scan(model, tuple(num["window"]), num["grid_density"], tol=num["tol"])
    rows = [
        [float(e.real), float(e.imag), float(p.real) if p is not None else float("nan"),
         float(p.imag) if p is not None else float("nan"), float(d)]
        for e, p, d in table.matches
    ]
    tables = {"matches": Table(["eig_re", "eig_im", "pole_re", "pole_im", "distance"], rows)}
    certs = [certify("pole_mismatch", table.max_mismatch if table.matches else 0.0, num["match_tol"])]
    return tables, certs


def _gamma_grid(start, stop, step):
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(count, 0))]


def _run_fig1(cfg, model, num, rng):
    gammas = _gamma_grid(*num["gammas"])
    rows = models.fig1_table(gammas, k=num["k"], L=num["L"], n=num["n"])
    worst = 0.0
    for g in gammas:
        levels = np.array([r[2] for r in rows if r[0] == float(g)])
        if levels.size > 2:
            sp = np.diff(levels)
            worst = max(worst, float(np.abs(sp - sp.mean()).max() / sp.mean()))
    tables = {"levels": Table(["gamma", "level_index", "energy"], [list(r) for r in rows])}
    return tables, [certify("spacing_deviation", worst, num["spacing_tol"])]


_DISPATCH = {
    "metric": _run_metric,
    "evolve": _run_evolve,
    "sturm": _run_sturm,
    "susy": _run_susy,
    "scatter": _run_scatter,
    "pole-scan": _run_pole_scan,
    "fig1-table": _run_fig1,
}


def run_experiment(cfg, timestamp=None):
    """Run ``cfg`` and return its :class:`ResultRecord` (nothing is written).

    Module errors are re-raised as :class:`ExperimentFailed` carrying the
    experiment id; configuration errors pass through unchanged.
    """
    rng = np.random.default_rng(cfg.seed)
    try:
        model = models.make_model(cfg.model["label"], **cfg.model["params"]) if cfg.model else None
        tables, certs = _DISPATCH[cfg.kind](cfg, model, cfg.numerics, rng)
    except ConfigError:
        raise
    except (CryptoHermError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise ExperimentFailed(cfg.id, cfg.kind, exc) from exc
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return ResultRecord(cfg.id, timestamp, cfg.resolved(), tables, certs)
