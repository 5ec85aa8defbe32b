import warnings

import numpy as np
import pytest

from cryptoherm.exceptions import BandEdge, ComplexSpectrum, InfeasibleBand, NoPolesFound, SupportTouchesLead
from cryptoherm.metric import band_metric, build_metric
from cryptoherm.models import _chain_model, pt_two_center, smeared_interaction
from cryptoherm.scattering import (
    asymptotic_locality_check,
    lead_phase,
    lead_local_metric,
    locality_profile,
    pole_scan,
    scatter,
    unitarity_deficit_weighted,
)
from conftest import random_hpd


def chain(potential, mass_sign=1):
    return _chain_model(np.asarray(potential, dtype=complex), mass_sign, 2.0, 1.0, "test", {})


def test_free_chain_identity():
    m = chain(np.zeros(12))
    for E in np.linspace(0.05, 3.95, 20):
        r = scatter(m, E)
        assert abs(r.R) < 1e-12 and abs(r.T - 1) < 1e-12 and r.unitarity_deficit < 1e-12


@pytest.mark.parametrize("v", [0.7, -1.3])
def test_single_impurity_closed_form(v):
    V = np.zeros(5)
    V[2] = v
    m = chain(V)
    for E in (0.5, 2.0, 3.3):
        k = np.arccos(1 - E / 2)
        T_exact = 2j * np.sin(k) / (2j * np.sin(k) - v)
        r = scatter(m, E)
        assert abs(r.T - T_exact) < 1e-10
        assert abs(abs(r.R) - abs(v / (2j * np.sin(k) - v))) < 1e-10


def test_lead_phase_sheets():
    w = lead_phase(1.0)
    assert abs(abs(w) - 1) < 1e-14 and w.imag > 0
    assert abs(lead_phase(-0.5)) < 1
    assert abs(lead_phase(4.5)) < 1


def test_complex_impurity_not_unitary():
    V = np.zeros(5, dtype=complex)
    V[2] = 0.8j
    assert scatter(chain(V), 1.5).unitarity_deficit > 0.1


def test_hermitian_deficits(rng):
    for _ in range(20):
        V = np.zeros(16)
        V[4:12] = rng.uniform(-2, 2, 8)
        m = chain(V)
        for E in (0.3, 1.9, 3.6):
            assert scatter(m, E).unitarity_deficit <= 1e-10


def test_weighted_equals_ordinary_for_hermitian():
    V = np.zeros(10)
    V[4:6] = [0.5, -0.2]
    m = chain(V)
    assert unitarity_deficit_weighted(m, np.eye(10), 1.2) == pytest.approx(scatter(m, 1.2).unitarity_deficit, abs=1e-14)


def test_weighted_deficit_two_center():
    m = pt_two_center()
    theta = build_metric(m.H).theta
    for E in np.linspace(0.2, 3.8, 10):
        assert scatter(m, E).unitarity_deficit > 1e-6
        assert unitarity_deficit_weighted(m, theta, E) <= 1e-8


def test_past_exceptional_point_no_metric():
    with pytest.raises(ComplexSpectrum):
        build_metric(pt_two_center(s=2.0).H)


def test_scatter_guards():
    with pytest.raises(BandEdge):
        scatter(chain(np.zeros(6)), 4.5)
    V = np.zeros(6)
    V[0] = 1.0
    with pytest.raises(SupportTouchesLead):
        scatter(chain(V), 1.0)


def test_mass_sign_consistency():
    V = np.zeros(12, dtype=complex)
    V[5:7] = [0.4, -0.9]
    neg = chain(V, mass_sign=-1)
    flipped = chain(-V)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(neg.H)), np.sort_complex(-np.linalg.eigvals(flipped.H)), atol=1e-12)
    # both readings send the incoming wave with positive group velocity, so
    # for a real potential the amplitudes are complex conjugates
    for E in (-3.1, -1.0, -0.4):
        a, b = scatter(neg, E), scatter(flipped, -E)
        assert abs(a.T - np.conj(b.T)) < 1e-13 and abs(a.R - np.conj(b.R)) < 1e-13
        assert abs(a.unitarity_deficit - b.unitarity_deficit) < 1e-13


def test_locality_checks(rng):
    rep = asymptotic_locality_check(np.eye(30), 5)
    assert rep.passed and rep.measure == 0
    dense = random_hpd(rng, 30)
    assert not asymptotic_locality_check(dense, 5).passed
    with pytest.raises(ValueError):
        asymptotic_locality_check(np.eye(10), 5)


def test_band_metric_locality_is_flat():
    # band_metric only targets the band; it does not single out the leads
    m = pt_two_center(n=30)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InfeasibleBand)
        prof = locality_profile(band_metric(m.H, 3).theta)
    assert prof[:5].min() > 0.1


@pytest.mark.parametrize("s", [0.05, 0.005])
def test_lead_local_metric_decays_to_floor(s):
    n = 60
    m = pt_two_center(n=n, s=s)
    met = lead_local_metric(m, n // 4)
    assert met.quasi_residual <= 1e-10 and met.min_eigenvalue > 0
    prof = locality_profile(met.theta)
    centre = prof[n // 2 - 1:n // 2 + 1].max()
    half = prof[: n // 2]
    # monotone decay from the support outwards, down to a plateau
    assert np.all(np.diff(half[n // 4 - 2:n // 2]) >= -1e-2 * centre)
    assert half[:n // 4].max() < 0.25 * centre
    # regression fixture: the plateau scales with the non-Hermitian strength
    assert half[2:n // 4].max() == pytest.approx(4.36 * s, rel=0.05)
    assert not asymptotic_locality_check(met.theta, 5, threshold=1e-6).passed


def test_pole_single_impurity():
    # bound state decays like 0.38^|j|; 41 sites make the finite-size shift negligible
    V = np.zeros(41)
    V[20] = -1.0
    m = chain(V)
    table = pole_scan(m, (-1.0, -0.01, -0.1, 0.1))
    assert len(table) == 1
    assert abs(table.poles[0] - (2 - np.sqrt(5))) < 1e-8
    assert table.max_mismatch < 1e-6


def test_pole_scan_free_chain_empty():
    with pytest.warns(NoPolesFound):
        table = pole_scan(chain(np.zeros(10)), (-1.0, -0.05, -0.1, 0.1))
    assert len(table) == 0 and table.max_mismatch == 0.0


def test_pole_scan_two_center():
    m = pt_two_center()
    table = pole_scan(m, (-1.5, -0.01, -0.1, 0.1))
    assert len(table.eigenvalues) == 2
    assert table.max_mismatch <= 1e-5


def test_pole_window_margin():
    with pytest.raises(BandEdge):
        pole_scan(chain(np.zeros(10)), (-1.0, 0.0005, -0.1, 0.1))
