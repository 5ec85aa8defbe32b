import numpy as np
import pytest

from cryptoherm.exceptions import CenterOutOfRange, GridTooCoarse, SingularTMap
from cryptoherm.models import (
    chain_kinetic,
    fig1_table,
    isospectrality_report,
    list_models,
    make_model,
    pt_chain,
    pt_two_center,
    reality_scan,
    singular_levels_exact,
    singular_oscillator,
    smeared_interaction,
    susy_pair,
)


def test_intertwining_and_pairing_oscillator():
    pair = susy_pair(lambda x: x, (-8.0, 8.0, 1500))
    assert pair.intertwining_residual <= 1e-12
    rep = isospectrality_report(pair, zero_tol=1e-6, match_tol=1e-3)
    zero = [e for e in rep.unpaired if abs(e) <= 1e-6]
    assert len(zero) == 1 and len(rep.unpaired) == 1
    assert rep.max_mismatch <= 1e-3
    low = np.sort(np.linalg.eigvalsh(pair.H_minus))[:5]
    # ground level ~0; the lattice doubler duplicates the oscillator tower 2, 4, ...
    np.testing.assert_allclose(low, [0, 2, 2, 4, 4], atol=5e-3)


def test_free_pair_all_paired():
    pair = susy_pair(lambda x: np.zeros_like(x), (-8.0, 8.0, 200))
    np.testing.assert_allclose(pair.H_minus, pair.H_plus)
    rep = isospectrality_report(pair, zero_tol=1e-9)
    assert rep.all_paired and rep.paired_fraction == 1.0


@pytest.mark.parametrize("n", [50, 120, 200])
def test_nonzero_spectrum_equality(n):
    pair = susy_pair(np.tanh, (-6.0, 6.0, n))
    assert pair.intertwining_residual <= 1e-12
    rep = isospectrality_report(pair, match_tol=1e-8)
    assert rep.max_mismatch <= 1e-8
    assert all(abs(e) <= 1e-6 for e in rep.unpaired)


def test_unitary_phase_t_map(rng):
    n = 200
    T = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    plain = susy_pair(lambda x: x, (-8.0, 8.0, n))
    twisted = susy_pair(lambda x: x, (-8.0, 8.0, n), T_map=T)
    assert twisted.intertwining_residual <= 1e-12
    for a, b in ((plain.H_minus, twisted.H_minus), (plain.H_plus, twisted.H_plus)):
        ea = np.sort_complex(np.linalg.eigvals(a))
        eb = np.sort_complex(np.linalg.eigvals(b))
        assert np.abs(ea - eb).max() < 1e-8


def test_singular_t_map():
    T = np.eye(20)
    T[3, 3] = 0
    with pytest.raises(SingularTMap):
        susy_pair(lambda x: x, (-1.0, 1.0, 20), T_map=T)


def test_random_pair_negative_control(rng):
    X = rng.standard_normal((40, 40))
    Y = rng.standard_normal((40, 40))
    rep = isospectrality_report((X + X.T, Y + Y.T), match_tol=1e-8)
    assert rep.paired_fraction < 0.1


def test_singular_oscillator_equidistant():
    levels = singular_oscillator(-0.5, n=4000).levels(6).real
    spacing = np.diff(levels)
    assert np.abs(spacing - spacing.mean()).max() / spacing.mean() < 0.02


@pytest.mark.parametrize("gamma, rtol", [(0.0, 0.01), (2.0, 0.02)])
def test_singular_oscillator_exact_levels(gamma, rtol):
    levels = singular_oscillator(gamma, n=4000).levels(4).real
    exact = singular_levels_exact(gamma, 4)
    np.testing.assert_allclose(levels, exact, rtol=rtol)


def test_singular_levels_formula():
    np.testing.assert_allclose(singular_levels_exact(0.0, 3), [3, 7, 11])
    np.testing.assert_allclose(singular_levels_exact(2.0, 3), [4 * m + 2 * 2 + 3 for m in range(3)])
    # gamma and -1 - gamma give the same potential
    np.testing.assert_allclose(singular_levels_exact(-0.3, 3), singular_levels_exact(-0.7, 3))


def test_singular_oscillator_guards():
    with pytest.raises(GridTooCoarse):
        singular_oscillator(0.0, n=500)
    with pytest.raises(ValueError):
        singular_oscillator(-1.0)


def test_fig1_table_rows():
    rows = fig1_table([-0.5, 0.0], k=3)
    assert len(rows) == 6
    assert [r[1] for r in rows] == [0, 1, 2, 0, 1, 2]


def test_pt_chain_two_site():
    for gamma in (0.0, 0.5, 0.99):
        ev = np.sort(np.linalg.eigvals(pt_chain(2, gamma).H).real)
        np.testing.assert_allclose(ev, [-np.sqrt(1 - gamma**2), np.sqrt(1 - gamma**2)], atol=1e-12)
    scan = reality_scan(lambda g: pt_chain(2, g), [0.5, 0.999, 1.001, 1.5])
    assert [flag for _, flag, _ in scan] == [True, True, False, False]


def test_pt_chain_hermitian_limit():
    n = 9
    ev = np.sort(np.linalg.eigvalsh(pt_chain(n, 0.0).H))
    k = np.arange(1, n + 1)
    np.testing.assert_allclose(ev, np.sort(2 * np.cos(k * np.pi / (n + 1))), atol=1e-12)


def test_pt_chain_exceptional_point_regression():
    scan = reality_scan(lambda g: pt_chain(6, g), np.round(np.arange(0.1, 1.6, 0.1), 10))
    flags = [flag for _, flag, _ in scan]
    first_bad = flags.index(False)
    assert all(flags[:first_bad]) and not any(flags[first_bad:])
    # recorded fixture: reality breaks between 0.9 and 1.0
    assert scan[first_bad][0] == pytest.approx(1.0)


def test_mass_sign_negates_kinetic():
    m = smeared_interaction(30, [15], 2.0, -0.7 + 0.2j)
    flipped = m.with_mass_sign(-1)
    np.testing.assert_allclose(flipped.H + m.H, 2 * np.diag(m.potential))
    np.testing.assert_allclose(m.kinetic, chain_kinetic(30))


def test_smeared_limits_and_bound_state():
    free = smeared_interaction(40, [20], 50.0, 0.0)
    np.testing.assert_allclose(free.H, chain_kinetic(40))
    m = smeared_interaction(80, [40], 1.0, -0.5)
    ev = np.sort(np.linalg.eigvalsh(m.H))
    assert (ev < 0).sum() == 1
    np.testing.assert_allclose(m.levels(1).real, ev[:1], atol=1e-12)


def test_smeared_validation():
    with pytest.raises(CenterOutOfRange):
        smeared_interaction(20, [25], 1.0, 1.0)
    with pytest.raises(ValueError):
        smeared_interaction(20, [10], 0.5, 1.0)


def test_two_center_real_phase():
    for s in (0.01, 0.05):
        ev = np.linalg.eigvals(pt_two_center(s=s).H)
        assert np.abs(ev.imag).max() < 1e-9
    assert np.abs(np.linalg.eigvals(pt_two_center(s=2.0).H).imag).max() > 1e-3


def test_registry():
    labels = list_models()
    for needed in ("singular-osc", "pt-chain", "smeared", "susy:x"):
        assert needed in labels
    assert make_model("pt-chain", n=2, gamma=0.5).dim == 2
    assert make_model("susy:zero", n=50).H_minus.shape == (50, 50)
    with pytest.raises(KeyError):
        make_model("nope")
