import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ensemble
from mdidecoy.channel import STANDARD_CHANNEL
from mdidecoy.fock_source import LABELS, poisson_pmf
from mdidecoy.oracle import (
    IDX,
    MODES,
    PerPulseScenario,
    check_containment,
    check_soundness,
    dump_scenario,
    exact_tallies,
    generate_scenario,
    ground_truth_targets,
    load_scenario,
    observables_from_scenario,
    verify_derivation_slacks,
)

KMAX = 6
K = KMAX + 2


def nominal_scenario(A, B, y, t=None, n=1):
    """``n`` slots at nominal intensity with the given yield matrices."""
    mu = np.array([[ens.nominal_intensity[l] for l in LABELS] for ens in (A, B)])
    y = np.broadcast_to(y, (n, K, K)).copy()
    t = np.zeros_like(y) if t is None else np.broadcast_to(t, (n, K, K)).copy()
    return PerPulseScenario(n, KMAX, np.repeat(mu[..., None], n, axis=2), y, t)


@pytest.fixture
def pair():
    A = ensemble(deltas=(0.05, 0.05), kmax=KMAX)
    return A, A


# --- scenarios ------------------------------------------------------------------------

def test_uniform_mode_is_nominal(pair, std_channel):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 20, "uniform-delta", 3)
    c = scn.coeffs()
    for p, ens in enumerate((A, B)):
        for l in LABELS:
            want = poisson_pmf(ens.nominal_intensity[l], np.arange(KMAX + 1))
            assert np.array_equal(c[p, IDX[l], :, :KMAX + 1], np.broadcast_to(want, (20, KMAX + 1)))


@pytest.mark.parametrize("mode", MODES)
def test_deterministic(pair, std_channel, mode):
    A, B = pair
    s1 = generate_scenario(A, B, std_channel, 200, mode, 11)
    s2 = generate_scenario(A, B, std_channel, 200, mode, 11)
    assert np.array_equal(s1.intensities, s2.intensities)
    assert np.array_equal(s1.yields, s2.yields)
    t1, t2 = exact_tallies(s1, A, B), exact_tallies(s2, A, B)
    assert t1.N == t2.N and t1.M == t2.M


def test_seed_changes_scenario(pair, std_channel):
    A, B = pair
    s1 = generate_scenario(A, B, std_channel, 50, "random-delta", 1)
    s2 = generate_scenario(A, B, std_channel, 50, "random-delta", 2)
    assert not np.array_equal(s1.intensities, s2.intensities)


@pytest.mark.parametrize("mode", MODES)
def test_containment_and_delta_box(pair, std_channel, mode):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 500, mode, 5)
    assert check_containment(scn, A, B)
    d = np.abs(scn.deltas(A, B))
    box = np.array([A.delta(l) for l in LABELS])[None, :, None]
    assert np.all(d <= box * (1 + 1e-12))


def test_containment_detects_narrow_intervals(std_channel):
    wide = ensemble(deltas=(0.05, 0.05), kmax=KMAX)
    narrow = ensemble(deltas=(0.01, 0.01), kmax=KMAX)
    scn = generate_scenario(wide, wide, std_channel, 200, "adversarial-delta", 0)
    assert not check_containment(scn, narrow, narrow)


def test_random_yields_respect_t_le_y(pair, std_channel):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 300, "random-yields", 2)
    assert np.all(scn.error_yields <= scn.yields) and np.all(scn.yields <= 1)


def test_unknown_mode(pair, std_channel):
    with pytest.raises(ValueError, match="unknown mode"):
        generate_scenario(*pair, std_channel, 10, "sideways", 0)


def test_empty_scenario(pair):
    with pytest.raises(ValueError, match="empty scenario"):
        PerPulseScenario(0, KMAX, np.zeros((2, 5, 0)), np.zeros((0, K, K)), np.zeros((0, K, K)))


def test_scenario_rejects_t_above_y(pair):
    y = np.full((K, K), 0.1)
    with pytest.raises(ValueError):
        nominal_scenario(*pair, y, t=2 * y)


# --- tallies --------------------------------------------------------------------------

def test_zero_yields_zero_tallies(pair):
    A, B = pair
    tl = exact_tallies(nominal_scenario(A, B, np.zeros((K, K)), n=5), A, B)
    assert not tl.D.any() and not tl.G.any() and not tl.n.any() and not tl.m.any()
    assert all(v == 0 for v in tl.N.values()) and tl.M_tilde_xx == 0


def test_single_pulse_single_photon_pair(pair):
    A, B = pair
    y = np.zeros((K, K))
    y[1, 1] = 1.0
    tl = exact_tallies(nominal_scenario(A, B, y), A, B)
    assert tl.D[1, 1] == 1.0 and tl.D.sum() == 1.0
    for l in LABELS:
        for r in LABELS:
            a1 = poisson_pmf(A.nominal_intensity[l], 1)
            b1 = poisson_pmf(B.nominal_intensity[r], 1)
            assert tl.N[(l, r)] == pytest.approx(A.prob(l) * B.prob(r) * a1 * b1, rel=1e-14)


def test_single_photon_targets_closed_form(pair):
    A, B = pair
    y = np.zeros((K, K))
    y[1, 1] = 1.0
    gt = ground_truth_targets(nominal_scenario(A, B, y, t=0.25 * y), A, B)
    # only the (1, 1) term survives, so the single-photon fraction is one
    assert gt.delta11 == pytest.approx(1.0, rel=1e-14)
    assert gt.e11 == pytest.approx(0.25, rel=1e-14)
    assert gt.D11 == 1.0 and gt.G11 == 0.25


@pytest.mark.parametrize("mode", MODES)
def test_resummation(pair, std_channel, mode):
    A, B = pair
    scn = generate_scenario(A, B, std_channel.with_distance(40), 400, mode, 9)
    tl = exact_tallies(scn, A, B)
    for (l, r), total in tl.N.items():
        assert tl.nlr(l, r).sum() == pytest.approx(total, rel=1e-12)
        assert tl.N_tilde[(l, r)] <= total
    assert np.all(tl.n >= 0) and np.all(tl.m >= 0)
    assert np.allclose(tl.D, scn.yields.sum(axis=0), rtol=0, atol=0)


def test_tallies_against_loop(pair, std_channel):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 7, "random-yields", 4)
    tl = exact_tallies(scn, A, B)
    c = scn.coeffs()
    for l, r in (("z", "z"), ("w", "y"), ("x", "v")):
        want = sum(np.outer(c[0, IDX[l], i], c[1, IDX[r], i]) * scn.yields[i] for i in range(7))
        want *= A.prob(l) * B.prob(r)
        assert np.allclose(tl.nlr(l, r), want, rtol=1e-13, atol=0)


def test_zero_errors_zero_e11(pair, std_channel):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 50, "random-delta", 0)
    scn = dataclasses.replace(scn, error_yields=np.zeros_like(scn.yields))
    assert ground_truth_targets(scn, A, B).e11 == 0.0


def test_undefined_targets_flagged(pair):
    A, B = pair
    y = np.zeros((K, K))
    y[0, 2] = 0.5
    gt = ground_truth_targets(nominal_scenario(A, B, y), A, B)
    assert gt.e11 is None
    assert gt.delta11 == 0.0


def test_swap_symmetry(std_channel):
    A = ensemble(deltas=(0.05, 0.05), kmax=KMAX)
    scn = generate_scenario(A, A, std_channel, 100, "uniform-delta", 0)
    swapped = dataclasses.replace(
        scn,
        intensities=scn.intensities[::-1].copy(),
        yields=scn.yields.transpose(0, 2, 1).copy(),
        error_yields=scn.error_yields.transpose(0, 2, 1).copy(),
    )
    g1 = ground_truth_targets(scn, A, A)
    g2 = ground_truth_targets(swapped, A, A)
    for f in ("D11", "delta11", "e11", "G11", "Mtilde_xx"):
        assert getattr(g2, f) == pytest.approx(getattr(g1, f), rel=1e-12)
    for k in g1.Ntilde:
        assert g2.Ntilde[k] == pytest.approx(g1.Ntilde[k], rel=1e-12)


# --- observables ----------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 1.0))
def test_observables_linear_in_yields(scale):
    A = ensemble(deltas=(0.05, 0.05), kmax=KMAX)
    scn = generate_scenario(A, A, STANDARD_CHANNEL, 60, "random-delta", 1)
    scaled = dataclasses.replace(scn, yields=scn.yields * scale, error_yields=scn.error_yields * scale)
    s1 = observables_from_scenario(scn, A, A)
    s2 = observables_from_scenario(scaled, A, A)
    for k, v in s1.S.items():
        assert s2.S[k] == pytest.approx(scale * v, rel=1e-12)
    assert s2.E_zz == pytest.approx(s1.E_zz, rel=1e-12)


# --- slacks and soundness -------------------------------------------------------------

def test_no_fluctuation_slacks_vanish(std_channel):
    A = ensemble(kmax=KMAX)
    scn = generate_scenario(A, A, std_channel, 100, "uniform-delta", 0)
    rep = verify_derivation_slacks(scn, A, A)
    for name in ("xi1", "xi2"):
        value, scale = rep.slacks[name]
        assert abs(value) <= 1e-12 * scale
    assert rep.ok


@pytest.mark.parametrize("mode", MODES)
def test_slacks_and_identities(pair, std_channel, mode):
    A, B = pair
    scn = generate_scenario(A, B, std_channel.with_distance(25), 500, mode, 21)
    rep = verify_derivation_slacks(scn, A, B)
    assert rep.ok, rep.violations
    assert set(rep.slacks) == {"xi1", "xi2", "xi3", "zeta1", "zeta2", "zeta3"}
    assert max(rep.identities.values()) < 1e-12


@pytest.mark.parametrize("mode", MODES)
def test_soundness_single_scenario(pair, std_channel, mode):
    A, B = pair
    scn = generate_scenario(A, B, std_channel.with_distance(50), 500, mode, 8)
    checks, _ = check_soundness(scn, A, B)
    assert all(c.ok for c in checks), [c for c in checks if not c.ok]
    assert {c.name for c in checks} >= {"D11 lower", "Ntilde_yy lower", "Ntilde_yy upper", "Ntilde_zz upper",
                                         "Mtilde_xx upper", "G11 upper", "delta11 lower", "e11 upper"}


def test_narrowed_intervals_caught(std_channel):
    wide = ensemble(deltas=(0.05, 0.05), kmax=KMAX)
    narrow = ensemble(deltas=(0.0, 0.0), kmax=KMAX)
    bad = 0
    for seed in range(10):
        scn = generate_scenario(wide, wide, std_channel, 500, "adversarial-delta", seed)
        checks, _ = check_soundness(scn, wide, wide, narrow, narrow)
        bad += any(not c.ok for c in checks)
    assert bad > 0


# --- dump / load ----------------------------------------------------------------------

def test_dump_load_roundtrip(pair, std_channel, tmp_path):
    A, B = pair
    scn = generate_scenario(A, B, std_channel, 30, "random-yields", 12)
    path = tmp_path / "scn.txt"
    dump_scenario(scn, path)
    back = load_scenario(path)
    assert back.n_pulses == 30 and back.kmax == KMAX and back.mode == "random-yields" and back.rng_seed == 12
    assert np.array_equal(back.intensities, scn.intensities)
    assert np.array_equal(back.yields, scn.yields)
    assert np.array_equal(back.error_yields, scn.error_yields)


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("hello\n")
    with pytest.raises(ValueError, match="not a scenario"):
        load_scenario(path)
