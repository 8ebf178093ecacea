import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdidecoy.channel import STANDARD_CHANNEL
from mdidecoy.fock_source import require_conditions
from mdidecoy.oracle import generate_scenario, ground_truth_targets
from mdidecoy.optimizer import (
    NoAdmissibleIntensity,
    PartySettings,
    ScanSpec,
    evaluate_point,
    infinite_decoy_reference,
    mu_z_grid,
    optimize_key_rate,
    optimize_point,
    refine_mu_z,
    require_admissible,
)

P = PartySettings()


def test_party_settings_validate():
    with pytest.raises(ValueError, match="sum to 1"):
        PartySettings(p_z=0.6)
    with pytest.raises(ValueError, match="mu_y"):
        PartySettings(mu_y=0.0)
    with pytest.raises(ValueError, match="p_v"):
        PartySettings(p_v=1.2, p_z=-0.6)


def test_scan_spec_validate():
    with pytest.raises(ValueError):
        ScanSpec(mu_z_step=0.0)
    with pytest.raises(ValueError):
        ScanSpec(mu_z_min=0.5, mu_z_max=0.4)
    with pytest.raises(ValueError):
        ScanSpec(deltas=((0.0, 1.0),))
    with pytest.raises(ValueError):
        ScanSpec(prob_grid=((0.2, 0.2, 0.2, 0.2, 0.3),))
    with pytest.raises(ValueError, match=r"mu_z_min > mu_y\(1\+delta2\)"):
        ScanSpec(mu_z_min=0.03).check_against(P, P)


def test_grid_endpoints():
    g = mu_z_grid(0.1, 0.7, 0.01)
    assert len(g) == 61 and g[0] == 0.1 and g[-1] == 0.7


def test_single_point_grid():
    spec = ScanSpec(mu_z_min=0.37, mu_z_max=0.37, distances=(25.0,), deltas=((0.01, 0.01),))
    rec = optimize_point(STANDARD_CHANNEL.with_distance(25), P, P, (0.01, 0.01), spec)
    assert rec.mu_z_opt == 0.37
    assert rec.R == evaluate_point(STANDARD_CHANNEL.with_distance(25), P, P, 0.37, (0.01, 0.01)).R


@pytest.mark.parametrize("deltas", [(0.0, 0.0), (0.01, 0.01), (0.02, 0.02)])
def test_refinement_within_one_step(deltas):
    ch = STANDARD_CHANNEL.with_distance(25)
    spec = ScanSpec(distances=(25.0,), deltas=(deltas,))
    rec = optimize_point(ch, P, P, deltas, spec)
    refined = refine_mu_z(ch, P, P, deltas, spec.mu_z_min, spec.mu_z_max, spec.kmax)
    assert abs(refined - rec.mu_z_opt) <= spec.mu_z_step


def test_surface_unimodal_at_25km():
    ch = STANDARD_CHANNEL.with_distance(25)
    spec = ScanSpec(distances=(25.0,), deltas=((0.01, 0.01),))
    rec = optimize_point(ch, P, P, (0.01, 0.01), spec, keep_surface=True)
    r = np.array([p.report.R_raw for p in rec.surface])
    i = int(np.argmax(r))
    assert np.all(np.diff(r[:i + 1]) >= 0) and np.all(np.diff(r[i:]) <= 0)


def test_rate_not_increasing_in_delta():
    spec = ScanSpec(distances=(0.0, 40.0, 80.0, 120.0), deltas=((0, 0), (0.005, 0.005), (0.01, 0.01),
                                                                 (0.02, 0.02), (0.05, 0.05)))
    rows = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    for d in spec.distances:
        rates = [r.R for r in rows if r.distance_km == d]
        assert all(b <= a for a, b in zip(rates, rates[1:])), (d, rates)


def test_infinite_decoy_dominates():
    spec = ScanSpec(distances=tuple(float(d) for d in range(0, 201, 20)))
    for r in optimize_key_rate(spec, P, P, STANDARD_CHANNEL):
        assert r.R_infinite_decoy >= r.R


def test_infinite_decoy_vanishes_far_away():
    A = P.ensemble((0.0, 0.0), 0.4)
    near = infinite_decoy_reference(STANDARD_CHANNEL.with_distance(10), A, A)
    far = infinite_decoy_reference(STANDARD_CHANNEL.with_distance(600), A, A)
    assert near > 0 and far == 0.0


def test_noiseless_channel_has_no_single_photon_errors():
    ch = STANDARD_CHANNEL.with_distance(30)
    ch = dataclasses.replace(ch, dark_rate=0.0, misalignment=0.0)
    A = P.ensemble((0.05, 0.05), 0.4, kmax=6)
    scn = generate_scenario(A, A, ch, 100, "random-delta", 0)
    assert ground_truth_targets(scn, A, A).e11 == 0.0


def test_rows_sorted_and_deterministic():
    spec = ScanSpec(distances=(50.0, 0.0, 25.0), deltas=((0.01, 0.01), (0.0, 0.0)))
    a = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    b = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    assert [(r.distance_km, r.delta2) for r in a] == [(0.0, 0.01), (0.0, 0.0), (25.0, 0.01), (25.0, 0.0),
                                                      (50.0, 0.01), (50.0, 0.0)]
    assert [(r.mu_z_opt, r.R) for r in a] == [(r.mu_z_opt, r.R) for r in b]


def test_argmax_is_admissible():
    spec = ScanSpec(distances=(60.0,), deltas=((0.02, 0.02),))
    (rec,) = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    A = P.ensemble((0.02, 0.02), rec.mu_z_opt, spec.kmax)
    require_conditions(A, A)
    assert rec.condition_ok and rec.report.flags is not None


def test_infeasible_line_reported():
    # every grid point overlaps the decoy interval
    spec = ScanSpec(mu_z_min=0.035, mu_z_max=0.036, mu_z_step=0.001, distances=(10.0,), deltas=((0.1, 0.1),))
    (rec,) = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    assert not rec.condition_ok and rec.R is None and "mu_y" in rec.reason
    with pytest.raises(NoAdmissibleIntensity, match="no admissible signal intensity"):
        require_admissible(rec)


def test_per_sent_pulse_scaling():
    ch = STANDARD_CHANNEL.with_distance(20)
    a = evaluate_point(ch, P, P, 0.4, (0.01, 0.01))
    b = evaluate_point(ch, P, P, 0.4, (0.01, 0.01), per_sent_pulse=True)
    assert b.R == pytest.approx(a.R * P.p_z ** 2, rel=1e-15)


def test_probability_grid_picks_best_row():
    rows = ((0.1, 0.15, 0.1, 0.15, 0.5), (0.05, 0.1, 0.05, 0.1, 0.7))
    spec = ScanSpec(distances=(30.0,), deltas=((0.01, 0.01),), prob_grid=rows)
    (rec,) = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)
    singles = [optimize_point(STANDARD_CHANNEL.with_distance(30), P.with_probs(r), P.with_probs(r), (0.01, 0.01),
                              ScanSpec(distances=(30.0,), deltas=((0.01, 0.01),))).R for r in rows]
    assert rec.R == max(singles)
    assert rec.probs in rows


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 150.0), st.floats(0.0, 0.04))
def test_dominance_property(distance, delta):
    ch = STANDARD_CHANNEL.with_distance(distance)
    p = evaluate_point(ch, P, P, 0.4, (delta, delta))
    A = P.ensemble((0.0, 0.0), 0.4)
    if p.feasible:
        assert p.R <= infinite_decoy_reference(ch, A, A) * (1 + 1e-12)
    assert not math.isnan(infinite_decoy_reference(ch, A, A))
