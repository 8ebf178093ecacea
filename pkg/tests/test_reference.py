import pytest

from mdidecoy.bounds import evaluate_bounds
from mdidecoy.channel import simulate_observables
from mdidecoy.reference import Intensities, h2, reference_bounds

from conftest import MU, PROBS, ensemble

FIELDS = ("D11_L", "delta11_L", "G11_U", "e11_U", "R", "S_tilde_yy", "S_tilde_zz", "T_tilde_xx",
          "Ntilde_yy_L", "Ntilde_yy_U", "Ntilde_zz_U", "Mtilde_xx_U")


def compare(mu_a, mu_b, dist, std_channel):
    A = ensemble(mu_a)
    B = ensemble(mu_b)
    s = simulate_observables(A, B, std_channel.with_distance(dist))
    rep = evaluate_bounds(s, A, B)
    ref = reference_bounds(s.S, s.T, s.E_zz, s.N_total, Intensities.from_mapping(mu_a),
                           Intensities.from_mapping(mu_b), PROBS, PROBS)
    return rep, ref


def test_h2_independent():
    assert h2(0.5) == 1.0 and h2(0.0) == 0.0


@pytest.mark.parametrize("dist", [0, 40, 120])
@pytest.mark.parametrize("mu_b", [dict(MU, z=0.4), dict(MU, z=0.5), dict(MU, z=0.3, y=0.05, x=0.05)])
def test_matches_general_code(std_channel, dist, mu_b):
    mu_a = dict(MU, v=1e-6, w=1e-6)
    mu_b = dict(mu_b, v=1e-6, w=1e-6)
    rep, ref = compare(mu_a, mu_b, dist, std_channel)
    for name in FIELDS:
        assert getattr(rep, name) == pytest.approx(getattr(ref, name), rel=1e-12, abs=0), name
