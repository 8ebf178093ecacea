"""From observed yields to a certified key rate, and what fluctuation costs."""

from mdidecoy.bounds import evaluate_bounds
from mdidecoy.channel import STANDARD_CHANNEL, simulate_observables
from mdidecoy.fock_source import build_ensemble
from mdidecoy.reference import Intensities, reference_bounds

mu = {"v": 1e-6, "x": 0.03, "w": 1e-6, "y": 0.03, "z": 0.4}
probs = {"v": 0.1, "x": 0.15, "w": 0.1, "y": 0.15, "z": 0.5}
ch = STANDARD_CHANNEL.with_distance(50)

for delta in (0.0, 0.01, 0.02, 0.05):
    A = build_ensemble(mu, (delta, delta), probs, kmax=12)
    # observables at the nominal intensities, bounds over the whole box
    s = simulate_observables(A, A, ch)
    rep = evaluate_bounds(s, A, A, ch.error_corr_ineff)
    print(f"delta={delta:<5} D11_L={rep.D11_L:.4e} delta11_L={rep.delta11_L:.4f} "
          f"e11_U={rep.e11_U:.4f} R={rep.R:.4e} branch={rep.branch}")

# no fluctuation: the interval code reduces to the closed forms in the intensities
A = build_ensemble(mu, (0.0, 0.0), probs, kmax=12)
s = simulate_observables(A, A, ch)
rep = evaluate_bounds(s, A, A)
I = Intensities.from_mapping(mu)
ref = reference_bounds(s.S, s.T, s.E_zz, s.N_total, I, I, probs, probs)
for name in ("D11_L", "delta11_L", "e11_U", "R"):
    a, b = getattr(rep, name), getattr(ref, name)
    print(f"{name:10s} interval {a:.15e}  closed form {b:.15e}  rel {abs(a - b) / abs(b):.1e}")
