"""Two-arm coincidence model: pair yields and the statistics an experiment reports."""

from mdidecoy.channel import STANDARD_CHANNEL, simulate_observables, yield_matrix
from mdidecoy.fock_source import build_ensemble

mu = {"v": 1e-4, "x": 0.03, "w": 1e-4, "y": 0.03, "z": 0.4}
probs = {"v": 0.1, "x": 0.15, "w": 0.1, "y": 0.15, "z": 0.5}
A = build_ensemble(mu, (0.0, 0.0), probs, kmax=12)

for d in (0, 50, 100, 150, 200):
    ch = STANDARD_CHANNEL.with_distance(d)
    ym = yield_matrix(ch, 4)
    # y_11 is what the decoy bounds try to recover; t_11 / y_11 is its error rate
    print(f"{d:4d} km  y00={ym.y[0, 0]:.3e}  y11={ym.y[1, 1]:.3e}  e11={ym.t[1, 1] / ym.y[1, 1]:.4f}")

s = simulate_observables(A, A, STANDARD_CHANNEL.with_distance(50))
print("S_zz", s.S[("z", "z")], "S_yy", s.S[("y", "y")], "S_ww", s.S[("w", "w")])
print("T_xx", s.T[("x", "x")], "E_zz", s.E_zz)
