"""Photon-number intervals of a fluctuating coherent source, and the ratio checks."""

import numpy as np

from mdidecoy.fock_source import (
    build_ensemble,
    check_condition_ratio_w,
    check_condition_ratio_z,
    coeff_intervals,
    poisson_pmf,
)

# a signal source at mu = 0.4 whose intensity may sit anywhere in +-5 %
lo, hi = coeff_intervals(0.4, 0.05, kmax=6)
nominal = poisson_pmf(0.4, np.arange(7))
for k in range(7):
    print(f"k={k}  {lo[k]:.6e} <= {nominal[k]:.6e} <= {hi[k]:.6e}")

# the interval edge for k = 0 comes from the upper intensity, for large k from the lower one
print("a_0 width", hi[0] - lo[0], " a_1 width", hi[1] - lo[1])

# five sources per party: two near-vacuum (v, w), two decoys (x, y), one signal (z)
mu = {"v": 1e-4, "x": 0.03, "w": 1e-4, "y": 0.03, "z": 0.4}
probs = {"v": 0.1, "x": 0.15, "w": 0.1, "y": 0.15, "z": 0.5}
A = build_ensemble(mu, (0.02, 0.02), probs, kmax=12)

rz = check_condition_ratio_z(A, A)
rw = check_condition_ratio_w(A, A)
print("z/y ratio chain:", rz.ok, "strict:", rz.strict)
print("source/vacuum ratios:", rw.ok, "via", rw.certificate)

# squeeze the decoy up to the signal and the chain breaks
tight = build_ensemble(dict(mu, y=0.3), (0.2, 0.2), probs, kmax=12)
rz = check_condition_ratio_z(tight, tight)
print("overlapping decoy:", rz.ok, rz.strict, rz.reason)
