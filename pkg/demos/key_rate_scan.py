"""Optimised key rate versus distance for several fluctuation levels."""

from mdidecoy.channel import STANDARD_CHANNEL
from mdidecoy.optimizer import PartySettings, ScanSpec, optimize_key_rate

P = PartySettings()
deltas = (0.0, 0.01, 0.02, 0.05)
spec = ScanSpec(distances=tuple(float(d) for d in range(0, 281, 20)), deltas=tuple((d, d) for d in deltas))
rows = optimize_key_rate(spec, P, P, STANDARD_CHANNEL)

print("km    " + "  ".join(f"d={d:<9}" for d in deltas) + "  infinite")
for dist in spec.distances:
    line = [r for r in rows if r.distance_km == dist]
    print(f"{dist:<5g} " + "  ".join(f"{r.R:.3e}  " for r in line) + f"  {line[0].R_infinite_decoy:.3e}")

# the optimal signal intensity drifts with distance
print("mu_z at delta=0.02:", [r.mu_z_opt for r in rows if r.delta2 == 0.02])
