"""Drive the command-line tool from a config file."""

import pathlib
import tempfile

from mdidecoy.cli import main

work = pathlib.Path(tempfile.mkdtemp())
cfg = work / "run.ini"
cfg.write_text("""
[channel]
det_efficiency = 0.145   # other keys keep their defaults

[scan]
distances = 0:200:50
deltas = 0 0, 0.02 0.02

[verify]
distances = 50
n_per_mode = 5
n_pulses = 2000

[run]
seed = 7
""")

print("scan exit", main(["scan", "--config", str(cfg), "--out", str(work / "scan.csv")]))
print((work / "scan.csv").read_text())
print("verify exit", main(["verify", "--config", str(cfg), "--out", str(work / "verify.txt")]))
# the full, re-parseable configuration
main(["echo-config", "--config", str(cfg)])
