import csv
import io
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdidecoy.channel import ChannelParams, simulate_observables
from mdidecoy.cli import OPTIMIZE_COLUMNS, SCAN_COLUMNS, main
from mdidecoy.config import ConfigError, OutputSettings, RunConfig, VerifySettings, dump_config, parse_config
from mdidecoy.optimizer import PartySettings, ScanSpec
from mdidecoy.reference import Intensities, reference_bounds
from mdidecoy.oracle import MODES

SMALL_VERIFY = """
[verify]
distances = 25
modes = uniform-delta, random-delta, adversarial-delta, random-yields
n_per_mode = 3
n_pulses = 2000
"""


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    out = tmp_path / f"{command}.out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_table(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


# --- config -------------------------------------------------------------------------------

def test_defaults_from_empty_config():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.channel == ChannelParams()
    assert cfg.scan.distances == tuple(float(d) for d in range(0, 201, 10))


def test_distance_range_and_list():
    cfg = parse_config("[scan]\ndistances = 0:50:25\n")
    assert cfg.scan.distances == (0.0, 25.0, 50.0)
    cfg = parse_config("[scan]\ndistances = 5, 7.5\n")
    assert cfg.scan.distances == (5.0, 7.5)
    assert parse_config("[scan]\ndistances =\n").scan.distances == ()


def test_inline_comments():
    cfg = parse_config("[channel]\ndark_rate = 1e-6  # per gate\n")
    assert cfg.channel.dark_rate == 1e-6


@pytest.mark.parametrize("text, line, section, key", [
    ("[channel]\ndark_rate = 2\n", 2, "channel", "dark_rate"),
    ("\n\n[alice]\nmu_y = 0.03\np_z = lots\n", 5, "alice", "p_z"),
    ("[scan]\nmu_z_min = 0.1\ncolour = red\n", 3, "scan", "colour"),
    ("[bogus]\nx = 1\n", 1, "bogus", ""),
    ("[scan]\ndeltas = 0.1\n", 2, "scan", "deltas"),
    ("[scan]\nmu_z_min = 0.02\n", 2, "scan", "mu_z_min"),
    ("[alice]\np_z = 0.6\n", 1, "alice", ""),
    ("[output]\nformat = xlsx\n", 2, "output", "format"),
    ("[verify]\nmodes = sideways\n", 2, "verify", "modes"),
])
def test_diagnostics_name_line_and_field(text, line, section, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert (err.line, err.section, err.key) == (line, section, key)
    assert f"line {line}" in str(err) and f"[{section}]" in str(err)


def test_syntax_error_has_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("[channel]\nthis is not a key value pair\n")


_prob = st.floats(0.01, 0.19)
_mu_small = st.floats(1e-6, 1e-3)


@st.composite
def configs(draw):
    probs = [draw(_prob) for _ in range(4)]
    p = dict(zip(("p_v", "p_x", "p_w", "p_y"), probs))
    p["p_z"] = 1.0 - sum(probs)
    mu_y = draw(st.floats(0.01, 0.08))
    party = PartySettings(mu_v=draw(_mu_small), mu_x=draw(st.floats(0.01, 0.08)), mu_w=draw(_mu_small),
                          mu_y=mu_y, mu_z=draw(st.floats(0.2, 0.6)), **p)
    channel = ChannelParams(alpha_db_per_km=draw(st.floats(0.15, 0.3)), det_efficiency=draw(st.floats(0.05, 1)),
                            dark_rate=draw(st.floats(0, 1e-5)), misalignment=draw(st.floats(0, 0.05)),
                            error_corr_ineff=draw(st.floats(1, 1.5)), arm_split=draw(st.floats(0.1, 0.9)))
    dist = tuple(draw(st.lists(st.floats(0, 300), max_size=4)))
    d2 = draw(st.floats(0, 0.1))
    scan = ScanSpec(mu_z_min=0.1 + d2, mu_z_max=0.7, mu_z_step=draw(st.floats(0.001, 0.1)), distances=dist,
                    deltas=((draw(st.floats(0, 0.1)), d2),), kmax=draw(st.integers(2, 14)),
                    per_sent_pulse=draw(st.booleans()),
                    prob_grid=draw(st.one_of(st.none(), st.just(((0.1, 0.15, 0.1, 0.15, 0.5),)))))
    narrow = draw(st.one_of(st.none(), st.floats(0, 0.05)))
    modes = tuple(draw(st.lists(st.sampled_from(MODES), min_size=1, unique=True)))
    verify = VerifySettings(distances=dist, modes=modes, n_per_mode=draw(st.integers(1, 500)),
                            narrow_to_delta1=narrow, narrow_to_delta2=narrow)
    output = OutputSettings(path=draw(st.sampled_from(["", "out.csv", "a/b c.tsv"])),
                            format=draw(st.sampled_from(["csv", "tsv"])))
    return RunConfig(channel, party, party, scan, verify, output, draw(st.integers(0, 2**31)))


@settings(max_examples=60, deadline=None)
@given(configs())
def test_echo_roundtrip(cfg):
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    assert dump_config(parse_config(text)) == text


def test_echo_config_command(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[scan]\ndistances = 0, 10\n")
    assert main(["echo-config", "--config", str(cfg)]) == 0
    assert parse_config(capsys.readouterr().out).scan.distances == (0.0, 10.0)


# --- exit codes ------------------------------------------------------------------------------

def test_missing_config_exit_1(tmp_path, capsys):
    assert main(["scan", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")]) == 1
    assert "config error" in capsys.readouterr().err


def test_bad_config_exit_1(tmp_path, capsys):
    code, _ = run(tmp_path, "scan", "[channel]\ndark_rate = -1\n")
    assert code == 1
    assert "line 2" in capsys.readouterr().err


def test_no_output_path_exit_1(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("")
    assert main(["scan", "--config", str(cfg)]) == 1


def test_unwritable_output_exit_1(tmp_path):
    code, _ = run(tmp_path, "scan", "[scan]\ndistances =\n", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 1


def test_infeasible_scan_exit_3(tmp_path):
    text = "[scan]\nmu_z_min = 0.035\nmu_z_max = 0.036\nmu_z_step = 0.001\ndistances = 10\ndeltas = 0.1 0.1\n"
    code, out = run(tmp_path, "scan", text)
    assert code == 3
    (row,) = read_table(out)
    assert row["condition_ok"] == "false"
    assert row["R"] == row["mu_z_opt"] == row["delta11_L"] == row["e11_U"] == row["S_zz"] == row["E_zz"] == ""


def test_infeasible_optimize_error_row(tmp_path):
    text = "[scan]\nmu_z_min = 0.035\nmu_z_max = 0.036\nmu_z_step = 0.001\ndistances = 10\ndeltas = 0.1 0.1\n"
    code, out = run(tmp_path, "optimize", text)
    assert code == 3
    (row,) = read_table(out)
    assert row["condition_ok"] == "false" and "mu_y" in row["reason"]


def test_infeasible_verify_exit_3(tmp_path, capsys):
    text = SMALL_VERIFY + "delta1 = 0.2\ndelta2 = 0.2\nmu_z = 0.035\n"
    code, _ = run(tmp_path, "verify", text)
    assert code == 3
    assert "mu_y(1+delta_sig) < mu_z(1-delta_sig)" in capsys.readouterr().err


# --- scan / optimize ---------------------------------------------------------------------

def test_empty_distance_list_header_only(tmp_path):
    code, out = run(tmp_path, "scan", "[scan]\ndistances =\n")
    assert code == 0
    assert out.read_text() == ",".join(SCAN_COLUMNS) + "\n"


def test_default_scan_shape_and_order(tmp_path):
    code, out = run(tmp_path, "scan", "")
    assert code == 0
    rows = read_table(out)
    assert len(rows) == 63
    assert list(rows[0]) == list(SCAN_COLUMNS)
    dist = [float(r["distance_km"]) for r in rows]
    assert dist == sorted(dist)
    for i in range(0, 63, 3):
        rates = [float(r["R"]) for r in rows[i:i + 3]]
        assert [float(r["delta2"]) for r in rows[i:i + 3]] == [0.0, 0.01, 0.02]
        assert rates[0] >= rates[1] >= rates[2]
    assert b"\r" not in out.read_bytes()


def test_zero_delta_row_matches_reference(tmp_path):
    code, out = run(tmp_path, "scan", "[scan]\ndistances = 0, 50, 100\ndeltas = 0 0\n")
    assert code == 0
    ps = PartySettings()
    for row in read_table(out):
        mu = ps.intensities(float(row["mu_z_opt"]))
        A = ps.ensemble((0.0, 0.0), mu["z"])
        s = simulate_observables(A, A, ChannelParams().with_distance(float(row["distance_km"])))
        I = Intensities.from_mapping(mu)
        ref = reference_bounds(s.S, s.T, s.E_zz, s.N_total, I, I, ps.probs(), ps.probs())
        assert float(row["R"]) == pytest.approx(ref.R, rel=1e-9)


def test_optimize_single_row(tmp_path):
    code, out = run(tmp_path, "optimize", "[scan]\ndistances = 40\ndeltas = 0.01 0.01\n")
    assert code == 0
    (row,) = read_table(out)
    assert list(row) == list(OPTIMIZE_COLUMNS)
    assert row["condition_ok"] == "true" and row["reason"] == ""
    assert float(row["p_z"]) == 0.5


def test_optimize_rate_not_increasing_with_distance(tmp_path):
    code, out = run(tmp_path, "optimize", "[scan]\ndistances = 0:200:10\ndeltas = 0.01 0.01\n")
    assert code == 0
    rates = [float(r["R"]) for r in read_table(out)]
    assert all(b <= a for a, b in zip(rates, rates[1:]))


def test_tsv_output(tmp_path):
    code, out = run(tmp_path, "scan", "[scan]\ndistances = 10\ndeltas = 0 0\n[output]\nformat = tsv\n")
    assert code == 0
    assert out.read_text().splitlines()[0] == "\t".join(SCAN_COLUMNS)


def test_scan_byte_identical(tmp_path):
    text = "[scan]\ndistances = 0:60:20\n"
    _, a = run(tmp_path, "scan", text)
    first = a.read_bytes()
    _, b = run(tmp_path, "scan", text)
    assert b.read_bytes() == first


# --- verify ----------------------------------------------------------------------------------

def test_verify_passes_and_is_reproducible(tmp_path, capsys):
    code, out = run(tmp_path, "verify", SMALL_VERIFY, "--seed", "5")
    assert code == 0
    first = out.read_bytes()
    assert b"result: PASS" in first
    assert "bound D11 lower: 12/12 pass" in capsys.readouterr().out
    code, out = run(tmp_path, "verify", SMALL_VERIFY, "--seed", "5")
    assert out.read_bytes() == first


def test_verify_narrowed_intervals_exit_2(tmp_path):
    text = SMALL_VERIFY.replace("n_per_mode = 3", "n_per_mode = 6") + "narrow_to_delta1 = 0\nnarrow_to_delta2 = 0\n"
    code, out = run(tmp_path, "verify", text)
    assert code == 2
    assert "result: FAIL" in out.read_text()


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[scan]\ndistances =\n")
    res = subprocess.run([sys.executable, "-m", "mdidecoy", "scan", "--config", str(cfg), "--out",
                          str(tmp_path / "o.csv")], capture_output=True, text=True)
    assert res.returncode == 0
