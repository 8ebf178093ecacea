"""Command-line front end.

    mdidecoy scan|verify|optimize|echo-config --config PATH [--out PATH] [--seed N]

Exit status: 0 ok, 1 configuration or I/O error, 2 verification failure,
3 infeasible bounds (a gate rejected the configuration, or some scan row had
no admissible signal intensity; the table is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, dump_config, load_config
from .errors import GateError
from .fock_source import require_conditions
from .harness import run_suite
from .optimizer import optimize_key_rate

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_INFEASIBLE = 0, 1, 2, 3

SCAN_COLUMNS = ("distance_km", "delta1", "delta2", "mu_z_opt", "R", "R_infinite_decoy",
                "delta11_L", "e11_U", "S_zz", "E_zz", "condition_ok")
OPTIMIZE_COLUMNS = ("distance_km", "delta1", "delta2", "mu_z_opt", "p_v", "p_x", "p_w", "p_y", "p_z",
                    "R", "condition_ok", "reason")


def _num(v) -> str:
    if v is None:
        return ""
    return "{:.10g}".format(float(v))


def _table(columns, rows, fmt: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="," if fmt == "csv" else "\t", lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def scan_rows(cfg: RunConfig):
    records = optimize_key_rate(cfg.scan, cfg.alice, cfg.bob, cfg.channel)
    rows = []
    for r in records:
        rep = r.report
        bound_cols = [None] * 4 if rep is None else [rep.delta11_L, rep.e11_U, rep.S_zz, rep.E_zz]
        rows.append([_num(r.distance_km), _num(r.delta1), _num(r.delta2), _num(r.mu_z_opt), _num(r.R),
                     _num(r.R_infinite_decoy), *(_num(v) for v in bound_cols),
                     "true" if r.condition_ok else "false"])
    return records, rows


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    records, rows = scan_rows(cfg)
    _write(out, _table(SCAN_COLUMNS, rows, cfg.output.format))
    return EXIT_OK if all(r.condition_ok for r in records) else EXIT_INFEASIBLE


def cmd_optimize(cfg: RunConfig, out: Path) -> int:
    records = optimize_key_rate(cfg.scan, cfg.alice, cfg.bob, cfg.channel)
    rows = []
    for r in records:
        probs = r.probs if r.probs is not None else (None,) * 5
        rows.append([_num(r.distance_km), _num(r.delta1), _num(r.delta2), _num(r.mu_z_opt),
                     *(_num(p) for p in probs), _num(r.R),
                     "true" if r.condition_ok else "false", r.reason])
    _write(out, _table(OPTIMIZE_COLUMNS, rows, cfg.output.format))
    return EXIT_OK if all(r.condition_ok for r in records) else EXIT_INFEASIBLE


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    v = cfg.verify
    deltas = (v.delta1, v.delta2)
    A = cfg.alice.ensemble(deltas, v.mu_z, v.kmax)
    B = cfg.bob.ensemble(deltas, v.mu_z, v.kmax)
    ba = bb = None
    if v.narrow_to_delta1 is not None:
        narrow = (v.narrow_to_delta1, v.narrow_to_delta2)
        ba = cfg.alice.ensemble(narrow, v.mu_z, v.kmax)
        bb = cfg.bob.ensemble(narrow, v.mu_z, v.kmax)
    try:
        require_conditions(ba or A, bb or B)
        res = run_suite(A, B, cfg.channel, v.distances, v.modes, v.n_per_mode, v.n_pulses, cfg.seed,
                        ba, bb, v.rtol, v.slack_tol)
    except GateError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    text = res.format()
    _write(out, text)
    sys.stdout.write(text)
    return EXIT_OK if res.ok else EXIT_VERIFY


def cmd_echo(cfg: RunConfig, out: Path | None) -> int:
    text = dump_config(cfg)
    if out is None:
        sys.stdout.write(text)
    else:
        _write(out, text)
    return EXIT_OK


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdidecoy", description="Decoy-state MDI-QKD bounds with imperfect sources.")
    p.add_argument("command", choices=("scan", "verify", "optimize", "echo-config"))
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output file (overrides [output] path)")
    p.add_argument("--seed", type=int, help="overrides [run] seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = args.out or cfg.output.path or None
    if args.command == "echo-config":
        handler = lambda: cmd_echo(cfg, Path(out) if out else None)  # noqa: E731
    else:
        if out is None:
            print("config error: no output path (use --out or [output] path)", file=sys.stderr)
            return EXIT_CONFIG
        commands = {"scan": cmd_scan, "verify": cmd_verify, "optimize": cmd_optimize}
        handler = lambda: commands[args.command](cfg, Path(out))  # noqa: E731
    try:
        return handler()
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
