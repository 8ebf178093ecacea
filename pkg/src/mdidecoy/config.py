"""INI run configuration: parsing with line diagnostics, and lossless echo.

Grammar
-------
Sections and keys (all optional; omitted keys take the defaults shown by
``mdidecoy echo-config``)::

    [channel]   alpha_db_per_km det_efficiency dark_rate misalignment
                vacuum_error error_corr_ineff arm_split
    [alice]     mu_v mu_x mu_w mu_y mu_z p_v p_x p_w p_y p_z
    [bob]       same keys as [alice]
    [scan]      mu_z_min mu_z_max mu_z_step kmax per_sent_pulse
                distances   comma list ("0, 25, 50") or inclusive range "start:stop:step"
                deltas      comma list of "delta1 delta2" pairs ("0 0, 0.01 0.01")
                prob_grid   semicolon list of "p_v p_x p_w p_y p_z" rows; empty for none
    [verify]    distances modes n_per_mode n_pulses kmax delta1 delta2 mu_z
                rtol slack_tol narrow_to_delta1 narrow_to_delta2
    [output]    path format (csv | tsv)
    [run]       seed

Booleans are ``true``/``false``.  ``narrow_to_delta*`` is a harness test
hook: when set, the bounds in ``verify`` receive intervals built with these
smaller amplitudes while the scenarios keep the real ones.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .channel import ChannelParams
from .fock_source import LABELS
from .optimizer import PartySettings, ScanSpec
from .oracle import MODES


class ConfigError(ValueError):
    """Invalid configuration, located by line (when known) and field."""

    def __init__(self, message: str, section: str = "", key: str = "", line: int | None = None):
        self.section, self.key, self.line = section, key, line
        where = f"[{section}] {key}" if key else (f"[{section}]" if section else "")
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{loc}{where}: {message}" if where else f"{loc}{message}")


@dataclass(frozen=True)
class VerifySettings:
    distances: tuple[float, ...] = (25.0, 50.0)
    modes: tuple[str, ...] = MODES
    n_per_mode: int = 100
    n_pulses: int = 10_000
    kmax: int = 6
    delta1: float = 0.05
    delta2: float = 0.05
    mu_z: float = 0.4
    rtol: float = 1e-9
    slack_tol: float = 1e-12
    narrow_to_delta1: float | None = None
    narrow_to_delta2: float | None = None

    def __post_init__(self) -> None:
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ValueError(f"unknown modes {bad}; choose from {list(MODES)}")
        if self.n_per_mode < 1 or self.n_pulses < 1:
            raise ValueError("n_per_mode and n_pulses must be positive")
        if self.kmax < 2:
            raise ValueError("kmax must be at least 2")
        if not (0 <= self.delta1 < 1 and 0 <= self.delta2 < 1):
            raise ValueError("delta1 and delta2 must lie in [0, 1)")
        if (self.narrow_to_delta1 is None) != (self.narrow_to_delta2 is None):
            raise ValueError("set both narrow_to_delta1 and narrow_to_delta2, or neither")
        if not self.rtol >= 0 or not self.slack_tol >= 0:
            raise ValueError("tolerances must be non-negative")


@dataclass(frozen=True)
class OutputSettings:
    path: str = ""
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.format not in ("csv", "tsv"):
            raise ValueError(f"format must be csv or tsv, got {self.format!r}")


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    alice: PartySettings = field(default_factory=PartySettings)
    bob: PartySettings = field(default_factory=PartySettings)
    scan: ScanSpec = field(default_factory=ScanSpec)
    verify: VerifySettings = field(default_factory=VerifySettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    seed: int = 0


_CHANNEL_KEYS = tuple(f.name for f in fields(ChannelParams) if f.name != "distance_km")
_PARTY_KEYS = tuple(f"mu_{l}" for l in LABELS) + tuple(f"p_{l}" for l in LABELS)
_SCAN_KEYS = ("mu_z_min", "mu_z_max", "mu_z_step", "kmax", "per_sent_pulse", "distances", "deltas", "prob_grid")
_VERIFY_KEYS = tuple(f.name for f in fields(VerifySettings))
_SECTIONS = {
    "channel": _CHANNEL_KEYS,
    "alice": _PARTY_KEYS,
    "bob": _PARTY_KEYS,
    "scan": _SCAN_KEYS,
    "verify": _VERIFY_KEYS,
    "output": ("path", "format"),
    "run": ("seed",),
}


# --- value parsers --------------------------------------------------------------

def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not a finite number")
    return v


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = [_float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("range must be start:stop:step with step > 0")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(n, 0)))
    return tuple(_float(p) for p in text.split(","))


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        parts = item.split()
        if len(parts) != 2:
            raise ValueError(f"{item.strip()!r} is not a 'delta1 delta2' pair")
        out.append((_float(parts[0]), _float(parts[1])))
    return tuple(out)


def _rows(text: str) -> tuple[tuple[float, ...], ...] | None:
    rows = [tuple(_float(p) for p in r.split()) for r in text.split(";") if r.strip()]
    return tuple(rows) if rows else None


def _modes(text: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _optional_float(text: str) -> float | None:
    return None if not text.strip() else _float(text)


_SCAN_PARSERS = {
    "mu_z_min": _float, "mu_z_max": _float, "mu_z_step": _float, "kmax": _int,
    "per_sent_pulse": _bool, "distances": _float_list, "deltas": _pairs, "prob_grid": _rows,
}
_VERIFY_PARSERS = {
    "distances": _float_list, "modes": _modes, "n_per_mode": _int, "n_pulses": _int, "kmax": _int,
    "delta1": _float, "delta2": _float, "mu_z": _float, "rtol": _float, "slack_tol": _float,
    "narrow_to_delta1": _optional_float, "narrow_to_delta2": _optional_float,
}


def _key_lines(text: str) -> dict:
    """Map (section, key) and (section, "") to 1-based line numbers."""
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault((section, ""), n)
        elif section is not None and ("=" in line or ":" in line):
            sep = min(i for i in (line.find("="), line.find(":")) if i >= 0)
            out.setdefault((section, line[:sep].strip().lower()), n)
    return out


def parse_config(text: str) -> RunConfig:
    """Parse INI text into a validated :class:`RunConfig`.

    Raises
    ------
    ConfigError
        With the offending section, key and line number.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        line, raw = exc.errors[0]
        raise ConfigError(f"cannot parse {raw.strip()!r}", line=line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError("unknown section", section, line=lines.get((section, "")))
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError("unknown key", section, key, lines.get((section, key)))

    def get(section, key, parser):
        raw = cp[section][key]
        try:
            return parser(raw)
        except ValueError as exc:
            raise ConfigError(str(exc), section, key, lines.get((section, key))) from None

    def build(section, cls, values):
        try:
            return cls(**values)
        except ValueError as exc:
            # attribute the failure to a key named in the message, else to the section
            key = next((k for k in values if k in str(exc)), "")
            raise ConfigError(str(exc), section, key, lines.get((section, key)) or lines.get((section, ""))) from None

    def section_values(section, parsers=None, default=_float):
        if not cp.has_section(section):
            return {}
        parsers = parsers or {}
        return {k: get(section, k, parsers.get(k, default)) for k in cp[section]}

    channel = build("channel", ChannelParams, section_values("channel"))
    alice = build("alice", PartySettings, section_values("alice"))
    bob = build("bob", PartySettings, section_values("bob"))
    scan = build("scan", ScanSpec, section_values("scan", _SCAN_PARSERS))
    verify = build("verify", VerifySettings, section_values("verify", _VERIFY_PARSERS))
    output = build("output", OutputSettings, section_values("output", default=str.strip))
    seed = get("run", "seed", _int) if cp.has_option("run", "seed") else 0

    try:
        scan.check_against(alice, bob)
    except ValueError as exc:
        raise ConfigError(str(exc), "scan", "mu_z_min", lines.get(("scan", "mu_z_min"))) from None
    return RunConfig(channel, alice, bob, scan, verify, output, seed)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# --- echo -----------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Full INI text that re-parses to an identical :class:`RunConfig`."""
    out = []

    def section(name, items):
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in items)
        out.append("")

    section("channel", [(k, _fmt(getattr(cfg.channel, k))) for k in _CHANNEL_KEYS])
    section("alice", [(k, _fmt(getattr(cfg.alice, k))) for k in _PARTY_KEYS])
    section("bob", [(k, _fmt(getattr(cfg.bob, k))) for k in _PARTY_KEYS])
    s = cfg.scan
    section("scan", [
        ("mu_z_min", _fmt(s.mu_z_min)), ("mu_z_max", _fmt(s.mu_z_max)), ("mu_z_step", _fmt(s.mu_z_step)),
        ("kmax", _fmt(s.kmax)), ("per_sent_pulse", _fmt(s.per_sent_pulse)),
        ("distances", ", ".join(_fmt(float(d)) for d in s.distances)),
        ("deltas", ", ".join(f"{_fmt(float(a))} {_fmt(float(b))}" for a, b in s.deltas)),
        ("prob_grid", "" if s.prob_grid is None else "; ".join(" ".join(_fmt(float(p)) for p in row)
                                                                for row in s.prob_grid)),
    ])
    v = cfg.verify
    items = []
    for k in _VERIFY_KEYS:
        val = getattr(v, k)
        if k == "distances":
            items.append((k, ", ".join(_fmt(float(d)) for d in val)))
        elif k == "modes":
            items.append((k, ", ".join(val)))
        else:
            items.append((k, _fmt(float(val) if isinstance(val, float) else val)))
    section("verify", items)
    section("output", [("path", cfg.output.path), ("format", cfg.output.format)])
    section("run", [("seed", _fmt(cfg.seed))])
    return "\n".join(out)
