"""Batch soundness and slack checks over many oracle scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams
from .fock_source import PartyEnsemble
from .oracle import (
    MODES,
    SOUNDNESS_RTOL,
    check_containment,
    check_soundness,
    exact_tallies,
    generate_scenario,
    verify_derivation_slacks,
)


def scenario_seed(seed: int, *path: int) -> int:
    """Independent, reproducible sub-seed for one scenario."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, dtype=np.uint64)[0])


@dataclass
class _Tally:
    passed: int = 0
    total: int = 0
    worst: float = np.inf

    def add(self, ok: bool, margin: float) -> None:
        self.total += 1
        self.passed += bool(ok)
        self.worst = min(self.worst, margin)


@dataclass
class SuiteResult:
    """Aggregated outcome.

    ``checks`` maps an inequality name to its tally; margins are relative
    and positive on the safe side.  ``slacks`` holds the most negative
    relative slack seen per slack term and ``slacks_abs`` the most negative
    absolute one, ``identities`` the largest relative residual per identity.
    """

    checks: dict = field(default_factory=dict)
    slacks: dict = field(default_factory=dict)
    slacks_abs: dict = field(default_factory=dict)
    identities: dict = field(default_factory=dict)
    slack_failures: int = 0
    contained: int = 0
    n_scenarios: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.slack_failures == 0 and all(t.passed == t.total for t in self.checks.values())

    def format(self) -> str:
        lines = [f"scenarios: {self.n_scenarios}", f"containment: {self.contained}/{self.n_scenarios}"]
        for name, t in self.checks.items():
            lines.append(f"bound {name}: {t.passed}/{t.total} pass, worst relative margin {t.worst:.6e}")
        for name, v in self.slacks.items():
            lines.append(f"slack {name}: worst relative value {v:.6e}, worst absolute value "
                         f"{self.slacks_abs[name]:.6e}")
        for name, v in self.identities.items():
            lines.append(f"identity {name}: worst relative residual {v:.6e}")
        for f in self.failures[:20]:
            lines.append(f"FAIL {f}")
        lines.append("result: " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(lines) + "\n"


def run_suite(alice: PartyEnsemble, bob: PartyEnsemble, params: ChannelParams, distances=(25.0, 50.0),
              modes=MODES, n_per_mode: int = 100, n_pulses: int = 10_000, seed: int = 0,
              bounds_alice: PartyEnsemble | None = None, bounds_bob: PartyEnsemble | None = None,
              rtol: float = SOUNDNESS_RTOL, slack_tol: float = 1e-12) -> SuiteResult:
    """Check every bound and slack on ``n_per_mode`` scenarios per mode and distance.

    Scenarios are drawn from ``alice``/``bob``; the bounds are handed
    ``bounds_alice``/``bounds_bob`` (default: the same ensembles).
    """
    ba = alice if bounds_alice is None else bounds_alice
    bb = bob if bounds_bob is None else bounds_bob
    res = SuiteResult()
    for di, dist in enumerate(distances):
        ch = params.with_distance(float(dist))
        for mi, mode in enumerate(modes):
            for i in range(n_per_mode):
                s = scenario_seed(seed, di, MODES.index(mode), i)
                scn = generate_scenario(alice, bob, ch, n_pulses, mode, s)
                tl = exact_tallies(scn, alice, bob)
                checks, _ = check_soundness(scn, alice, bob, ba, bb, ch.error_corr_ineff, rtol, tl)
                slacks = verify_derivation_slacks(scn, ba, bb, tl, slack_tol)
                res.n_scenarios += 1
                res.contained += check_containment(scn, ba, bb)
                tag = f"{dist:g} km {mode} #{i}"
                for c in checks:
                    res.checks.setdefault(c.name, _Tally()).add(c.ok, c.relative_margin)
                    if not c.ok:
                        res.failures.append(f"{tag}: {c.name} bound={c.bound!r} exact={c.exact!r}")
                for name, (v, scale) in slacks.slacks.items():
                    rel = v / scale if scale > 0 else v
                    res.slacks[name] = min(res.slacks.get(name, np.inf), rel)
                    res.slacks_abs[name] = min(res.slacks_abs.get(name, np.inf), v)
                for name, r in slacks.identities.items():
                    res.identities[name] = max(res.identities.get(name, 0.0), r)
                if not slacks.ok:
                    res.slack_failures += 1
                    res.failures.append(f"{tag}: slack/identity {', '.join(slacks.violations)}")
    return res
