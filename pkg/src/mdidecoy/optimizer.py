"""Signal-intensity optimisation of the key rate by exhaustive grid search.

Only the signal intensity ``mu_z`` (and optionally the source
probabilities) is searched; the decoy and vacuum intensities stay at the
values in :class:`PartySettings`.  Observables are generated at the nominal
intensities while the bounds use the fluctuation intervals, which is the
worst-case-certified rate for a source whose actual intensities may sit
anywhere inside the box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import optimize

from .bounds import BoundsReport, binary_entropy, evaluate_bounds
from .channel import ChannelParams, simulate_observables, yield_matrix
from .errors import GateError, NoKeyError
from .fock_source import DEFAULT_KMAX, LABELS, PartyEnsemble, build_ensemble

log = logging.getLogger(__name__)


class NoAdmissibleIntensity(ValueError):
    """Every grid point failed a condition check."""


@dataclass(frozen=True)
class PartySettings:
    """Nominal intensities and selection probabilities of one party.

    ``mu_z`` is only a default: the optimiser overrides it at every grid point.
    """

    mu_v: float = 1e-4
    mu_x: float = 0.03
    mu_w: float = 1e-4
    mu_y: float = 0.03
    mu_z: float = 0.4
    p_v: float = 0.1
    p_x: float = 0.15
    p_w: float = 0.1
    p_y: float = 0.15
    p_z: float = 0.5

    def __post_init__(self) -> None:
        for label in LABELS:
            mu = getattr(self, f"mu_{label}")
            if not mu > 0 or not math.isfinite(mu):
                raise ValueError(f"mu_{label} must be positive and finite, got {mu}")
            p = getattr(self, f"p_{label}")
            if not 0 < p < 1:
                raise ValueError(f"p_{label} must lie in (0, 1), got {p}")
        total = sum(self.probs().values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"source probabilities must sum to 1, got {total!r}")

    def intensities(self, mu_z: float | None = None) -> dict[str, float]:
        mu = {label: getattr(self, f"mu_{label}") for label in LABELS}
        if mu_z is not None:
            mu["z"] = mu_z
        return mu

    def probs(self) -> dict[str, float]:
        return {label: getattr(self, f"p_{label}") for label in LABELS}

    def with_probs(self, probs) -> "PartySettings":
        return replace(self, **{f"p_{label}": float(p) for label, p in zip(LABELS, probs)})

    def ensemble(self, deltas: tuple[float, float], mu_z: float | None = None,
                 kmax: int = DEFAULT_KMAX) -> PartyEnsemble:
        return build_ensemble(self.intensities(mu_z), deltas, self.probs(), kmax)


def mu_z_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Grid ``lo, lo + step, ..., <= hi`` rounded to 12 decimals for stable output."""
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


@dataclass(frozen=True)
class ScanSpec:
    """What to scan.

    Parameters
    ----------
    mu_z_min, mu_z_max, mu_z_step : float
        Signal-intensity grid.
    distances : tuple of float
        Total Alice-Bob fibre lengths in km.
    deltas : tuple of (delta1, delta2)
        Fluctuation amplitudes for the vacuum sources and the other sources.
    prob_grid : tuple of 5-tuples, optional
        Candidate ``(p_v, p_x, p_w, p_y, p_z)`` applied to both parties.
    per_sent_pulse : bool
        Report key bits per sent pulse pair (rate times ``p_z^A p_z^B``)
        instead of per signal pulse pair.
    """

    mu_z_min: float = 0.1
    mu_z_max: float = 0.7
    mu_z_step: float = 0.01
    distances: tuple[float, ...] = tuple(float(d) for d in range(0, 201, 10))
    deltas: tuple[tuple[float, float], ...] = ((0.0, 0.0), (0.01, 0.01), (0.02, 0.02))
    prob_grid: tuple[tuple[float, ...], ...] | None = None
    per_sent_pulse: bool = False
    kmax: int = DEFAULT_KMAX

    def __post_init__(self) -> None:
        if not self.mu_z_step > 0:
            raise ValueError("mu_z_step must be positive")
        if not 0 < self.mu_z_min <= self.mu_z_max:
            raise ValueError("need 0 < mu_z_min <= mu_z_max")
        if any(d < 0 for d in self.distances):
            raise ValueError("distances must be non-negative")
        for pair in self.deltas:
            if len(pair) != 2 or not all(0 <= d < 1 for d in pair):
                raise ValueError(f"delta pair {pair!r} must be two numbers in [0, 1)")
        if self.prob_grid is not None:
            if not self.prob_grid:
                raise ValueError("prob_grid, when given, must be non-empty")
            for row in self.prob_grid:
                if len(row) != 5 or abs(sum(row) - 1.0) > 1e-12:
                    raise ValueError(f"probability row {row!r} must have 5 entries summing to 1")
        if self.kmax < 2:
            raise ValueError("kmax must be at least 2")

    def grid(self) -> np.ndarray:
        return mu_z_grid(self.mu_z_min, self.mu_z_max, self.mu_z_step)

    def check_against(self, alice: PartySettings, bob: PartySettings) -> None:
        """The lowest signal intensity must exceed every decoy's upper fluctuation edge.

        This is only the coarse range check; grid points whose lower edge
        ``mu_z(1 - delta2)`` still falls short are rejected one by one.
        """
        for pair in self.deltas:
            for party in (alice, bob):
                edge = party.mu_y * (1 + pair[1])
                if not self.mu_z_min > edge:
                    raise ValueError(
                        f"need mu_z_min > mu_y(1+delta2) = {edge:.6g} at delta2 = {pair[1]}, got {self.mu_z_min}"
                    )


@dataclass(frozen=True)
class PointResult:
    mu_z: float
    R: float | None
    report: BoundsReport | None
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.R is not None


def evaluate_point(params: ChannelParams, alice: PartySettings, bob: PartySettings, mu_z: float,
                   deltas: tuple[float, float], kmax: int = DEFAULT_KMAX,
                   per_sent_pulse: bool = False) -> PointResult:
    """Key rate at one signal intensity; gate failures give an infeasible result."""
    try:
        A = alice.ensemble(deltas, mu_z, kmax)
        B = bob.ensemble(deltas, mu_z, kmax)
        stats = simulate_observables(A, B, params)
        rep = evaluate_bounds(stats, A, B, params.error_corr_ineff)
    except (GateError, NoKeyError) as exc:
        return PointResult(mu_z, None, None, str(exc))
    rate = rep.R * (alice.p_z * bob.p_z if per_sent_pulse else 1.0)
    return PointResult(mu_z, rate, rep)


def infinite_decoy_reference(params: ChannelParams, alice: PartyEnsemble, bob: PartyEnsemble,
                             f: float | None = None) -> float:
    """Key rate with the exact single-photon yield and error rate of the channel.

    Uses the nominal Poisson coefficients, so it is the rate an ideal
    infinite-decoy estimate would certify.
    """
    f = params.error_corr_ineff if f is None else f
    kmax = min(alice.kmax, bob.kmax)
    ym = yield_matrix(params, kmax)
    a = alice.nominal_buckets("z")
    b = bob.nominal_buckets("z")
    s_zz = float(a @ ym.y @ b)
    if not s_zz > 0:
        return 0.0
    e_zz = float(a @ ym.t @ b) / s_zz
    y11, t11 = float(ym.y[1, 1]), float(ym.t[1, 1])
    delta11 = a[1] * b[1] * y11 / s_zz
    e11 = t11 / y11 if y11 > 0 else 0.0
    rate = s_zz * (delta11 * (1.0 - binary_entropy(min(0.5, e11))) - f * binary_entropy(e_zz))
    return max(0.0, rate)


@lru_cache(maxsize=256)
def _best_infinite_decoy(params, alice, bob, grid, kmax, per_sent_pulse) -> float:
    # the ideal estimate has no admissibility conditions and does not depend on delta
    scale = alice.p_z * bob.p_z if per_sent_pulse else 1.0
    best = 0.0
    for mu in grid:
        A0 = alice.ensemble((0.0, 0.0), mu, kmax)
        B0 = bob.ensemble((0.0, 0.0), mu, kmax)
        best = max(best, scale * infinite_decoy_reference(params, A0, B0))
    return best


@dataclass(frozen=True)
class OptimumRecord:
    """Best point of one ``(distance, delta)`` scan line.

    ``mu_z_opt``, ``R`` and ``report`` are ``None`` when no grid point was
    admissible; ``reason`` then holds the last rejection message.
    """

    distance_km: float
    delta1: float
    delta2: float
    mu_z_opt: float | None
    probs: tuple[float, ...] | None
    R: float | None
    R_infinite_decoy: float
    report: BoundsReport | None
    reason: str = ""
    surface: tuple[PointResult, ...] = field(default=(), repr=False)

    @property
    def condition_ok(self) -> bool:
        return self.mu_z_opt is not None


def _best(points):
    # highest clamped rate; ties (typically all zero) go to the least negative raw rate, then grid order
    best = None
    for p in points:
        if not p.feasible:
            continue
        key = (p.R, p.report.R_raw)
        if best is None or key > best[0]:
            best = (key, p)
    return None if best is None else best[1]


def optimize_point(params: ChannelParams, alice: PartySettings, bob: PartySettings,
                   deltas: tuple[float, float], spec: ScanSpec, keep_surface: bool = False) -> OptimumRecord:
    """Grid-search one ``(distance, delta)`` line; never raises on infeasibility."""
    grid = spec.grid()
    prob_rows = spec.prob_grid if spec.prob_grid is not None else (None,)
    points, best, best_probs, reason = [], None, None, ""
    r_inf = 0.0
    for row in prob_rows:
        pa = alice if row is None else alice.with_probs(row)
        pb = bob if row is None else bob.with_probs(row)
        line = [evaluate_point(params, pa, pb, float(mu), deltas, spec.kmax, spec.per_sent_pulse) for mu in grid]
        points.extend(line)
        cand = _best(line)
        if cand is not None and (best is None or (cand.R, cand.report.R_raw) > (best.R, best.report.R_raw)):
            best, best_probs = cand, (pa.probs(), pb.probs())
        for p in line:
            if not p.feasible:
                reason = p.reason
                log.debug("skipping mu_z=%g at %g km: %s", p.mu_z, params.distance_km, p.reason)
        r_inf = max(r_inf, _best_infinite_decoy(params, pa, pb, tuple(grid), spec.kmax, spec.per_sent_pulse))
    surface = tuple(points) if keep_surface else ()
    if best is None:
        return OptimumRecord(params.distance_km, deltas[0], deltas[1], None, None, None, r_inf, None,
                             reason or "no admissible signal intensity", surface)
    probs = tuple(best_probs[0][label] for label in LABELS)
    return OptimumRecord(params.distance_km, deltas[0], deltas[1], best.mu_z, probs, best.R, r_inf,
                         best.report, "", surface)


def optimize_key_rate(spec: ScanSpec, alice: PartySettings, bob: PartySettings,
                      params: ChannelParams, keep_surface: bool = False) -> list[OptimumRecord]:
    """Optimised rate for every ``(distance, delta)`` pair.

    Rows come in ascending distance, and within one distance in the order
    of ``spec.deltas``.  Infeasible lines are returned with
    ``condition_ok = False`` rather than raised.
    """
    out = []
    for d in sorted(spec.distances):
        ch = params.with_distance(d)
        for pair in spec.deltas:
            out.append(optimize_point(ch, alice, bob, tuple(pair), spec, keep_surface))
    return out


def require_admissible(record: OptimumRecord) -> OptimumRecord:
    if not record.condition_ok:
        raise NoAdmissibleIntensity(f"no admissible signal intensity: {record.reason}")
    return record


def refine_mu_z(params: ChannelParams, alice: PartySettings, bob: PartySettings,
                deltas: tuple[float, float], lo: float, hi: float,
                kmax: int = DEFAULT_KMAX, xatol: float = 1e-5) -> float:
    """Bounded scalar maximisation of the raw rate over ``[lo, hi]``.

    Intended as a cross-check of the grid argmax on unimodal rate curves.
    """
    def negative_rate(mu):
        p = evaluate_point(params, alice, bob, float(mu), deltas, kmax)
        return math.inf if not p.feasible else -p.report.R_raw

    res = optimize.minimize_scalar(negative_rate, bounds=(lo, hi), method="bounded",
                                   options={"xatol": xatol})
    return float(res.x)
