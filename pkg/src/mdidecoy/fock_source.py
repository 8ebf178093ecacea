"""Photon-number-diagonal sources described by coefficient intervals.

Each party owns five sources: ``v`` and ``x`` are used in the X basis,
``w``, ``y`` and ``z`` in the Z basis.  ``v`` and ``w`` are imperfect vacuum
sources, ``x`` and ``y`` decoys, ``z`` the signal.  A source is known only
through an interval ``[lower[k], upper[k]]`` for every photon-number
coefficient ``k <= kmax`` plus an interval for the mass above ``kmax``
(the *tail bucket*).

Coherent sources whose intensity fluctuates as ``mu * (1 + d)`` with
``|d| <= delta`` are built with :func:`build_ensemble`.  Any other
diagonal source can be supplied directly as a :class:`CoeffIntervalSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import special

from .errors import ConditionError

LABELS = ("v", "x", "w", "y", "z")
X_LABELS = ("v", "x")
Z_LABELS = ("w", "y", "z")
VACUUM_LABELS = ("v", "w")

DEFAULT_KMAX = 12

# relative slack when comparing ratios that are equal in exact arithmetic
_RATIO_RTOL = 1e-12


def poisson_pmf(mu, k):
    """Vectorised ``exp(-mu) mu**k / k!`` with ``0**0 = 1``."""
    mu = np.asarray(mu, dtype=float)
    k = np.asarray(k, dtype=float)
    return np.exp(special.xlogy(k, mu) - mu - special.gammaln(k + 1.0))


def poisson_tail(mu, kmax: int):
    """Probability of more than ``kmax`` photons."""
    return special.gammainc(kmax + 1.0, np.asarray(mu, dtype=float))


@dataclass(frozen=True)
class PhotonDistribution:
    """A concrete diagonal state truncated at ``kmax`` with explicit tail mass."""

    coeffs: np.ndarray
    tail_mass: float

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if np.any(c < 0) or np.any(c > 1):
            raise ValueError("coefficients must lie in [0, 1]")
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be non-negative")
        if abs(c.sum() + self.tail_mass - 1.0) > 1e-12:
            raise ValueError("coefficients plus tail mass must sum to 1")

    @property
    def kmax(self) -> int:
        return len(self.coeffs) - 1

    def bucketed(self) -> np.ndarray:
        """Coefficients with the tail mass appended as bucket ``kmax + 1``."""
        return np.append(self.coeffs, self.tail_mass)


def poisson_coeffs(mu: float, kmax: int) -> PhotonDistribution:
    """Photon-number distribution of a phase-randomised coherent state."""
    if mu < 0:
        raise ValueError(f"intensity must be non-negative, got {mu}")
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    coeffs = poisson_pmf(mu, np.arange(kmax + 1))
    tail = max(0.0, 1.0 - float(math.fsum(coeffs)))
    return PhotonDistribution(coeffs, tail)


def _intensity_range(mu: float, delta: float) -> tuple[float, float]:
    # the oracle builds per-pulse intensities as mu * (1.0 + d); keep the same
    # float expression so extremal pulses land exactly on the endpoints
    return mu * (1.0 + -delta), mu * (1.0 + delta)


def coeff_interval(mu_nominal: float, delta: float, k: int) -> tuple[float, float]:
    """Range of the ``k``-photon Poisson coefficient over a fluctuating intensity.

    The coefficient ``exp(-mu) mu**k / k!`` is unimodal in ``mu`` with its peak
    at ``mu = k``, so the extremes sit at the interval ends or at that peak.

    >>> lo, hi = coeff_interval(2.0, 0.5, 1)
    >>> round(hi, 12) == round(math.exp(-1.0), 12)
    True
    """
    if mu_nominal < 0:
        raise ValueError("intensity must be non-negative")
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    lo, hi = _intensity_range(mu_nominal, delta)
    vals = [float(poisson_pmf(lo, k)), float(poisson_pmf(hi, k))]
    if lo < k < hi:
        vals.append(float(poisson_pmf(k, k)))
    return min(vals), max(vals)


def coeff_intervals(mu_nominal: float, delta: float, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """:func:`coeff_interval` for every ``k = 0..kmax`` at once."""
    if mu_nominal < 0:
        raise ValueError("intensity must be non-negative")
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    k = np.arange(kmax + 1)
    lo, hi = _intensity_range(mu_nominal, delta)
    f_lo = poisson_pmf(lo, k)
    f_hi = poisson_pmf(hi, k)
    f_peak = np.where((lo < k) & (k < hi), poisson_pmf(k, k), np.nan)
    lower = np.fmin(np.minimum(f_lo, f_hi), f_peak)
    upper = np.fmax(np.maximum(f_lo, f_hi), f_peak)
    return lower, upper


def tail_interval(mu_nominal: float, delta: float, kmax: int) -> tuple[float, float]:
    """Range of the mass above ``kmax``; it is increasing in the intensity."""
    lo, hi = _intensity_range(mu_nominal, delta)
    return float(poisson_tail(lo, kmax)), float(poisson_tail(hi, kmax))


@dataclass(frozen=True)
class CoeffIntervalSet:
    """Bounds on one source's photon-number coefficients.

    Attributes
    ----------
    lower, upper : ndarray
        ``a_k^L`` and ``a_k^U`` for ``k = 0..kmax``.
    select_prob : float
        Probability that this source is chosen for a pulse.
    tail_lower, tail_upper : float
        Bounds on the mass above ``kmax``.  ``tail_upper`` defaults to
        ``1 - sum(lower)``, which is always valid.
    """

    lower: np.ndarray
    upper: np.ndarray
    select_prob: float
    tail_lower: float = 0.0
    tail_upper: float | None = None

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1 or len(lower) < 3:
            raise ValueError("lower and upper must be 1-D with at least k = 0, 1, 2")
        if np.any(lower < 0) or np.any(upper > 1) or np.any(lower > upper):
            raise ValueError("need 0 <= lower[k] <= upper[k] <= 1")
        if self.tail_upper is None:
            object.__setattr__(self, "tail_upper", max(0.0, 1.0 - float(lower.sum())))
        if not 0 <= self.tail_lower <= self.tail_upper <= 1:
            raise ValueError("need 0 <= tail_lower <= tail_upper <= 1")
        if lower.sum() + self.tail_lower > 1 + 1e-12 or upper.sum() + self.tail_upper < 1 - 1e-12:
            raise ValueError("intervals contain no normalised distribution")
        if not 0 < self.select_prob < 1:
            raise ValueError("select_prob must lie in (0, 1)")

    @property
    def kmax(self) -> int:
        return len(self.lower) - 1

    @property
    def bucket_lower(self) -> np.ndarray:
        return np.append(self.lower, self.tail_lower)

    @property
    def bucket_upper(self) -> np.ndarray:
        return np.append(self.upper, self.tail_upper)

    def contains(self, coeffs: np.ndarray, rtol: float = 1e-12) -> bool:
        """Whether bucketed coefficients (length ``kmax + 2``) lie inside the bounds."""
        c = np.asarray(coeffs)
        lo, hi = self.bucket_lower, self.bucket_upper
        return bool(np.all(c >= lo * (1 - rtol)) and np.all(c <= hi * (1 + rtol)))


@dataclass(frozen=True)
class PartyEnsemble:
    """One party's five sources.

    ``nominal_intensity`` is ``None`` for sources given as raw interval sets;
    it is set for coherent ensembles made by :func:`build_ensemble`.
    """

    sources: Mapping[str, CoeffIntervalSet]
    nominal_intensity: Mapping[str, float] | None = None
    delta_vac: float = 0.0
    delta_sig: float = 0.0
    _kmax: int = field(init=False, repr=False, default=0)

    def __post_init__(self) -> None:
        if set(self.sources) != set(LABELS):
            raise ValueError(f"need exactly the sources {LABELS}")
        kmaxes = {s.kmax for s in self.sources.values()}
        if len(kmaxes) != 1:
            raise ValueError("all sources must share kmax")
        object.__setattr__(self, "_kmax", kmaxes.pop())
        total = math.fsum(s.select_prob for s in self.sources.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"selection probabilities sum to {total}, not 1")
        if not (0 <= self.delta_vac < 1 and 0 <= self.delta_sig < 1):
            raise ValueError("fluctuation bounds must lie in [0, 1)")
        mu = self.nominal_intensity
        if mu is not None:
            if not mu["w"] < mu["y"] < mu["z"]:
                raise ConditionError("mu_w < mu_y < mu_z", f"got {mu['w']}, {mu['y']}, {mu['z']}")
            if not mu["v"] < mu["x"]:
                raise ConditionError("mu_v < mu_x", f"got {mu['v']}, {mu['x']}")

    @property
    def kmax(self) -> int:
        return self._kmax

    def __getitem__(self, label: str) -> CoeffIntervalSet:
        return self.sources[label]

    def prob(self, label: str) -> float:
        return self.sources[label].select_prob

    @property
    def is_coherent(self) -> bool:
        return self.nominal_intensity is not None

    def delta(self, label: str) -> float:
        return self.delta_vac if label in VACUUM_LABELS else self.delta_sig

    def intensity_range(self, label: str) -> tuple[float, float]:
        if self.nominal_intensity is None:
            raise ValueError("ensemble was not built from intensities")
        return _intensity_range(self.nominal_intensity[label], self.delta(label))

    def nominal_buckets(self, label: str) -> np.ndarray:
        """Bucketed Poisson coefficients at the nominal intensity."""
        if self.nominal_intensity is None:
            raise ValueError("ensemble was not built from intensities")
        mu = self.nominal_intensity[label]
        return np.append(poisson_pmf(mu, np.arange(self.kmax + 1)), poisson_tail(mu, self.kmax))


def build_ensemble(
    nominal: Mapping[str, float],
    deltas: tuple[float, float],
    probs: Mapping[str, float],
    kmax: int = DEFAULT_KMAX,
) -> PartyEnsemble:
    """Coherent-state ensemble with intensity fluctuation bounds ``(delta_vac, delta_sig)``."""
    delta_vac, delta_sig = deltas
    sources = {}
    for label in LABELS:
        delta = delta_vac if label in VACUUM_LABELS else delta_sig
        lower, upper = coeff_intervals(nominal[label], delta, kmax)
        t_lo, t_hi = tail_interval(nominal[label], delta, kmax)
        sources[label] = CoeffIntervalSet(lower, upper, probs[label], t_lo, t_hi)
    return PartyEnsemble(sources, dict(nominal), delta_vac, delta_sig)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a ratio-condition check.

    ``ok`` is the (non-strict) condition itself.  ``strict`` additionally
    requires the strict inequality that keeps the bound denominators
    positive.  ``first_violation`` names ``(party, pair, k)`` of the first
    failure, with ``k = kmax + 1`` standing for the tail bucket.
    """

    ok: bool
    strict: bool
    certificate: str
    first_violation: tuple | None = None
    reason: str = ""
    ratios: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _ge(a: float, b: float) -> bool:
    return a >= b - _RATIO_RTOL * abs(b)


def _safe_ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf if num > 0 else math.nan
    return num / den


def _ratio_chain_z(num: CoeffIntervalSet, den: CoeffIntervalSet, kmax: int):
    """Check lower_z[k]/upper_y[k] >= ratio(2) >= ratio(1) for every bucket k >= 2."""
    zero = [k for k in range(1, kmax + 1) if den.upper[k] == 0]
    if zero:
        return False, False, zero[0], f"upper bound of decoy coefficient vanishes at k={zero[0]}", []
    r = [num.lower[k] / den.upper[k] for k in range(kmax + 1)]
    r_tail = _safe_ratio(num.tail_lower, den.tail_upper)
    if not _ge(r[2], r[1]):
        return False, False, 2, "ratio(2) < ratio(1)", r + [r_tail]
    for k in range(3, kmax + 1):
        if not _ge(r[k], r[2]):
            return False, False, k, f"ratio({k}) < ratio(2)", r + [r_tail]
    if not _ge(r[kmax], r[kmax - 1]):
        return False, False, kmax, "ratio decreasing at kmax; no certificate for k > kmax", r + [r_tail]
    if not math.isnan(r_tail) and not _ge(r_tail, r[2]):
        return False, False, kmax + 1, "tail ratio < ratio(2)", r + [r_tail]
    strict = r[2] > r[1] * (1 + _RATIO_RTOL)
    return True, strict, None, "", r + [r_tail]


def check_condition_ratio_z(alice: PartyEnsemble, bob: PartyEnsemble, kmax: int | None = None) -> ConditionReport:
    """Signal/decoy ratio chain for both parties.

    For every ``k >= 2``: ``a_k^{z,L}/a_k^{y,U} >= a_2^{z,L}/a_2^{y,U} >= a_1^{z,L}/a_1^{y,U}``
    and the same for Bob.  ``strict`` is set when the second inequality is
    strict for both parties, which the bound denominators need.
    """
    kmax = min(alice.kmax, bob.kmax) if kmax is None else kmax
    ratios = {}
    strict_all = True
    for party, ens in (("alice", alice), ("bob", bob)):
        ok, strict, k, reason, r = _ratio_chain_z(ens["z"], ens["y"], kmax)
        ratios[party] = r
        if not ok:
            return ConditionReport(False, False, "interval", (party, "z/y", k), reason, ratios)
        strict_all &= strict
    reason = "" if strict_all else "ratio(2) == ratio(1): signal and decoy not separable"
    return ConditionReport(True, strict_all, "interval", None, reason, ratios)


# Z-basis pairs as printed, plus the X-basis pair the error-side bound relies on.
RATIO_W_PAIRS = (("y", "w"), ("z", "w"), ("x", "v"))


def _interval_certificate_w(num: CoeffIntervalSet, vac: CoeffIntervalSet, kmax: int):
    target = _safe_ratio(num.upper[1], vac.lower[1])
    if math.isnan(target) or math.isinf(target):
        return False, 1, "vacuum-source one-photon lower bound vanishes"
    for k in range(2, kmax + 1):
        if vac.upper[k] == 0:
            if num.lower[k] > 0:
                continue
            return False, k, f"both coefficients vanish at k={k}"
        if not _ge(num.lower[k] / vac.upper[k], target):
            return False, k, f"a_{k}^L/a_{k}^{{vac,U}} < a_1^U/a_1^{{vac,L}}"
    r_tail = _safe_ratio(num.tail_lower, vac.tail_upper)
    if not math.isnan(r_tail) and not _ge(r_tail, target):
        return False, kmax + 1, "tail ratio below one-photon ratio"
    return True, None, ""


def check_condition_ratio_w(alice: PartyEnsemble, bob: PartyEnsemble, kmax: int | None = None) -> ConditionReport:
    """Per-pulse ratio monotonicity against the imperfect vacuum source.

    Requires ``a_k^{l,i}/a_k^{w,i} >= a_1^{l,i}/a_1^{w,i}`` for ``l = y, z``
    (and ``x`` against ``v``) for every pulse.  Two certificates are tried:
    the worst-case interval form, and for coherent ensembles the closed form
    ``mu_w (1 + delta_vac) < mu_l (1 - delta_sig)``, under which the per-pulse
    ratio ``exp(mu_w - mu_l) (mu_l / mu_w)**k`` grows with ``k`` for every
    admissible pair of intensities.
    """
    kmax = min(alice.kmax, bob.kmax) if kmax is None else kmax
    used = set()
    for party, ens in (("alice", alice), ("bob", bob)):
        for l, vac in RATIO_W_PAIRS:
            ok, k, reason = _interval_certificate_w(ens[l], ens[vac], kmax)
            if ok:
                used.add("interval")
                continue
            if ens.is_coherent:
                vac_hi = ens.intensity_range(vac)[1]
                sig_lo = ens.intensity_range(l)[0]
                if vac_hi < sig_lo:
                    used.add("coherent")
                    continue
                reason = f"mu_{vac}(1+delta) >= mu_{l}(1-delta): {vac_hi:.6g} >= {sig_lo:.6g}"
            return ConditionReport(False, False, "none", (party, f"{l}/{vac}", k), reason)
    return ConditionReport(True, True, "+".join(sorted(used)))


def require_conditions(alice: PartyEnsemble, bob: PartyEnsemble) -> None:
    """Raise :class:`ConditionError` unless every source condition holds strictly."""
    for party, ens in (("alice", alice), ("bob", bob)):
        if ens.is_coherent:
            y_hi = ens.intensity_range("y")[1]
            z_lo = ens.intensity_range("z")[0]
            if not y_hi < z_lo:
                raise ConditionError(
                    "mu_y(1+delta_sig) < mu_z(1-delta_sig)",
                    f"{party}: {y_hi:.6g} >= {z_lo:.6g}",
                )
    rz = check_condition_ratio_z(alice, bob)
    if not rz.ok:
        party, pair, k = rz.first_violation
        raise ConditionError(f"a_k^{{z,L}}/a_k^{{y,U}} ratio chain ({pair})", f"{party}, k={k}: {rz.reason}")
    if not rz.strict:
        raise ConditionError("a_2^{z,L}/a_2^{y,U} > a_1^{z,L}/a_1^{y,U}", rz.reason)
    rw = check_condition_ratio_w(alice, bob)
    if not rw.ok:
        party, pair, k = rw.first_violation
        raise ConditionError(f"a_k/a_k^vac >= a_1/a_1^vac ({pair})", f"{party}, k={k}: {rw.reason}")
