"""Linear detection model for the untrusted relay and the statistics it yields.

Model
-----
Each arm ``a`` (Alice to relay, Bob to relay) has transmittance
``eta_a = eta_d * 10**(-alpha * L_a / 10)``.  A ``j``-photon pulse makes its
arm click with probability ``q_j = 1 - (1 - p_d)(1 - eta)**j`` and the
signal alone with ``u_j = 1 - (1 - eta)**j``.  A pair ``|jk>`` succeeds when
both arms click::

    y_jk = q_j q_k
    t_jk = e_d * u_j u_k + e_0 * (q_j q_k - u_j u_k)

so an error occurs with probability ``e_d`` when both clicks are
signal-driven and ``e_0`` when a dark count is involved.  Pairs with a vacuum
side therefore have ``t = e_0 y``.  The tail bucket (photon number above
``kmax``) reuses the ``kmax`` yields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .fock_source import X_LABELS, Z_LABELS, PartyEnsemble


@dataclass(frozen=True)
class ChannelParams:
    """Fibre and detector parameters; defaults are a typical telecom fibre link with
    threshold detectors.

    ``arm_split`` is the fraction of ``distance_km`` between Alice and the relay.
    """

    distance_km: float = 0.0
    alpha_db_per_km: float = 0.2
    det_efficiency: float = 0.145
    dark_rate: float = 6.02e-6
    misalignment: float = 0.015
    vacuum_error: float = 0.5
    error_corr_ineff: float = 1.16
    arm_split: float = 0.5

    def __post_init__(self) -> None:
        for name in ("det_efficiency", "dark_rate", "misalignment", "vacuum_error", "arm_split"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.distance_km < 0:
            raise ValueError("distance_km must be non-negative")
        if self.alpha_db_per_km < 0:
            raise ValueError("alpha_db_per_km must be non-negative")
        if self.error_corr_ineff < 1:
            raise ValueError("error_corr_ineff must be >= 1")

    def with_distance(self, distance_km: float) -> "ChannelParams":
        return ChannelParams(
            distance_km, self.alpha_db_per_km, self.det_efficiency, self.dark_rate,
            self.misalignment, self.vacuum_error, self.error_corr_ineff, self.arm_split,
        )

    def arm_transmittance(self) -> tuple[float, float]:
        la = self.distance_km * self.arm_split
        lb = self.distance_km - la
        return (
            self.det_efficiency * 10 ** (-self.alpha_db_per_km * la / 10),
            self.det_efficiency * 10 ** (-self.alpha_db_per_km * lb / 10),
        )


STANDARD_CHANNEL = ChannelParams()


def _arm_click(params: ChannelParams, eta: float, n):
    n = np.asarray(n, dtype=float)
    signal = 1.0 - (1.0 - eta) ** n
    click = 1.0 - (1.0 - params.dark_rate) * (1.0 - eta) ** n
    return click, signal


def pair_yield(params: ChannelParams, j, k):
    """Success probability of a ``|jk>`` pulse pair (broadcasts over ``j``, ``k``)."""
    eta_a, eta_b = params.arm_transmittance()
    qa, _ = _arm_click(params, eta_a, j)
    qb, _ = _arm_click(params, eta_b, k)
    return qa * qb


def pair_error_yield(params: ChannelParams, j, k):
    """Probability that a ``|jk>`` pair succeeds and is recorded as an error."""
    eta_a, eta_b = params.arm_transmittance()
    qa, ua = _arm_click(params, eta_a, j)
    qb, ub = _arm_click(params, eta_b, k)
    both_signal = ua * ub
    return params.misalignment * both_signal + params.vacuum_error * (qa * qb - both_signal)


@dataclass(frozen=True)
class YieldMatrix:
    """Per-pair yields ``y`` and error yields ``t`` over photon-number buckets."""

    y: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.t < 0) or np.any(self.t > self.y) or np.any(self.y > 1):
            raise ValueError("need 0 <= t <= y <= 1")


def yield_matrix(params: ChannelParams, kmax: int) -> YieldMatrix:
    """Yields for buckets ``0..kmax`` plus the tail bucket ``kmax + 1``."""
    n = np.minimum(np.arange(kmax + 2), kmax)
    jj, kk = np.meshgrid(n, n, indexing="ij")
    y = pair_yield(params, jj, kk)
    t = pair_error_yield(params, jj, kk)
    return YieldMatrix(y, np.minimum(t, y))


@dataclass(frozen=True)
class ObservedStats:
    """What the experiment reports.

    Attributes
    ----------
    N_total : float
        Number of pulse pairs sent.
    S : dict
        Yields ``S_lr`` for Z-basis two-pulse sources ``l, r`` in ``w, y, z``.
    T : dict
        Error yields ``T_lr`` for X-basis sources ``l, r`` in ``v, x``.
    S_x : dict
        Yields for the X-basis sources.
    E_zz : float
        Quantum bit error rate of the signal source ``zz``.
    """

    N_total: float
    S: Mapping[tuple[str, str], float]
    T: Mapping[tuple[str, str], float]
    S_x: Mapping[tuple[str, str], float]
    E_zz: float

    def __post_init__(self) -> None:
        if self.N_total <= 0:
            raise ValueError("N_total must be positive")
        for table in (self.S, self.T, self.S_x):
            for key, v in table.items():
                if not 0 <= v <= 1:
                    raise ValueError(f"yield {key} = {v} outside [0, 1]")
        if not 0 <= self.E_zz <= 1:
            raise ValueError("E_zz must lie in [0, 1]")

    def count(self, table: str, l: str, r: str, alice: PartyEnsemble, bob: PartyEnsemble) -> float:
        """Expected number of (error) counts ``N_lr = S_lr p_l p_r N_t``."""
        value = getattr(self, table)[(l, r)]
        return value * alice.prob(l) * bob.prob(r) * self.N_total


def stats_from_buckets(coeffs_a: Mapping[str, np.ndarray], coeffs_b: Mapping[str, np.ndarray],
                       ym: YieldMatrix, N_total: float) -> ObservedStats:
    """Observables from fixed per-source bucket coefficients (no fluctuation)."""
    S = {(l, r): float(coeffs_a[l] @ ym.y @ coeffs_b[r]) for l in Z_LABELS for r in Z_LABELS}
    S_x = {(l, r): float(coeffs_a[l] @ ym.y @ coeffs_b[r]) for l in X_LABELS for r in X_LABELS}
    T = {(l, r): float(coeffs_a[l] @ ym.t @ coeffs_b[r]) for l in X_LABELS for r in X_LABELS}
    if S[("z", "z")] <= 0:
        raise ZeroDivisionError("S_zz = 0: QBER undefined")
    T_zz = float(coeffs_a["z"] @ ym.t @ coeffs_b["z"])
    return ObservedStats(N_total, S, T, S_x, T_zz / S[("z", "z")])


def simulate_observables(alice: PartyEnsemble, bob: PartyEnsemble, params: ChannelParams,
                         N_total: float = 1e10, scenario=None) -> ObservedStats:
    """Statistics an experiment would report.

    Without ``scenario`` every pulse carries the nominal intensity.  With a
    :class:`~mdidecoy.oracle.PerPulseScenario` the per-pulse intensities and
    yields of that scenario are used instead, so observables and ground
    truth come from the same pulses (``params`` and ``N_total`` are then
    taken from the scenario).
    """
    if scenario is not None:
        from .oracle import observables_from_scenario
        return observables_from_scenario(scenario, alice, bob)
    kmax = min(alice.kmax, bob.kmax)
    ym = yield_matrix(params, kmax)
    coeffs_a = {l: alice.nominal_buckets(l) for l in X_LABELS + Z_LABELS}
    coeffs_b = {l: bob.nominal_buckets(l) for l in X_LABELS + Z_LABELS}
    return stats_from_buckets(coeffs_a, coeffs_b, ym, N_total)
