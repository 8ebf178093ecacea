"""Exact expectation-level ground truth for decoy-bound verification.

A scenario fixes, for every slot ``i``, the actual intensity of all ten
sources (five per party) and the per-pair yields ``y^i_jk`` and error yields
``t^i_jk``.  Every tally used in the bound derivation is then an exact
expectation.  A pair ``|jk>`` in slot ``i`` is counted with probability
``P(jk at i) * y^i_jk`` and weighted by ``d^i_jk = 1 / P(jk at i)``, so::

    D_jk          = sum_i y^i_jk
    n_jk^{lr}     = sum_i p_l p_r a^{l,i}_j b^{r,i}_k y^i_jk

and the same with ``t`` on the error side.  The yields are shared by both
bases, which is what lets the Z-basis single-photon yield bound stand in
for the X-basis one.

Photon numbers run over buckets ``0..kmax`` plus a tail bucket
``kmax + 1`` holding all mass above ``kmax``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .bounds import BoundsReport, evaluate_bounds, k_ratios
from .channel import ChannelParams, ObservedStats, yield_matrix
from .fock_source import LABELS, X_LABELS, Z_LABELS, PartyEnsemble, poisson_pmf, poisson_tail

MODES = ("uniform-delta", "random-delta", "adversarial-delta", "random-yields")
IDX = {label: i for i, label in enumerate(LABELS)}

# sign patterns (v, x, w, y, z) for the adversarial mode
_PATTERNS = {
    "all_low": (-1, -1, -1, -1, -1),
    "all_high": (1, 1, 1, 1, 1),
    "decoy_high_signal_low": (1, 1, 1, 1, -1),
    "decoy_low_signal_high": (-1, -1, -1, -1, 1),
    "vacuum_high": (1, -1, 1, -1, -1),
    "vacuum_low": (-1, 1, -1, 1, 1),
}


@dataclass(frozen=True)
class PerPulseScenario:
    """Per-slot intensities and yields.

    Attributes
    ----------
    intensities : ndarray, shape (2, 5, n_pulses)
        Actual intensity per party (Alice, Bob), source (``LABELS`` order)
        and slot.
    yields, error_yields : ndarray, shape (n_pulses, kmax + 2, kmax + 2)
    """

    n_pulses: int
    kmax: int
    intensities: np.ndarray
    yields: np.ndarray
    error_yields: np.ndarray
    mode: str = "custom"
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        if self.n_pulses < 1:
            raise ValueError("empty scenario: n_pulses must be at least 1")
        K = self.kmax + 2
        if self.intensities.shape != (2, 5, self.n_pulses):
            raise ValueError("intensities must have shape (2, 5, n_pulses)")
        if self.yields.shape != (self.n_pulses, K, K) or self.error_yields.shape != self.yields.shape:
            raise ValueError("yield arrays must have shape (n_pulses, kmax + 2, kmax + 2)")
        if np.any(self.error_yields < 0) or np.any(self.error_yields > self.yields) or np.any(self.yields > 1):
            raise ValueError("need 0 <= t <= y <= 1 in every slot")

    @cached_property
    def _coeffs(self) -> np.ndarray:
        mu = self.intensities[..., None]
        body = poisson_pmf(mu, np.arange(self.kmax + 1))
        tail = poisson_tail(self.intensities, self.kmax)[..., None]
        out = np.concatenate([body, tail], axis=-1)
        out.flags.writeable = False
        return out

    def coeffs(self) -> np.ndarray:
        """Bucketed photon-number coefficients, shape (2, 5, n_pulses, kmax + 2)."""
        return self._coeffs

    def deltas(self, alice: PartyEnsemble, bob: PartyEnsemble) -> np.ndarray:
        """Relative fluctuation ``mu^i / mu - 1`` per party, source and slot."""
        nominal = np.array([[ens.nominal_intensity[l] for l in LABELS] for ens in (alice, bob)])
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(nominal[..., None] > 0, self.intensities / nominal[..., None] - 1.0, 0.0)


def _delta_bounds(ens: PartyEnsemble) -> np.ndarray:
    return np.array([ens.delta(l) for l in LABELS])


def generate_scenario(
    alice: PartyEnsemble,
    bob: PartyEnsemble,
    params: ChannelParams,
    n_pulses: int = 10_000,
    mode: str = "random-delta",
    seed: int = 0,
) -> PerPulseScenario:
    """Draw a reproducible scenario.

    Modes
    -----
    ``uniform-delta``
        every pulse at its nominal intensity.
    ``random-delta``
        i.i.d. uniform fluctuations inside the allowed box.
    ``adversarial-delta``
        extremal ``+-delta`` patterns: a base pattern on every slot, a second
        pattern on a random subset of slots.
    ``random-yields``
        random fluctuations plus per-slot yields scaled by factors in
        ``[0, 1]`` and error fractions redrawn per slot.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if not (alice.is_coherent and bob.is_coherent):
        raise ValueError("scenario generation needs ensembles built from intensities")
    kmax = min(alice.kmax, bob.kmax)
    rng = np.random.default_rng(seed)
    nominal = np.array([[ens.nominal_intensity[l] for l in LABELS] for ens in (alice, bob)])
    bound = np.stack([_delta_bounds(alice), _delta_bounds(bob)])[..., None]

    if mode == "uniform-delta":
        d = np.zeros((2, 5, n_pulses))
    elif mode == "adversarial-delta":
        names = list(_PATTERNS)
        first, second = rng.choice(len(names), size=2)
        signs = np.empty((2, 5, n_pulses))
        signs[...] = np.array(_PATTERNS[names[first]])[None, :, None]
        swap = rng.random(n_pulses) < rng.random()
        signs[:, :, swap] = np.array(_PATTERNS[names[second]])[None, :, None]
        if rng.random() < 0.25:
            # independent vertices per party, source and slot
            signs = rng.choice((-1.0, 1.0), size=(2, 5, n_pulses))
        d = signs * bound
    else:
        d = rng.uniform(-1.0, 1.0, size=(2, 5, n_pulses)) * bound
    # same float expression as the interval end points
    intensities = nominal[..., None] * (1.0 + d)

    ym = yield_matrix(params, kmax)
    K = kmax + 2
    y = np.broadcast_to(ym.y, (n_pulses, K, K)).copy()
    t = np.broadcast_to(ym.t, (n_pulses, K, K)).copy()
    if mode == "random-yields":
        y *= rng.random((n_pulses, K, K))
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(ym.y > 0, ym.t / ym.y, 0.0)
        frac = np.minimum(1.0, frac * rng.uniform(0.0, 2.0, size=(n_pulses, K, K)))
        t = y * frac
    return PerPulseScenario(n_pulses, kmax, intensities, y, t, mode, seed)


def check_containment(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble, rtol: float = 1e-12) -> bool:
    """Every per-pulse coefficient lies inside the intervals handed to the bounds."""
    c = scn.coeffs()
    for p, ens in enumerate((alice, bob)):
        for l in LABELS:
            s = ens[l]
            block = c[p, IDX[l]]
            if np.any(block < s.bucket_lower * (1 - rtol)) or np.any(block > s.bucket_upper * (1 + rtol)):
                return False
    return True


@dataclass
class ExactTallies:
    """Exact expected tallies of one scenario.

    ``n`` and ``m`` are arrays of shape (5, 5, K, K) indexed by
    ``(IDX[l], IDX[r], j, k)``; the dictionaries are keyed by ``(l, r)``.
    """

    D: np.ndarray
    G: np.ndarray
    n: np.ndarray
    m: np.ndarray
    N: dict
    N_tilde: dict
    M: dict
    M_tilde_xx: float
    m_xx_v: float
    n_pulses: int
    extra: dict = field(default_factory=dict)

    def nlr(self, l: str, r: str) -> np.ndarray:
        return self.n[IDX[l], IDX[r]]

    def mlr(self, l: str, r: str) -> np.ndarray:
        return self.m[IDX[l], IDX[r]]


def _probs(ens: PartyEnsemble) -> np.ndarray:
    return np.array([ens.prob(l) for l in LABELS])


def _source_pair_sums(a: np.ndarray, b: np.ndarray, *ys: np.ndarray) -> list[np.ndarray]:
    """``out[l, r, j, k] = sum_i a[l, i, j] b[r, i, k] y[i, j, k]`` for each ``y``."""
    L, n, K = a.shape
    bt = np.ascontiguousarray(b.transpose(1, 0, 2))  # (N, L, K)
    outs = [np.empty((L, L, K, K)) for _ in ys]
    for j in range(K):
        aj = np.ascontiguousarray(a[:, :, j])
        # one BLAS call per Alice photon number: (L, N) @ (N, L*K)
        for out, y in zip(outs, ys):
            weighted = (bt * y[:, j, None, :]).reshape(n, L * K)
            out[:, :, j, :] = (aj @ weighted).reshape(L, L, K)
    return outs


def exact_tallies(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble) -> ExactTallies:
    c = scn.coeffs()
    a, b = c[0], c[1]
    pp = _probs(alice)[:, None, None, None] * _probs(bob)[None, :, None, None]
    n, m = _source_pair_sums(a, b, scn.yields, scn.error_yields)
    n *= pp
    m *= pp
    N = {(l, r): float(n[IDX[l], IDX[r]].sum()) for l in LABELS for r in LABELS}
    N_tilde = {(l, r): float(n[IDX[l], IDX[r], 1:, 1:].sum()) for l in LABELS for r in LABELS}
    M = {(l, r): float(m[IDX[l], IDX[r]].sum()) for l in LABELS for r in LABELS}
    mt = float(m[IDX["x"], IDX["x"], 1:, 1:].sum())
    return ExactTallies(
        D=scn.yields.sum(axis=0),
        G=scn.error_yields.sum(axis=0),
        n=n,
        m=m,
        N=N,
        N_tilde=N_tilde,
        M=M,
        M_tilde_xx=mt,
        m_xx_v=M[("x", "x")] - mt,
        n_pulses=scn.n_pulses,
    )


def observables_from_scenario(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble,
                              tallies: ExactTallies | None = None) -> ObservedStats:
    """Yields and error yields a run of this scenario would report."""
    tl = exact_tallies(scn, alice, bob) if tallies is None else tallies
    nt = scn.n_pulses

    def rate(table, l, r):
        return table[(l, r)] / (alice.prob(l) * bob.prob(r) * nt)

    S = {(l, r): rate(tl.N, l, r) for l in Z_LABELS for r in Z_LABELS}
    S_x = {(l, r): rate(tl.N, l, r) for l in X_LABELS for r in X_LABELS}
    T = {(l, r): rate(tl.M, l, r) for l in X_LABELS for r in X_LABELS}
    if tl.N[("z", "z")] <= 0:
        raise ZeroDivisionError("N_zz = 0: QBER undefined")
    return ObservedStats(nt, S, T, S_x, tl.M[("z", "z")] / tl.N[("z", "z")])


def _slot_sum(c: np.ndarray, la: str, lb: str, yy: np.ndarray, start: int) -> np.ndarray:
    """Per-slot ``sum_jk a_j^{la,i} b_k^{lb,i} yy_i[j, k]`` over buckets ``j, k >= start``."""
    a = c[0, IDX[la], :, start:]
    b = c[1, IDX[lb], :, start:]
    return np.einsum("ij,ij->i", a, np.matmul(yy, b[:, :, None])[:, :, 0])


def exact_vacuum_estimate(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble,
                          sig: str, vac: str, errors: bool = False) -> float:
    """The vacuum-subtraction term with the true per-pulse zero-photon ratios.

    ``p_s^A p_s^B sum_i [r_A^i S_i(vac, sig) + r_B^i S_i(sig, vac) - r_A^i r_B^i S_i(vac, vac)]``
    with ``r_A^i = a_0^{sig,i} / a_0^{vac,i}``; this is what the interval
    estimate bounds.  ``errors=True`` uses the error yields.
    """
    c = scn.coeffs()
    yy = scn.error_yields if errors else scn.yields
    ra = c[0, IDX[sig], :, 0] / c[0, IDX[vac], :, 0]
    rb = c[1, IDX[sig], :, 0] / c[1, IDX[vac], :, 0]
    total = (ra * _slot_sum(c, vac, sig, yy, 0) + rb * _slot_sum(c, sig, vac, yy, 0)
             - ra * rb * _slot_sum(c, vac, vac, yy, 0)).sum()
    return float(alice.prob(sig) * bob.prob(sig) * total)


@dataclass(frozen=True)
class GroundTruth:
    """Exact values every bound is compared against; ``None`` when undefined."""

    D11: float
    delta11: float | None
    e11: float | None
    G11: float
    Ntilde: dict
    Mtilde_xx: float
    vacuum_estimates: dict


def ground_truth_targets(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble,
                         tallies: ExactTallies | None = None) -> GroundTruth:
    tl = exact_tallies(scn, alice, bob) if tallies is None else tallies
    n11_zz = float(tl.nlr("z", "z")[1, 1])
    n11_xx = float(tl.nlr("x", "x")[1, 1])
    m11_xx = float(tl.mlr("x", "x")[1, 1])
    N_zz = tl.N[("z", "z")]
    return GroundTruth(
        D11=float(tl.D[1, 1]),
        delta11=n11_zz / N_zz if N_zz > 0 else None,
        e11=m11_xx / n11_xx if n11_xx > 0 else None,
        G11=float(tl.G[1, 1]),
        Ntilde={"yy": tl.N_tilde[("y", "y")], "zz": tl.N_tilde[("z", "z")]},
        Mtilde_xx=tl.M_tilde_xx,
        vacuum_estimates={
            "yy": exact_vacuum_estimate(scn, alice, bob, "y", "w"),
            "zz": exact_vacuum_estimate(scn, alice, bob, "z", "w"),
            "xx": exact_vacuum_estimate(scn, alice, bob, "x", "v", errors=True),
        },
    )


# --- derivation slacks -----------------------------------------------------------

@dataclass(frozen=True)
class SlackReport:
    """Slack terms of the derivation and residuals of its identities.

    ``slacks`` maps a name to ``(value, scale)``; each must satisfy
    ``value >= -tol * scale``.  ``identities`` maps a name to its relative
    residual.
    """

    slacks: dict
    identities: dict
    tol: float = 1e-12

    @property
    def violations(self) -> list[str]:
        bad = [k for k, (v, s) in self.slacks.items() if v < -self.tol * max(s, 1e-300)]
        bad += [k for k, r in self.identities.items() if not r < self.tol]
        return bad

    @property
    def ok(self) -> bool:
        return not self.violations


def _rel(residual: float, scale: float) -> float:
    if scale == 0:
        return abs(residual)
    return abs(residual) / abs(scale)


def verify_derivation_slacks(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble,
                             tallies: ExactTallies | None = None, tol: float = 1e-12) -> SlackReport:
    """Evaluate every non-negative slack term exactly.

    Covers the three slack terms of the single-photon count bound and the
    three of the vacuum-subtraction bound for the decoy source, plus the
    decomposition ``N_yy = ntilde_yy^w + Ntilde_yy - A - B + C``.
    """
    tl = exact_tallies(scn, alice, bob) if tallies is None else tallies
    c = scn.coeffs()
    y = scn.yields
    y1 = np.ascontiguousarray(y[:, 1:, 1:])
    K = scn.kmax + 2
    multi = np.zeros((K, K), dtype=bool)
    multi[1:, 1:] = True
    multi[1, 1] = False

    def slot_sum(la, lb, yy, start):
        return _slot_sum(c, la, lb, yy, start)

    def outer(ens_a, ens_b, label, kind):
        va = getattr(ens_a[label], f"bucket_{kind}")
        vb = getattr(ens_b[label], f"bucket_{kind}")
        return np.outer(va, vb)

    py2 = alice.prob("y") * bob.prob("y")
    pz2 = alice.prob("z") * bob.prob("z")
    sY, sZ, sW = slot_sum("y", "y", y1, 1), slot_sum("z", "z", y1, 1), slot_sum("w", "w", y1, 1)
    YU = outer(alice, bob, "y", "upper")
    ZL = outer(alice, bob, "z", "lower")
    ysum = y1.sum(axis=0)
    yu_y = float((YU[1:, 1:] * ysum).sum())
    zl_y = float((ZL[1:, 1:] * ysum).sum())

    slacks = {}
    slacks["xi1"] = (py2 * (yu_y - sY.sum()), py2 * yu_y)
    slacks["xi2"] = (pz2 * (sZ.sum() - zl_y), pz2 * sZ.sum())

    k_a, k_b = k_ratios(alice, bob)
    k_use = min(k_a, k_b)
    D = tl.D
    lam = float((YU * D)[multi].sum())
    lam_p = float((ZL * D)[multi].sum())
    xi3_terms = (ZL - k_use * YU) * D
    slacks["xi3"] = (pz2 * xi3_terms[multi].sum(), pz2 * lam_p)

    a0y, b0y = c[0, IDX["y"], :, 0], c[1, IDX["y"], :, 0]
    a0w, b0w = c[0, IDX["w"], :, 0], c[1, IDX["w"], :, 0]
    a1y, b1y = c[0, IDX["y"], :, 1], c[1, IDX["y"], :, 1]
    a1w, b1w = c[0, IDX["w"], :, 1], c[1, IDX["w"], :, 1]
    r0 = a0y * b0y / (a0w * b0w)
    r1 = a1w * b1w / (a1y * b1y)
    sig1 = alice["y"].upper[0] * bob["y"].upper[0] / (alice["w"].lower[0] * bob["w"].lower[0])
    sig2 = alice["w"].upper[1] * bob["w"].upper[1] / (alice["y"].lower[1] * bob["y"].lower[1])
    zeta1 = py2 * ((sig1 - r0) * sW).sum()
    zeta2 = py2 * (sig1 * (r1 * sY - sW)).sum()
    zeta3 = py2 * (sig1 * (sig2 - r1) * sY).sum()
    slacks["zeta1"] = (zeta1, py2 * sig1 * sW.sum())
    slacks["zeta2"] = (zeta2, py2 * sig1 * (r1 * sY).sum())
    slacks["zeta3"] = (zeta3, py2 * sig1 * sig2 * sY.sum())

    # cross terms: Alice's w with Bob's y and vice versa
    ra = a0y / a0w
    rb = b0y / b0w
    ntilde_w = py2 * (ra * slot_sum("w", "y", y, 0) + rb * slot_sum("y", "w", y, 0)
                      - r0 * slot_sum("w", "w", y, 0)).sum()
    A_term = py2 * (ra * slot_sum("w", "y", y1, 1)).sum()
    B_term = py2 * (rb * slot_sum("y", "w", y1, 1)).sum()
    C_term = py2 * (r0 * sW).sum()
    N_yy = tl.N[("y", "y")]
    Nt_yy = tl.N_tilde[("y", "y")]
    Nt_zz = tl.N_tilde[("z", "z")]
    D11 = float(D[1, 1])

    identities = {
        "N_yy decomposition": _rel(N_yy - (ntilde_w + Nt_yy - A_term - B_term + C_term), N_yy),
        "C chain": _rel(C_term - (sig1 * sig2 * Nt_yy - zeta1 - zeta2 - zeta3), C_term + sig1 * sig2 * Nt_yy),
        "Ntilde_yy expansion": _rel(
            Nt_yy - (py2 * YU[1, 1] * D11 + py2 * lam - slacks["xi1"][0]), py2 * (YU[1, 1] * D11 + lam)
        ),
        "Ntilde_zz expansion": _rel(
            Nt_zz - (pz2 * ZL[1, 1] * D11 + pz2 * lam_p + slacks["xi2"][0]), Nt_zz
        ),
        "Lambda' split": _rel(lam_p - (k_use * lam + slacks["xi3"][0] / pz2), lam_p),
    }
    tl.extra.update(Lambda=lam, Lambda_prime=lam_p, A=A_term, B=B_term, C=C_term, ntilde_yy_w=ntilde_w)
    slacks = {k: (float(v), float(s)) for k, (v, s) in slacks.items()}
    return SlackReport(slacks, identities, tol)


# --- soundness ----------------------------------------------------------------------

SOUNDNESS_RTOL = 1e-9


@dataclass(frozen=True)
class SoundnessCheck:
    name: str
    bound: float
    exact: float
    ok: bool

    @property
    def relative_margin(self) -> float:
        """Signed gap in the safe direction, relative to the larger magnitude."""
        scale = max(abs(self.bound), abs(self.exact), 1e-300)
        return self.margin / scale

    @property
    def margin(self) -> float:
        if self.name.endswith("upper"):
            return self.bound - self.exact
        return self.exact - self.bound


def _lower_ok(bound: float, exact: float, rtol: float) -> bool:
    return bound <= exact + rtol * max(abs(bound), abs(exact))


def check_soundness(scn: PerPulseScenario, alice: PartyEnsemble, bob: PartyEnsemble,
                    bounds_alice: PartyEnsemble | None = None, bounds_bob: PartyEnsemble | None = None,
                    f: float = 1.16, rtol: float = SOUNDNESS_RTOL,
                    tallies: ExactTallies | None = None) -> tuple[list[SoundnessCheck], BoundsReport]:
    """Compare every bound against the exact value.

    ``bounds_alice``/``bounds_bob`` are the ensembles handed to the bound
    formulas; they default to ``alice``/``bob``.  Passing narrower ones is
    how the harness is shown to catch unsound inputs.
    """
    tl = exact_tallies(scn, alice, bob) if tallies is None else tallies
    ba = alice if bounds_alice is None else bounds_alice
    bb = bob if bounds_bob is None else bounds_bob
    stats = observables_from_scenario(scn, ba, bb, tl)
    rep = evaluate_bounds(stats, ba, bb, f)
    gt = ground_truth_targets(scn, alice, bob, tl)
    pairs = [
        ("D11 lower", rep.D11_L, gt.D11),
        ("Ntilde_yy lower", rep.Ntilde_yy_L, gt.Ntilde["yy"]),
        ("Ntilde_zz upper", rep.Ntilde_zz_U, gt.Ntilde["zz"]),
        ("Mtilde_xx upper", rep.Mtilde_xx_U, gt.Mtilde_xx),
        ("ntilde_yy_w upper", rep.ntilde_yy_w_U, gt.vacuum_estimates["yy"]),
        ("ntilde_zz_w lower", rep.ntilde_zz_w_L, gt.vacuum_estimates["zz"]),
        ("mtilde_xx_v lower", rep.mtilde_xx_v_L, gt.vacuum_estimates["xx"]),
        ("G11 upper", rep.G11_U, gt.G11),
    ]
    if rep.Ntilde_yy_U is not None:
        pairs.insert(2, ("Ntilde_yy upper", rep.Ntilde_yy_U, gt.Ntilde["yy"]))
    if gt.delta11 is not None:
        pairs.append(("delta11 lower", rep.delta11_L, gt.delta11))
    if gt.e11 is not None:
        pairs.append(("e11 upper", rep.e11_U_raw, gt.e11))
    checks = []
    for name, bound, exact in pairs:
        if name.endswith("upper"):
            ok = _lower_ok(exact, bound, rtol)
        else:
            ok = _lower_ok(bound, exact, rtol)
        checks.append(SoundnessCheck(name, float(bound), float(exact), ok))
    return checks, rep


# --- text dump ------------------------------------------------------------------------

_HEADER = "# mdidecoy scenario v1"


def dump_scenario(scn: PerPulseScenario, path) -> None:
    """Write one slot per line: 10 intensities, then the y entries, then the t entries."""
    lines = [_HEADER, f"# kmax={scn.kmax} n_pulses={scn.n_pulses} mode={scn.mode} seed={scn.rng_seed}"]
    mu = scn.intensities.reshape(10, scn.n_pulses).T
    y = scn.yields.reshape(scn.n_pulses, -1)
    t = scn.error_yields.reshape(scn.n_pulses, -1)
    for i in range(scn.n_pulses):
        row = np.concatenate([mu[i], y[i], t[i]])
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scenario(path) -> PerPulseScenario:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != _HEADER:
        raise ValueError(f"{path}: not a scenario file")
    meta = dict(item.split("=", 1) for item in text[1].lstrip("# ").split())
    kmax, n = int(meta["kmax"]), int(meta["n_pulses"])
    K = kmax + 2
    rows = np.array([[float(v) for v in line.split()] for line in text[2:2 + n]]).reshape(n, 10 + 2 * K * K)
    seed = None if meta["seed"] == "None" else int(meta["seed"])
    return PerPulseScenario(
        n, kmax,
        rows[:, :10].T.reshape(2, 5, n).copy(),
        rows[:, 10:10 + K * K].reshape(n, K, K).copy(),
        rows[:, 10 + K * K:].reshape(n, K, K).copy(),
        meta["mode"], seed,
    )
