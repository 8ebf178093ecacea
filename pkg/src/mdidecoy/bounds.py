"""Decoy-state bounds for MDI-QKD with imperfect, fluctuating sources.

All functions take the observed statistics and the two parties'
:class:`~mdidecoy.fock_source.PartyEnsemble` objects and work only with the
interval end points ``a_k^{l,L}``, ``a_k^{l,U}`` (Alice) and ``b_k^{r,L}``,
``b_k^{r,U}`` (Bob).  Counts are real-valued expectations
``N_lr = S_lr p_l p_r N_t``.

Notation in names: ``ntilde`` is the vacuum-subtraction estimate
(lower-case n-tilde), ``Ntilde`` the count with both photon numbers >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ObservedStats
from .errors import DenominatorError, NoKeyError, SigmaGateError
from .fock_source import PartyEnsemble, require_conditions

_CONSISTENCY_RTOL = 1e-9


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with ``0 log 0 = 0``."""
    if not 0 <= x <= 1:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _lo(ens: PartyEnsemble, label: str, k: int) -> float:
    return float(ens[label].lower[k])


def _hi(ens: PartyEnsemble, label: str, k: int) -> float:
    return float(ens[label].upper[k])


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise DenominatorError(f"{name} > 0", f"got {value}")
    return value


@dataclass(frozen=True)
class SigmaSet:
    """Correction factors from the imperfect vacuum sources."""

    sigma_C_y: float
    sigma_A_y: float
    sigma_B_y: float
    sigma_A_z: float
    sigma_B_z: float
    sigma_A_x: float
    sigma_B_x: float


def _sigma_side(ens: PartyEnsemble, l: str, vac: str) -> float:
    # a_0^{l,U} a_1^{vac,U} / (a_0^{vac,L} a_1^{l,L})
    return _hi(ens, l, 0) * _hi(ens, vac, 1) / (
        _positive(f"a_0^{{{vac},L}}", _lo(ens, vac, 0)) * _positive(f"a_1^{{{l},L}}", _lo(ens, l, 1))
    )


def sigmas(alice: PartyEnsemble, bob: PartyEnsemble) -> SigmaSet:
    sigma1 = _hi(alice, "y", 0) * _hi(bob, "y", 0) / (
        _positive("a_0^{w,L}", _lo(alice, "w", 0)) * _positive("b_0^{w,L}", _lo(bob, "w", 0))
    )
    sigma2 = _hi(alice, "w", 1) * _hi(bob, "w", 1) / (
        _positive("a_1^{y,L}", _lo(alice, "y", 1)) * _positive("b_1^{y,L}", _lo(bob, "y", 1))
    )
    return SigmaSet(
        sigma_C_y=sigma1 * sigma2,
        sigma_A_y=_sigma_side(alice, "y", "w"),
        sigma_B_y=_sigma_side(bob, "y", "w"),
        sigma_A_z=_sigma_side(alice, "z", "w"),
        sigma_B_z=_sigma_side(bob, "z", "w"),
        sigma_A_x=_sigma_side(alice, "x", "v"),
        sigma_B_x=_sigma_side(bob, "x", "v"),
    )


def _one_minus(sa: float, sb: float, basis: str) -> float:
    rest = 1.0 - sa - sb
    if not rest > 0:
        raise SigmaGateError(
            f"sigma_A^{basis} + sigma_B^{basis} < 1",
            f"fluctuation too large for this bound: sigma_A^{basis}={sa:.6g}, sigma_B^{basis}={sb:.6g}",
        )
    return rest


# --- vacuum-subtracted yields -------------------------------------------------

def _vacuum_ratios(sig: str, vac: str, A: PartyEnsemble, B: PartyEnsemble, upper: bool):
    """Worst-case zero-photon ratios ``(c_A, c_B, c_AB)`` between a source and its vacuum.

    ``upper=True`` makes the vacuum-containing estimate as large as possible,
    ``upper=False`` as small as possible.
    """
    hi, lo = (_hi, _lo) if upper else (_lo, _hi)
    c_a = hi(A, sig, 0) / _positive(f"a_0^{{{vac}}}", lo(A, vac, 0))
    c_b = hi(B, sig, 0) / _positive(f"b_0^{{{vac}}}", lo(B, vac, 0))
    c_ab = lo(A, sig, 0) * lo(B, sig, 0) / (
        _positive(f"a_0^{{{vac}}}", hi(A, vac, 0)) * _positive(f"b_0^{{{vac}}}", hi(B, vac, 0))
    )
    return c_a, c_b, c_ab


def _vacuum_yield(table, sig, vac, A, B, upper) -> float:
    c_a, c_b, c_ab = _vacuum_ratios(sig, vac, A, B, upper)
    return c_a * table[(vac, sig)] + c_b * table[(sig, vac)] - c_ab * table[(vac, vac)]


def _vacuum_subtracted(table, sig: str, vac: str, A: PartyEnsemble, B: PartyEnsemble, upper: bool) -> float:
    return table[(sig, sig)] - _vacuum_yield(table, sig, vac, A, B, upper)


def s_tilde_yy(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    return _vacuum_subtracted(stats.S, "y", "w", A, B, upper=True)


def s_tilde_zz(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    return _vacuum_subtracted(stats.S, "z", "w", A, B, upper=False)


def t_tilde_xx(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    return _vacuum_subtracted(stats.T, "x", "v", A, B, upper=False)


def _pp(A: PartyEnsemble, B: PartyEnsemble, label: str) -> float:
    return A.prob(label) * B.prob(label)


def _vacuum_part(table_name: str, stats, sig, vac, A, B, upper) -> float:
    yields = _vacuum_yield(getattr(stats, table_name), sig, vac, A, B, upper)
    return _pp(A, B, sig) * stats.N_total * yields


def n_tilde_yy_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Upper bound on the vacuum-containing part of ``N_yy``."""
    return _vacuum_part("S", stats, "y", "w", A, B, upper=True)


def n_tilde_yy_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    return _vacuum_part("S", stats, "y", "w", A, B, upper=False)


def n_tilde_zz_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Lower bound on the vacuum-containing part of ``N_zz``."""
    return _vacuum_part("S", stats, "z", "w", A, B, upper=False)


def m_tilde_xx_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Lower bound on the vacuum-containing error counts of source ``xx``."""
    return _vacuum_part("T", stats, "x", "v", A, B, upper=False)


# --- bounds on counts with both photon numbers >= 1 ---------------------------

def _N(stats, A, B, l):
    return stats.count("S", l, l, A, B)


def _Ntilde_yy_lower_raw(stats, A, B) -> float:
    sg = sigmas(A, B)
    return (_N(stats, A, B, "y") - n_tilde_yy_upper(stats, A, B)) / (1.0 + sg.sigma_C_y)


def N_tilde_yy_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Lower bound on ``Ntilde_yy``, clamped at 0."""
    return max(0.0, _Ntilde_yy_lower_raw(stats, A, B))


def N_tilde_yy_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    sg = sigmas(A, B)
    rest = _one_minus(sg.sigma_A_y, sg.sigma_B_y, "y")
    return (_N(stats, A, B, "y") - n_tilde_yy_lower(stats, A, B)) / rest


def N_tilde_zz_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    sg = sigmas(A, B)
    rest = _one_minus(sg.sigma_A_z, sg.sigma_B_z, "z")
    return (_N(stats, A, B, "z") - n_tilde_zz_lower(stats, A, B)) / rest


def M_tilde_xx_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Upper bound on error counts of source ``xx`` with both photon numbers >= 1."""
    sg = sigmas(A, B)
    rest = _one_minus(sg.sigma_A_x, sg.sigma_B_x, "x")
    return (stats.count("T", "x", "x", A, B) - m_tilde_xx_lower(stats, A, B)) / rest


# --- single-photon pair counts -------------------------------------------------

def k_ratios(A: PartyEnsemble, B: PartyEnsemble) -> tuple[float, float]:
    """``(K_a, K_b)``: the two candidate multi-photon scaling constants."""
    k_a = _lo(A, "z", 1) * _lo(B, "z", 2) / (_positive("a_1^{y,U}", _hi(A, "y", 1)) * _positive("b_2^{y,U}", _hi(B, "y", 2)))
    k_b = _lo(A, "z", 2) * _lo(B, "z", 1) / (_positive("a_2^{y,U}", _hi(A, "y", 2)) * _positive("b_1^{y,U}", _hi(B, "y", 1)))
    return k_a, k_b


@dataclass(frozen=True)
class _D11Parts:
    raw: float
    branch: str
    K_a: float
    K_b: float
    Ntilde_yy_L: float
    Ntilde_zz_U: float


def _d11_lower_raw(stats, A, B, *, branch: str | None = None) -> _D11Parts:
    k_a, k_b = k_ratios(A, B)
    if branch is None:
        branch = "Ka<=Kb" if k_a <= k_b else "Ka>Kb"
    n_yy = _Ntilde_yy_lower_raw(stats, A, B)
    n_zz = N_tilde_zz_upper(stats, A, B)
    py2 = _pp(A, B, "y")
    pz2 = _pp(A, B, "z")
    if branch == "Ka<=Kb":
        # Alice's one-photon and Bob's two-photon terms pair up
        den = _hi(B, "y", 1) * _lo(B, "z", 2) - _hi(B, "y", 2) * _lo(B, "z", 1)
        if not den > 0:
            raise DenominatorError("b_1^{y,U} b_2^{z,L} - b_2^{y,U} b_1^{z,L} > 0", f"got {den:.6g}")
        c2 = _lo(B, "z", 2)
        raw = (c2 / py2 * n_yy - c2 / (pz2 * k_a) * n_zz) / (_hi(A, "y", 1) * den)
    else:
        # mirror image with the parties' roles exchanged
        den = _hi(A, "y", 1) * _lo(A, "z", 2) - _hi(A, "y", 2) * _lo(A, "z", 1)
        if not den > 0:
            raise DenominatorError("a_1^{y,U} a_2^{z,L} - a_2^{y,U} a_1^{z,L} > 0", f"got {den:.6g}")
        c2 = _lo(A, "z", 2)
        raw = (c2 / py2 * n_yy - c2 / (pz2 * k_b) * n_zz) / (_hi(B, "y", 1) * den)
    return _D11Parts(raw, branch, k_a, k_b, n_yy, n_zz)


def D11_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble, *, branch: str | None = None) -> float:
    """Lower bound on the expected number of single-photon pair counts.

    ``branch`` forces ``"Ka<=Kb"`` or ``"Ka>Kb"``; by default the branch
    matching the ensembles is used.  Forcing the wrong branch gives a
    number without a soundness guarantee and is only meant for testing.
    """
    require_conditions(A, B)
    return max(0.0, _d11_lower_raw(stats, A, B, branch=branch).raw)


def _delta11_eq26(stats, A, B, branch: str) -> tuple[float, float]:
    """Fraction formula in yield form; returns (value, scale of its two terms)."""
    sg = sigmas(A, B)
    sy = s_tilde_yy(stats, A, B) / (1.0 + sg.sigma_C_y)
    sz = s_tilde_zz(stats, A, B) / _one_minus(sg.sigma_A_z, sg.sigma_B_z, "z")
    a1z, b1z = _lo(A, "z", 1), _lo(B, "z", 1)
    if branch == "Ka<=Kb":
        t1 = a1z * _lo(B, "z", 2) * sy
        t2 = _hi(A, "y", 1) * _hi(B, "y", 2) * sz
        den = _hi(A, "y", 1) * a1z * (_hi(B, "y", 1) * _lo(B, "z", 2) - _hi(B, "y", 2) * b1z)
    else:
        t1 = b1z * _lo(A, "z", 2) * sy
        t2 = _hi(B, "y", 1) * _hi(A, "y", 2) * sz
        den = _hi(B, "y", 1) * b1z * (_hi(A, "y", 1) * _lo(A, "z", 2) - _hi(A, "y", 2) * a1z)
    pref = a1z * b1z / (den * stats.S[("z", "z")])
    return pref * (t1 - t2), abs(pref) * (abs(t1) + abs(t2))


def delta11_lower(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Lower bound on the single-photon fraction of signal-source counts, in [0, 1].

    Evaluated in yield form and cross-checked against the count form
    ``p_z^2 a_1^{z,L} b_1^{z,L} D11^L / N_zz``.
    """
    return _delta11(stats, A, B)[0]


def _delta11(stats, A, B):
    require_conditions(A, B)
    if not stats.S[("z", "z")] > 0:
        raise ZeroDivisionError("S_zz = 0")
    parts = _d11_lower_raw(stats, A, B)
    via_counts = _pp(A, B, "z") * _lo(A, "z", 1) * _lo(B, "z", 1) * parts.raw / _N(stats, A, B, "z")
    via_yields, scale = _delta11_eq26(stats, A, B, parts.branch)
    if abs(via_counts - via_yields) > _CONSISTENCY_RTOL * max(scale, abs(via_yields)):
        raise AssertionError(
            f"single-photon fraction: count form {via_counts!r} != yield form {via_yields!r}"
        )
    return min(1.0, max(0.0, via_yields)), via_yields, via_counts, parts


# --- phase-flip error rate -----------------------------------------------------

def G11_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble) -> float:
    """Upper bound on the single-photon error-count weight ``G11``.

    The vacuum-vacuum error term carries ``1/p_v^2``; the printed prefactor
    symbol is undefined and ``p_v`` is the only reading consistent with the
    vacuum-subtraction estimate.
    """
    raw = M_tilde_xx_upper(stats, A, B) / (
        _pp(A, B, "x") * _positive("a_1^{x,L}", _lo(A, "x", 1)) * _positive("b_1^{x,L}", _lo(B, "x", 1))
    )
    return max(0.0, raw)


def e11_upper_raw(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble, s11_L: float) -> float:
    if not s11_L > 0:
        raise NoKeyError("single-photon yield bound vanished; no key")
    sg = sigmas(A, B)
    rest = _one_minus(sg.sigma_A_x, sg.sigma_B_x, "x")
    t = max(0.0, t_tilde_xx(stats, A, B))
    a1l, b1l = _lo(A, "x", 1), _lo(B, "x", 1)
    return _hi(A, "x", 1) * _hi(B, "x", 1) * t / ((a1l * b1l) ** 2 * rest * s11_L)


def e11_upper(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble, s11_L: float) -> float:
    """Upper bound on the single-photon phase-flip error rate, capped at 1.

    ``s11_L = D11^L / N_t``: the Z-basis single-photon yield bound stands in
    for the X-basis one.
    """
    return min(1.0, e11_upper_raw(stats, A, B, s11_L))


def key_rate(stats: ObservedStats, delta11_L: float, e11_U: float, f: float) -> float:
    """Asymptotic key bits per signal pulse pair, clamped at 0."""
    return max(0.0, key_rate_raw(stats, delta11_L, e11_U, f))


def key_rate_raw(stats: ObservedStats, delta11_L: float, e11_U: float, f: float) -> float:
    h_e = binary_entropy(min(0.5, max(0.0, e11_U)))
    return stats.S[("z", "z")] * (delta11_L * (1.0 - h_e) - f * binary_entropy(stats.E_zz))


# --- full report -----------------------------------------------------------------

@dataclass(frozen=True)
class BoundsReport:
    D11_L: float
    delta11_L: float
    s11_L: float
    G11_U: float
    e11_U: float
    R: float
    sigmas: SigmaSet
    S_tilde_yy: float
    S_tilde_zz: float
    T_tilde_xx: float
    Ntilde_yy_L: float
    Ntilde_yy_U: float | None
    Ntilde_zz_U: float
    Mtilde_xx_U: float
    ntilde_yy_w_U: float
    ntilde_zz_w_L: float
    mtilde_xx_v_L: float
    K_a: float
    K_b: float
    branch: str
    D11_L_raw: float
    delta11_L_raw: float
    delta11_L_count_form: float
    e11_U_raw: float
    R_raw: float
    S_zz: float
    E_zz: float
    flags: tuple[str, ...] = field(default_factory=tuple)


def evaluate_bounds(stats: ObservedStats, A: PartyEnsemble, B: PartyEnsemble, f: float = 1.16) -> BoundsReport:
    """Run every gate and bound and collect the results.

    Raises
    ------
    ConditionError, SigmaGateError, DenominatorError
        When a precondition fails; no number is produced in that case.
    """
    delta, delta_raw, delta_counts, parts = _delta11(stats, A, B)
    flags = []
    if parts.Ntilde_yy_L < 0:
        flags.append("Ntilde_yy_L_negative")
    d11 = max(0.0, parts.raw)
    s11 = d11 / stats.N_total
    g11 = G11_upper(stats, A, B)
    if s11 > 0:
        e_raw = e11_upper_raw(stats, A, B, s11)
    else:
        e_raw = math.inf
        flags.append("no_single_photon_yield")
    e11 = min(1.0, e_raw)
    r_raw = key_rate_raw(stats, delta, e11, f)
    try:
        # audit only: the key rate does not need this bound, so its gate does not block it
        nyy_u = N_tilde_yy_upper(stats, A, B)
    except SigmaGateError:
        nyy_u = None
        flags.append("Ntilde_yy_U_gated")
    return BoundsReport(
        D11_L=d11,
        delta11_L=delta,
        s11_L=s11,
        G11_U=g11,
        e11_U=e11,
        R=max(0.0, r_raw),
        sigmas=sigmas(A, B),
        S_tilde_yy=s_tilde_yy(stats, A, B),
        S_tilde_zz=s_tilde_zz(stats, A, B),
        T_tilde_xx=t_tilde_xx(stats, A, B),
        Ntilde_yy_L=max(0.0, parts.Ntilde_yy_L),
        Ntilde_yy_U=nyy_u,
        Ntilde_zz_U=parts.Ntilde_zz_U,
        Mtilde_xx_U=M_tilde_xx_upper(stats, A, B),
        ntilde_yy_w_U=n_tilde_yy_upper(stats, A, B),
        ntilde_zz_w_L=n_tilde_zz_lower(stats, A, B),
        mtilde_xx_v_L=m_tilde_xx_lower(stats, A, B),
        K_a=parts.K_a,
        K_b=parts.K_b,
        branch=parts.branch,
        D11_L_raw=parts.raw,
        delta11_L_raw=delta_raw,
        delta11_L_count_form=delta_counts,
        e11_U_raw=e_raw,
        R_raw=r_raw,
        S_zz=stats.S[("z", "z")],
        E_zz=stats.E_zz,
        flags=tuple(flags),
    )
