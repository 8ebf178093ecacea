"""Fluctuation-free three-intensity decoy bounds written directly in intensities.

This module deliberately shares no code with :mod:`mdidecoy.bounds`.  With
exact Poisson sources every coefficient ratio collapses to an expression in
the intensities, e.g. ``a_0^y / a_0^w = exp(mu_w - mu_y)`` and
``sigma_A^z = mu_w / mu_z``, so the bounds become short closed forms.  They
serve as the cross-implementation check of the general interval code at
zero fluctuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping


def h2(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class Intensities:
    """Nominal intensities of one party's sources."""

    v: float
    x: float
    w: float
    y: float
    z: float

    @classmethod
    def from_mapping(cls, m: Mapping[str, float]) -> "Intensities":
        return cls(m["v"], m["x"], m["w"], m["y"], m["z"])


@dataclass(frozen=True)
class ReferenceBounds:
    s11_L: float
    D11_L: float
    delta11_L: float
    G11_U: float
    e11_U: float
    R: float
    S_tilde_yy: float
    S_tilde_zz: float
    T_tilde_xx: float
    Ntilde_yy_L: float
    Ntilde_yy_U: float
    Ntilde_zz_U: float
    Mtilde_xx_U: float


def _subtract_vacuum(table, sig, vac, mu_a: Intensities, mu_b: Intensities) -> float:
    sa, va = getattr(mu_a, sig), getattr(mu_a, vac)
    sb, vb = getattr(mu_b, sig), getattr(mu_b, vac)
    return (
        table[(sig, sig)]
        - math.exp(va - sa) * table[(vac, sig)]
        - math.exp(vb - sb) * table[(sig, vac)]
        + math.exp(va + vb - sa - sb) * table[(vac, vac)]
    )


def reference_bounds(S: Mapping, T: Mapping, E_zz: float, N_total: float,
                     mu_a: Intensities, mu_b: Intensities,
                     probs_a: Mapping[str, float], probs_b: Mapping[str, float],
                     f: float = 1.16) -> ReferenceBounds:
    """Closed-form bounds for exact Poisson sources.

    ``S`` holds Z-basis yields keyed by source pairs over ``w, y, z``; ``T``
    holds X-basis error yields over ``v, x``.
    """
    ya, yb, za, zb = mu_a.y, mu_b.y, mu_a.z, mu_b.z
    s_yy = _subtract_vacuum(S, "y", "w", mu_a, mu_b)
    s_zz = _subtract_vacuum(S, "z", "w", mu_a, mu_b)
    t_xx = _subtract_vacuum(T, "x", "v", mu_a, mu_b)

    sigma_c = mu_a.w * mu_b.w / (ya * yb)
    one_minus_y = 1.0 - mu_a.w / ya - mu_b.w / yb
    one_minus_z = 1.0 - mu_a.w / za - mu_b.w / zb
    one_minus_x = 1.0 - mu_a.v / mu_a.x - mu_b.v / mu_b.x

    # K_a / K_b = (mu_zB mu_yA) / (mu_zA mu_yB) for Poisson sources
    if zb * ya <= za * yb:
        s11 = (zb * math.exp(ya + yb) * s_yy / (ya * yb * (1.0 + sigma_c))
               - yb * math.exp(za + zb) * s_zz / (za * zb * one_minus_z)) / (zb - yb)
    else:
        s11 = (za * math.exp(ya + yb) * s_yy / (ya * yb * (1.0 + sigma_c))
               - ya * math.exp(za + zb) * s_zz / (za * zb * one_minus_z)) / (za - ya)
    s11 = max(0.0, s11)

    delta = za * zb * math.exp(-za - zb) * s11 / S[("z", "z")]
    g11 = math.exp(mu_a.x + mu_b.x) * max(0.0, t_xx) / (mu_a.x * mu_b.x * one_minus_x)
    e11 = g11 / s11 if s11 > 0 else math.inf
    rate = S[("z", "z")] * (min(1.0, max(0.0, delta)) * (1.0 - h2(min(0.5, e11))) - f * h2(E_zz))

    py2 = probs_a["y"] * probs_b["y"] * N_total
    pz2 = probs_a["z"] * probs_b["z"] * N_total
    px2 = probs_a["x"] * probs_b["x"] * N_total
    return ReferenceBounds(
        s11_L=s11,
        D11_L=s11 * N_total,
        delta11_L=min(1.0, max(0.0, delta)),
        G11_U=g11 * N_total,
        e11_U=min(1.0, e11),
        R=max(0.0, rate),
        S_tilde_yy=s_yy,
        S_tilde_zz=s_zz,
        T_tilde_xx=t_xx,
        Ntilde_yy_L=max(0.0, py2 * s_yy / (1.0 + sigma_c)),
        Ntilde_yy_U=py2 * s_yy / one_minus_y,
        Ntilde_zz_U=pz2 * s_zz / one_minus_z,
        Mtilde_xx_U=px2 * t_xx / one_minus_x,
    )
