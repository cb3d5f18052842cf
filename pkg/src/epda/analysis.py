"""Delivery time, DoF and subpacketization comparisons with literature schemes.

Only closed-form subpacketization counts are evaluated for the reference
schemes; none of their delivery procedures is implemented here.
Everything is exact: Python integers for binomials, ``Fraction`` for times.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .constructions import SchemeParams
from .errors import ParameterInfeasible

SCHEMES = ("EPDA-ConstI", "EPDA-ConstII", "SMK", "LaE", "STS", "SPSET")


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    valid: bool
    reason: str
    subpacketization: int | None
    dof: int
    delivery_time: Fraction


@dataclass(frozen=True)
class ComparisonTable:
    params: SchemeParams
    rows: tuple[ComparisonRow, ...]

    def row(self, scheme: str) -> ComparisonRow:
        return next(r for r in self.rows if r.scheme == scheme)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "valid", "subpacketization", "dof", "delivery_time"])
        for r in self.rows:
            w.writerow([r.scheme, str(r.valid).lower(),
                        "" if r.subpacketization is None else r.subpacketization,
                        r.dof, str(r.delivery_time)])
        return buf.getvalue()

    def to_json(self) -> str:
        p = self.params
        return json.dumps({
            "params": {"K": p.K, "t": p.t, "L": p.L, "n": p.n, "gamma": p.gamma},
            "rows": [
                {"scheme": r.scheme, "valid": r.valid, "reason": r.reason,
                 "subpacketization": r.subpacketization, "dof": r.dof,
                 "delivery_time": str(r.delivery_time)}
                for r in self.rows
            ],
        }, indent=2) + "\n"

    def pretty(self) -> str:
        lines = [f"{'scheme':<14}{'valid':<7}{'subpacketization':>18}  reason"]
        for r in self.rows:
            sp = "-" if r.subpacketization is None else str(r.subpacketization)
            lines.append(f"{r.scheme:<14}{'yes' if r.valid else 'no':<7}{sp:>18}  {r.reason}")
        return "\n".join(lines)


def delivery_summary(params: SchemeParams) -> tuple[Fraction, int, Fraction]:
    """Optimal one-shot delivery time ``(K-t)/(t+L)``, DoF ``t+L``, local gain ``1 - t/K``."""
    K, t, L = params.K, params.t, params.L
    return Fraction(K - t, t + L), t + L, 1 - Fraction(t, K)


def subpack_formulas(params: SchemeParams) -> ComparisonTable:
    """Subpacketization of every compared scheme, with validity conditions.

    Invalid schemes stay in the table; their ``reason`` names the violated
    condition. EPDA rows report ``K / gcd(K, t, L)`` whatever the family
    check says, SMK uses the general ``C(K,t) C(K-t-1, L-1)``.
    """
    K, t, L = params.K, params.t, params.L
    if K < 2 or not 1 <= t < K or not 1 <= L <= K:
        raise ParameterInfeasible(f"need K >= 2, 1 <= t < K, 1 <= L <= K; got K={K}, t={t}, L={L}")
    g = params.gamma
    T, dof, _ = delivery_summary(params)
    ours = K // g

    def row(name, valid, reason, value):
        return ComparisonRow(name, valid, reason, value, dof, T)

    n = params.family_b_n()
    rows = [
        row("EPDA-ConstI", params.is_family_a,
            "K = t + L" if params.is_family_a else f"needs K = t + L ({K} != {t + L})", ours),
        row("EPDA-ConstII", n is not None,
            f"K = nt + (n-1)L with n = {n}, L >= t" if n is not None
            else "needs K = nt + (n-1)L for some n >= 2 and L >= t", ours),
    ]
    smk_ok = t + L <= K
    rows.append(row("SMK", smk_ok, "t + L <= K" if smk_ok else f"needs t + L <= K ({t + L} > {K})",
                    comb(K, t) * comb(K - t - 1, L - 1) if smk_ok else None))
    lae_ok = K % L == 0 and t % L == 0
    rows.append(row("LaE", lae_ok, "L | K and L | t" if lae_ok else
                    f"needs L | K and L | t (L={L}, K={K}, t={t})",
                    comb(K // L, t // L) if lae_ok else None))
    lin_ok = L >= t
    why = "L >= t" if lin_ok else f"needs L >= t ({L} < {t})"
    rows.append(row("STS", lin_ok, why, K * (t + L)))
    rows.append(row("SPSET", lin_ok, why, K * (t + L) // (g * g)))
    return ComparisonTable(params, tuple(rows))
