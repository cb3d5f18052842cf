"""Generators for the array families: MaN PDA, Constructions I and II,
row concatenation, and the scheme synthesizers built on them.

Rows and columns are 1-based in every formula below. ``_wrap(i, K)`` maps
an integer onto ``[1, K]`` with residue 0 sent to ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, gcd

from .array import STAR, DeliveryArray, concat_grids, verify_epda
from .errors import InvalidEpda, ParameterInfeasible

__all__ = [
    "SchemeParams", "man_pda", "construction_one", "construction_two", "row_concat",
    "scheme_theorem_a", "scheme_theorem_b", "lae_epda",
]


def _wrap(i: int, K: int) -> int:
    r = i % K
    return r if r else K


def _binom(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0


@dataclass(frozen=True)
class SchemeParams:
    """System parameters ``(K, t, L)`` with optional Construction II index ``n``."""

    K: int
    t: int
    L: int
    n: int | None = None

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ParameterInfeasible(f"need K >= 1 and L >= 1, got K={self.K}, L={self.L}")
        if not 0 <= self.t <= self.K:
            raise ParameterInfeasible(f"need t in [0:K], got t={self.t}, K={self.K}")
        if self.n is not None and self.n < 2:
            raise ParameterInfeasible(f"need n >= 2, got n={self.n}")

    @property
    def gamma(self) -> int:
        return gcd(self.K, self.t, self.L)

    @property
    def reduced(self) -> tuple[int, int, int]:
        g = self.gamma
        return (self.K // g, self.t // g, self.L // g)

    @property
    def is_family_a(self) -> bool:
        return self.K == self.t + self.L

    def family_b_n(self) -> int | None:
        """The ``n >= 2`` with ``K = n t + (n-1) L`` and ``L >= t``, if any."""
        if self.L < self.t:
            return None
        if self.n is not None:
            ok = self.K == self.n * self.t + (self.n - 1) * self.L
            return self.n if ok else None
        # K + L = n (t + L)
        q, r = divmod(self.K + self.L, self.t + self.L)
        return q if r == 0 and q >= 2 else None


def _colex(K: int, size: int) -> list[tuple[int, ...]]:
    return sorted(combinations(range(1, K + 1), size), key=lambda c: c[::-1])


def man_pda(K: int, t: int) -> DeliveryArray:
    """The ``(t+1)``-regular MaN PDA with ``F = C(K,t)`` rows.

    Rows are the ``t``-subsets of ``[K]`` in colexicographic order; cell
    ``(T, k)`` is a star when ``k`` is in ``T`` and otherwise the 1-based
    colex rank of ``T + {k}`` among the ``(t+1)``-subsets.
    """
    if K < 1 or not 0 <= t <= K:
        raise ParameterInfeasible(f"need K >= 1 and t in [0:K], got K={K}, t={t}")
    rank = {c: i for i, c in enumerate(_colex(K, t + 1), start=1)}
    grid = []
    for T in _colex(K, t):
        members = set(T)
        grid.append(tuple(
            STAR if k in members else rank[tuple(sorted(members | {k}))]
            for k in range(1, K + 1)
        ))
    return DeliveryArray(K, 1, comb(K, t), _binom(K - 1, t - 1), _binom(K, t + 1), tuple(grid))


def _cyclic_stars(K: int, Z: int) -> list[list]:
    return [[STAR if (j - k) % K < Z else None for k in range(1, K + 1)] for j in range(1, K + 1)]


def construction_one(K: int, Z: int) -> DeliveryArray:
    """The ``K``-regular ``(K, K-Z, K, Z, K-Z)`` EPDA.

    Stars sit where ``(j - k) mod K < Z``; label ``s`` sits in column ``k``
    at row ``<Z + s + k - 1>_K``.
    """
    if not 1 <= Z <= K - 1:
        raise ParameterInfeasible(f"need 1 <= Z <= K-1, got K={K}, Z={Z}")
    grid = _cyclic_stars(K, Z)
    for k in range(1, K + 1):
        for s in range(1, K - Z + 1):
            j = _wrap(Z + s + k - 1, K)
            assert grid[j - 1][k - 1] is None
            grid[j - 1][k - 1] = s
    return DeliveryArray(K, K - Z, K, Z, K - Z, tuple(map(tuple, grid)))


def construction_two(K: int, Z: int, n: int) -> DeliveryArray:
    """The ``(Z+L)``-regular ``(K, L, K, Z, (n-1)K)`` EPDA, ``L = (K - nZ)/(n-1)``.

    Label ``s = pK + q`` (``p`` in ``[0, n-2]``, ``q`` in ``[1, K]``) fills
    ``L`` cells of one row and ``Z`` cells of another; the row pair and
    column offsets depend on the parity of ``p``.
    """
    if n < 2:
        raise ParameterInfeasible(f"need n >= 2, got n={n}")
    if Z < 1:
        raise ParameterInfeasible(f"need Z >= 1, got Z={Z}")
    if K < (2 * n - 1) * Z:
        raise ParameterInfeasible(f"need K >= (2n-1)Z, got {K} < {(2 * n - 1) * Z}")
    if (K - n * Z) % (n - 1):
        raise ParameterInfeasible(f"need (n-1) | (K-nZ), got K={K}, Z={Z}, n={n}")
    # K >= (2n-1)Z gives L >= Z >= 1
    L = (K - n * Z) // (n - 1)

    grid = _cyclic_stars(K, Z)

    def put(j: int, k: int, s: int) -> None:
        j, k = _wrap(j, K), _wrap(k, K)
        assert grid[j - 1][k - 1] is None, (j, k, s)
        grid[j - 1][k - 1] = s

    for p in range(n - 1):
        for q in range(1, K + 1):
            s = p * K + q
            if p % 2 == 0:
                shift = (p // 2) * (Z + L)
                for i in range(1, L + 1):
                    put(q, shift + q + i, s)
                for i in range(1, Z + 1):
                    put(shift + Z + q, q - Z + i, s)
            else:
                for i in range(1, Z + 1):
                    put(q, ((p - 1) // 2) * (Z + L) + L + q + i, s)
                for i in range(1, L + 1):
                    put(((p + 1) // 2) * (Z + L) + q, q - Z + i, s)
    assert all(e is not None for row in grid for e in row)
    return DeliveryArray(K, L, K, Z, (n - 1) * K, tuple(map(tuple, grid)))


def row_concat(A: DeliveryArray, u: int) -> DeliveryArray:
    """``[A | A | ... | A]`` (``u`` copies), declared ``(uK, uL, F, Z, S)``.

    Raises
    ------
    InvalidEpda
        If ``A`` is not a valid EPDA.
    """
    if u < 1:
        raise ParameterInfeasible(f"need u >= 1, got u={u}")
    report = verify_epda(A)
    if not report.passed:
        raise InvalidEpda(f"cannot concatenate an array failing {sorted(report.failed)}")
    if u == 1:
        return A
    return DeliveryArray(u * A.K, u * A.L, A.F, A.Z, A.S, concat_grids([A.grid] * u))


def scheme_theorem_a(K: int, t: int) -> DeliveryArray:
    """Full-DoF scheme for ``K = t + L`` with ``F = K / gcd(K, t, L)``.

    Construction I on the reduced parameters, then ``gamma``-fold row
    concatenation.
    """
    if not 1 <= t <= K - 1:
        raise ParameterInfeasible(f"need t in [1:K-1] so that L = K-t >= 1, got K={K}, t={t}")
    params = SchemeParams(K, t, K - t)
    K_, t_, _ = params.reduced
    return row_concat(construction_one(K_, t_), params.gamma)


def scheme_theorem_b(K: int, t: int, n: int) -> DeliveryArray:
    """Full-DoF scheme for ``K = n t + (n-1) L``, ``L >= t``, with ``F = K / gcd(K, t, L)``.

    Construction II on the reduced parameters, then ``gamma``-fold row
    concatenation. The delivery time is exactly ``n - 1``.
    """
    if n < 2:
        raise ParameterInfeasible(f"need n >= 2, got n={n}")
    if t < 1:
        raise ParameterInfeasible(f"need t >= 1, got t={t}")
    if (K - n * t) % (n - 1) or K - n * t < n - 1:
        raise ParameterInfeasible(
            f"need L = (K-nt)/(n-1) to be a positive integer, got K={K}, t={t}, n={n}")
    L = (K - n * t) // (n - 1)
    if L < t:
        raise ParameterInfeasible(f"need L >= t, got L={L}, t={t}")
    params = SchemeParams(K, t, L, n)
    K_, t_, _ = params.reduced
    return row_concat(construction_two(K_, t_, n), params.gamma)


def lae_epda(K: int, L: int, t: int) -> DeliveryArray:
    """``L``-fold row concatenation of the MaN PDA on ``(K/L, t/L)``."""
    if L < 1 or K % L or t % L:
        raise ParameterInfeasible(f"need L | K and L | t, got K={K}, L={L}, t={t}")
    if not 0 <= t <= K:
        raise ParameterInfeasible(f"need t in [0:K], got t={t}")
    return row_concat(man_pda(K // L, t // L), L)
