"""Noiseless MISO broadcast simulation of EPDA-based placement and delivery.

One round: draw a channel and a file library from a seed, fill caches from
the stars of the array, then for every integer ``s`` design one zero-forcing
precoder column per occurrence of ``s``, transmit the precoded sum, and let
each addressed user strip its cached interference and rescale.

User channels are the rows of ``ChannelMatrix.gains`` (shape ``K x L``), so a
user receives ``gains[k] @ x`` (plain transpose, no conjugation).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .array import DeliveryArray, VerificationReport, is_star, occurrences, verify_epda
from .errors import DecodeFailure, DegenerateChannel, InvalidEpda, ParameterInfeasible, ShapeMismatch

log = logging.getLogger(__name__)

EPS_RANK = 1e-8
EPS_ORTH = 1e-10
EPS_GEN = 1e-6
EPS_DECODE = 1e-6

RNG_NAME = "numpy.random.PCG64/SeedSequence"
MAX_REDRAWS = 16
# exhaustive genericity checks stop at this many row subsets; larger systems
# are checked on a seeded sample of the same size
GENERICITY_BUDGET = 64

_CHANNEL, _LIBRARY, _NOISE, _SAMPLE = range(4)

# unnormalized 16-QAM: Gaussian integers, exactly representable
QAM16 = np.array([a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)])


def _rng(seed: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(purpose,))))


@dataclass(frozen=True)
class ChannelMatrix:
    gains: np.ndarray
    seed: int

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def L(self) -> int:
        return self.gains.shape[1]


def _row_subsets(K: int, m: int, seed: int):
    total = comb(K, m)
    if total <= GENERICITY_BUDGET:
        return np.array(list(combinations(range(K), m)), dtype=int)
    rng = _rng(seed, _SAMPLE)
    return np.sort(np.argsort(rng.random((GENERICITY_BUDGET, K)), axis=1)[:, :m], axis=1)


def is_generic(gains: np.ndarray, seed: int = 0) -> bool:
    """True iff every set of up to ``L`` rows is linearly independent (at ``EPS_RANK``).

    Independence of all ``min(K, L)``-subsets implies it for smaller ones.
    """
    K, L = gains.shape
    subsets = _row_subsets(K, min(K, L), seed)
    sv = np.linalg.svd(gains[subsets], compute_uv=False)
    return bool(sv[:, -1].min() > EPS_RANK)


def generate_channel(K: int, L: int, seed: int) -> ChannelMatrix:
    """Draw ``K`` i.i.d. CN(0, 1) channel vectors of length ``L``.

    Draws are repeated from the same stream until the realization is
    generic, at most ``MAX_REDRAWS`` times.
    """
    if not K >= L >= 1:
        raise ParameterInfeasible(f"need K >= L >= 1, got K={K}, L={L}")
    rng = _rng(seed, _CHANNEL)
    for _ in range(MAX_REDRAWS):
        gains = (rng.standard_normal((K, L)) + 1j * rng.standard_normal((K, L))) / np.sqrt(2)
        if is_generic(gains, seed):
            return ChannelMatrix(gains, seed)
        log.info("seed %d: non-generic channel draw, redrawing", seed)
    raise DegenerateChannel(f"no generic {K}x{L} channel after {MAX_REDRAWS} draws (seed {seed})")


@dataclass(frozen=True)
class FileLibrary:
    """``N`` files of ``F`` subfiles, each ``P`` 16-QAM symbols; ``payload[n-1, j-1]``."""

    payload: np.ndarray
    seed: int

    @property
    def N(self) -> int:
        return self.payload.shape[0]

    @property
    def F(self) -> int:
        return self.payload.shape[1]

    @property
    def P(self) -> int:
        return self.payload.shape[2]

    def subfile(self, n: int, j: int) -> np.ndarray:
        return self.payload[n - 1, j - 1]


def generate_library(N: int, F: int, P: int, seed: int) -> FileLibrary:
    rng = _rng(seed, _LIBRARY)
    return FileLibrary(QAM16[rng.integers(0, len(QAM16), size=(N, F, P))], seed)


def hard_decision(symbols: np.ndarray) -> np.ndarray:
    """Map each symbol to the nearest 16-QAM point."""
    return QAM16[np.abs(np.asarray(symbols)[..., None] - QAM16).argmin(axis=-1)]


def validate_demands(d: Sequence[int], K: int, N: int) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != K:
        raise ParameterInfeasible(f"demand vector has {len(d)} entries, need K={K}")
    bad = [x for x in d if not 1 <= x <= N]
    if bad:
        raise ParameterInfeasible(f"demands {bad} fall outside [1, {N}]")
    return d


@dataclass(frozen=True)
class CacheContents:
    """Cached subfile rows of every user; the same rows for all ``N`` files."""

    rows: tuple[frozenset[int], ...]

    def fetch(self, lib: FileLibrary, user: int, n: int, j: int) -> np.ndarray:
        if j not in self.rows[user - 1]:
            raise KeyError(f"user {user} has not cached subfile row {j}")
        return lib.subfile(n, j)


def place(A: DeliveryArray, lib: FileLibrary) -> CacheContents:
    """User ``k`` caches row ``j`` of every file iff cell ``(j, k)`` is a star."""
    if lib.F != A.F:
        raise ShapeMismatch(f"library has F={lib.F} subfiles, array has F={A.F} rows")
    return CacheContents(tuple(
        frozenset(j for j, e in enumerate(A.column(k), start=1) if is_star(e))
        for k in range(1, A.K + 1)
    ))


@dataclass(frozen=True)
class OccurrenceContext:
    """Occurrences ``(row, col)`` of ``s`` in column order, with interference sets.

    ``interference[i]`` holds the other occurrence columns that see a label
    in row ``occurrences[i][0]``: those users lack the subfile carried by
    precoder column ``i`` and must have it zero-forced away.
    """

    s: int
    occurrences: tuple[tuple[int, int], ...]
    interference: tuple[frozenset[int], ...]


def occurrence_context(A: DeliveryArray, s: int, _occ=None) -> OccurrenceContext:
    cells = tuple(sorted((_occ or occurrences(A))[s], key=lambda c: c[1]))
    cols = [k for _, k in cells]
    sets = []
    for j, k in cells:
        B = frozenset(b for b in cols if b != k and not is_star(A.entry(j, b)))
        if len(B) > A.L - 1:
            raise InvalidEpda(f"integer {s}: {len(B)} interferers at ({j},{k}) exceed L-1={A.L - 1}")
        sets.append(B)
    return OccurrenceContext(s, cells, tuple(sets))


@dataclass(frozen=True)
class PrecodingMatrix:
    """Unit-norm precoder columns for integer ``s``; ``columns[:, i]`` serves occurrence ``i``."""

    s: int
    columns: np.ndarray
    context: OccurrenceContext
    residual: float


def nullspace_directions(rows: np.ndarray) -> np.ndarray:
    """Zero-forcing directions for a batch of interference sets.

    ``rows`` has shape ``(n, m, L)``: ``n`` sets of ``m`` channel vectors.
    For each set, the conjugated vectors are orthonormalized (Householder
    QR) and the canonical vectors ``e_1, e_2, ...`` are projected onto the
    orthogonal complement; the first one that survives, normalized, is
    returned. Output shape ``(n, L)``, satisfying ``rows[i] @ v[i] == 0``.

    The complement is spanned by the trailing ``L - m`` columns ``Q_c`` of
    the complete QR factor, so the projection of ``e_i`` is
    ``Q_c conj(Q_c[i])`` and its norm is that of row ``i`` of ``Q_c``.
    """
    n, m, L = rows.shape
    if m == 0:
        return np.broadcast_to(np.eye(L, dtype=complex)[0], (n, L)).copy()
    if m >= L:
        raise DegenerateChannel(f"{m} zero-forcing constraints leave no free direction in C^{L}")
    Q, R = np.linalg.qr(np.conj(rows).transpose(0, 2, 1), mode="complete")
    if np.abs(np.diagonal(R, axis1=1, axis2=2)).min() <= EPS_RANK:
        raise DegenerateChannel("interfering channel vectors are linearly dependent")
    Qc = Q[:, :, m:]
    norms = np.linalg.norm(Qc, axis=2)
    alive = norms > EPS_RANK
    if not alive.any(axis=1).all():
        raise DegenerateChannel("zero-forcing constraints leave no free direction")
    first = alive.argmax(axis=1)
    idx = np.arange(n)
    v = np.einsum("nlc,nc->nl", Qc, np.conj(Qc[idx, first]))
    return v / norms[idx, first][:, None]


def _check_columns(s: int, ctx: OccurrenceContext, V: np.ndarray, H: ChannelMatrix) -> float:
    own = np.abs(np.einsum("il,li->i", H.gains[[k - 1 for _, k in ctx.occurrences]], V))
    bad = np.flatnonzero(own <= EPS_GEN)
    if bad.size:
        k = ctx.occurrences[bad[0]][1]
        raise DegenerateChannel(f"integer {s}: precoder for user {k} is orthogonal to h_{k}")
    residual = 0.0
    for i, B in enumerate(ctx.interference):
        if B:
            idx = sorted(b - 1 for b in B)
            residual = max(residual, float(np.abs(H.gains[idx] @ V[:, i]).max()))
    if residual > EPS_ORTH:
        raise DegenerateChannel(f"integer {s}: zero-forcing residual {residual:.3g} > {EPS_ORTH}")
    return residual


def design_precoder(A: DeliveryArray, s: int, H: ChannelMatrix) -> PrecodingMatrix:
    """Zero-forcing precoder for the transmission of integer ``s``.

    Raises
    ------
    DegenerateChannel
        If a column is (numerically) orthogonal to its own user's channel.
    InvalidEpda
        If some interference set exceeds ``L - 1``.
    """
    ctx = occurrence_context(A, s)
    V = np.column_stack([nullspace_directions(H.gains[sorted(b - 1 for b in B)][None])[0]
                         for B in ctx.interference])
    return PrecodingMatrix(s, V, ctx, _check_columns(s, ctx, V, H))


def slot_payload(V: PrecodingMatrix, d: Sequence[int], lib: FileLibrary) -> np.ndarray:
    """Stack ``W[d_k, j]`` over the occurrences ``(j, k)`` of the slot, shape ``g x P``."""
    return np.stack([lib.subfile(d[k - 1], j) for j, k in V.context.occurrences])


def transmit(V: PrecodingMatrix, d: Sequence[int], lib: FileLibrary, H: ChannelMatrix,
             noise: np.ndarray | None = None) -> np.ndarray:
    """Received streams of all ``K`` users for one slot, shape ``K x P``."""
    x = V.columns @ slot_payload(V, d, lib)
    y = H.gains @ x
    if noise is not None:
        y = y + noise
    return y


def decode(k: int, y: np.ndarray, V: PrecodingMatrix, A: DeliveryArray, H: ChannelMatrix,
           d: Sequence[int], caches: CacheContents, lib: FileLibrary) -> np.ndarray | None:
    """Recover user ``k``'s subfile from its received stream ``y``.

    Returns ``None`` when ``k`` is not addressed in this slot. Occurrences
    whose row ``k`` has cached are cancelled with known coefficients; the
    rest are assumed zero-forced (checked against ``EPS_ORTH``).
    """
    occ = V.context.occurrences
    own = next((i for i, (_, kk) in enumerate(occ) if kk == k), None)
    if own is None:
        return None
    h = H.gains[k - 1]
    gains = h @ V.columns
    r = np.array(y, dtype=complex)
    for i, (j, ki) in enumerate(occ):
        if i == own:
            continue
        if is_star(A.entry(j, k)):
            r = r - gains[i] * caches.fetch(lib, k, d[ki - 1], j)
        elif abs(gains[i]) > EPS_ORTH:
            raise DegenerateChannel(
                f"integer {V.s}: user {k} sees uncached interferer {ki} at gain {abs(gains[i]):.3g}")
    return r / gains[own]


@dataclass
class SimulationReport:
    K: int
    F: int
    Z: int
    S: int
    seed: int
    N: int
    P: int
    demands: tuple[int, ...]
    slots_used: int
    achieved_dof: Fraction | None
    max_orth_residual: float
    per_user_errors: dict[int, dict[int, float]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((e for errs in self.per_user_errors.values() for e in errs.values()), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_rel_error <= EPS_DECODE

    @property
    def delivery_time(self) -> Fraction:
        return Fraction(self.slots_used, self.F)

    def to_dict(self) -> dict:
        return {
            "slots": self.slots_used,
            "dof": None if self.achieved_dof is None else str(self.achieved_dof),
            "delivery_time": str(self.delivery_time),
            "max_rel_error": self.max_rel_error,
            "max_orth_residual": self.max_orth_residual,
            "pass": self.passed,
            "seed": self.seed,
            "N": self.N,
            "P": self.P,
            "demands": list(self.demands),
            "failures": list(self.failures),
            "per_user": [
                {"user": k, "demand": self.demands[k - 1],
                 "rows": sorted(errs), "errors": [errs[j] for j in sorted(errs)]}
                for k, errs in sorted(self.per_user_errors.items())
            ],
        }


@dataclass(frozen=True)
class _Slot:
    ctx: OccurrenceContext
    rows: np.ndarray      # 0-based subfile row per occurrence
    users: np.ndarray     # 0-based user per occurrence
    sets: np.ndarray      # index of each occurrence's interference set in _Plan.sets
    cached: np.ndarray    # cached[i, i2]: user of occurrence i holds the subfile of occurrence i2
    nulled: np.ndarray    # off-diagonal gains that zero-forcing must remove


@dataclass(frozen=True)
class _Plan:
    report: VerificationReport
    slots: tuple[_Slot, ...]
    sets: tuple[frozenset[int], ...]
    needed: tuple[frozenset[int], ...]


@lru_cache(maxsize=32)
def _plan(A: DeliveryArray) -> _Plan:
    """Channel-independent bookkeeping of a round, shared by every seed."""
    report = verify_epda(A)
    if not report.passed:
        return _Plan(report, (), (), ())
    occ = occurrences(A)
    stars = np.array([[is_star(e) for e in r] for r in A.grid])
    contexts = [occurrence_context(A, s, occ) for s in range(1, A.S + 1)]
    sets = sorted({B for c in contexts for B in c.interference}, key=lambda B: (len(B), sorted(B)))
    index = {B: i for i, B in enumerate(sets)}
    slots = []
    for ctx in contexts:
        rows = np.array([j - 1 for j, _ in ctx.occurrences])
        users = np.array([k - 1 for _, k in ctx.occurrences])
        cached = stars[rows[None, :], users[:, None]]
        nulled = ~cached & ~np.eye(len(rows), dtype=bool)
        slots.append(_Slot(ctx, rows, users, np.array([index[B] for B in ctx.interference]),
                           cached, nulled))
    needed = tuple(frozenset(np.flatnonzero(~stars[:, k]) + 1) for k in range(A.K))
    return _Plan(report, tuple(slots), tuple(sets), needed)


def _directions(H: ChannelMatrix, sets: Sequence[frozenset[int]]) -> np.ndarray:
    """Columns ``D[:, i]`` zero-forcing ``sets[i]``, batched by set size."""
    D = np.empty((H.L, len(sets)), dtype=complex)
    start = 0
    while start < len(sets):
        m = len(sets[start])
        stop = start
        while stop < len(sets) and len(sets[stop]) == m:
            stop += 1
        idx = np.array([sorted(sets[i]) for i in range(start, stop)], dtype=int).reshape(stop - start, m) - 1
        D[:, start:stop] = nullspace_directions(H.gains[idx]).T
        start = stop
    return D


def run_round(A: DeliveryArray, seed: int, d: Sequence[int], N: int, P: int = 8,
              strict: bool = True, noise_std: float = 0.0) -> SimulationReport:
    """Simulate placement and the full delivery phase for one demand vector.

    Slots are processed in order ``s = 1..S``. Within a slot, all addressed
    users decode at once: the same arithmetic as :func:`decode`, batched.
    The zero-forcing residuals ``|h_b^T v_i|`` are exactly the gains of the
    slot's uncached off-diagonal pairs.

    Parameters
    ----------
    strict : bool
        Raise :class:`DecodeFailure` on the first subfile decoded outside
        ``EPS_DECODE`` (or never delivered). Otherwise record the failure in
        the report.
    noise_std : float
        Per-component standard deviation of additive receiver noise. Zero
        (the default) gives the noiseless model all guarantees refer to.
    """
    plan = _plan(A)
    if not plan.report.passed:
        raise InvalidEpda(f"array fails {sorted(plan.report.failed)}")
    d = validate_demands(d, A.K, N)
    H = generate_channel(A.K, A.L, seed)
    lib = generate_library(N, A.F, P, seed)
    noise_rng = _rng(seed, _NOISE)
    demand_idx = np.array(d) - 1

    errors: dict[int, dict[int, float]] = {k: {} for k in range(1, A.K + 1)}
    failures: list[str] = []

    def fail(msg, slot, user):
        if strict:
            raise DecodeFailure(msg, slot=slot, user=user)
        failures.append(msg)

    D = _directions(H, plan.sets)
    residual = 0.0
    for s, slot in enumerate(plan.slots, start=1):
        V = D[:, slot.sets]
        W = lib.payload[demand_idx[slot.users], slot.rows]
        Hs = H.gains[slot.users]
        y = Hs @ (V @ W)
        if noise_std:
            y = y + noise_std * (noise_rng.standard_normal(y.shape) + 1j * noise_rng.standard_normal(y.shape))
        G = Hs @ V
        own = np.abs(np.diag(G))
        if own.min() <= EPS_GEN:
            k = slot.ctx.occurrences[int(own.argmin())][1]
            raise DegenerateChannel(f"integer {s}: precoder for user {k} is orthogonal to h_{k}")
        if slot.nulled.any():
            leak = float(np.abs(G[slot.nulled]).max())
            if leak > EPS_ORTH:
                raise DegenerateChannel(f"integer {s}: zero-forcing residual {leak:.3g} > {EPS_ORTH}")
            residual = max(residual, leak)
        w_hat = (y - np.where(slot.cached, G, 0) @ W) / np.diag(G)[:, None]
        rel = np.linalg.norm(w_hat - W, axis=1) / np.linalg.norm(W, axis=1)
        for (j, k), err in zip(slot.ctx.occurrences, rel.tolist()):
            errors[k][j] = err
            if err > EPS_DECODE:
                fail(f"slot {s}: user {k} row {j} relative error {err:.3g}", s, k)

    for k in range(1, A.K + 1):
        missing = plan.needed[k - 1] - set(errors[k])
        if missing:
            fail(f"user {k}: rows {sorted(missing)} never delivered", None, k)

    g = plan.report.regularity
    dof = Fraction(A.K * (A.F - A.Z), A.S) if g is not None else None
    return SimulationReport(A.K, A.F, A.Z, A.S, seed, N, P, d, A.S, dof, residual, errors, failures)
