from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epda import (
    STAR, DecodeFailure, DegenerateChannel, DeliveryArray, InvalidEpda, ParameterInfeasible,
    ShapeMismatch, construction_one, construction_two, man_pda, metrics, row_concat,
    scheme_theorem_a, scheme_theorem_b,
)
from epda.sim import (
    EPS_ORTH, EPS_RANK, QAM16, ChannelMatrix, decode, design_precoder, generate_channel,
    generate_library, hard_decision, is_generic, nullspace_directions, place, run_round,
    slot_payload, transmit, validate_demands, occurrence_context,
)
from fixtures import K4L2, K4L3, K17L3, REFERENCE_ARRAYS, TRIANGLE
from oracles import pda_deliver

DISTINCT = (1, 2, 3, 4)


# -- channel and library ---------------------------------------------------

def test_channel_rank():
    H = generate_channel(4, 2, seed=7)
    assert H.gains.shape == (4, 2)
    for rows in combinations(range(4), 2):
        assert np.linalg.matrix_rank(H.gains[list(rows)], tol=EPS_RANK) == 2


def test_scalar_channel():
    H = generate_channel(1, 1, seed=0)
    assert H.gains.shape == (1, 1) and H.gains[0, 0] != 0


def test_channel_is_deterministic():
    a, b = generate_channel(5, 3, 11), generate_channel(5, 3, 11)
    assert np.array_equal(a.gains, b.gains)
    assert not np.array_equal(a.gains, generate_channel(5, 3, 12).gains)


def test_channel_rejects_shape():
    with pytest.raises(ParameterInfeasible):
        generate_channel(2, 3, 0)


def test_degenerate_channel_detected():
    assert not is_generic(np.ones((3, 2), dtype=complex))
    assert is_generic(np.eye(3, dtype=complex)[:, :2] + np.array([[0, 0], [0, 0], [1, 1]]))


def test_channel_statistics():
    g = generate_channel(400, 4, 3).gains
    assert abs(np.mean(np.abs(g) ** 2) - 1) < 0.1
    assert abs(np.mean(g)) < 0.1


def test_library_is_exact_qam():
    lib = generate_library(3, 4, 8, seed=5)
    assert lib.payload.shape == (3, 4, 8)
    assert np.isin(lib.payload, QAM16).all()
    assert np.array_equal(lib.payload, generate_library(3, 4, 8, seed=5).payload)
    noisy = lib.payload + 0.3 * (1 + 1j)
    assert np.array_equal(hard_decision(noisy), lib.payload)


def test_demand_validation():
    assert validate_demands([1, 2], 2, 2) == (1, 2)
    with pytest.raises(ParameterInfeasible):
        validate_demands([1, 2, 3], 2, 3)
    with pytest.raises(ParameterInfeasible):
        validate_demands([1, 4], 2, 3)


# -- placement -------------------------------------------------------------

def test_place_diagonal_stars():
    lib = generate_library(4, 4, 2, 0)
    caches = place(K4L2, lib)
    assert caches.rows == tuple(frozenset({k}) for k in range(1, 5))
    c = place(TRIANGLE, generate_library(3, 3, 2, 0))
    assert c.rows == (frozenset({1}), frozenset({2}), frozenset({3}))


def test_place_full_cache():
    A = DeliveryArray(2, 1, 2, 2, 0, ((STAR, STAR), (STAR, STAR)))
    assert place(A, generate_library(2, 2, 1, 0)).rows == (frozenset({1, 2}),) * 2


def test_place_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        place(K4L2, generate_library(4, 3, 2, 0))


def test_cache_fetch_refuses_uncached():
    lib = generate_library(4, 4, 2, 0)
    caches = place(K4L2, lib)
    assert np.array_equal(caches.fetch(lib, 2, 3, 2), lib.subfile(3, 2))
    with pytest.raises(KeyError):
        caches.fetch(lib, 2, 3, 1)


# -- precoding -------------------------------------------------------------

def test_interference_sets_first_slot():
    ctx = occurrence_context(K4L2, 1)
    assert ctx.occurrences == ((2, 1), (1, 2), (1, 3))
    assert ctx.interference == (frozenset({3}), frozenset({3}), frozenset({2}))


def test_precoder_first_slot_orthogonality():
    H = generate_channel(4, 2, 3)
    V = design_precoder(K4L2, 1, H)
    h = H.gains
    assert abs(h[2] @ V.columns[:, 0]) <= EPS_ORTH
    assert abs(h[2] @ V.columns[:, 1]) <= EPS_ORTH
    assert abs(h[1] @ V.columns[:, 2]) <= EPS_ORTH
    assert np.allclose(np.linalg.norm(V.columns, axis=0), 1, atol=EPS_ORTH)


def test_precoder_residual_third_slot():
    V = design_precoder(K4L2, 3, generate_channel(4, 2, 42))
    assert V.residual <= 1e-10


def test_single_antenna_precoder_is_one():
    P = man_pda(3, 1)
    V = design_precoder(P, 2, generate_channel(3, 1, 0))
    assert np.array_equal(V.columns, np.ones((1, 2)))


def test_nullspace_directions_batch():
    rng = np.random.default_rng(0)
    rows = rng.standard_normal((6, 2, 4)) + 1j * rng.standard_normal((6, 2, 4))
    V = nullspace_directions(rows)
    assert V.shape == (6, 4)
    assert np.abs(np.einsum("nml,nl->nm", rows, V)).max() < 1e-12
    assert np.allclose(np.linalg.norm(V, axis=1), 1)


def test_nullspace_is_canonical_completion():
    # orthogonal to e_1: the first surviving canonical direction is e_2
    V = nullspace_directions(np.array([[[1, 0, 0]]], dtype=complex))
    assert np.allclose(V[0], [0, 1, 0])


def test_nullspace_rejects_dependent_rows():
    with pytest.raises(DegenerateChannel):
        nullspace_directions(np.array([[[1, 1], [2, 2]]], dtype=complex))


def test_precoder_rejects_crowded_rows():
    A = DeliveryArray(3, 1, 3, 1, 2, TRIANGLE.grid)
    with pytest.raises(InvalidEpda):
        design_precoder(A, 1, generate_channel(3, 1, 0))


def test_precoder_orthogonal_own_channel():
    # h_3 is parallel to h_2, so zero-forcing h_3 also kills user 2
    gains = np.array([[1, 0.3], [1, 2], [2, 4]], dtype=complex)
    with pytest.raises(DegenerateChannel):
        design_precoder(TRIANGLE, 1, ChannelMatrix(gains, 0))


# -- transmit and decode ---------------------------------------------------

FIRST_SLOTS = {1: ((1, 2), (2, 1), (3, 1)), 2: ((2, 3), (3, 2), (4, 2)),
               3: ((1, 3), (3, 4), (4, 3)), 4: ((1, 4), (2, 4), (4, 1))}


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_payload_tuples(s):
    lib = generate_library(4, 4, 3, 0)
    V = design_precoder(K4L2, s, generate_channel(4, 2, 0))
    got = slot_payload(V, DISTINCT, lib)
    want = np.stack([lib.subfile(n, j) for n, j in FIRST_SLOTS[s]])
    assert np.array_equal(got, want)


def _slot(A, s, seed, d, N, P=4):
    H = generate_channel(A.K, A.L, seed)
    lib = generate_library(N, A.F, P, seed)
    V = design_precoder(A, s, H)
    return H, lib, V, place(A, lib), transmit(V, d, lib, H)


def test_decode_without_side_information():
    H, lib, V, caches, y = _slot(K4L2, 1, 5, DISTINCT, 4)
    got = decode(3, y[2], V, K4L2, H, DISTINCT, caches, lib)
    assert np.allclose(got, lib.subfile(3, 1), atol=1e-9)


def test_decode_with_side_information():
    H, lib, V, caches, y = _slot(K4L2, 1, 5, DISTINCT, 4)
    got = decode(2, y[1], V, K4L2, H, DISTINCT, caches, lib)
    assert np.allclose(got, lib.subfile(2, 1), atol=1e-9)


def test_decode_not_addressed():
    H, lib, V, caches, y = _slot(K4L2, 1, 5, DISTINCT, 4)
    assert decode(4, y[3], V, K4L2, H, DISTINCT, caches, lib) is None


def test_single_occurrence_slot_is_a_scaled_copy():
    A = DeliveryArray(2, 1, 2, 1, 2, ((STAR, 1), (2, STAR)))
    H, lib, V, caches, y = _slot(A, 1, 0, (1, 2), 2)
    assert np.allclose(y[1], (H.gains[1] @ V.columns[:, 0]) * lib.subfile(2, 1))


@pytest.mark.parametrize("name", sorted(REFERENCE_ARRAYS))
def test_per_user_decode_matches_batched_round(name):
    A = REFERENCE_ARRAYS[name]
    seed, N = 9, A.K
    d = tuple(range(1, A.K + 1))
    H = generate_channel(A.K, A.L, seed)
    lib = generate_library(N, A.F, 8, seed)
    caches = place(A, lib)
    worst = 0.0
    for s in range(1, A.S + 1):
        V = design_precoder(A, s, H)
        y = transmit(V, d, lib, H)
        for j, k in V.context.occurrences:
            w = decode(k, y[k - 1], V, A, H, d, caches, lib)
            W = lib.subfile(d[k - 1], j)
            worst = max(worst, np.linalg.norm(w - W) / np.linalg.norm(W))
    rep = run_round(A, seed, d, N)
    assert rep.passed
    assert worst <= 1e-6
    assert rep.max_rel_error == pytest.approx(worst, rel=1e-3, abs=1e-13)


# -- full rounds -----------------------------------------------------------

def test_round_two_antenna_fixture():
    rep = run_round(K4L2, 1, DISTINCT, 4)
    assert rep.passed
    assert rep.slots_used == 4
    assert rep.achieved_dof == 3
    assert rep.delivery_time == metrics(K4L2).delivery_time
    assert rep.max_orth_residual <= 1e-10


def test_round_equal_demands_single_slot():
    A = scheme_theorem_a(4, 2)
    rep = run_round(A, 0, (1, 1, 1, 1), 1)
    assert rep.passed and rep.slots_used == 1 == A.S


def test_round_single_antenna():
    rep = run_round(man_pda(3, 1), 4, (1, 2, 3), 3)
    assert rep.passed and rep.achieved_dof == 2


def test_round_report_dict():
    d = run_round(K4L2, 1, DISTINCT, 4).to_dict()
    assert d["slots"] == 4 and d["dof"] == "3" and d["pass"] is True
    assert [u["rows"] for u in d["per_user"]] == [[2, 3, 4], [1, 3, 4], [1, 2, 4], [1, 2, 3]]


def test_round_rejects_invalid_array():
    with pytest.raises(InvalidEpda):
        run_round(TRIANGLE.with_entry(3, 1, 1), 0, (1, 2, 3), 3)


def test_noise_hook_degrades_gracefully():
    quiet = run_round(K4L2, 2, DISTINCT, 4, P=64)
    noisy = run_round(K4L2, 2, DISTINCT, 4, P=64, strict=False, noise_std=1e-3)
    assert quiet.passed
    assert not noisy.passed
    assert noisy.failures
    assert noisy.max_rel_error < 0.1


def test_strict_noise_raises_with_slot():
    with pytest.raises(DecodeFailure) as exc:
        run_round(K4L2, 2, DISTINCT, 4, noise_std=1e-2)
    assert exc.value.slot == 1 and exc.value.user is not None


def test_round_without_caches():
    # Z = 0: both users are served in one slot purely by zero-forcing
    B = DeliveryArray(2, 2, 1, 0, 1, ((1, 1),))
    rep = run_round(B, 0, (1, 2), 2)
    assert rep.passed and rep.max_orth_residual <= 1e-10


def test_rounds_are_reproducible():
    a = run_round(K17L3, 3, tuple(range(1, 18)), 17).to_dict()
    b = run_round(K17L3, 3, tuple(range(1, 18)), 17).to_dict()
    assert a == b


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_any_seed_three_antenna_fixture(seed):
    rep = run_round(K4L3, seed, DISTINCT, 4)
    assert rep.passed and rep.max_orth_residual <= 1e-10


def _schemes(Kmax):
    out = {}
    for K in range(2, Kmax + 1):
        for t in range(1, K):
            out[f"a{K}-{t}"] = lambda K=K, t=t: scheme_theorem_a(K, t)
        for n in (2, 3, 4):
            for t in range(1, K):
                if (K - n * t) % (n - 1) == 0 and (K - n * t) // (n - 1) >= t:
                    out[f"b{K}-{t}-{n}"] = lambda K=K, t=t, n=n: scheme_theorem_b(K, t, n)
    return out


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(_schemes(24)))
def test_sweep_generated_schemes(name):
    A = _schemes(24)[name]()
    for d in (tuple(range(1, A.K + 1)), (1,) * A.K):
        for seed in range(100):
            rep = run_round(A, seed, d, A.K)
            assert rep.passed, rep.failures
            assert rep.max_orth_residual <= 1e-10
            assert rep.slots_used == A.S


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(REFERENCE_ARRAYS))
def test_sweep_reference_arrays(name):
    A = REFERENCE_ARRAYS[name]
    for d in (tuple(range(1, A.K + 1)), (1,) * A.K):
        for seed in range(100):
            assert run_round(A, seed, d, A.K).passed


# -- single-antenna oracle -------------------------------------------------

@pytest.mark.parametrize("K,t", [(3, 1), (4, 1), (4, 2), (5, 2)])
def test_single_antenna_matches_sum_oracle(K, t):
    P = man_pda(K, t)
    seed, d = 13, tuple(range(1, K + 1))
    H = generate_channel(K, 1, seed)
    lib = generate_library(K, P.F, 8, seed)
    caches = place(P, lib)
    want, sent = pda_deliver(P, lib.payload.tolist(), d)
    for s in range(1, P.S + 1):
        V = design_precoder(P, s, H)
        assert {(d[k - 1], j) for j, k in V.context.occurrences} == sent[s]
        y = transmit(V, d, lib, H)
        for j, k in V.context.occurrences:
            got = hard_decision(decode(k, y[k - 1], V, P, H, d, caches, lib))
            assert got.tolist() == want[(k, j)]
