import numpy as np
import pytest
from hypothesis import given, strategies as st

from ttheat import tt_core
from ttheat.errors import BoundsError, InvalidInputError, ResourceError
from ttheat.tt_core import DenseField3, TTTensor3

from conftest import dense, random_tt

seeds = st.integers(0, 2**31 - 1)
rank = st.integers(1, 4)
size = st.integers(2, 9)


def unfolding_ranks(T, eps):
    n1, n2, n3 = T.shape
    tol = eps * np.linalg.norm(T)
    s1 = np.linalg.svd(T.reshape(n1, -1), compute_uv=False)
    s2 = np.linalg.svd(T.reshape(n1 * n2, -1), compute_uv=False)
    return int(np.sum(s1 > tol)), int(np.sum(s2 > tol))


# -- construction ---------------------------------------------------------------

def test_structure_is_validated():
    with pytest.raises(InvalidInputError):
        TTTensor3([np.ones((2, 3, 1)), np.ones((1, 3, 1)), np.ones((1, 3, 1))])
    with pytest.raises(InvalidInputError):
        TTTensor3([np.ones((1, 3, 2)), np.ones((3, 3, 1)), np.ones((1, 3, 1))])
    with pytest.raises(InvalidInputError):
        TTTensor3([np.ones((1, 3, 1)), np.full((1, 3, 1), np.nan), np.ones((1, 3, 1))])
    with pytest.raises(InvalidInputError):
        TTTensor3([np.ones((1, 3, 1))] * 2)
    with pytest.raises(InvalidInputError):
        TTTensor3([np.ones((1, 3, 1))] * 3, centering="edge")


def test_dense_field_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        DenseField3(np.full((2, 2, 2), np.inf))
    with pytest.raises(InvalidInputError):
        DenseField3(np.ones((2, 2)))


def test_cores_are_not_aliased(rng):
    c = [rng.standard_normal((1, 4, 2)), rng.standard_normal((2, 4, 2)), rng.standard_normal((2, 4, 1))]
    A = TTTensor3(c)
    c[0][0, 0, 0] = 99.0
    assert A.cores[0][0, 0, 0] != 99.0
    B = tt_core.scale(A, 1.0)
    assert all(not np.shares_memory(a, b) for a, b in zip(A.cores, B.cores))


def test_separable_sampling_has_rank_one():
    x = np.linspace(0, 1, 13)
    T = np.einsum("i,j,k->ijk", np.exp(x), np.cos(x), 1 + x ** 2)
    assert tt_core.build_from_full(T, 1e-12).ranks == (1, 1)


def test_zero_tensor_is_canonical():
    A = tt_core.build_from_full(np.zeros((5, 5, 5)), 0.0)
    assert A.ranks == (1, 1)
    assert all(np.all(c == 0) for c in A.cores)


def test_sine_of_sum_ranks_match_unfolding_oracle():
    x = np.linspace(0, 1, 20)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    for T in (np.sin(2 * np.pi * (X + Y)), np.sin(2 * np.pi * (X + Y + Z))):
        A = tt_core.build_from_full(T, 1e-12)
        assert A.ranks == unfolding_ranks(T, 1e-12 / np.sqrt(2))
    # sin(2pi(x+y)) does not depend on z, so the second separation has rank 1.
    assert tt_core.build_from_full(np.sin(2 * np.pi * (X + Y)), 1e-12).ranks == (2, 1)
    assert tt_core.build_from_full(np.sin(2 * np.pi * (X + Y + Z)), 1e-12).ranks == (2, 2)


@given(seeds, size, size, size)
def test_build_from_full_lossless(seed, n1, n2, n3):
    T = np.random.default_rng(seed).standard_normal((n1, n2, n3))
    A = tt_core.build_from_full(T, 0.0)
    assert np.linalg.norm(dense(A) - T) <= 1e-13 * np.linalg.norm(T) * 10


@given(seeds, st.floats(1e-6, 0.5), st.integers(1, 3))
def test_build_from_full_error_bound_and_cap(seed, eps, cap):
    rng = np.random.default_rng(seed)
    T = dense(random_tt(rng, (7, 6, 5), (3, 3))) + 1e-3 * rng.standard_normal((7, 6, 5))
    A = tt_core.build_from_full(T, eps)
    assert np.linalg.norm(dense(A) - T) <= eps * np.linalg.norm(T) * (1 + 1e-10)
    B = tt_core.build_from_full(T, eps, max_rank=cap)
    assert B.max_rank() <= cap
    assert B.rank_capped == (A.max_rank() > cap)


def test_build_rank1_examples():
    assert np.array_equal(dense(tt_core.build_rank1([1, 1], [1, 1], [1, 1])), np.ones((2, 2, 2)))
    A = tt_core.build_rank1([1, 2], [3], [4, 5])
    assert A.ranks == (1, 1)
    assert tt_core.eval(A, 1, 0, 1) == 30.0
    assert sorted(dense(A).ravel()) == [12, 15, 24, 30]
    with pytest.raises(InvalidInputError):
        tt_core.build_rank1([], [1], [1])


def test_build_rank1_matches_u1_sampling():
    x = np.linspace(0, 1, 21)
    s = np.sin(2 * np.pi * x)
    A = tt_core.build_rank1(s, s, s)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    ref = np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y) * np.sin(2 * np.pi * Z)
    assert np.max(np.abs(dense(A) - ref)) < 1e-15


# -- evaluation -------------------------------------------------------------------

def test_eval_matches_dense_and_checks_bounds(rng):
    A = random_tt(rng, (5, 6, 4), (3, 2))
    F = dense(A)
    assert tt_core.eval(A, 2, 4, 1) == pytest.approx(F[2, 4, 1], rel=1e-14)
    assert tt_core.eval(tt_core.zeros((3, 3, 3)), 1, 2, 0) == 0.0
    with pytest.raises(BoundsError):
        tt_core.eval(A, 5, 0, 0)
    with pytest.raises(BoundsError):
        tt_core.eval(A, 0, -1, 0)


def test_to_full_cap():
    A = tt_core.zeros((4, 4, 4))
    assert np.array_equal(dense(A), np.zeros((4, 4, 4)))
    with pytest.raises(ResourceError):
        tt_core.to_full(A, max_entries=63)


# -- algebra ---------------------------------------------------------------------

@given(seeds, rank, rank, rank, rank)
def test_add_is_exact_and_sums_ranks(seed, a1, a2, b1, b2):
    rng = np.random.default_rng(seed)
    A = random_tt(rng, ranks=(a1, a2))
    B = random_tt(rng, ranks=(b1, b2))
    S = tt_core.add(A, B)
    assert S.ranks == (a1 + b1, a2 + b2)
    ref = dense(A) + dense(B)
    assert np.linalg.norm(dense(S) - ref) <= 1e-13 * np.linalg.norm(ref)


def test_add_checks_shapes(rng):
    with pytest.raises(InvalidInputError):
        tt_core.add(random_tt(rng, (4, 4, 4)), random_tt(rng, (4, 4, 5)))
    with pytest.raises(InvalidInputError):
        tt_core.add(random_tt(rng, centering="cell"), random_tt(rng))


@given(seeds, st.floats(-10, 10, allow_nan=False, allow_subnormal=False))
def test_scale(seed, s):
    A = random_tt(np.random.default_rng(seed))
    B = tt_core.scale(A, s)
    assert B.ranks == A.ranks
    assert np.allclose(dense(B), s * dense(A), rtol=1e-14, atol=1e-14 * np.abs(dense(A)).max() * abs(s))


def test_scale_rejects_nonfinite(rng):
    with pytest.raises(InvalidInputError):
        tt_core.scale(random_tt(rng), np.inf)


def test_negation_cancels(rng):
    A = random_tt(rng)
    Z = tt_core.round(tt_core.add(A, tt_core.scale(A, -1.0)), 1e-12)
    assert Z.ranks == (1, 1)
    assert np.max(np.abs(dense(Z))) < 1e-12


@given(seeds)
def test_hadamard_rank1(seed):
    rng = np.random.default_rng(seed)
    A = random_tt(rng, (6, 7, 8))
    v = [rng.standard_normal(n) for n in (6, 7, 8)]
    H = tt_core.hadamard_rank1(A, *v)
    assert H.ranks == A.ranks
    ref = dense(A) * np.einsum("i,j,k->ijk", *v)
    assert np.max(np.abs(dense(H) - ref)) <= 1e-14 * np.max(np.abs(ref)) * 10


def test_hadamard_mask_and_identity(rng):
    A = random_tt(rng, (6, 5, 4))
    ones = [np.ones(n) for n in (6, 5, 4)]
    assert np.array_equal(dense(tt_core.hadamard_rank1(A, *ones)), dense(A))
    m = np.ones(6)
    m[[0, -1]] = 0
    H = dense(tt_core.hadamard_rank1(A, m, ones[1], ones[2]))
    assert np.all(H[[0, -1]] == 0)
    assert np.array_equal(H[1:-1], dense(A)[1:-1])
    with pytest.raises(InvalidInputError):
        tt_core.hadamard_rank1(A, np.ones(5), ones[1], ones[2])


@given(seeds, rank, rank)
def test_inner_and_norm(seed, r1, r2):
    rng = np.random.default_rng(seed)
    A = random_tt(rng, (10, 10, 10), (r1, r2))
    B = random_tt(rng, (10, 10, 10), (2, 3))
    ref = float(np.vdot(dense(A), dense(B)))
    assert tt_core.inner(A, B) == pytest.approx(ref, rel=1e-12, abs=1e-12 * np.linalg.norm(dense(A)) * np.linalg.norm(dense(B)))
    assert tt_core.norm(A) == pytest.approx(np.linalg.norm(dense(A)), rel=1e-12)


def test_inner_examples(rng):
    A = random_tt(rng)
    assert tt_core.inner(A, tt_core.zeros(A.mode_sizes)) == 0.0
    assert tt_core.norm(tt_core.build_rank1([3], [4], [1])) == pytest.approx(12.0)
    with pytest.raises(InvalidInputError):
        tt_core.inner(A, random_tt(rng, (8, 8, 7)))


# -- rounding --------------------------------------------------------------------

@given(seeds, st.floats(1e-8, 0.9), rank, rank)
def test_round_error_bound_and_monotone_ranks(seed, eps, r1, r2):
    rng = np.random.default_rng(seed)
    A = tt_core.add(random_tt(rng, ranks=(r1, r2)), tt_core.scale(random_tt(rng, ranks=(2, 2)), 1e-3))
    R = tt_core.round(A, eps)
    err = np.linalg.norm(dense(R) - dense(A))
    assert err <= eps * np.linalg.norm(dense(A)) * (1 + 1e-10)
    assert R.ranks[0] <= A.ranks[0] and R.ranks[1] <= A.ranks[1]


@given(seeds)
def test_round_of_doubled_tensor_keeps_ranks(seed):
    A = random_tt(np.random.default_rng(seed), ranks=(3, 2))
    R = tt_core.round(tt_core.add(A, A), 1e-12)
    assert R.ranks == A.ranks
    assert np.allclose(dense(R), 2 * dense(A), rtol=0, atol=1e-11 * np.abs(dense(A)).max())


@given(seeds, st.floats(1e-6, 1e-2))
def test_round_idempotent(seed, eps):
    A = random_tt(np.random.default_rng(seed), ranks=(4, 4))
    R1 = tt_core.round(A, eps)
    R2 = tt_core.round(R1, eps)
    assert R2.ranks == R1.ranks
    assert np.linalg.norm(dense(R2) - dense(R1)) <= 1e-10 * np.linalg.norm(dense(R1))


def test_round_drops_small_component():
    rng = np.random.default_rng(7)
    u = [np.linalg.qr(rng.standard_normal((6, 2)))[0] for _ in range(3)]
    big = tt_core.build_rank1(u[0][:, 0], u[1][:, 0], u[2][:, 0])
    small = tt_core.build_rank1(*(1e-6 ** (1 / 3) * v[:, 1] for v in u))
    A = tt_core.add(big, small)
    s = np.linalg.svd(dense(A).reshape(6, 36), compute_uv=False)
    assert s[1] / s[0] == pytest.approx(1e-6, rel=1e-6)
    R = tt_core.round(A, 1e-4)
    assert R.ranks == (1, 1)
    assert np.linalg.norm(dense(R) - dense(A)) <= 1e-4 * np.linalg.norm(dense(A))


def test_round_zero_and_cap(rng):
    Z = tt_core.TTTensor3([np.zeros((1, 4, 3)), np.zeros((3, 4, 3)), np.zeros((3, 4, 1))])
    assert tt_core.round(Z, 0.1).ranks == (1, 1)
    A = random_tt(rng, ranks=(4, 4))
    C = tt_core.round(A, 0.0, max_rank=2)
    assert C.max_rank() == 2 and C.rank_capped
    assert not tt_core.round(A, 0.0).rank_capped
    with pytest.raises(InvalidInputError):
        tt_core.round(A, -1.0)
    with pytest.raises(InvalidInputError):
        tt_core.round(A, 0.1, max_rank=0)


def test_operator_overloads(rng):
    A, B = random_tt(rng), random_tt(rng)
    assert np.allclose(dense(A - B), dense(A) - dense(B))
    assert np.allclose(dense(-A), -dense(A))
    assert np.allclose(dense(2.0 * A), 2 * dense(A))
    F = DenseField3(dense(A))
    assert np.allclose((F + F * 2.0 - F).data, 2 * dense(A))
