import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plspower.errors import InvalidInput, NotPSD, RankDeficient
from plspower.linalg import (
    orth_projector_complement,
    orthonormal_basis,
    project_out,
    spd_sqrt,
    svd,
    sym_eig,
)

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def matrices(max_side=6):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite)
    )


def test_svd_identity():
    U, S, V = svd(np.eye(2))
    assert np.allclose(S, [1, 1])
    assert np.allclose(U, np.eye(2)) and np.allclose(V, np.eye(2))


def test_svd_diagonal():
    assert np.allclose(svd(np.diag([3.0, 2.0])).S, [3, 2])


def test_svd_reconstructs_random(rng):
    M = rng.standard_normal((5, 3))
    U, S, V = svd(M)
    assert np.max(np.abs(U @ np.diag(S) @ V.T - M)) <= 1e-10


def test_svd_rejects_bad_input():
    with pytest.raises(InvalidInput):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(InvalidInput):
        svd(np.empty((0, 3)))


@given(matrices())
def test_svd_reconstruction_property(M):
    U, S, V = svd(M)
    norm = np.linalg.norm(M)
    if norm > 0:
        assert np.linalg.norm(M - U @ np.diag(S) @ V.T) / norm <= 1e-8
    assert np.all(np.diff(S) <= 1e-12 * max(1.0, S[0]))


@given(matrices())
def test_singular_values_match_gram_eigenvalues(M):
    S = svd(M).S
    values = sym_eig(M.T @ M).values[: S.size]
    scale = max(1.0, S[0] ** 2)
    assert np.allclose(S ** 2, values, atol=1e-8 * scale)


@given(matrices())
def test_svd_sign_convention_is_stable(M):
    a, b = svd(M), svd(M.copy())
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    # largest-magnitude entry of each right singular vector is non-negative
    idx = np.argmax(np.abs(a.V), axis=0)
    assert np.all(a.V[idx, np.arange(a.V.shape[1])] >= 0)


def test_sym_eig_examples():
    assert np.allclose(sym_eig(np.diag([4.0, 1.0])).values, [4, 1])
    # characteristic polynomial (2 - l)^2 - 1 = 0
    assert np.allclose(sym_eig([[2.0, 1.0], [1.0, 2.0]]).values, [3, 1])
    assert np.allclose(sym_eig(np.zeros((3, 3))).values, 0)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(InvalidInput):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidInput):
        sym_eig(np.ones((2, 3)))


def test_projector_of_first_basis_vector():
    Q = orth_projector_complement(np.eye(4)[:, :1])
    assert np.allclose(Q, np.diag([0.0, 1, 1, 1]))


def test_projector_annihilates_and_is_idempotent(rng):
    T = rng.standard_normal((8, 3))
    Q = orth_projector_complement(T)
    assert np.max(np.linalg.norm(Q @ T, axis=0)) <= 1e-10
    assert np.max(np.abs(Q @ Q - Q)) <= 1e-10


def test_projector_rank_deficient():
    T = np.ones((5, 2))
    with pytest.raises(RankDeficient):
        orthonormal_basis(T)


def test_project_out_matches_projector(rng):
    T = rng.standard_normal((9, 2))
    M = rng.standard_normal((9, 4))
    assert np.allclose(project_out(T, M), orth_projector_complement(T) @ M, atol=1e-12)


def test_spd_sqrt_examples(rng):
    assert np.allclose(spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    assert np.allclose(spd_sqrt(np.eye(3)), np.eye(3))
    A = rng.standard_normal((6, 4))
    M = A.T @ A
    R = spd_sqrt(M)
    assert np.max(np.abs(R @ R - M)) <= 1e-8
    assert np.array_equal(R, R.T)


def test_spd_sqrt_rejects_indefinite():
    with pytest.raises(NotPSD):
        spd_sqrt(np.diag([1.0, -1.0]))
