"""Dense factorizations with a fixed sign convention.

Every eigen/singular vector is flipped so that its entry of largest magnitude
is non-negative.  Downstream weights, scores and p-values are therefore
reproducible bit for bit on identical input.
"""

from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, NotPSD, RankDeficient

RANK_TOL = 1e-12
PSD_TOL = 1e-10
SYM_TOL = 1e-10


class SvdResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


class EigResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D float array or raise InvalidInput."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return A


def _sign_flip(V):
    # column-wise: make the largest-|.| entry non-negative
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def svd(M):
    """Thin SVD ``M = U diag(S) V^T`` with S descending."""
    A = as_matrix(M)
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    V = Vt.T
    signs = _sign_flip(V)
    return SvdResult(U * signs, S, V * signs)


def sym_eig(M):
    """All eigenpairs of a symmetric matrix, values descending."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise InvalidInput(f"sym_eig needs a square matrix, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYM_TOL * scale:
        raise InvalidInput("sym_eig input is not symmetric")
    A = 0.5 * (A + A.T)
    values, vectors = np.linalg.eigh(A)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1]
    vectors = vectors * _sign_flip(vectors)
    return EigResult(values, vectors)


def orthonormal_basis(T):
    """Orthonormal basis for the column space of a full-column-rank `T`."""
    A = as_matrix(T, "T")
    U, S, _ = np.linalg.svd(A, full_matrices=False)
    if S[-1] <= RANK_TOL * S[0] or S[0] == 0.0:
        raise RankDeficient(
            f"matrix is rank deficient (smallest/largest singular value "
            f"{S[-1]:.3e}/{S[0]:.3e})"
        )
    return U


def orth_projector_complement(T):
    """``I - T (T^T T)^{-1} T^T``, the projector onto the complement of span(T)."""
    U = orthonormal_basis(T)
    Q = np.eye(U.shape[0]) - U @ U.T
    return 0.5 * (Q + Q.T)


def project_out(T, M):
    """Apply the complement projector of span(T) to `M` without forming it.

    Projection is done twice; a single pass leaves ``T^T M`` at round-off
    proportional to ``||M||`` which the simulator must keep below 1e-8.
    """
    U = orthonormal_basis(T)
    R = np.asarray(M, dtype=float)
    R = R - U @ (U.T @ R)
    return R - U @ (U.T @ R)


def spd_sqrt(M):
    """Symmetric square root of a positive semi-definite matrix.

    Eigenvalues down to ``-1e-10 * max(1, lambda_max)`` are treated as
    round-off and clamped to zero.
    """
    values, vectors = sym_eig(M)
    floor = -PSD_TOL * max(1.0, float(values[0]))
    if values[-1] < floor:
        raise NotPSD(f"matrix has negative eigenvalue {values[-1]:.3e}")
    root = np.sqrt(np.clip(values, 0.0, None))
    R = (vectors * root) @ vectors.T
    return 0.5 * (R + R.T)
