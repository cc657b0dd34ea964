"""Eigenvalue PLS2 with double deflation.

At every step the weight is the leading eigenvector of
``E^T F F^T E``; it is obtained as the leading right singular vector of the
K x P matrix ``F^T E`` which avoids the P x P product.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ComponentCollapse, InvalidInput, RankExceeded, ShapeMismatch, Singular
from .linalg import as_matrix, svd

COLLAPSE_TOL = 1e-12


@dataclass(frozen=True)
class PlsModel:
    A: int
    W: np.ndarray
    T: np.ndarray
    P_load: np.ndarray
    Q_load: np.ndarray
    E_hat: np.ndarray
    F_hat: np.ndarray
    B_hat: np.ndarray
    X_train: np.ndarray
    Y_train: np.ndarray
    eigenvalues: np.ndarray

    @property
    def K(self):
        return self.Y_train.shape[1]


def _check_xy(X, Y):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    return X, Y


def _deflate(E, F, t):
    tt = t @ t
    E = E - np.outer(t, t @ E) / tt
    F = F - np.outer(t, t @ F) / tt
    return E, F


def loadings(M, T):
    """``M^T T (T^T T)^{-1}``."""
    return np.linalg.solve(T.T @ T, T.T @ M).T


def coefficients(X, Y, W):
    """``W (W^T X^T X W)^{-1} W^T X^T Y``."""
    XW = X @ W
    return W @ np.linalg.solve(XW.T @ XW, XW.T @ Y)


def fit_pls2(X, Y, A):
    """Fit a PLS2 model with `A` components on centered `X` and `Y`."""
    X, Y = _check_xy(X, Y)
    N, P = X.shape
    if not isinstance(A, (int, np.integer)) or A < 1:
        raise InvalidInput(f"component count must be a positive integer, got {A!r}")
    rank = np.linalg.matrix_rank(X)
    if A > min(N - 1, rank):
        raise RankExceeded(f"A={A} exceeds min(N-1, rank(X)) = {min(N - 1, rank)}")

    E, F = X, Y
    W = np.empty((P, A))
    T = np.empty((N, A))
    lam = np.empty(A)
    # lambda_1 is compared against its attainable maximum ||X||^2 ||Y||^2
    ref = (np.linalg.norm(X) * np.linalg.norm(Y)) ** 2
    for a in range(A):
        U, S, V = svd(F.T @ E)
        lam[a] = S[0] ** 2
        floor = COLLAPSE_TOL * (ref if a == 0 else lam[0])
        if lam[a] <= floor:
            raise ComponentCollapse(f"no covariance left at component {a + 1}")
        w = V[:, 0]
        t = E @ w
        W[:, a] = w
        T[:, a] = t
        E, F = _deflate(E, F, t)

    return PlsModel(
        A=A,
        W=W,
        T=T,
        P_load=loadings(X, T),
        Q_load=loadings(Y, T),
        E_hat=E,
        F_hat=F,
        B_hat=coefficients(X, Y, W),
        X_train=X,
        Y_train=Y,
        eigenvalues=lam,
    )


def ida(X, Y, W):
    """Iterative deflation with externally supplied weight columns.

    Returns ``(T, E_hat, F_hat)``.
    """
    X, Y = _check_xy(X, Y)
    W = as_matrix(W, "W")
    E, F = X, Y
    T = np.empty((X.shape[0], W.shape[1]))
    for a in range(W.shape[1]):
        t = E @ W[:, a]
        T[:, a] = t
        E, F = _deflate(E, F, t)
    return T, E, F


def predict(model, X_new):
    X_new = as_matrix(X_new, "X_new")
    if X_new.shape[1] != model.B_hat.shape[0]:
        raise ShapeMismatch(
            f"model has {model.B_hat.shape[0]} variables, X_new has {X_new.shape[1]}"
        )
    return X_new @ model.B_hat


def ols_oracle(X, Y):
    """Least-squares coefficients ``(X^T X)^{-1} X^T Y``."""
    X, Y = _check_xy(X, Y)
    XtX = X.T @ X
    if np.linalg.cond(XtX) > 1e14:
        raise Singular("X^T X is singular")
    # QR is the stable route to the normal-equation solution
    Qm, R = np.linalg.qr(X)
    return np.linalg.solve(R, Qm.T @ Y)


def explained_variance(model):
    """Per-component X-variance fractions and the residual fraction."""
    total = np.sum(model.X_train ** 2)
    tt = np.sum(model.T ** 2, axis=0)
    pp = np.sum(model.P_load ** 2, axis=0)
    fractions = tt * pp / total
    residual = np.sum(model.E_hat ** 2) / total
    return fractions, residual
