"""Post-transformation of a fitted PLS2 model.

The score space is rotated into Y-orthogonal scores ``T_O`` and
``rank(Y)`` predictive scores ``T_P``.  Coefficients and residuals are
unchanged; only the factorization of X and Y is re-expressed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoPredictiveDirection, PostTransformInconsistent
from .linalg import svd, sym_eig
from .pls import PlsModel, coefficients, ida, loadings

EIG_TOL = 1e-10
RANK_TOL = 1e-10
CHECK_TOL = 1e-8


@dataclass(frozen=True)
class PtModel:
    base: PlsModel
    G: np.ndarray
    T_P: np.ndarray
    T_O: np.ndarray
    P_P: np.ndarray
    P_O: np.ndarray
    Q_P: np.ndarray
    B_hat: np.ndarray
    E_hat: np.ndarray
    F_hat: np.ndarray


def _positive_eigvecs(M):
    values, vectors = sym_eig(M)
    return vectors[:, values > EIG_TOL]


def _g_blocks(X, Y, W):
    YXW = np.atleast_2d(Y.T @ X @ W)
    A = W.shape[1]
    _, S, V = svd(YXW)
    scale = np.linalg.norm(Y) * np.linalg.norm(X) * np.linalg.norm(W)
    if S[0] <= RANK_TOL * scale:
        raise NoPredictiveDirection("Y^T X W vanishes")
    V = V[:, S > RANK_TOL * S[0]]
    G_o = _positive_eigvecs(np.eye(A) - V @ V.T)
    G_p = _positive_eigvecs(np.eye(A) - G_o @ G_o.T)
    return G_o, G_p


def compute_G(X, Y, W):
    """Orthogonal A x A rotation ``[G_o | G_P]`` of the weight space."""
    return np.hstack(_g_blocks(X, Y, W))


def post_transform(model):
    X, Y = model.X_train, model.Y_train
    G_o, G_p = _g_blocks(X, Y, model.W)
    n_orth = G_o.shape[1]
    if n_orth + G_p.shape[1] != model.A:
        raise PostTransformInconsistent("G is not square; numerical rank problem in W")
    G = np.hstack([G_o, G_p])

    WG = model.W @ G
    T_new, E_hat, F_hat = ida(X, Y, WG)
    T_O, T_P = T_new[:, :n_orth], T_new[:, n_orth:]

    # predictive scores oriented to correlate non-negatively with Y[:, 0]
    y0 = Y[:, 0] - Y[:, 0].mean()
    flip = np.where(T_P.T @ y0 < 0, -1.0, 1.0)
    T_P = T_P * flip
    G[:, n_orth:] *= flip

    P_O = loadings(X, T_O) if n_orth else np.zeros((X.shape[1], 0))
    P_P = loadings(X, T_P)
    Q_P = loadings(Y, T_P)
    B_hat = coefficients(X, Y, model.W @ G)

    pt = PtModel(model, G, T_P, T_O, P_P, P_O, Q_P, B_hat, E_hat, F_hat)
    _verify(pt)
    return pt


def _rel(M, ref):
    return np.linalg.norm(M) / max(np.linalg.norm(ref), 1e-300)


def _verify(pt):
    base = pt.base
    X, Y = base.X_train, base.Y_train
    problems = []
    scale = max(1.0, np.linalg.norm(X) * np.linalg.norm(Y))
    if pt.T_O.shape[1] and np.abs(pt.T_O.T @ Y).max() > CHECK_TOL * scale:
        problems.append("T_O is not orthogonal to Y")
    if _rel(pt.B_hat - base.B_hat, base.B_hat) > CHECK_TOL:
        problems.append("coefficients changed")
    if _rel(pt.E_hat - base.E_hat, X) > CHECK_TOL:
        problems.append("X residual changed")
    if _rel(pt.F_hat - base.F_hat, Y) > CHECK_TOL:
        problems.append("Y residual changed")
    recon = pt.T_P @ pt.P_P.T + pt.T_O @ pt.P_O.T + pt.E_hat
    if _rel(X - recon, X) > CHECK_TOL:
        problems.append("X factorization does not close")
    if problems:
        raise PostTransformInconsistent("; ".join(problems))
