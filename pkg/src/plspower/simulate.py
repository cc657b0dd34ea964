"""Simulation of new two-class datasets that keep the pilot's latent structure.

A simulated matrix is ``X~ = T~ P_aug^T + E~`` where

* ``T~`` rows are drawn class by class from a Gaussian KDE of the pilot
  scores and then rotated so that ``T~^T T~`` equals the (sample-size
  scaled) pilot score Gram matrix;
* ``E~`` rows are bootstrapped from the pilot residual, projected onto
  the orthogonal complement of ``T~`` and rescaled to the pilot's residual
  energy per degree of freedom.

Those two constraints make ``X~^T X~`` match ``X^T X`` up to the residual
term.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidInput,
    ProcrustesUndefined,
    RankDeficient,
    RVUndefined,
    SimulationFailed,
    TooFewRows,
)
from .linalg import as_matrix, project_out, spd_sqrt, svd
from .pls import explained_variance

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 10
SIGNAL_RATIO_WARN = 3.0
RESIDUAL_RANK_TOL = 1e-10


@dataclass(frozen=True)
class AugmentedScoreModel:
    T_aug: np.ndarray
    P_aug: np.ndarray
    E_res: np.ndarray
    labels: np.ndarray
    per_class_row_index: dict
    S_target: np.ndarray
    n_pls: int
    explained: float
    X_pilot: np.ndarray
    threshold_reached: bool = True

    @property
    def n_pca(self):
        return self.T_aug.shape[1] - self.n_pls


def augment_with_residual_pca(model, variance_threshold=0.8):
    """Append leading PCA components of the PLS residual until the combined
    factorization explains `variance_threshold` of ``||X||^2``."""
    if not 0.0 < variance_threshold <= 1.0:
        raise InvalidInput(f"variance threshold must lie in (0, 1], got {variance_threshold}")
    pls = model.pls
    X = pls.X_train
    total = np.sum(X ** 2)
    fractions, _ = explained_variance(pls)
    explained = float(fractions.sum())
    T_aug, P_aug, E_res = pls.T, pls.P_load, pls.E_hat
    reached = True
    if explained < variance_threshold:
        U, S, V = svd(pls.E_hat)
        usable = int(np.sum(S > RESIDUAL_RANK_TOL * S[0])) if S[0] > 0 else 0
        gains = S[:usable] ** 2 / total
        cum = explained + np.cumsum(gains)
        hit = np.flatnonzero(cum >= variance_threshold)
        if hit.size:
            k = int(hit[0]) + 1
        else:
            k = usable
            reached = False
            log.warning(
                "residual PCA exhausted at %.3f explained variance (< %.3f)",
                explained + gains.sum(), variance_threshold,
            )
        if k:
            T_aug = np.hstack([pls.T, U[:, :k] * S[:k]])
            P_aug = np.hstack([pls.P_load, V[:, :k]])
            E_res = pls.E_hat - (U[:, :k] * S[:k]) @ V[:, :k].T
            explained = explained + float(gains[:k].sum())

    labels = model.coding.labels
    index = {g: np.flatnonzero(labels == g) for g in (1, 2)}
    S_target = T_aug.T @ T_aug
    S_target = 0.5 * (S_target + S_target.T)
    return AugmentedScoreModel(
        T_aug=T_aug,
        P_aug=P_aug,
        E_res=E_res,
        labels=labels,
        per_class_row_index=index,
        S_target=S_target,
        n_pls=pls.A,
        explained=explained,
        X_pilot=X,
        threshold_reached=reached,
    )


# ------------------------------------------------------------------ KDE


@dataclass(frozen=True)
class KdeModel:
    support: np.ndarray
    bandwidth: np.ndarray

    @property
    def dim(self):
        return self.support.shape[1]


def scott_bandwidth(T):
    """Per-dimension Scott's rule ``sd_d * n^(-1/(d+4))`` with a floor for
    constant dimensions."""
    n, d = T.shape
    sd = np.std(T, axis=0, ddof=1)
    h = sd * n ** (-1.0 / (d + 4))
    floor = 1e-8 * (1.0 + np.abs(T.mean(axis=0)))
    return np.maximum(h, floor)


def kde_fit(T):
    """Gaussian product-kernel KDE over the rows of `T`."""
    T = as_matrix(T, "scores")
    if T.shape[0] < 2:
        raise TooFewRows(f"KDE needs at least 2 rows, got {T.shape[0]}")
    return KdeModel(T.copy(), scott_bandwidth(T))


def kde_fit_per_class(T, labels):
    """One KDE per class, fitted on that class's score rows."""
    T = as_matrix(T, "scores")
    labels = np.asarray(labels)
    return {g: kde_fit(T[labels == g]) for g in (1, 2)}


def kde_sample(kde, n, rng):
    """Draw `n` rows: a uniformly chosen support row plus Gaussian jitter."""
    if n < 1:
        raise InvalidInput(f"n must be at least 1, got {n}")
    idx = rng.integers(0, kde.support.shape[0], size=n)
    noise = rng.standard_normal((n, kde.dim))
    return kde.support[idx] + noise * kde.bandwidth


# ------------------------------------------------------------------ constraints


def orthonormalize_scores(T_raw, S_target):
    """Rotate raw scores so that ``T~^T T~ = S_target``.

    With ``T_raw S_target = U D V^T`` the result is ``U V^T S_target^{1/2}``.
    """
    T_raw = as_matrix(T_raw, "T_raw")
    S_target = as_matrix(S_target, "S_target")
    n, d = T_raw.shape
    if n < d:
        raise RankDeficient(f"{n} rows cannot carry {d} orthogonal score columns")
    U, S, V = svd(T_raw @ S_target)
    if S[0] == 0.0 or S[-1] <= 1e-12 * S[0]:
        raise RankDeficient("raw scores are rank deficient")
    return U @ V.T @ spd_sqrt(S_target)


def bootstrap_residuals(E_hat, n, rng):
    E_hat = as_matrix(E_hat, "E_hat")
    idx = rng.integers(0, E_hat.shape[0], size=n)
    return E_hat[idx]


def orthogonalize_residuals(E_raw, T_tilde):
    """``(I - T~ (T~^T T~)^{-1} T~^T) E_raw``."""
    E_raw = as_matrix(E_raw, "E_raw")
    T_tilde = as_matrix(T_tilde, "T_tilde")
    if E_raw.shape[0] != T_tilde.shape[0]:
        raise InvalidInput("residual and score row counts differ")
    return project_out(T_tilde, E_raw)


# ------------------------------------------------------------------ similarity


def _cross(X):
    X = as_matrix(X)
    return X.T @ X


def _config_or_cross(X, Y, space):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if space == "auto":
        space = "config" if X.shape[0] == Y.shape[0] else "cross"
    if space == "cross":
        if X.shape[1] != Y.shape[1]:
            raise InvalidInput("cross-product comparison needs equal column counts")
        return X.T @ X, Y.T @ Y, True
    if space != "config":
        raise InvalidInput(f"unknown comparison space {space!r}")
    if X.shape[0] != Y.shape[0]:
        raise InvalidInput("configuration comparison needs equal row counts")
    return X, Y, False


def rv_coefficient(X, Y, space="auto"):
    """RV coefficient between two configurations or their P x P cross-products.

    ``space='config'`` compares ``X X^T`` with ``Y Y^T`` (equal row counts);
    ``space='cross'`` compares ``X^T X`` with ``Y^T Y`` (equal column
    counts); ``'auto'`` picks config when row counts match.
    """
    A, B, is_cross = _config_or_cross(X, Y, space)
    if is_cross:
        Sa, Sb = A, B
        num = np.sum(Sa * Sb)
        den = np.sqrt(np.sum(Sa * Sa) * np.sum(Sb * Sb))
    else:
        # trace(AA^T BB^T) = ||A^T B||^2 without forming N x N matrices
        num = np.sum((A.T @ B) ** 2)
        den = np.sqrt(np.sum((A.T @ A) ** 2) * np.sum((B.T @ B) ** 2))
    if den == 0.0:
        raise RVUndefined("RV is undefined for a zero matrix")
    return float(min(max(num / den, 0.0), 1.0))


def procrustes_index(X, Y, space="auto"):
    """Procrustes correlation ``trace(Sigma) / sqrt(tr(A^T A) tr(B^T B))``
    where Sigma holds the singular values of ``B^T A``."""
    A, B, _ = _config_or_cross(X, Y, space)
    den = np.sqrt(np.sum(A * A) * np.sum(B * B))
    if den == 0.0:
        raise ProcrustesUndefined("Procrustes index is undefined for a zero matrix")
    sv = np.linalg.svd(B.T @ A, compute_uv=False)
    return float(min(max(sv.sum() / den, 0.0), 1.0))


# ------------------------------------------------------------------ simulation


@dataclass(frozen=True)
class SimulationDiagnostics:
    gram_error: float
    cross_error: float
    rv: float
    procrustes: float
    signal_ratio: float
    attempts: int = 1
    warnings: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class SimulatedDataset:
    X_tilde: np.ndarray
    labels: np.ndarray
    T_tilde: np.ndarray
    E_tilde: np.ndarray
    S_target: np.ndarray
    diagnostics: SimulationDiagnostics


def scaled_target(aug, n_total):
    """Pilot score Gram matrix rescaled from N - 1 to n_total - 1 degrees of
    freedom, so per-row score covariance is kept at any sample size."""
    N = aug.T_aug.shape[0]
    return aug.S_target * ((n_total - 1) / (N - 1))


def residual_scale(n_pilot, n_total, k):
    """Factor restoring the residual energy per degree of freedom.

    Bootstrapped rows carry ``||E_res||^2 / N`` each and projecting out ``k``
    score columns keeps ``n - k`` of the ``n`` row dimensions, while the score
    Gram target scales with ``n - 1``.  Multiplying by this factor makes
    ``E||E~||^2 = (n - 1) / (N - 1) ||E_res||^2``.
    """
    if n_total <= k:
        return 1.0
    return float(np.sqrt(n_pilot * (n_total - 1) / ((n_pilot - 1) * (n_total - k))))


def simulate_dataset(aug, n1, n2, rng, kdes=None, with_similarity=True):
    """Simulate ``n1`` class-1 and ``n2`` class-2 observations under H1."""
    if n1 < 2 or n2 < 2:
        raise InvalidInput(f"each class needs at least 2 simulated rows, got {n1}, {n2}")
    if kdes is None:
        kdes = kde_fit_per_class(aug.T_aug, aug.labels)
    n = n1 + n2
    S_target = scaled_target(aug, n)

    T_tilde = None
    for attempt in range(1, MAX_ATTEMPTS + 1):
        T_raw = np.vstack([kde_sample(kdes[1], n1, rng), kde_sample(kdes[2], n2, rng)])
        try:
            T_tilde = orthonormalize_scores(T_raw, S_target)
            break
        except RankDeficient:
            continue
    if T_tilde is None:
        raise SimulationFailed(f"score sample rank deficient after {MAX_ATTEMPTS} attempts")

    E_raw = bootstrap_residuals(aug.E_res, n, rng)
    E_tilde = orthogonalize_residuals(E_raw, T_tilde)
    E_tilde *= residual_scale(aug.T_aug.shape[0], n, T_tilde.shape[1])
    signal = T_tilde @ aug.P_aug.T
    X_tilde = signal + E_tilde
    labels = np.repeat(np.array([1, 2]), (n1, n2))

    gram = T_tilde.T @ T_tilde
    gram_error = float(np.linalg.norm(gram - S_target) / np.linalg.norm(S_target))
    cross_error = float(np.linalg.norm(T_tilde.T @ E_tilde))
    e_norm = np.linalg.norm(E_tilde)
    ratio = float(np.linalg.norm(signal) / e_norm) if e_norm > 0 else np.inf
    notes = []
    if ratio < SIGNAL_RATIO_WARN:
        notes.append(f"signal/residual norm ratio {ratio:.3g} below {SIGNAL_RATIO_WARN}")
        log.debug(notes[-1])
    if with_similarity:
        rv = rv_coefficient(aug.X_pilot, X_tilde, space="cross")
        proc = procrustes_index(aug.X_pilot, X_tilde, space="cross")
    else:
        rv = proc = float("nan")
    diag = SimulationDiagnostics(gram_error, cross_error, rv, proc, ratio, attempt, tuple(notes))
    return SimulatedDataset(X_tilde, labels, T_tilde, E_tilde, S_target, diag)
