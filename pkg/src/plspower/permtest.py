"""Permutation tests for the three PLSc class-separation statistics.

The first transformation is always the identity, so the observed statistic
is one of the J values and ``p >= 1/J``.  Every permutation refits the whole
model on the permuted labels.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import ComponentCollapse, InvalidInput, TooFewPerClass
from .kernels import STAT_KINDS, pearson_r2, pooled_t
from .linalg import as_matrix
from .plsc import DEFAULT_EPSILON, build_coding, fit_plsc, mcc, predict_class
from .preprocess import check_labels

KIND_ALIASES = {"mcc": "mcc", "score": "score", "scoret": "score", "t": "score", "r2": "r2"}


def normalize_kind(kind):
    try:
        return KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise InvalidInput(f"unknown statistic {kind!r}; expected one of {STAT_KINDS}") from None


@dataclass(frozen=True)
class TestStatistic:
    kind: str
    value: float


@dataclass(frozen=True)
class PermutationResult:
    observed: TestStatistic
    null_values: np.ndarray
    p_value: float
    J: int
    seed: Optional[int] = None
    n_collapsed: int = field(default=0)


def _min_per_class(labels, need=2):
    counts = np.bincount(labels, minlength=3)[1:]
    if counts.min() < need:
        raise TooFewPerClass(f"each class needs at least {need} members, got {tuple(counts)}")


def _fit(X, labels, A, epsilon):
    """PLSc fit, or None when the covariance signal runs out before A
    components (every statistic is then 0 by convention)."""
    try:
        return fit_plsc(X, labels, A, epsilon)
    except ComponentCollapse:
        return None


def stat_mcc(X, labels, A, epsilon=DEFAULT_EPSILON):
    """Training-set MCC of a PLSc model fitted on the full data."""
    model = _fit(X, labels, A, epsilon)
    if model is None:
        return TestStatistic("mcc", 0.0)
    return TestStatistic("mcc", mcc(model.coding.labels, predict_class(model, X)))


def stat_score_t(X, labels, A, epsilon=DEFAULT_EPSILON):
    """|t| between classes on the single post-transformed predictive score."""
    labels = check_labels(labels)
    _min_per_class(labels)
    model = _fit(X, labels, A, epsilon)
    if model is None:
        return TestStatistic("score", 0.0)
    return TestStatistic("score", float(pooled_t(model.pt.T_P[:, 0], labels)))


def stat_r2(X, labels, A, epsilon=DEFAULT_EPSILON):
    """Squared correlation between the coded response and its PLS fit."""
    model = _fit(X, labels, A, epsilon)
    if model is None:
        return TestStatistic("r2", 0.0)
    fitted = as_matrix(X) @ model.B_hat
    return TestStatistic("r2", pearson_r2(model.coding.f0, fitted))


STAT_FUNCTIONS = {"mcc": stat_mcc, "score": stat_score_t, "r2": stat_r2}


def compute_statistic(X, labels, A, kind, epsilon=DEFAULT_EPSILON):
    return STAT_FUNCTIONS[normalize_kind(kind)](X, labels, A, epsilon)


def p_value_from_null(null_values):
    """Right-tailed p-value with element 0 the observed statistic."""
    null_values = np.asarray(null_values, dtype=float)
    return float(np.count_nonzero(null_values >= null_values[0]) / null_values.size)


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    seed = None if rng is None else int(rng)
    return np.random.default_rng(seed), seed


def draw_permutations(labels, J, rng):
    """(J, N) label matrix: row 0 is the observed labelling, rows 1.. are
    uniform random permutations drawn with replacement."""
    labels = np.asarray(labels)
    perms = np.empty((J, labels.size), dtype=labels.dtype)
    perms[0] = labels
    if J > 1:
        perms[1:] = rng.permuted(np.tile(labels, (J - 1, 1)), axis=1)
    return perms


def permutation_stats(X, label_perms, A, epsilon=DEFAULT_EPSILON, backend=None):
    """Statistics for every row of a label-permutation matrix.

    Equivalent labellings are fitted once so that they produce bit-identical
    statistics (ties against the observed value stay ties).  With balanced
    classes a labelling and its mirror (1 <-> 2) are equivalent because all
    three statistics are invariant to swapping the class names.
    """
    X = as_matrix(X, "X")
    coding = build_coding(label_perms[0], epsilon)
    f_class = {1: coding.f0[coding.labels == 1, 0][0], 2: coding.f0[coding.labels == 2, 0][0]}
    keys = label_perms
    if 2 * np.count_nonzero(coding.labels == 1) == coding.labels.size:
        keys = np.where(label_perms[:, :1] == 1, label_perms, 3 - label_perms)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    F = np.where(uniq == 1, f_class[1], f_class[2])
    stats, collapsed = kernels.class_stats(X, F, uniq, A, coding.threshold, backend=backend)
    return stats[inverse], collapsed[inverse]


def permutation_test(X, labels, A, epsilon=DEFAULT_EPSILON, J=200, rng=None, kinds=STAT_KINDS,
                     backend=None):
    """Permutation p-values for several statistics sharing one set of permutations.

    Returns a dict kind -> PermutationResult.
    """
    if J < 2:
        raise InvalidInput(f"J must be at least 2, got {J}")
    labels = check_labels(labels)
    X = as_matrix(X, "X")
    if X.shape[0] != labels.size:
        raise InvalidInput(f"X has {X.shape[0]} rows, {labels.size} labels")
    kinds = [normalize_kind(k) for k in kinds]
    if "score" in kinds:
        _min_per_class(labels)
    gen, seed = _as_rng(rng)
    perms = draw_permutations(labels, J, gen)
    stats, collapsed = permutation_stats(X, perms, A, epsilon, backend=backend)
    if collapsed[0]:
        raise ComponentCollapse("observed data cannot support the requested components")
    results = {}
    for kind in kinds:
        col = stats[:, STAT_KINDS.index(kind)]
        results[kind] = PermutationResult(
            observed=TestStatistic(kind, float(col[0])),
            null_values=col,
            p_value=p_value_from_null(col),
            J=J,
            seed=seed,
            n_collapsed=int(collapsed.sum()),
        )
    return results


def permutation_pvalue(X, labels, A, kind, epsilon=DEFAULT_EPSILON, J=200, rng=None):
    kind = normalize_kind(kind)
    return permutation_test(X, labels, A, epsilon, J, rng, kinds=(kind,))[kind]


def adjust_bonferroni(p, A):
    """Bonferroni-adjusted p-value for A tested components, capped at 1."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"p must lie in [0, 1], got {p}")
    if A < 1:
        raise InvalidInput(f"A must be at least 1, got {A}")
    return min(A * p, 1.0)
