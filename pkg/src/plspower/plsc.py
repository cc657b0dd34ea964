"""Two-class PLS classification through an ilr-coded class composition."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEpsilon, ShapeMismatch
from .linalg import as_matrix
from .pls import PlsModel, fit_pls2, predict
from .posttransform import PtModel, post_transform
from .preprocess import check_labels

DEFAULT_EPSILON = 0.01
# orthonormal contrast, orthogonal to (1, 1)
H = np.array([[1.0, -1.0]]) / math.sqrt(2.0)


def closure(Z):
    Z = np.asarray(Z, dtype=float)
    return Z / Z.sum(axis=-1, keepdims=True)


def ilr(Z):
    return np.log(Z) @ H.T


def ilr_inv(s):
    return closure(np.exp(np.atleast_2d(s) @ H))


def perturb(Z, Zbar):
    """Simplex addition z (+) zbar."""
    return closure(Z * Zbar)


def simplex_center(Z):
    # fsum keeps the column log-means exactly equal for mirrored codings
    logs = np.log(Z)
    gmean = [math.fsum(logs[:, g]) / logs.shape[0] for g in range(logs.shape[1])]
    return closure(np.exp(np.array(gmean)))


@dataclass(frozen=True)
class CompositionCoding:
    epsilon: float
    labels: np.ndarray
    Z: np.ndarray
    Z_bar: np.ndarray
    f0: np.ndarray

    @property
    def H(self):
        return H

    @property
    def threshold(self):
        """Score at which the predicted composition is exactly 50/50.

        Scores at or above it are class 1.
        """
        return (math.log(self.Z_bar[1]) - math.log(self.Z_bar[0])) / math.sqrt(2.0)


def build_coding(labels, epsilon=DEFAULT_EPSILON):
    labels = check_labels(labels)
    if not 0.0 < epsilon < 0.5:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1/2), got {epsilon}")
    Z = np.where((labels == 1)[:, None], [1.0 - epsilon, epsilon], [epsilon, 1.0 - epsilon])
    Z_bar = simplex_center(Z)
    f0 = ilr(closure(Z / Z_bar))
    return CompositionCoding(float(epsilon), labels, Z, Z_bar, f0)


@dataclass(frozen=True)
class PlscModel:
    coding: CompositionCoding
    pls: PlsModel
    pt: PtModel

    @property
    def B_hat(self):
        return self.pls.B_hat


def fit_plsc(X, labels, A, epsilon=DEFAULT_EPSILON):
    """Fit PLS2 on the ilr-coded response of centered `X`, then post-transform."""
    coding = build_coding(labels, epsilon)
    X = as_matrix(X, "X")
    if X.shape[0] != coding.labels.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, {coding.labels.shape[0]} labels")
    pls = fit_pls2(X, coding.f0, A)
    return PlscModel(coding, pls, post_transform(pls))


def predict_composition(model, X_new):
    s = predict(model.pls, X_new)
    return perturb(ilr_inv(s), model.coding.Z_bar)


def predict_class(model, X_new):
    """Class of maximum predicted probability; exact ties go to class 1."""
    Zhat = predict_composition(model, X_new)
    return np.argmax(Zhat, axis=1) + 1


def mcc(true_labels, predicted_labels):
    """Matthews correlation with class 1 as the positive class.

    Returns 0 when any marginal of the confusion table is empty.
    """
    y = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if y.shape != p.shape:
        raise ShapeMismatch(f"label vectors differ in shape: {y.shape} vs {p.shape}")
    tp = float(np.sum((y == 1) & (p == 1)))
    tn = float(np.sum((y == 2) & (p == 2)))
    fp = float(np.sum((y == 2) & (p == 1)))
    fn = float(np.sum((y == 1) & (p == 2)))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)
