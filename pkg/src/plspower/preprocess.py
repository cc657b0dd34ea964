"""Column centering / autoscaling and the Dataset container."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DegenerateClasses, InvalidInput, ShapeMismatch, TooFewRows, ZeroVariance
from .linalg import as_matrix

MODES = ("raw", "centered", "autoscaled")


@dataclass(frozen=True)
class Preprocessing:
    mode: str = "raw"
    means: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Dataset:
    """An N x P observation matrix with optional labels in {1, 2}."""

    X: np.ndarray
    labels: Optional[np.ndarray] = None
    variable_names: Optional[list] = None
    preprocessing: Preprocessing = field(default_factory=Preprocessing)
    label_mapping: Optional[dict] = None

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = check_labels(self.labels)
            if labels.shape[0] != X.shape[0]:
                raise ShapeMismatch(
                    f"{labels.shape[0]} labels for {X.shape[0]} observations"
                )
            object.__setattr__(self, "labels", labels)
        if self.variable_names is not None and len(self.variable_names) != X.shape[1]:
            raise ShapeMismatch("variable_names length differs from column count")

    @property
    def n_obs(self):
        return self.X.shape[0]

    @property
    def n_vars(self):
        return self.X.shape[1]


def check_labels(labels):
    """Validate a 2-class label vector and return it as an int array."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise InvalidInput("labels must be one-dimensional")
    if not np.all(np.isin(arr, (1, 2))):
        raise InvalidInput("labels must take values in {1, 2}")
    arr = arr.astype(np.int64)
    if not (np.any(arr == 1) and np.any(arr == 2)):
        raise DegenerateClasses("both classes must be present")
    return arr


def center(X):
    """Subtract column means. Returns ``(Xc, means)``."""
    X = as_matrix(X, "X")
    if X.shape[0] < 2:
        raise TooFewRows(f"need at least 2 rows, got {X.shape[0]}")
    means = X.mean(axis=0)
    Xc = X - means
    # second pass removes the O(eps * |mean|) residue left by the first
    drift = Xc.mean(axis=0)
    return Xc - drift, means + drift


def column_sd(X):
    return np.std(X, axis=0, ddof=1)


def autoscale(X):
    """Center and divide each column by its sample standard deviation (N - 1).

    Raises ZeroVariance naming the first constant column.
    """
    Xc, means = center(X)
    sd = column_sd(Xc)
    scale_ref = np.maximum(1.0, np.abs(means))
    bad = np.flatnonzero(sd <= 1e-12 * scale_ref)
    if bad.size:
        raise ZeroVariance(int(bad[0]))
    return Xc / sd, means, sd


def zero_variance_columns(X):
    X = as_matrix(X, "X")
    sd = column_sd(X)
    return np.flatnonzero(sd <= 1e-12 * np.maximum(1.0, np.abs(X.mean(axis=0))))


def preprocess(dataset, mode):
    """Return a copy of `dataset` in the requested preprocessing mode."""
    if mode not in MODES:
        raise InvalidInput(f"unknown preprocessing mode {mode!r}")
    if mode == "raw":
        return dataset
    if mode == "centered":
        Xc, means = center(dataset.X)
        pp = Preprocessing("centered", means, np.ones_like(means))
        return replace(dataset, X=Xc, preprocessing=pp)
    Xs, means, scales = autoscale(dataset.X)
    return replace(dataset, X=Xs, preprocessing=Preprocessing("autoscaled", means, scales))


def drop_columns(dataset, columns):
    keep = np.setdiff1d(np.arange(dataset.n_vars), columns)
    names = None
    if dataset.variable_names is not None:
        names = [dataset.variable_names[i] for i in keep]
    return replace(dataset, X=dataset.X[:, keep], variable_names=names)
