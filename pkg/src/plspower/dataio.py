"""CSV input/output and the synthetic two-class pilot generator."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, MalformedCsv, MissingLabelColumn, MoreThanTwoClasses
from .preprocess import Dataset


@dataclass(frozen=True)
class PilotSpec:
    n_per_class: int = 5
    p_signal: int = 5
    p_noise: int = 25
    a_pilot: int = 2
    mu: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 2:
            raise InvalidInput("n_per_class must be at least 2")
        if self.p_signal < 1 or self.p_noise < 0 or self.a_pilot < 1:
            raise InvalidInput("pilot dimensions must be positive")
        if self.a_pilot > min(self.p_signal, 2 * self.n_per_class):
            raise InvalidInput("a_pilot exceeds the signal block dimensions")
        if self.mu < 0:
            raise InvalidInput("mu must be non-negative")


def gen_pilot(spec):
    """Two-class pilot ``X = [T_pilot P_pilot^T | X_noise]``.

    Class 1 latent rows are N(0, I) and class 2 rows N(mu 1, I) in
    ``a_pilot`` dimensions; ``T_pilot`` holds their PCA scores and
    ``P_pilot`` the PCA loadings of a uniform ``a_pilot x p_signal`` matrix.
    ``mu = 0`` produces a pilot with no class effect.
    """
    rng = np.random.default_rng(spec.seed)
    n, a = spec.n_per_class, spec.a_pilot
    C = np.vstack([
        rng.standard_normal((n, a)),
        rng.standard_normal((n, a)) + spec.mu,
    ])
    Cc = C - C.mean(axis=0)
    U, S, _ = np.linalg.svd(Cc, full_matrices=False)
    T_pilot = U * S
    M = rng.uniform(0.0, 1.0, size=(a, spec.p_signal))
    Mc = M - M.mean(axis=0)
    # full_matrices keeps a_pilot orthonormal loadings although Mc has rank a_pilot - 1
    _, _, Vt = np.linalg.svd(Mc, full_matrices=True)
    P_pilot = Vt[:a].T
    noise = rng.standard_normal((2 * n, spec.p_noise))
    X = np.hstack([T_pilot @ P_pilot.T, noise])
    labels = np.repeat([1, 2], n)
    names = [f"s{i + 1}" for i in range(spec.p_signal)] + [f"n{i + 1}" for i in range(spec.p_noise)]
    return Dataset(X, labels, names)


def _parse_float(text, row, col, name):
    try:
        value = float(text)
    except ValueError:
        raise MalformedCsv(f"row {row}, column {col} ({name!r}): non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise MalformedCsv(f"row {row}, column {col} ({name!r}): non-finite value {text!r}")
    return value


def load_csv(path, label_column="class"):
    """Read a comma-separated file with a header row.

    Label values must be 1/2, or any two distinct strings which are mapped to
    1 and 2 in order of first appearance (the mapping is kept on the Dataset).
    ``label_column=None`` loads an unlabelled matrix.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedCsv(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise MalformedCsv(f"{path}: no data rows")
    if label_column is not None and label_column not in header:
        raise MissingLabelColumn(f"{path}: label column {label_column!r} not in header")
    label_idx = header.index(label_column) if label_column is not None else None
    var_idx = [i for i in range(len(header)) if i != label_idx]

    X = np.empty((len(body), len(var_idx)))
    raw_labels = []
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise MalformedCsv(f"row {line}: expected {len(header)} fields, got {len(row)}")
        for c, i in enumerate(var_idx):
            X[r, c] = _parse_float(row[i].strip(), line, i + 1, header[i])
        if label_idx is not None:
            raw_labels.append(row[label_idx].strip())

    labels = mapping = None
    if label_idx is not None:
        labels, mapping = _map_labels(raw_labels)
    return Dataset(X, labels, [header[i] for i in var_idx], label_mapping=mapping)


def _map_labels(raw):
    distinct = list(dict.fromkeys(raw))
    if len(distinct) > 2:
        raise MoreThanTwoClasses(f"found {len(distinct)} classes: {distinct[:5]}")
    if set(distinct) <= {"1", "2"}:
        return np.array([int(v) for v in raw]), None
    mapping = {value: code for code, value in enumerate(distinct, start=1)}
    return np.array([mapping[v] for v in raw]), mapping


def format_float(value):
    return format(float(value), ".17g")


def save_csv(path, dataset, label_column="class"):
    """Write a Dataset with 17 significant digits so it reloads exactly."""
    names = dataset.variable_names or [f"x{i + 1}" for i in range(dataset.n_vars)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(names)
        if dataset.labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for r in range(dataset.n_obs):
            row = [format_float(v) for v in dataset.X[r]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[r])))
            writer.writerow(row)


def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])


def read_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        return columns, [row for row in reader]
