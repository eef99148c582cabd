"""Readout training for binary spike rasters.

Two trainers are provided:

* ordinary least squares: ``W = pinv(X) @ Y`` with one-hot targets, the
  minimum-norm least-squares solution;
* significance training: nodes are scored per class from their spike counts,
  and the top ``n_n`` nodes of each class get weight 1 (all others 0).

Prediction is ``argmax(S @ W)`` for both. With binary weights the class score
is the number of spikes that fall on that class's selected nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import CLASS_ORDER
from .errors import DegenerateDataWarning, ParameterError

PINV_RCOND = 1e-10


@dataclass
class ReadoutWeights:
    w: np.ndarray
    method: str
    class_order: tuple = CLASS_ORDER
    n_n: Optional[int] = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class SignificanceTable:
    """Per-node, per-class spike counts ``s`` and significance scores ``z``."""

    s: np.ndarray
    z: Optional[np.ndarray] = None
    class_order: tuple = CLASS_ORDER


@dataclass
class TrainingSet:
    x: np.ndarray
    labels: np.ndarray
    indices: Optional[np.ndarray] = None
    selection_seed: Optional[int] = None

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]


def select_training_set(
    raster: np.ndarray, labels: np.ndarray, n_t: int, rng: np.random.Generator, selection_seed=None
) -> tuple[TrainingSet, np.ndarray]:
    """Draw ``n_t`` rows per class without replacement.

    Returns the training set and the sorted indices of the remaining (test)
    rows. Each class must keep at least one test row.
    """
    labels = np.asarray(labels)
    if n_t < 1:
        raise ParameterError(f"n_t must be >= 1, got {n_t}")
    chosen = []
    for c in CLASS_ORDER:
        members = np.flatnonzero(labels == c)
        if n_t >= members.size:
            raise ParameterError(
                f"n_t={n_t} leaves no test rows for class {c} ({members.size} available)"
            )
        chosen.append(rng.choice(members, size=n_t, replace=False))
    train_idx = np.sort(np.concatenate(chosen))
    test_mask = np.ones(labels.size, dtype=bool)
    test_mask[train_idx] = False
    ts = TrainingSet(np.asarray(raster)[train_idx], labels[train_idx], train_idx, selection_seed)
    return ts, np.flatnonzero(test_mask)


def one_hot(labels: np.ndarray, class_order: Sequence = CLASS_ORDER) -> np.ndarray:
    labels = np.asarray(labels)
    y = np.zeros((labels.size, len(class_order)))
    for j, c in enumerate(class_order):
        y[labels == c, j] = 1.0
    if not np.all(y.sum(axis=1) == 1):
        raise ParameterError(f"labels outside class order {tuple(class_order)}")
    return y


def min_norm_lstsq(x: np.ndarray, y: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """``pinv(x) @ y`` via thin SVD, dropping singular values below ``rcond * s_max``."""
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((x.shape[1], y.shape[1]))
    keep = s > rcond * s[0]
    return vt[keep].T @ ((u[:, keep].T @ y) / s[keep, None])


def train_ols(train: TrainingSet, class_order: Sequence = CLASS_ORDER) -> ReadoutWeights:
    if train.n_rows < 1:
        raise ParameterError("OLS training needs at least one row")
    x = np.asarray(train.x, dtype=float)
    y = one_hot(train.labels, class_order)
    notes = []
    if not np.any(x):
        msg = "all-zero training raster; OLS weights are zero"
        warnings.warn(msg, DegenerateDataWarning, stacklevel=2)
        notes.append(msg)
        w = np.zeros((x.shape[1], y.shape[1]))
    else:
        w = min_norm_lstsq(x, y)
    return ReadoutWeights(w=w, method="ols", class_order=tuple(class_order), warnings=notes)


def count_spikes(train: TrainingSet, class_order: Sequence = CLASS_ORDER) -> SignificanceTable:
    labels = np.asarray(train.labels)
    x = np.asarray(train.x, dtype=np.int64)
    if not np.all(np.isin(labels, class_order)):
        raise ParameterError(f"labels outside class order {tuple(class_order)}")
    s = np.stack([x[labels == c].sum(axis=0) for c in class_order], axis=1)
    return SignificanceTable(s=s, class_order=tuple(class_order))


def score(table: SignificanceTable) -> SignificanceTable:
    """``z[n, i] = s[n, i]**2 / sum_i s[n, i]``; silent nodes score 0."""
    s = table.s.astype(float)
    total = s.sum(axis=1, keepdims=True)
    z = np.divide(s**2, total, out=np.zeros_like(s), where=total > 0)
    return SignificanceTable(s=table.s, z=z, class_order=table.class_order)


def select_weights(table: SignificanceTable, n_n: int) -> ReadoutWeights:
    """Binary weights from the top ``n_n`` positive scores of each class.

    Ties go to the lower node index. A node may be picked for more than one
    class.
    """
    if table.z is None:
        table = score(table)
    n_v, n_c = table.z.shape
    if not 1 <= n_n <= n_v:
        raise ParameterError(f"n_n must be in [1, {n_v}], got {n_n}")
    w = np.zeros((n_v, n_c), dtype=np.uint8)
    notes = []
    for i in range(n_c):
        col = table.z[:, i]
        order = np.argsort(-col, kind="stable")[:n_n]
        picked = order[col[order] > 0]
        w[picked, i] = 1
        if picked.size < n_n:
            notes.append(
                f"class {table.class_order[i]}: only {picked.size} node(s) with positive score, "
                f"{n_n} requested"
            )
    for msg in notes:
        warnings.warn(msg, DegenerateDataWarning, stacklevel=3)
    return ReadoutWeights(w=w, method="significance", class_order=table.class_order, n_n=n_n, warnings=notes)


def train_significance(
    train: TrainingSet, n_n: int, class_order: Sequence = CLASS_ORDER
) -> ReadoutWeights:
    return select_weights(score(count_spikes(train, class_order)), n_n)


def class_scores(s_rows: np.ndarray, weights: ReadoutWeights) -> np.ndarray:
    s_rows = np.asarray(s_rows)
    if s_rows.shape[-1] != weights.w.shape[0]:
        raise ParameterError(
            f"raster width {s_rows.shape[-1]} does not match weights {weights.w.shape[0]}"
        )
    if weights.method == "significance":
        return s_rows.astype(np.int64) @ weights.w.astype(np.int64)
    return s_rows.astype(float) @ weights.w


def predict_many(s_rows: np.ndarray, weights: ReadoutWeights) -> np.ndarray:
    """Vectorised :func:`predict`; np.argmax returns the first maximum, so ties
    resolve to the earliest class in ``class_order``."""
    scores = class_scores(np.atleast_2d(s_rows), weights)
    return np.asarray(weights.class_order)[np.argmax(scores, axis=1)]


def predict(s_row: np.ndarray, weights: ReadoutWeights):
    s_row = np.asarray(s_row)
    if s_row.ndim != 1:
        raise ParameterError("predict expects a single raster row")
    return predict_many(s_row[None, :], weights)[0].item()
