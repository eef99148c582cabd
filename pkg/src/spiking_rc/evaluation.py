"""Random cross-validation, training-size / node-count sweeps, temporal maps."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import CLASS_ORDER
from .errors import DegenerateDataWarning, FormatError, ParameterError
from .reservoir import SpikeRaster
from .training import (
    count_spikes,
    predict_many,
    score,
    select_training_set,
    select_weights,
    train_ols,
)

METHODS = ("ols", "significance")


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    method: str
    n_t: int
    n_n: Optional[int]
    repeats: int
    per_repeat_accuracies: np.ndarray
    class_order: tuple = CLASS_ORDER

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_t": self.n_t,
            "n_n": self.n_n,
            "repeats": self.repeats,
            "accuracy": self.accuracy,
            "max_accuracy": float(np.max(self.per_repeat_accuracies)),
            "per_repeat_accuracies": [float(a) for a in self.per_repeat_accuracies],
            "class_order": list(self.class_order),
            "confusion": self.confusion.tolist(),
        }


@dataclass
class SweepResult:
    """Grid of mean/max accuracies plus the best node count per training size.

    ``mean[a, b]`` / ``max[a, b]`` hold the mean and best single-split accuracy
    over repeats for ``n_t_grid[a]`` and ``n_n_grid[b]``. For OLS the node axis
    has one entry (``None``).
    """

    method: str
    n_t_grid: list[int]
    n_n_grid: list[Optional[int]]
    repeats: int
    mean: np.ndarray
    max: np.ndarray
    rows: list[dict] = field(default_factory=list)


def _as_matrix(raster) -> np.ndarray:
    return raster.matrix if isinstance(raster, SpikeRaster) else np.asarray(raster)


def split_rng(seed: int, n_t: int, repeat: int) -> np.random.Generator:
    """Training-set draw for one repeat. Independent of n_n, so every node
    count in a sweep is scored on the same splits."""
    return np.random.default_rng([int(seed), int(n_t), int(repeat)])


def _confusion(y_true: np.ndarray, y_pred: np.ndarray, class_order: Sequence) -> np.ndarray:
    c = len(class_order)
    out = np.zeros((c, c), dtype=np.int64)
    pos = {k: i for i, k in enumerate(class_order)}
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        out[pos[t], pos[p]] += 1
    return out


def _check(x: np.ndarray, labels: np.ndarray, method: str, repeats: int) -> None:
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    if x.shape[0] != labels.size:
        raise ParameterError(f"raster has {x.shape[0]} rows but {labels.size} labels")


def _finish(method, n_t, n_n, confusions, class_order) -> EvalResult:
    per_repeat = np.array([np.trace(c) / c.sum() for c in confusions])
    total = np.sum(confusions, axis=0)
    return EvalResult(
        accuracy=float(np.trace(total) / total.sum()),
        confusion=total,
        method=method,
        n_t=n_t,
        n_n=n_n,
        repeats=len(confusions),
        per_repeat_accuracies=per_repeat,
        class_order=tuple(class_order),
    )


def cross_validate(
    raster,
    labels,
    method: str,
    n_t: int,
    n_n: Optional[int] = None,
    repeats: int = 10,
    seed: int = 0,
) -> EvalResult:
    """Random cross-validation.

    Each repeat draws ``n_t`` training rows per class, trains on them and tests
    on every remaining row. The reported accuracy is pooled over repeats
    (equal to the mean of per-repeat accuracies, since every repeat has the
    same test size).
    """
    x = _as_matrix(raster)
    labels = np.asarray(labels)
    _check(x, labels, method, repeats)
    if method == "significance" and n_n is None:
        raise ParameterError("significance training needs n_n")
    confusions = []
    for r in range(repeats):
        train, test_idx = select_training_set(x, labels, n_t, split_rng(seed, n_t, r))
        if method == "ols":
            w = train_ols(train)
        else:
            w = select_weights(score(count_spikes(train)), n_n)
        pred = predict_many(x[test_idx], w)
        confusions.append(_confusion(labels[test_idx], pred, CLASS_ORDER))
    return _finish(method, n_t, n_n if method == "significance" else None, confusions, CLASS_ORDER)


def sweep(
    raster,
    labels,
    method: str,
    n_t_grid: Sequence[int],
    n_n_grid: Sequence[int] = (1,),
    repeats: int = 10,
    seed: int = 0,
) -> SweepResult:
    """Cross-validate every (n_t, n_n) cell.

    Per n_t the best node count maximises the mean accuracy; ties go to the
    smaller n_n. Each cell equals the matching :func:`cross_validate` call.
    Node counts above the number of positively scored nodes silently keep only
    those nodes.
    """
    x = _as_matrix(raster)
    labels = np.asarray(labels)
    _check(x, labels, method, repeats)
    n_t_grid = [int(v) for v in n_t_grid]
    if not n_t_grid or not list(n_n_grid):
        raise ParameterError("sweep grids must be non-empty")
    nn_grid: list[Optional[int]] = [int(v) for v in n_n_grid] if method == "significance" else [None]

    mean = np.zeros((len(n_t_grid), len(nn_grid)))
    best_split = np.zeros_like(mean)
    rows = []
    for a, n_t in enumerate(n_t_grid):
        confusions = [[] for _ in nn_grid]
        for r in range(repeats):
            train, test_idx = select_training_set(x, labels, n_t, split_rng(seed, n_t, r))
            y_test = labels[test_idx]
            if method == "ols":
                confusions[0].append(_confusion(y_test, predict_many(x[test_idx], train_ols(train)), CLASS_ORDER))
                continue
            table = score(count_spikes(train))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateDataWarning)
                for b, n_n in enumerate(nn_grid):
                    pred = predict_many(x[test_idx], select_weights(table, n_n))
                    confusions[b].append(_confusion(y_test, pred, CLASS_ORDER))
        for b, n_n in enumerate(nn_grid):
            res = _finish(method, n_t, n_n, confusions[b], CLASS_ORDER)
            mean[a, b] = res.accuracy
            best_split[a, b] = res.per_repeat_accuracies.max()
        b_best = int(np.argmax(mean[a]))
        b_peak = int(np.argmax(best_split[a]))
        rows.append(
            {
                "n_t": n_t,
                "best_n_n": nn_grid[b_best],
                "best_mean_accuracy": float(mean[a, b_best]),
                "max_accuracy_at_best_n_n": float(best_split[a, b_best]),
                "peak_single_split_accuracy": float(best_split[a, b_peak]),
                "peak_single_split_n_n": nn_grid[b_peak],
            }
        )
    return SweepResult(method, n_t_grid, nn_grid, repeats, mean, best_split, rows)


@dataclass
class TemporalMap:
    """Raster rows regrouped by class (class -1 first), original order kept
    within each class. ``boundary`` is the first row of the second class."""

    matrix: np.ndarray
    labels: np.ndarray
    order: np.ndarray
    boundary: int


def temporal_map(raster, labels) -> TemporalMap:
    x = _as_matrix(raster)
    labels = np.asarray(labels)
    rank = np.array([CLASS_ORDER.index(int(v)) for v in labels], dtype=int)
    order = np.argsort(rank, kind="stable")
    return TemporalMap(x[order], labels[order], order, int(np.sum(rank == 0)))


def write_temporal_map(tm: TemporalMap, path) -> None:
    """CSV with a ``# boundary=<row>`` header line; columns are original row
    index, label, then one 0/1 column per node."""
    with open(Path(path), "w") as fh:
        fh.write(f"# boundary={tm.boundary}\n")
        for idx, lab, row in zip(tm.order, tm.labels, tm.matrix):
            fh.write(f"{int(idx)},{int(lab)}," + ",".join("1" if b else "0" for b in row) + "\n")


def read_temporal_map(path) -> TemporalMap:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# boundary="):
        raise FormatError(f"{path}: missing boundary header")
    boundary = int(lines[0].split("=", 1)[1])
    body = [[int(t) for t in ln.split(",")] for ln in lines[1:] if ln.strip()]
    arr = np.array(body, dtype=np.int64).reshape(len(body), -1)
    return TemporalMap(arr[:, 2:].astype(np.uint8), arr[:, 1], arr[:, 0], boundary)


def restore_raster(tm: TemporalMap) -> tuple[np.ndarray, np.ndarray]:
    """Undo the class regrouping; returns the raster and labels in input order."""
    x = np.empty_like(tm.matrix)
    y = np.empty_like(tm.labels)
    x[tm.order] = tm.matrix
    y[tm.order] = tm.labels
    return x, y


def render_confusion(confusion: np.ndarray, class_order: Sequence = CLASS_ORDER) -> str:
    names = [f"{c:+d}" for c in class_order]
    width = max(6, max(len(str(v)) for v in confusion.ravel()) + 1)
    head = "true\\pred".ljust(10) + "".join(n.rjust(width) for n in names)
    lines = [head]
    for name, row in zip(names, confusion):
        lines.append(name.ljust(10) + "".join(str(v).rjust(width) for v in row))
    return "\n".join(lines) + "\n"


def write_eval(result: EvalResult, directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"eval_{result.method}"
    paths = {
        "json": directory / f"{stem}.json",
        "confusion_csv": directory / f"{stem}_confusion.csv",
        "confusion_txt": directory / f"{stem}_confusion.txt",
    }
    paths["json"].write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    with open(paths["confusion_csv"], "w") as fh:
        fh.write("true," + ",".join(str(c) for c in result.class_order) + "\n")
        for c, row in zip(result.class_order, result.confusion):
            fh.write(f"{c}," + ",".join(str(v) for v in row) + "\n")
    paths["confusion_txt"].write_text(
        f"method={result.method} n_t={result.n_t} n_n={result.n_n} repeats={result.repeats} "
        f"accuracy={result.accuracy:.4f}\n" + render_confusion(result.confusion, result.class_order)
    )
    return paths


def write_sweep(result: SweepResult, directory) -> dict[str, Path]:
    """``sweep_<method>_grid.csv`` holds every cell; ``sweep_<method>_best.csv``
    holds one row per n_t (the curves of accuracy and best n_n vs. n_t)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "grid": directory / f"sweep_{result.method}_grid.csv",
        "best": directory / f"sweep_{result.method}_best.csv",
    }
    with open(paths["grid"], "w") as fh:
        fh.write("n_t,n_n,mean_accuracy,max_accuracy\n")
        for a, n_t in enumerate(result.n_t_grid):
            for b, n_n in enumerate(result.n_n_grid):
                fh.write(f"{n_t},{'' if n_n is None else n_n},{result.mean[a, b]:.10f},{result.max[a, b]:.10f}\n")
    keys = list(result.rows[0]) if result.rows else []
    with open(paths["best"], "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in result.rows:
            fh.write(",".join("" if row[k] is None else (f"{row[k]:.10f}" if isinstance(row[k], float) else str(row[k])) for k in keys) + "\n")
    return paths
