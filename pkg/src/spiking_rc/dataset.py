"""MADELON-style synthetic data and NIPS-2003 MADELON file ingestion.

The generator follows the published MADELON recipe: Gaussian clusters sit on
the vertices of a hypercube spanned by the informative features, clusters are
randomly split between the two classes, a block of redundant features is made
of linear combinations of the informative ones, and everything is hidden among
label-independent distractor columns.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateDataWarning, FormatError, ParameterError

INFORMATIVE = "informative"
COMBINATION = "combination"
DISTRACTOR = "distractor"
UNKNOWN = "unknown"

CLASS_ORDER = (-1, 1)


@dataclass(frozen=True)
class MadelonParams:
    n_clusters_per_class: int = 16
    n_informative: int = 5
    n_combination: int = 15
    n_distractor: int = 480
    cluster_separation: float = 2.0
    noise_sigma: float = 1.0
    n_points: int = 300
    seed: int = 0
    balanced: bool = True
    combination_noise: float = 0.05

    @property
    def n_features(self) -> int:
        return self.n_informative + self.n_combination + self.n_distractor

    def validate(self) -> None:
        counts = {
            "n_clusters_per_class": self.n_clusters_per_class,
            "n_informative": self.n_informative,
            "n_combination": self.n_combination,
            "n_distractor": self.n_distractor,
        }
        for name, value in counts.items():
            if int(value) != value or value < 0:
                raise ParameterError(f"{name} must be a non-negative integer, got {value!r}")
        if self.n_clusters_per_class < 1:
            raise ParameterError("n_clusters_per_class must be >= 1")
        if 2 * self.n_clusters_per_class > 2 ** self.n_informative:
            raise ParameterError(
                f"{2 * self.n_clusters_per_class} clusters do not fit on the "
                f"{2 ** self.n_informative} vertices of a {self.n_informative}-cube"
            )
        if self.n_points < 1:
            raise ParameterError(f"n_points must be >= 1, got {self.n_points}")
        if self.balanced and self.n_points % 2:
            raise ParameterError(f"balanced data needs an even n_points, got {self.n_points}")
        if self.cluster_separation <= 0 or self.noise_sigma < 0 or self.combination_noise < 0:
            raise ParameterError("cluster_separation must be > 0 and noise levels >= 0")


@dataclass
class Dataset:
    """Labelled feature matrix.

    Attributes:
        features: (P, F) float array.
        labels: (P,) int array with values in {-1, +1}.
        feature_meta: per-column tag (informative / combination / distractor,
            or unknown for ingested files).
        seed: generator seed, None for ingested data.
        params: generator parameters, None for ingested data.
        cluster: (P,) hypercube vertex index of each point (generated data only).
        informative_columns: column index of each informative feature, in
            hypercube-axis order.
        combination_columns: column index of each combination feature.
        combination_weights: (n_combination, n_informative) coefficients; the
            k-th combination column equals
            ``features[:, informative_columns] @ weights[k] + noise[:, k]``.
        combination_noise: (P, n_combination) additive noise of those columns.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_meta: tuple[str, ...]
    seed: Optional[int] = None
    params: Optional[MadelonParams] = None
    cluster: Optional[np.ndarray] = None
    informative_columns: Optional[np.ndarray] = None
    combination_columns: Optional[np.ndarray] = None
    combination_weights: Optional[np.ndarray] = None
    combination_noise: Optional[np.ndarray] = None
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def columns(self, tag: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.feature_meta) if t == tag], dtype=int)

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in CLASS_ORDER}

    def subset(self, index: Sequence[int]) -> "Dataset":
        index = np.asarray(index, dtype=int)
        return Dataset(
            features=self.features[index],
            labels=self.labels[index],
            feature_meta=self.feature_meta,
            seed=self.seed,
            params=self.params,
            cluster=None if self.cluster is None else self.cluster[index],
            informative_columns=self.informative_columns,
            combination_columns=self.combination_columns,
            combination_weights=self.combination_weights,
            combination_noise=None if self.combination_noise is None else self.combination_noise[index],
        )


def _hypercube_vertices(dim: int) -> np.ndarray:
    idx = np.arange(2**dim)
    return ((idx[:, None] >> np.arange(dim)[None, :]) & 1).astype(float)


def generate_madelon(params: MadelonParams) -> Dataset:
    """Draw a MADELON-style dataset.

    Cluster labels are assigned by a random permutation of the hypercube
    vertices, ``n_clusters_per_class`` per class. With ``balanced`` set, each
    class receives exactly ``n_points / 2`` points spread as evenly as possible
    over its clusters.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    n_inf, n_comb, n_dis = params.n_informative, params.n_combination, params.n_distractor
    n_clusters = 2 * params.n_clusters_per_class

    vertex_ids = rng.permutation(2**n_inf)[:n_clusters]
    cluster_label = np.where(np.arange(n_clusters) < params.n_clusters_per_class, -1, 1)
    centres = (_hypercube_vertices(n_inf)[vertex_ids] - 0.5) * params.cluster_separation

    if params.balanced:
        per_class = params.n_points // 2
        assignment = []
        for c in CLASS_ORDER:
            members = np.flatnonzero(cluster_label == c)
            base, extra = divmod(per_class, members.size)
            sizes = np.full(members.size, base)
            sizes[rng.permutation(members.size)[:extra]] += 1
            assignment.append(np.repeat(members, sizes))
        assignment = np.concatenate(assignment)
        assignment = assignment[rng.permutation(assignment.size)]
    else:
        assignment = rng.integers(0, n_clusters, size=params.n_points)

    n = params.n_points
    informative = centres[assignment] + rng.normal(0.0, params.noise_sigma, size=(n, n_inf))

    weights = rng.uniform(-1.0, 1.0, size=(n_comb, n_inf))
    combination = informative @ weights.T
    scale = combination.std(axis=0) if n > 1 else np.ones(n_comb)
    comb_noise = rng.normal(size=(n, n_comb)) * (params.combination_noise * scale)
    combination = combination + comb_noise

    distractors = rng.normal(size=(n, n_dis))

    block = np.concatenate([informative, combination, distractors], axis=1)
    tags = [INFORMATIVE] * n_inf + [COMBINATION] * n_comb + [DISTRACTOR] * n_dis
    position = rng.permutation(params.n_features)
    features = np.empty_like(block)
    features[:, position] = block
    meta = [""] * params.n_features
    for j, p in enumerate(position):
        meta[p] = tags[j]

    return Dataset(
        features=features,
        labels=cluster_label[assignment].astype(int),
        feature_meta=tuple(meta),
        seed=params.seed,
        params=params,
        cluster=vertex_ids[assignment],
        informative_columns=position[:n_inf],
        combination_columns=position[n_inf : n_inf + n_comb],
        combination_weights=weights,
        combination_noise=comb_noise,
    )


def _parse_rows(path: Path) -> list[list[float]]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric token ({exc})") from None
    return rows


def load_madelon_files(data_path, labels_path) -> Dataset:
    """Read the NIPS-2003 MADELON text format (also written by :func:`save_dataset`)."""
    data_path, labels_path = Path(data_path), Path(labels_path)
    rows = _parse_rows(data_path)
    label_rows = _parse_rows(labels_path)
    if any(len(r) != 1 for r in label_rows):
        raise FormatError(f"{labels_path}: expected exactly one label per line")
    if len(rows) != len(label_rows):
        raise FormatError(f"{len(rows)} data rows but {len(label_rows)} labels")
    if len({len(r) for r in rows}) > 1:
        raise FormatError(f"{data_path}: rows have differing numbers of features")
    labels = np.array([r[0] for r in label_rows])
    if not np.all(np.isin(labels, CLASS_ORDER)):
        raise FormatError(f"{labels_path}: labels must be -1 or +1")
    features = np.array(rows, dtype=float).reshape(len(rows), -1)
    return Dataset(
        features=features,
        labels=labels.astype(int),
        feature_meta=(UNKNOWN,) * features.shape[1],
    )


def standardize(ds: Dataset) -> Dataset:
    """Zero-mean, unit (population) variance columns.

    Constant columns become all zeros and a :class:`DegenerateDataWarning` is
    issued; the message is also appended to ``Dataset.warnings``.
    """
    x = ds.features
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0
    out = np.zeros_like(x)
    out[:, ~constant] = (x[:, ~constant] - mean[~constant]) / std[~constant]
    notes = list(ds.warnings)
    if constant.any():
        msg = f"{int(constant.sum())} zero-variance column(s) mapped to zero: {np.flatnonzero(constant)[:10].tolist()}"
        warnings.warn(msg, DegenerateDataWarning, stacklevel=2)
        notes.append(msg)
    return Dataset(
        features=out,
        labels=ds.labels.copy(),
        feature_meta=ds.feature_meta,
        seed=ds.seed,
        params=ds.params,
        cluster=ds.cluster,
        informative_columns=ds.informative_columns,
        combination_columns=ds.combination_columns,
        combination_weights=ds.combination_weights,
        combination_noise=ds.combination_noise,
        warnings=notes,
    )


def save_dataset(ds: Dataset, directory, stem: str = "madelon") -> dict[str, Path]:
    """Write ``<stem>.data``, ``<stem>.labels`` and a ``<stem>.meta`` sidecar.

    Values are written with 17 significant digits so a reload is bit-exact.
    The sidecar is ``key = value`` text: generator parameters followed by the
    comma-separated per-column feature tags.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "data": directory / f"{stem}.data",
        "labels": directory / f"{stem}.labels",
        "meta": directory / f"{stem}.meta",
    }
    with open(paths["data"], "w") as fh:
        for row in ds.features:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
    with open(paths["labels"], "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in ds.labels)
    lines = [f"n_points = {len(ds)}", f"n_features = {ds.n_features}", f"seed = {ds.seed}"]
    if ds.params is not None:
        lines += [f"{k} = {v}" for k, v in asdict(ds.params).items() if k != "seed"]
    lines.append("feature_meta = " + ",".join(ds.feature_meta))
    paths["meta"].write_text("\n".join(lines) + "\n")
    return paths


def read_meta(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def params_from_meta(meta: dict[str, str]) -> Optional[MadelonParams]:
    names = {f.name: f.type for f in fields(MadelonParams)}
    if not all(k in meta for k in names if k != "seed"):
        return None
    kwargs = {}
    for f in fields(MadelonParams):
        raw = meta["seed"] if f.name == "seed" else meta[f.name]
        if f.type in ("bool", bool):
            kwargs[f.name] = raw == "True"
        elif f.type in ("int", int):
            kwargs[f.name] = int(raw)
        else:
            kwargs[f.name] = float(raw)
    return MadelonParams(**kwargs)
