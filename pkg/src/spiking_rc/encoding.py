"""Masking and time-multiplexing of datapoints into drive waveforms.

Each datapoint's feature vector is projected through a fixed random mask onto
``n_v`` virtual nodes. Each node value is held for one node period ``theta``,
and ``n_pad`` reset-level nodes are appended so the neuron relaxes between
datapoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset
from .errors import ParameterError

DISTRIBUTIONS = ("uniform01", "uniform_pm1", "binary_pm1")


@dataclass(frozen=True)
class Mask:
    matrix: np.ndarray
    seed: int
    distribution: str = "uniform01"

    @property
    def n_features(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_v(self) -> int:
        return self.matrix.shape[1]


def make_mask(n_features: int, n_v: int, distribution: str = "uniform01", seed: int = 0) -> Mask:
    if n_features < 1 or n_v < 1:
        raise ParameterError(f"mask dimensions must be >= 1, got {n_features}x{n_v}")
    rng = np.random.default_rng(seed)
    shape = (n_features, n_v)
    if distribution == "uniform01":
        m = rng.uniform(0.0, 1.0, size=shape)
    elif distribution == "uniform_pm1":
        m = rng.uniform(-1.0, 1.0, size=shape)
    elif distribution == "binary_pm1":
        m = rng.choice(np.array([-1.0, 1.0]), size=shape)
    else:
        raise ParameterError(f"unknown mask distribution {distribution!r}; choose from {DISTRIBUTIONS}")
    return Mask(matrix=m, seed=seed, distribution=distribution)


@dataclass(frozen=True)
class DriveScale:
    """Affine map ``value * gain + offset``, optionally clipped to ``clip``."""

    gain: float = 1.0
    offset: float = 0.0
    clip: Optional[tuple[float, float]] = None

    def __call__(self, values: np.ndarray) -> np.ndarray:
        out = values * self.gain + self.offset
        if self.clip is not None:
            out = np.clip(out, *self.clip)
        return out


IDENTITY = DriveScale()


@dataclass(frozen=True)
class DriveConfig:
    theta_s: float = 250e-12
    n_pad: int = 8
    reset_level: float = 0.0
    drive_min: float = 0.0
    drive_max: float = 1.0

    @property
    def reset_duration_s(self) -> float:
        return self.n_pad * self.theta_s


@dataclass
class DriveSignal:
    """Piecewise-constant drive for one datapoint (``n_v`` nodes + padding)."""

    node_values: np.ndarray
    theta_s: float = 250e-12
    n_pad: int = 8
    scale: DriveScale = field(default_factory=DriveScale)

    @property
    def n_v(self) -> int:
        return self.node_values.size - self.n_pad

    @property
    def n_nodes(self) -> int:
        return self.node_values.size

    @property
    def duration_s(self) -> float:
        return self.n_nodes * self.theta_s


def fit_scale(masked: np.ndarray, cfg: DriveConfig) -> DriveScale:
    """Min-max affine map of the masked values onto ``[drive_min, drive_max]``."""
    lo, hi = float(np.min(masked)), float(np.max(masked))
    span = cfg.drive_max - cfg.drive_min
    if hi > lo:
        gain = span / (hi - lo)
        offset = cfg.drive_min - lo * gain
    else:
        gain, offset = 0.0, cfg.drive_min
    return DriveScale(gain=gain, offset=offset, clip=(cfg.drive_min, cfg.drive_max))


def mask_features(features: np.ndarray, mask: Mask) -> np.ndarray:
    """Row vector(s) of features times the mask; shape (..., n_v)."""
    features = np.asarray(features, dtype=float)
    if features.shape[-1] != mask.n_features:
        raise ParameterError(
            f"feature length {features.shape[-1]} does not match mask rows {mask.n_features}"
        )
    return features @ mask.matrix


def _pad(values: np.ndarray, cfg: DriveConfig) -> np.ndarray:
    pad_shape = values.shape[:-1] + (cfg.n_pad,)
    return np.concatenate([values, np.full(pad_shape, cfg.reset_level)], axis=-1)


def encode_datapoint(
    features: np.ndarray, mask: Mask, cfg: DriveConfig = DriveConfig(), scale: DriveScale = IDENTITY
) -> DriveSignal:
    features = np.asarray(features, dtype=float)
    if features.ndim != 1:
        raise ParameterError("encode_datapoint expects a single feature vector")
    values = scale(mask_features(features, mask))
    return DriveSignal(_pad(values, cfg), theta_s=cfg.theta_s, n_pad=cfg.n_pad, scale=scale)


def encode_dataset(
    ds: Dataset, mask: Mask, cfg: DriveConfig = DriveConfig(), scale: Optional[DriveScale] = None
) -> list[DriveSignal]:
    """Encode every datapoint, in order, with one shared drive scale.

    When ``scale`` is None it is fitted (min-max) over the masked values of the
    whole dataset.
    """
    if len(ds) == 0:
        return []
    masked = mask_features(ds.features, mask)
    if scale is None:
        scale = fit_scale(masked, cfg)
    padded = _pad(scale(masked), cfg)
    return [DriveSignal(row, theta_s=cfg.theta_s, n_pad=cfg.n_pad, scale=scale) for row in padded]


def drive_matrix(signals: Sequence[DriveSignal]) -> np.ndarray:
    """Stack equally long signals into a (P, n_nodes) array."""
    if not signals:
        return np.zeros((0, 0))
    lengths = {s.n_nodes for s in signals}
    if len(lengths) != 1:
        raise ParameterError(f"signals differ in length: {sorted(lengths)}")
    return np.stack([s.node_values for s in signals])


def write_signals_csv(signals: Sequence[DriveSignal], path) -> None:
    """Concatenated drive as ``time_s,value`` rows, one row per node onset."""
    with open(Path(path), "w") as fh:
        fh.write("time_s,value\n")
        t0 = 0
        for sig in signals:
            for k, v in enumerate(sig.node_values):
                fh.write(f"{(t0 + k) * sig.theta_s:.6e},{v:.17g}\n")
            t0 += sig.n_nodes
