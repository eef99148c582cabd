"""Excitable spiking node driven by a time-multiplexed waveform.

The node is a leaky integrate-and-fire surrogate with absolute refractoriness:

    dv/dt = (input_gain * u(t) + bias - v) / tau

Crossing ``threshold`` emits a spike, sets ``v`` to ``reset_value`` and holds
it there for ``refractory_s``. Because ``tau`` spans several node periods, each
node's response depends on the drive of the nodes before it, which couples
neighbouring virtual nodes.

Two integrators share one time grid of ``dt`` sub-steps per node:

* ``"exact"`` (default): the drive is constant over every sub-step, so ``v``
  relaxes exponentially and threshold crossings are solved in closed form.
  Refractory release happens at the exact continuous time. Spike times do not
  depend on ``dt``; the grid only sets where the trace is sampled.
* ``"euler"``: explicit Euler. A spike is stamped at the end of the step in
  which ``v`` first reaches threshold, and refractoriness lasts a whole number
  of steps.

Each datapoint starts from rest (``v = 0``, not refractory). The simulation of
one datapoint therefore never depends on the previous one, and a batch of
datapoints can be integrated side by side as numpy vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .encoding import DriveSignal, drive_matrix
from .errors import InputError, ParameterError

INTEGRATORS = ("exact", "euler")


@dataclass(frozen=True)
class NeuronParams:
    tau_s: float = 1e-9
    threshold: float = 0.5
    reset_value: float = 0.0
    refractory_s: float = 1e-9
    spike_width_s: float = 150e-12
    dt_s: float = 25e-12
    input_gain: float = 1.0
    bias: float = 0.0
    noise_sigma: float = 0.0
    integrator: str = "exact"

    def validate(self, theta_s: Optional[float] = None) -> None:
        if not (self.dt_s > 0 and self.tau_s > self.dt_s):
            raise ParameterError(f"need 0 < dt_s < tau_s, got dt={self.dt_s}, tau={self.tau_s}")
        if not self.dt_s < self.spike_width_s:
            raise ParameterError("dt_s must be smaller than spike_width_s")
        if self.refractory_s < 0 or self.noise_sigma < 0:
            raise ParameterError("refractory_s and noise_sigma must be >= 0")
        if not self.reset_value < self.threshold:
            raise ParameterError("reset_value must lie below threshold")
        if self.integrator not in INTEGRATORS:
            raise ParameterError(f"integrator must be one of {INTEGRATORS}")
        if theta_s is not None:
            self.steps_per_node(theta_s)

    def steps_per_node(self, theta_s: float) -> int:
        ratio = theta_s / self.dt_s
        steps = round(ratio)
        if steps < 1 or abs(ratio - steps) > 1e-6:
            raise ParameterError(f"dt_s={self.dt_s} does not divide theta_s={theta_s}")
        return steps

    @property
    def refractory_steps(self) -> int:
        return math.ceil(self.refractory_s / self.dt_s - 1e-9)


@dataclass
class SpikeRaster:
    """Binary node readout, one row per datapoint (padding nodes excluded)."""

    matrix: np.ndarray
    n_v: int
    spike_times: Optional[list[np.ndarray]] = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.uint8)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != self.n_v:
            raise ParameterError(f"raster shape {self.matrix.shape} does not match n_v={self.n_v}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def density(self) -> float:
        return float(self.matrix.mean()) if self.matrix.size else 0.0


def _effective_drive(node_values: np.ndarray, n_pad: int, params: NeuronParams, rng) -> np.ndarray:
    u = np.array(node_values, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InputError("drive contains non-finite values")
    if params.noise_sigma > 0:
        if rng is None:
            raise ParameterError("noise_sigma > 0 requires a random generator")
        n_v = u.shape[-1] - n_pad
        u[..., :n_v] += rng.normal(0.0, params.noise_sigma, size=u.shape[:-1] + (n_v,))
    return params.input_gain * u + params.bias


def _integrate(drive: np.ndarray, params: NeuronParams, theta_s: float, record_trace: bool = False):
    """Integrate each row of ``drive`` (effective drive per node) from rest.

    Returns a list of spike-time arrays (one per row) and, if requested, the
    (P, n_steps + 1) trace sampled at the sub-step boundaries.
    """
    p, n_nodes = drive.shape
    spn = params.steps_per_node(theta_s)
    dt, tau, thr, reset = params.dt_s, params.tau_s, params.threshold, params.reset_value
    refr = params.refractory_s
    euler = params.integrator == "euler"
    a = dt / tau
    decay = math.exp(-dt / tau)
    n_refr = params.refractory_steps

    v = np.zeros(p)
    t_free = np.full(p, -np.inf)
    refr_left = np.zeros(p, dtype=np.int64)
    spike_rows: list[np.ndarray] = []
    spike_vals: list[np.ndarray] = []
    trace = np.zeros((p, n_nodes * spn + 1)) if record_trace else None

    k = 0
    for i in range(n_nodes):
        d = drive[:, i]
        t_node = i * theta_s
        for j in range(spn):
            s0 = t_node + j * dt
            s1 = (i + 1) * theta_s if j == spn - 1 else t_node + (j + 1) * dt
            if euler:
                active = refr_left == 0
                v = np.where(active, v + a * (d - v), reset)
                fired = active & (v >= thr)
                v[fired] = reset
                refr_left = np.where(active, np.where(fired, n_refr, 0), refr_left - 1)
                if fired.any():
                    rows = np.flatnonzero(fired)
                    spike_rows.append(rows)
                    spike_vals.append(np.full(rows.size, s1))
            else:
                held = t_free >= s1
                released = ~held & (t_free > s0)
                start = np.where(released, t_free, s0)
                v = np.where(held | released, reset, v)
                live = np.flatnonzero(~held)
                while live.size:
                    vl, dl, st = v[live], d[live], start[live]
                    full = st == s0
                    fac = np.where(full, decay, np.exp(-(s1 - st) / tau))
                    v_end = dl + (vl - dl) * fac
                    cross = v_end >= thr
                    v[live[~cross]] = v_end[~cross]
                    if not cross.any():
                        break
                    rows = live[cross]
                    dc, vc, sc = dl[cross], vl[cross], st[cross]
                    tc = sc + tau * np.log((dc - vc) / (dc - thr))
                    tc = np.minimum(np.maximum(tc, sc), np.nextafter(s1, -np.inf))
                    spike_rows.append(rows)
                    spike_vals.append(tc)
                    v[rows] = reset
                    t_free[rows] = tc + refr
                    again = t_free[rows] < s1
                    live = rows[again]
                    start[live] = t_free[live]
            k += 1
            if record_trace:
                trace[:, k] = v

    times = [np.zeros(0) for _ in range(p)]
    if spike_rows:
        rows = np.concatenate(spike_rows)
        vals = np.concatenate(spike_vals)
        order = np.argsort(rows, kind="stable")
        rows, vals = rows[order], vals[order]
        bounds = np.searchsorted(rows, np.arange(p + 1))
        times = [vals[bounds[r]:bounds[r + 1]] for r in range(p)]
    return times, trace


def simulate(
    signal: DriveSignal, params: NeuronParams, rng: Optional[np.random.Generator] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate one datapoint from rest.

    Returns:
        trace: membrane value at ``t = k * dt`` for ``k = 0 .. n_steps``.
        spike_times: spike instants in seconds from the datapoint onset.
    """
    params.validate(signal.theta_s)
    if signal.n_nodes == 0:
        raise ParameterError("empty drive signal")
    drive = _effective_drive(signal.node_values, signal.n_pad, params, rng)[None, :]
    times, trace = _integrate(drive, params, signal.theta_s, record_trace=True)
    return trace[0], times[0]


def node_index(spike_times: np.ndarray, theta_s: float) -> np.ndarray:
    """Index i with ``i * theta <= t < (i + 1) * theta``, using the same float
    products as the integrator so boundary spikes land consistently."""
    t = np.asarray(spike_times, dtype=float)
    idx = np.floor(t / theta_s).astype(np.int64)
    idx += (idx + 1) * theta_s <= t
    idx -= idx * theta_s > t
    return idx


def binarize(spike_times: np.ndarray, signal: DriveSignal) -> np.ndarray:
    """S[i] = 1 iff some spike falls in ``[i*theta, (i+1)*theta)``, for i < n_v."""
    s = np.zeros(signal.n_v, dtype=np.uint8)
    if len(spike_times):
        node = node_index(spike_times, signal.theta_s)
        s[node[(node >= 0) & (node < signal.n_v)]] = 1
    return s


def run_reservoir(
    signals: Sequence[DriveSignal],
    params: NeuronParams,
    noise_seed: Optional[int] = None,
    keep_spike_times: bool = False,
    batch_size: Optional[int] = 512,
) -> SpikeRaster:
    """Simulate every datapoint and binarize it into one raster row.

    Datapoints are independent (each starts from rest), so they are integrated
    in batches; ``batch_size=None`` falls back to the one-at-a-time scalar
    path. Both paths give identical rasters. With ``noise_sigma > 0`` datapoint
    ``i`` draws its noise from ``default_rng([noise_seed, i])``.
    """
    if not signals:
        return SpikeRaster(np.zeros((0, 0), dtype=np.uint8), 0, [] if keep_spike_times else None)
    theta, n_pad = signals[0].theta_s, signals[0].n_pad
    if any(s.theta_s != theta or s.n_pad != n_pad for s in signals):
        raise ParameterError("all signals must share theta_s and n_pad")
    params.validate(theta)
    n_v = signals[0].n_v
    if params.noise_sigma > 0 and noise_seed is None:
        raise ParameterError("noise_sigma > 0 requires noise_seed")

    def rng_for(i):
        return None if params.noise_sigma == 0 else np.random.default_rng([noise_seed, i])

    if batch_size is None:
        rows, times = [], []
        for i, sig in enumerate(signals):
            _, t = simulate(sig, params, rng_for(i))
            rows.append(binarize(t, sig))
            times.append(t)
        return SpikeRaster(np.array(rows), n_v, times if keep_spike_times else None)

    drive_all = drive_matrix(signals)
    matrix = np.zeros((len(signals), n_v), dtype=np.uint8)
    times = []
    for start in range(0, len(signals), batch_size):
        stop = min(start + batch_size, len(signals))
        drive = np.stack(
            [_effective_drive(drive_all[i], n_pad, params, rng_for(i)) for i in range(start, stop)]
        )
        batch_times, _ = _integrate(drive, params, theta)
        for r, t in enumerate(batch_times):
            node = node_index(t, theta)
            matrix[start + r, node[node < n_v]] = 1
            if keep_spike_times:
                times.append(t)
    return SpikeRaster(matrix, n_v, times if keep_spike_times else None)


def calibrate_threshold(
    signals: Sequence[DriveSignal],
    params: NeuronParams,
    target_density: float = 0.15,
    accept: tuple[float, float] = (0.05, 0.25),
    max_iter: int = 30,
) -> tuple[NeuronParams, float]:
    """Bisect the threshold until raster spike density is close to the target.

    Density falls as the threshold rises, so the search runs between 0 and the
    largest effective drive (above which the node cannot fire). Returns the
    calibrated parameters and the density they produce. Raises
    :class:`ParameterError` if no threshold lands inside ``accept``.
    """
    drive = drive_matrix(signals)
    top = float(np.max(params.input_gain * drive + params.bias))
    if top <= 0:
        raise ParameterError("effective drive never exceeds rest; the node cannot spike")
    lo, hi = 0.0, top
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        trial = replace(params, threshold=mid)
        dens = run_reservoir(signals, trial, noise_seed=0).density()
        if best is None or abs(dens - target_density) < abs(best[1] - target_density):
            best = (trial, dens)
        if abs(dens - target_density) < 0.005:
            break
        if dens > target_density:
            lo = mid
        else:
            hi = mid
    trial, dens = best
    if not accept[0] <= dens <= accept[1]:
        raise ParameterError(f"calibration reached density {dens:.3f}, outside {accept}")
    return trial, dens


def optical_output(spike_times: np.ndarray, n_steps: int, params: NeuronParams) -> np.ndarray:
    """Render spikes as Gaussian pulses of FWHM ``spike_width_s`` on the dt grid."""
    t = np.arange(n_steps + 1) * params.dt_s
    sigma = params.spike_width_s / (2 * math.sqrt(2 * math.log(2)))
    out = np.zeros_like(t)
    for ts in np.asarray(spike_times, dtype=float):
        out += np.exp(-0.5 * ((t - ts) / sigma) ** 2)
    return out


def write_raster_csv(raster: SpikeRaster, path) -> None:
    with open(Path(path), "w") as fh:
        for row in raster.matrix:
            fh.write(",".join("1" if b else "0" for b in row) + "\n")


def read_raster_csv(path) -> SpikeRaster:
    rows = []
    with open(Path(path)) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(tok) for tok in line.split(",")])
    matrix = np.array(rows, dtype=np.uint8)
    if matrix.size and not np.all(matrix <= 1):
        raise ParameterError(f"{path}: raster entries must be 0 or 1")
    n_v = matrix.shape[1] if matrix.ndim == 2 else 0
    return SpikeRaster(matrix.reshape(len(rows), n_v), n_v)


def write_trace_csv(trace: np.ndarray, dt_s: float, path) -> None:
    with open(Path(path), "w") as fh:
        fh.write("time_s,value\n")
        for k, v in enumerate(trace):
            fh.write(f"{k * dt_s:.6e},{v:.17g}\n")
