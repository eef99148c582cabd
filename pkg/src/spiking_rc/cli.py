"""Command-line entry point.

Subcommands: generate, load, run, eval, sweep, report. Every subcommand writes
only below ``--out``. Exit codes: 0 ok, 2 usage/parameter/missing-file errors,
3 numeric or input failures.

Settings may come from a JSON file (``--config``); flags given on the command
line override it. The effective settings are echoed into each manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import MadelonParams, generate_madelon, load_madelon_files, save_dataset, standardize
from .encoding import DriveConfig, encode_dataset, make_mask, write_signals_csv
from .errors import FormatError, InputError, ParameterError
from .evaluation import (
    METHODS,
    cross_validate,
    render_confusion,
    sweep,
    temporal_map,
    write_eval,
    write_sweep,
    write_temporal_map,
)
from .reservoir import (
    NeuronParams,
    calibrate_threshold,
    read_raster_csv,
    run_reservoir,
    simulate,
    write_raster_csv,
    write_trace_csv,
)
from .seeding import derive_seed
from .training import TrainingSet, count_spikes, score


def parse_grid(text: str) -> list[int]:
    """``"1..100"`` (inclusive), ``"1..100:5"`` (step) or ``"5,10,20"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, rest = text.split("..", 1)
            hi, _, step = rest.partition(":")
            return list(range(int(lo), int(hi) + 1, int(step) if step else 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse grid {text!r}") from None


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _effective(args) -> dict:
    skip = {"func", "config", "out"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = Path(v).name if isinstance(v, Path) else v
    return out


def _write_manifest(out: Path, name: str, args, **extra) -> Path:
    manifest = {"command": args.command, "version": __version__, "config": _effective(args), **extra}
    path = out / name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _read_labels(path: Path) -> np.ndarray:
    vals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip():
            try:
                vals.append(int(float(line)))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric label") from None
    return np.array(vals, dtype=int)


def _need(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"missing input file: {p}")


def cmd_generate(args) -> int:
    params = MadelonParams(
        n_clusters_per_class=args.clusters_per_class,
        n_informative=args.informative,
        n_combination=args.combination,
        n_distractor=args.distractor,
        cluster_separation=args.separation,
        noise_sigma=args.cluster_noise,
        n_points=args.points,
        seed=derive_seed(args.seed, "dataset"),
    )
    ds = generate_madelon(params)
    out = Path(args.out)
    paths = save_dataset(ds, out, stem=args.stem)
    _write_manifest(
        out,
        "generate_manifest.json",
        args,
        dataset_seed=params.seed,
        class_counts={str(k): v for k, v in ds.class_counts().items()},
        files={k: p.name for k, p in paths.items()},
    )
    print(f"wrote {len(ds)} x {ds.n_features} dataset to {out}")
    return 0


def cmd_load(args) -> int:
    _need(args.data, args.labels)
    ds = load_madelon_files(args.data, args.labels)
    out = Path(args.out)
    paths = save_dataset(ds, out, stem=args.stem)
    _write_manifest(
        out,
        "load_manifest.json",
        args,
        source_sha256={"data": _sha256(args.data), "labels": _sha256(args.labels)},
        class_counts={str(k): v for k, v in ds.class_counts().items()},
        files={k: p.name for k, p in paths.items()},
    )
    print(f"loaded {len(ds)} x {ds.n_features} dataset into {out}")
    return 0


def cmd_run(args) -> int:
    _need(args.data, args.labels)
    ds = load_madelon_files(args.data, args.labels)
    if args.standardize:
        ds = standardize(ds)
    cfg = DriveConfig(theta_s=args.theta, n_pad=args.pad)
    mask_seed = args.mask_seed if args.mask_seed is not None else derive_seed(args.seed, "mask")
    mask = make_mask(ds.n_features, args.nv, args.mask_dist, seed=mask_seed)
    signals = encode_dataset(ds, mask, cfg)
    params = NeuronParams(
        tau_s=args.tau,
        threshold=args.threshold if args.threshold is not None else 0.5,
        refractory_s=args.refractory,
        dt_s=args.dt,
        input_gain=args.gain,
        bias=args.bias,
        noise_sigma=args.noise,
        integrator=args.integrator,
    )
    params.validate(cfg.theta_s)
    noise_seed = derive_seed(args.seed, "noise")
    calibration = None
    if args.threshold is None:
        params, density = calibrate_threshold(signals, params, target_density=args.target_density)
        calibration = {"threshold": params.threshold, "density": density}
    raster = run_reservoir(signals, params, noise_seed=noise_seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_raster_csv(raster, out / "raster.csv")
    (out / "labels.txt").write_text("".join(f"{int(v)}\n" for v in ds.labels))
    for i in range(min(args.traces, len(signals))):
        rng = np.random.default_rng([noise_seed, i]) if params.noise_sigma > 0 else None
        trace, _ = simulate(signals[i], params, rng)
        write_trace_csv(trace, params.dt_s, out / f"trace_{i:04d}.csv")
        write_signals_csv([signals[i]], out / f"drive_{i:04d}.csv")
    n_nodes = args.nv + args.pad
    _write_manifest(
        out,
        "run_manifest.json",
        args,
        mask_seed=mask_seed,
        noise_seed=noise_seed,
        neuron=asdict(params),
        calibration=calibration,
        input_sha256={"data": _sha256(args.data), "labels": _sha256(args.labels)},
        n_points=len(ds),
        n_v=args.nv,
        n_nodes_per_datapoint=n_nodes,
        datapoint_duration_s=n_nodes * args.theta,
        reset_duration_s=cfg.reset_duration_s,
        total_simulated_time_s=len(ds) * n_nodes * args.theta,
        spike_density=raster.density(),
    )
    print(f"raster {raster.shape[0]} x {raster.shape[1]}, density {raster.density():.3f} -> {out}")
    return 0


def _load_raster(args):
    _need(args.raster, args.labels)
    raster = read_raster_csv(args.raster)
    labels = _read_labels(args.labels)
    if raster.shape[0] != labels.size:
        raise ParameterError(f"raster has {raster.shape[0]} rows but {labels.size} labels")
    return raster, labels


def _methods(name: str) -> list[str]:
    return list(METHODS) if name == "both" else [name]


def cmd_eval(args) -> int:
    raster, labels = _load_raster(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = derive_seed(args.seed, "cv")
    summary = {}
    for method in _methods(args.method):
        res = cross_validate(raster, labels, method, args.nt, args.nn, args.repeats, seed)
        write_eval(res, out)
        summary[method] = {"accuracy": res.accuracy, "max_accuracy": float(res.per_repeat_accuracies.max())}
        print(f"{method}: accuracy {res.accuracy:.4f} (n_t={args.nt}, n_n={res.n_n}, repeats={args.repeats})")
        print(render_confusion(res.confusion), end="")
    _write_manifest(out, "eval_manifest.json", args, cv_seed=seed, results=summary,
                    input_sha256={"raster": _sha256(args.raster), "labels": _sha256(args.labels)})
    return 0


def cmd_sweep(args) -> int:
    raster, labels = _load_raster(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = derive_seed(args.seed, "cv")
    nt_grid, nn_grid = parse_grid(args.nt), parse_grid(args.nn)
    for method in _methods(args.method):
        res = sweep(raster, labels, method, nt_grid, nn_grid, args.repeats, seed)
        write_sweep(res, out)
        best = max(res.rows, key=lambda r: r["best_mean_accuracy"])
        print(f"{method}: best mean accuracy {best['best_mean_accuracy']:.4f} at n_t={best['n_t']}, n_n={best['best_n_n']}")
    _write_manifest(out, "sweep_manifest.json", args, cv_seed=seed, n_t_grid=nt_grid, n_n_grid=nn_grid,
                    input_sha256={"raster": _sha256(args.raster), "labels": _sha256(args.labels)})
    return 0


def cmd_report(args) -> int:
    raster, labels = _load_raster(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tm = temporal_map(raster, labels)
    write_temporal_map(tm, out / "temporal_map.csv")
    table = score(count_spikes(TrainingSet(raster.matrix, labels)))
    with open(out / "node_significance.csv", "w") as fh:
        fh.write("node,s_neg,s_pos,z_neg,z_pos\n")
        for n, (s, z) in enumerate(zip(table.s, table.z)):
            fh.write(f"{n},{s[0]},{s[1]},{z[0]:.6f},{z[1]:.6f}\n")
    lines = [
        f"datapoints: {raster.shape[0]}",
        f"nodes: {raster.shape[1]}",
        f"class boundary row: {tm.boundary}",
        f"spike density: {raster.density():.4f}",
    ]
    for c in (-1, 1):
        rows = raster.matrix[labels == c]
        lines.append(f"spike density class {c:+d}: {rows.mean() if rows.size else 0.0:.4f}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "report_manifest.json", args,
                    input_sha256={"raster": _sha256(args.raster), "labels": _sha256(args.labels)})
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spiking-rc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", type=Path, help="JSON file of settings; flags override it")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="master seed")

    p = sub.add_parser("generate", help="generate a MADELON-style dataset")
    common(p)
    p.add_argument("--points", type=int, default=300)
    p.add_argument("--clusters-per-class", type=int, default=16)
    p.add_argument("--informative", type=int, default=5)
    p.add_argument("--combination", type=int, default=15)
    p.add_argument("--distractor", type=int, default=480)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--cluster-noise", type=float, default=1.0)
    p.add_argument("--stem", default="madelon")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("load", help="ingest NIPS-2003 MADELON data/labels files")
    common(p, seed=False)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--stem", default="madelon")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("run", help="mask, encode and simulate a dataset into a spike raster")
    common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--nv", type=int, default=2048, help="virtual nodes per datapoint")
    p.add_argument("--theta", type=float, default=250e-12, help="node duration (s)")
    p.add_argument("--pad", type=int, default=8, help="reset nodes appended per datapoint")
    p.add_argument("--mask-dist", default="uniform01", choices=["uniform01", "uniform_pm1", "binary_pm1"])
    p.add_argument("--mask-seed", type=int, default=None, help="override the derived mask seed")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--tau", type=float, default=1e-9)
    p.add_argument("--refractory", type=float, default=1e-9)
    p.add_argument("--dt", type=float, default=25e-12)
    p.add_argument("--gain", type=float, default=1.0, help="input gain (negative inverts the drive)")
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian drive noise per node")
    p.add_argument("--integrator", default="exact", choices=["exact", "euler"])
    p.add_argument("--threshold", type=float, default=None, help="fixed threshold; omit to calibrate")
    p.add_argument("--target-density", type=float, default=0.15)
    p.add_argument("--traces", type=int, default=0, help="export drive and membrane traces of the first N datapoints")
    p.set_defaults(func=cmd_run)

    for name, helptext in (("eval", "random cross-validation"), ("sweep", "n_t / n_n grid sweep")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--raster", type=Path, required=True)
        p.add_argument("--labels", type=Path, required=True)
        p.add_argument("--method", default="significance", choices=[*METHODS, "both"])
        p.add_argument("--repeats", type=int, default=10)
        if name == "eval":
            p.add_argument("--nt", type=int, default=15)
            p.add_argument("--nn", type=int, default=20)
            p.set_defaults(func=cmd_eval)
        else:
            p.add_argument("--nt", default="1..100")
            p.add_argument("--nn", default="1..64")
            p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="temporal map and per-node spike statistics")
    common(p, seed=False)
    p.add_argument("--raster", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        settings = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {args.config}: {exc}") from None
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = set(settings) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    subparser.set_defaults(**settings)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except (ParameterError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
