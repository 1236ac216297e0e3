"""Command-line surface: track, eval, stats, sample, bench, synth.

All randomness is seeded through --seed; per-sequence seeds derive from
it deterministically, so results do not depend on worker count. The
SRRT_LOG environment variable (debug/info/warning/error) controls log
verbosity. Wall-clock timing is kept under separate `timing` keys in
reports so the remaining artifact bytes are reproducible.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation as ev
from . import pipeline as pl
from . import trainkit as tk
from .config import (
    RunConfig,
    load_run_config,
    override_run_config,
    parse_motion_spec,
    run_config_from_text,
    serialize_run_config,
)
from .geometry import CATEGORIES, RadiusCategory
from .sequences import is_sequence_dir, load_dataset, load_sequence, write_sequence

log = logging.getLogger("srrt")


def _sequence_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=[base_seed, index]).generate_state(1)[0])


def _run_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for flag, key in (
        ("regulator", "regulator"),
        ("tracker", "tracker"),
        ("K", "locking_frames"),
        ("lam", "window_weight"),
        ("seed", "seed"),
        ("sigma", "noise_sigma"),
        ("workers", "workers"),
        ("dataset", "dataset"),
        ("output", "output"),
    ):
        if getattr(args, flag, None) is not None:
            overrides[key] = getattr(args, flag)
    if getattr(args, "categories", None):
        overrides["categories"] = tuple(int(v) for v in args.categories.split(","))
    return override_run_config(cfg, **overrides)


def _track_one(task) -> str:
    seq_dir, out_dir, cfg_text, gamma, seq_seed = task
    cfg = override_run_config(run_config_from_text(cfg_text), seed=seq_seed)
    seq = load_sequence(seq_dir)
    pipe_cfg = cfg.pipeline_config()
    if gamma is not None:
        traj = pl.fixed_sr_track_sequence(seq, RadiusCategory(gamma), pipe_cfg)
    else:
        traj = pl.srrt_track_sequence(seq, pipe_cfg)
    out = Path(out_dir)
    pl.write_trajectory(traj, out / f"{seq.name}.txt")
    pl.write_run_metadata(
        out / f"{seq.name}.meta.json",
        pipe_cfg,
        extra={"sequence": seq.name, "fixed_gamma": gamma},
    )
    return seq.name


def cmd_track(args) -> int:
    cfg = _run_config(args)
    if not cfg.dataset:
        raise ValueError("track requires --dataset")
    if not cfg.output:
        raise ValueError("track requires --output")
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    root = Path(cfg.dataset)
    if not root.is_dir():
        raise ValueError(f"dataset path does not exist: {root}")
    if is_sequence_dir(root) and not any(is_sequence_dir(d) for d in root.iterdir()):
        seq_dirs = [root]
    else:
        seq_dirs = sorted(d for d in root.iterdir() if is_sequence_dir(d))
    if not seq_dirs:
        raise ValueError(f"no sequences found under {root}")

    cfg_text = serialize_run_config(cfg)
    tasks = [
        (str(d), str(out_dir), cfg_text, args.gamma, _sequence_seed(cfg.seed, i))
        for i, d in enumerate(seq_dirs)
    ]

    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name in pool.map(_track_one, tasks):
                log.info("tracked %s", name)
    else:
        for task in tasks:
            log.info("tracked %s", _track_one(task))
    print(f"tracked {len(tasks)} sequence(s) -> {out_dir}")
    return 0


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    if not cfg.dataset:
        raise ValueError("eval requires --dataset")
    traj_dir = Path(args.trajectories)
    sequences = {s.name: s for s in load_dataset(cfg.dataset)}

    per_sequence = {}
    timing = {}
    pooled_rates = []
    for traj_file in sorted(traj_dir.glob("*.txt")):
        name = traj_file.stem
        if name not in sequences:
            raise ValueError(f"trajectory {traj_file.name} has no matching sequence in the dataset")
        seq = sequences[name]
        if seq.gt is None:
            raise ValueError(f"sequence {name!r} has no ground truth")
        traj = pl.read_trajectory(traj_file)
        gt = [seq.gt[r.frame] for r in traj.records]
        per_sequence[name] = ev.metric_report(traj, gt)
        pooled_rates.append(per_sequence[name]["success_rates"])
        lat = np.asarray(traj.latencies_ms())
        timing[name] = {
            "fps": float(1000.0 / lat.mean()),
            "mean_ms": float(lat.mean()),
            "median_ms": float(np.median(lat)),
        }
    if not per_sequence:
        raise ValueError(f"no trajectory files under {traj_dir}")

    mean_rates = np.mean(np.asarray(pooled_rates), axis=0)
    report = {
        "sequences": per_sequence,
        "mean": {
            "auc": float(np.mean([m["auc"] for m in per_sequence.values()])),
            "p": float(np.mean([m["p"] for m in per_sequence.values()])),
            "p_norm": float(np.mean([m["p_norm"] for m in per_sequence.values()])),
        },
        # Wall-clock numbers stay under their own key so the rest of the
        # report is byte-reproducible for a fixed seed.
        "timing": timing,
    }
    out = Path(cfg.output or "eval_report.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    curves = out.with_name(out.stem + "_curves.csv")
    lines = ["threshold,success_rate"] + [
        f"{t!r},{r!r}" for t, r in zip(ev.overlap_thresholds(), mean_rates)
    ]
    curves.write_text("\n".join(lines) + "\n")
    print(f"auc={report['mean']['auc']:.5f} p={report['mean']['p']:.5f} "
          f"p_norm={report['mean']['p_norm']:.5f} -> {out}")
    return 0


def cmd_stats(args) -> int:
    cfg = _run_config(args)
    if not cfg.dataset:
        raise ValueError("stats requires --dataset")
    dist = ev.min_sr_distribution(load_dataset(cfg.dataset))
    report = {
        "counts": {c.name: dist.counts[c] for c in CATEGORIES},
        "fractions": {c.name: dist.fractions()[c] for c in CATEGORIES},
        "pairs": dist.total,
        "skipped_pairs": dist.skipped,
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if cfg.output:
        Path(cfg.output).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.output).write_text(text)
    print(text, end="")
    return 0


def cmd_sample(args) -> int:
    cfg = _run_config(args)
    if not cfg.dataset or not cfg.output:
        raise ValueError("sample requires --dataset and --output")
    sequences = load_dataset(cfg.dataset)
    rng = np.random.default_rng(cfg.seed)
    samples = tk.generate_training_set(sequences, args.count, rng, tuple(cfg.sample_ratio))
    tk.export_dataset(samples, cfg.output)
    counts = {c.name: sum(1 for s in samples if s.label is c) for c in CATEGORIES}
    print(f"exported {len(samples)} samples {counts} -> {cfg.output}")
    return 0


def cmd_bench(args) -> int:
    cfg = _run_config(args)
    if not cfg.dataset:
        raise ValueError("bench requires --dataset")
    seq = load_dataset(cfg.dataset)[0]
    pipe_cfg = cfg.pipeline_config()
    cats = [RadiusCategory(int(v)) for v in (args.bench_categories or "2,4,6").split(",")]

    rows = {}
    timing = {}
    for cat in cats:
        _, stats = ev.latency_benchmark(
            lambda s, c=cat: pl.fixed_sr_track_sequence(s, c, pipe_cfg), seq, args.warmup
        )
        rows[f"SR{int(cat)}"] = {"frames": stats.frames}
        timing[f"SR{int(cat)}"] = {
            "fps": stats.fps, "mean_ms": stats.mean_ms, "median_ms": stats.median_ms
        }
    if not args.no_srrt:
        _, stats = ev.latency_benchmark(lambda s: pl.srrt_track_sequence(s, pipe_cfg), seq, args.warmup)
        rows["SRRT"] = {"frames": stats.frames}
        timing["SRRT"] = {"fps": stats.fps, "mean_ms": stats.mean_ms, "median_ms": stats.median_ms}

    report = {"sequence": seq.name, "rows": rows, "timing": timing}
    if cfg.output:
        Path(cfg.output).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.output).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, t in timing.items():
        print(f"{name}: {t['fps']:.1f} fps, median {t['median_ms']:.2f} ms, mean {t['mean_ms']:.2f} ms")
    return 0


def cmd_synth(args) -> int:
    cfg = _run_config(args)
    if not cfg.output:
        raise ValueError("synth requires --output")
    name, spec = parse_motion_spec(Path(args.spec).read_text())
    rng = np.random.default_rng(cfg.seed)
    seq = ev.generate_synthetic_sequence(spec, rng, name=name)
    out = Path(cfg.output) / name
    write_sequence(seq, out)
    print(f"wrote {len(seq)} frames -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srrt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("--dataset", help="dataset root or single sequence directory")
        p.add_argument("--output", help="output file or directory")
        p.add_argument("--config", help="run-config file (key = value lines)")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--workers", type=int, help="parallel workers (0 = logical cores)")

    p = sub.add_parser("track", help="run the regulated or fixed-radius tracker over a dataset")
    common(p)
    p.add_argument("--regulator", help="oracle | classical | file:<path>")
    p.add_argument("--tracker", choices=["ncc", "oracle"], help="base tracker kind")
    p.add_argument("--categories", help="restrict categories, e.g. 2,4")
    p.add_argument("--gamma", type=int, choices=[2, 4, 6, 8], help="fixed search radius (bypasses regulation)")
    p.add_argument("--K", type=int, help="locking frames before a reference update")
    p.add_argument("--lambda", dest="lam", type=float, help="window penalty weight")
    p.add_argument("--sigma", type=float, help="oracle tracker center noise (pixels)")

    p = sub.add_parser("eval", help="score trajectory files against ground truth")
    common(p)
    p.add_argument("--trajectories", required=True, help="directory of .txt trajectory files")

    p = sub.add_parser("stats", help="minimum search-region distribution of a dataset")
    common(p)

    p = sub.add_parser("sample", help="export a regulator training set")
    common(p)
    p.add_argument("--count", type=int, default=1000, help="number of samples")

    p = sub.add_parser("bench", help="latency comparison across radius configurations")
    common(p)
    p.add_argument("--categories", dest="bench_categories", help="fixed radii to time, e.g. 2,4,6")
    p.add_argument("--warmup", type=int, default=10, help="frames excluded from timing")
    p.add_argument("--no-srrt", action="store_true", help="skip the regulated run")
    p.add_argument("--tracker", choices=["ncc", "oracle"], help="base tracker kind")
    p.add_argument("--regulator", help="oracle | classical | file:<path>")

    p = sub.add_parser("synth", help="render a synthetic sequence from a motion-spec file")
    common(p, dataset=False)
    p.add_argument("--spec", required=True, help="motion-spec file (key = value lines)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("SRRT_LOG", "warning").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "track": cmd_track,
        "eval": cmd_eval,
        "stats": cmd_stats,
        "sample": cmd_sample,
        "bench": cmd_bench,
        "synth": cmd_synth,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # single-line machine-parsable failure
        print("error: " + " ".join(str(exc).split()), file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
