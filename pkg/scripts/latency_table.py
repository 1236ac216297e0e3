#!/usr/bin/env python3
"""Radius-size comparison table on a synthetic benchmark.

Reproduces the fixed-radius / restricted / regulated comparison
methodology: each row runs the same NCC tracker with the search region
fixed to one radius, restricted to a pair, or fully regulated, and
reports accuracy (AUC, precision) next to speed (fps, median latency).
Small regions are fast but lose the target on the planted jumps; large
ones are robust but slow; regulation gets both.
"""

import argparse

import numpy as np

from srrt.evaluation import (
    MotionSpec,
    generate_synthetic_sequence,
    latency_benchmark,
    metric_report,
)
from srrt.geometry import RadiusCategory
from srrt.pipeline import PipelineConfig, srrt_track_sequence

SR2, SR4, SR6, SR8 = RadiusCategory

ROWS = [
    ("2SR", (SR2,)),
    ("2SR/4SR", (SR2, SR4)),
    ("4SR", (SR4,)),
    ("4SR/6SR", (SR4, SR6)),
    ("6SR", (SR6,)),
    ("SRRT", (SR2, SR4, SR6, SR8)),
]


def build_sequence(length: int, seed: int):
    # Mostly small motion with occasional jumps that need a 4x region.
    jumps = tuple((frame, 30, 0) for frame in range(25, length - 1, 50))
    spec = MotionSpec(
        length=length, image_size=(420, 320), target_size=(24, 24),
        start=(24, 148), law="scripted", velocity=(1, 0), jumps=jumps, texture_seed=6,
    )
    return generate_synthetic_sequence(spec, np.random.default_rng(seed))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--warmup", type=int, default=10)
    parser.add_argument("--regulator", default="oracle", help="oracle | classical")
    args = parser.parse_args()

    seq = build_sequence(args.frames, args.seed)
    print(f"{'config':10s} {'AUC':>7s} {'P':>7s} {'fps':>8s} {'latency':>10s}")
    for name, categories in ROWS:
        cfg = PipelineConfig(
            regulator=args.regulator, tracker="ncc", seed=args.seed, categories=categories
        )
        traj, stats = latency_benchmark(
            lambda s, c=cfg: srrt_track_sequence(s, c), seq, warmup=args.warmup
        )
        gt = [seq.gt[r.frame] for r in traj.records]
        metrics = metric_report(traj, gt)
        print(
            f"{name:10s} {metrics['auc']:7.3f} {metrics['p']:7.3f} "
            f"{stats.fps:8.1f} {stats.median_ms:8.2f}ms"
        )


if __name__ == "__main__":
    main()
