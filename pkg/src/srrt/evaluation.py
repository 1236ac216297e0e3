"""One-pass-evaluation metrics, the minimum-search-region distribution
statistic, latency benchmarking, and a synthetic sequence generator for
harness runs.

Success uses a strict `>` at each of 21 overlap thresholds; normalized
precision divides the center error componentwise by the ground-truth box
size and thresholds its Euclidean norm at 0.2. Degenerate ground-truth
boxes (absent targets) drop out of every denominator and are counted."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .geometry import CATEGORIES, BoundingBox, RadiusCategory, bucketize_factor, iou, min_required_factor
from .pipeline import Trajectory
from .sequences import Sequence

N_THRESHOLDS = 21
PRECISION_PX = 20.0
NORM_PRECISION_THRESHOLD = 0.2


def overlap_thresholds() -> np.ndarray:
    return np.arange(N_THRESHOLDS) / (N_THRESHOLDS - 1)


@dataclass(frozen=True)
class SuccessCurve:
    thresholds: np.ndarray
    rates: np.ndarray
    auc: float
    skipped: int = 0


@dataclass(frozen=True)
class PrecisionResult:
    p: float
    p_norm: float
    skipped: int = 0


@dataclass
class SrDistribution:
    counts: dict[RadiusCategory, int] = field(default_factory=lambda: {c: 0 for c in CATEGORIES})
    skipped: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def fractions(self) -> dict[RadiusCategory, float]:
        total = self.total
        if total == 0:
            return {c: 0.0 for c in CATEGORIES}
        return {c: self.counts[c] / total for c in CATEGORIES}

    def merge(self, other: "SrDistribution") -> "SrDistribution":
        out = SrDistribution(skipped=self.skipped + other.skipped)
        for c in CATEGORIES:
            out.counts[c] = self.counts[c] + other.counts[c]
        return out


def _paired(traj: Trajectory, gt: list[BoundingBox | None]):
    if len(traj) != len(gt):
        raise ValueError(f"trajectory has {len(traj)} records but {len(gt)} ground-truth boxes")
    for record, box in zip(traj.records, gt):
        yield record.box, box


def success_curve(traj: Trajectory, gt: list[BoundingBox | None]) -> SuccessCurve:
    """Success rate at 21 overlap thresholds (strict >) and its mean."""
    overlaps = []
    skipped = 0
    for pred, truth in _paired(traj, gt):
        if truth is None:
            skipped += 1
            continue
        overlaps.append(iou(pred, truth))
    thresholds = overlap_thresholds()
    if not overlaps:
        rates = np.zeros(N_THRESHOLDS)
    else:
        arr = np.asarray(overlaps)
        rates = (arr[None, :] > thresholds[:, None]).mean(axis=1)
    return SuccessCurve(thresholds=thresholds, rates=rates, auc=float(rates.mean()), skipped=skipped)


def precision_curves(traj: Trajectory, gt: list[BoundingBox | None]) -> PrecisionResult:
    """Precision at 20 px center error and size-normalized precision at 0.2."""
    hits_p = hits_norm = n = skipped = 0
    for pred, truth in _paired(traj, gt):
        if truth is None:
            skipped += 1
            continue
        dx = pred.cx - truth.cx
        dy = pred.cy - truth.cy
        if math.hypot(dx, dy) <= PRECISION_PX:
            hits_p += 1
        if math.hypot(dx / truth.w, dy / truth.h) <= NORM_PRECISION_THRESHOLD:
            hits_norm += 1
        n += 1
    if n == 0:
        return PrecisionResult(p=0.0, p_norm=0.0, skipped=skipped)
    return PrecisionResult(p=hits_p / n, p_norm=hits_norm / n, skipped=skipped)


def min_sr_distribution(dataset: Iterable[Sequence]) -> SrDistribution:
    """Bucket the minimum required factor of every adjacent ground-truth
    pair, per sequence. Pairs with an absent box on either side are
    skipped and counted."""
    dist = SrDistribution()
    for seq in dataset:
        if seq.gt is None:
            continue
        for prev, cur in zip(seq.gt[:-1], seq.gt[1:]):
            if prev is None or cur is None:
                dist.skipped += 1
                continue
            cat = bucketize_factor(min_required_factor(prev, cur))
            dist.counts[cat] += 1
    return dist


@dataclass(frozen=True)
class LatencyStats:
    fps: float
    mean_ms: float
    median_ms: float
    frames: int


def latency_benchmark(
    runner: Callable[[Sequence], Trajectory], seq: Sequence, warmup: int = 10
) -> tuple[Trajectory, LatencyStats]:
    """Run a tracking callable over a sequence and summarize per-frame
    wall-clock latency, excluding the first `warmup` tracked frames."""
    if len(seq) - 1 <= warmup:
        raise ValueError(f"sequence of {len(seq)} frames is too short for warmup={warmup}")
    traj = runner(seq)
    lat = np.asarray(traj.latencies_ms()[warmup:])
    mean = float(lat.mean())
    return traj, LatencyStats(
        fps=1000.0 / mean, mean_ms=mean, median_ms=float(np.median(lat)), frames=len(lat)
    )


@dataclass(frozen=True)
class MotionSpec:
    """Recipe for a rendered synthetic sequence.

    The target is a textured rectangle moved over a textured background;
    motion is quantized to whole pixels so rendered frames and ground
    truth agree exactly. Laws: "constant" velocity, "random_walk" with
    per-frame normal steps of `walk_sigma`, or "scripted" (constant
    velocity plus the given per-frame jumps).
    """

    length: int = 60
    image_size: tuple[int, int] = (256, 256)  # (width, height)
    target_size: tuple[int, int] = (24, 24)  # (width, height)
    start: tuple[int, int] | None = None  # top-left; None centers the target
    law: str = "constant"
    velocity: tuple[int, int] = (0, 0)
    walk_sigma: float = 0.0
    jumps: tuple[tuple[int, int, int], ...] = ()  # (frame, dx, dy)
    texture_seed: int = 0
    channels: int = 1

    def __post_init__(self):
        if self.law not in ("constant", "random_walk", "scripted"):
            raise ValueError(f"unknown motion law {self.law!r}")
        if self.length < 2:
            raise ValueError("need at least 2 frames")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")


def _positions(spec: MotionSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    width, height = spec.image_size
    tw, th = spec.target_size
    if spec.start is None:
        pos = [(width - tw) // 2, (height - th) // 2]
    else:
        pos = list(spec.start)
    jumps = {frame: (dx, dy) for frame, dx, dy in spec.jumps}
    out = [tuple(pos)]
    for t in range(1, spec.length):
        step = list(spec.velocity) if spec.law in ("constant", "scripted") else [0, 0]
        if spec.law == "random_walk" and spec.walk_sigma > 0:
            step = np.rint(rng.normal(0.0, spec.walk_sigma, 2)).astype(int).tolist()
        if spec.law == "scripted" and t in jumps:
            step[0] += jumps[t][0]
            step[1] += jumps[t][1]
        pos = [pos[0] + step[0], pos[1] + step[1]]
        if not (0 <= pos[0] <= width - tw and 0 <= pos[1] <= height - th):
            raise ValueError(f"motion spec drives the target off canvas at frame {t}")
        out.append(tuple(pos))
    return out


def generate_synthetic_sequence(
    spec: MotionSpec, rng: np.random.Generator, name: str = "synthetic"
) -> Sequence:
    """Render a sequence with exact ground truth; deterministic given the
    texture seed and the generator state."""
    width, height = spec.image_size
    tw, th = spec.target_size
    texture_rng = np.random.default_rng(spec.texture_seed)
    background = texture_rng.integers(96, 160, (spec.channels, height, width)).astype(np.uint8)
    target = texture_rng.integers(0, 256, (spec.channels, th, tw)).astype(np.uint8)

    frames = []
    gt: list[BoundingBox | None] = []
    for x0, y0 in _positions(spec, rng):
        frame = background.copy()
        frame[:, y0 : y0 + th, x0 : x0 + tw] = target
        frames.append(frame)
        gt.append(BoundingBox(x0 + tw / 2.0, y0 + th / 2.0, float(tw), float(th)))
    return Sequence(name=name, frames=frames, gt=gt)


def gt_only_sequence(name: str, boxes: list[BoundingBox | None], image_size=(256, 256)) -> Sequence:
    """Sequence carrying only ground truth (frames are unrenderable
    placeholders); enough for dataset statistics."""
    width, height = image_size
    placeholder = np.zeros((1, height, width), dtype=np.uint8)
    return Sequence(name=name, frames=[placeholder] * len(boxes), gt=list(boxes))


def planted_factor_track(
    start: BoundingBox, factors: list[float], rng: np.random.Generator | None = None
) -> list[BoundingBox]:
    """Ground-truth track whose adjacent-pair minimum factors equal the
    given values exactly (horizontal center moves, constant size)."""
    boxes = [start]
    direction = 1.0
    for f in factors:
        prev = boxes[-1]
        if f < 1.0:
            raise ValueError("factors below 1 are unreachable for a constant-size target")
        delta = (f - 1.0) * prev.w / 2.0
        if rng is not None and rng.random() < 0.5:
            direction = -direction
        boxes.append(BoundingBox(prev.cx + direction * delta, prev.cy, prev.w, prev.h))
    return boxes


def metric_report(
    traj: Trajectory, gt: list[BoundingBox | None]
) -> dict:
    """Bundle of the headline metrics for one trajectory."""
    curve = success_curve(traj, gt)
    prec = precision_curves(traj, gt)
    return {
        "auc": curve.auc,
        "p": prec.p,
        "p_norm": prec.p_norm,
        "frames": len(traj),
        "skipped_frames": curve.skipped,
        "success_rates": [float(r) for r in curve.rates],
        "category_fractions": _category_fractions(traj),
    }


def _category_fractions(traj: Trajectory) -> dict[str, float]:
    counts = {c: 0 for c in CATEGORIES}
    for record in traj.records:
        counts[record.category] += 1
    total = max(len(traj), 1)
    return {c.name: counts[c] / total for c in CATEGORIES}
