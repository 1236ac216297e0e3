"""Training-sample generation for the regulator: jittered candidate
regions, category labeling, the cross-entropy objective, and dataset
export for an external training pipeline.

Candidates are drawn at six times the target size with a scale jitter
exponent and per-axis location jitter; the location jitter for a
requested category is solved by inverting the labeler's geometry and
every sample is re-verified before acceptance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (
    CATEGORIES,
    CATEGORY_INDEX,
    BoundingBox,
    Patch,
    RadiusCategory,
    RegionRect,
    bucketize_factor,
    crop_resize,
    min_required_factor,
)
from .regulator import CANDIDATE_FACTOR, CANDIDATE_SIDE, reference_patch
from .sequences import Sequence, save_image

MAX_FRAME_SPREAD = 100
DELTA_S_RANGE = 0.25
_SR8_FACTOR_CAP = 9.0
_MAX_DRAWS = 1000


class SkipSequence(Exception):
    """Sequence unusable for sampling (too short or too few annotations)."""


class SamplingFailure(RuntimeError):
    """Jitter solving kept missing the requested category."""


@dataclass(frozen=True)
class JitterParams:
    """Scale jitter exponent and per-axis location jitter factors."""

    delta_s: float
    delta_c: tuple[float, float]

    def __post_init__(self):
        if not (math.isfinite(self.delta_s) and all(math.isfinite(d) for d in self.delta_c)):
            raise ValueError("jitter factors must be finite")


@dataclass(frozen=True)
class SampleProvenance:
    sequence: str
    frames: tuple[int, int, int]  # (z0 frame, zd frame, candidate frame)
    jitter: JitterParams

    def spread(self) -> int:
        return max(self.frames) - min(self.frames)


@dataclass
class TrainingSample:
    candidate: Patch | None
    z0: Patch | None
    zd: Patch | None
    label: RadiusCategory
    provenance: SampleProvenance
    candidate_rect: RegionRect
    gt: BoundingBox

    def __post_init__(self):
        if self.provenance.spread() > MAX_FRAME_SPREAD:
            raise ValueError(f"frame spread {self.provenance.spread()} exceeds {MAX_FRAME_SPREAD}")
        if label_category(self.candidate_rect, self.gt) is not self.label:
            raise ValueError("stored label disagrees with the sample geometry")


def jittered_candidate(gt: BoundingBox, j: JitterParams) -> RegionRect:
    """Candidate rectangle around a ground-truth box.

    Size is six times the box per axis scaled by e^delta_s; the center
    shifts by (h + w) / 2 times the per-axis location jitter.
    """
    scale = CANDIDATE_FACTOR * math.exp(j.delta_s)
    shift_unit = (gt.h + gt.w) / 2.0
    return RegionRect(
        cx=gt.cx + shift_unit * j.delta_c[0],
        cy=gt.cy + shift_unit * j.delta_c[1],
        w=gt.w * scale,
        h=gt.h * scale,
    )


def label_category(candidate: RegionRect, gt: BoundingBox) -> RadiusCategory:
    """Category implied by the box position inside the candidate, taking
    the candidate's per-axis size divided by six as the unit scale. A box
    not contained by the candidate exceeds factor six and labels SR8."""
    unit = BoundingBox(
        candidate.cx,
        candidate.cy,
        candidate.w / CANDIDATE_FACTOR,
        candidate.h / CANDIDATE_FACTOR,
    )
    return bucketize_factor(min_required_factor(unit, gt))


_BUCKET_BOUNDS = {
    RadiusCategory.SR2: (0.0, 2.0),
    RadiusCategory.SR4: (2.0, 4.0),
    RadiusCategory.SR6: (4.0, 6.0),
    RadiusCategory.SR8: (6.0, _SR8_FACTOR_CAP),
}


def draw_jitter_for_target(
    gt: BoundingBox,
    target: RadiusCategory,
    rng: np.random.Generator,
    delta_s_range: float = DELTA_S_RANGE,
) -> JitterParams:
    """Draw jitter whose labeled category equals `target`.

    The implied factor per axis is (2|shift| + size) / (size e^delta_s),
    so a goal factor inverts to a shift magnitude; the dominant axis gets
    the goal, the other a smaller factor, signs are random. Retries on
    the rare float-boundary miss.
    """
    lo, hi = _BUCKET_BOUNDS[target]
    for _ in range(_MAX_DRAWS):
        ds = float(rng.uniform(-delta_s_range, delta_s_range))
        floor = math.exp(-ds)  # factor attainable with zero shift
        goal_lo = max(lo, floor)
        if goal_lo >= hi:
            continue
        goal = float(rng.uniform(goal_lo, hi))
        other = float(rng.uniform(floor, goal))
        factors = [goal, other]
        rng.shuffle(factors)
        signs = rng.choice([-1.0, 1.0], size=2)
        shift_unit = (gt.h + gt.w) / 2.0
        deltas = []
        for axis_size, factor, sign in zip((gt.w, gt.h), factors, signs):
            shift = (factor * axis_size * math.exp(ds) - axis_size) / 2.0
            deltas.append(float(sign * max(shift, 0.0) / shift_unit))
        params = JitterParams(delta_s=ds, delta_c=(deltas[0], deltas[1]))
        if label_category(jittered_candidate(gt, params), gt) is target:
            return params
    raise SamplingFailure(f"could not hit category {target.name} after {_MAX_DRAWS} draws")


def _annotated_indices(seq: Sequence) -> list[int]:
    if seq.gt is None:
        return []
    return [i for i, b in enumerate(seq.gt) if b is not None]


def sample_training_pair(
    seq: Sequence,
    rng: np.random.Generator,
    target: RadiusCategory,
    materialize: bool = True,
    delta_s_range: float = DELTA_S_RANGE,
) -> TrainingSample:
    """Draw one training sample from a sequence.

    Three annotated frames are drawn within a spread of 100; the initial
    reference comes from the first of the triple and the candidate from
    the last, with the temporal order mirrored half the time. The
    candidate crop is jittered so its label equals `target` and the label
    is re-verified. With materialize=False only geometry and label are
    produced (no pixel work), which keeps large statistical runs cheap.
    """
    indices = _annotated_indices(seq)
    if len(indices) < 3:
        raise SkipSequence(f"sequence {seq.name!r} has fewer than 3 annotated frames")

    for _ in range(_MAX_DRAWS):
        first = int(rng.integers(0, len(indices) - 2))
        window = [i for i in indices[first + 1 :] if indices[first] + MAX_FRAME_SPREAD >= i]
        if len(window) < 2:
            continue
        pick = sorted(rng.choice(len(window), size=2, replace=False))
        triple = (indices[first], window[pick[0]], window[pick[1]])
        if rng.random() < 0.5:
            triple = triple[::-1]
        f_z0, f_zd, f_cand = triple
        gt_cand = seq.gt[f_cand]
        jitter = draw_jitter_for_target(gt_cand, target, rng, delta_s_range)
        rect = jittered_candidate(gt_cand, jitter)
        label = label_category(rect, gt_cand)
        if label is not target:
            continue
        candidate = z0 = zd = None
        if materialize:
            candidate = crop_resize(seq.image(f_cand), rect, CANDIDATE_SIDE)
            z0 = reference_patch(seq.image(f_z0), seq.gt[f_z0])
            zd = reference_patch(seq.image(f_zd), seq.gt[f_zd])
        return TrainingSample(
            candidate=candidate,
            z0=z0,
            zd=zd,
            label=label,
            provenance=SampleProvenance(seq.name, (f_z0, f_zd, f_cand), jitter),
            candidate_rect=rect,
            gt=gt_cand,
        )
    raise SamplingFailure(f"no valid frame triple in sequence {seq.name!r}")


def generate_training_set(
    sequences: list[Sequence],
    count: int,
    rng: np.random.Generator,
    ratio: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0),
    materialize: bool = True,
) -> list[TrainingSample]:
    """Draw `count` samples with exact category proportions.

    The target schedule repeats categories per the ratio weights (largest
    remainder for the leftover), shuffled; sequences are drawn uniformly,
    skipping unusable ones.
    """
    weights = np.asarray(ratio, dtype=np.float64)
    if weights.shape != (4,) or (weights < 0).any() or weights.sum() <= 0:
        raise ValueError("ratio must be 4 non-negative weights with positive sum")
    quota = weights / weights.sum() * count
    counts = np.floor(quota).astype(int)
    for _ in range(count - counts.sum()):
        counts[int(np.argmax(quota - counts))] += 1
    schedule = [cat for cat, n in zip(CATEGORIES, counts) for _ in range(n)]
    rng.shuffle(schedule)

    usable = [s for s in sequences if len(_annotated_indices(s)) >= 3]
    if not usable:
        raise SkipSequence("no sequence has 3 annotated frames")
    samples = []
    for target in schedule:
        seq = usable[int(rng.integers(0, len(usable)))]
        samples.append(sample_training_pair(seq, rng, target, materialize))
    return samples


def cross_entropy(probs, labels) -> float:
    """Mean negative log-likelihood of the true categories (natural log).

    Each row of `probs` must already be normalized. Zero probability at
    the true label is clamped to 1e-12 with a warning.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 1:
        p = p[None]
    if p.ndim != 2 or p.shape[1] != len(CATEGORIES):
        raise ValueError(f"expected (N, 4) probabilities, got shape {p.shape}")
    if p.shape[0] == 0:
        raise ValueError("empty batch")
    labels = [labels] if isinstance(labels, RadiusCategory) else list(labels)
    if len(labels) != p.shape[0]:
        raise ValueError(f"batch size mismatch: {p.shape[0]} probs vs {len(labels)} labels")
    if (p < 0).any() or (np.abs(p.sum(axis=1) - 1.0) > 1e-6).any():
        raise ValueError("probability rows must be non-negative and sum to 1")
    idx = np.array([CATEGORY_INDEX[l] for l in labels])
    true_p = p[np.arange(len(labels)), idx]
    if (true_p < 1e-12).any():
        warnings.warn("zero probability at a true label; clamping to 1e-12", stacklevel=2)
        true_p = np.maximum(true_p, 1e-12)
    return float(-np.mean(np.log(true_p)))


INDEX_HEADER = "id,seq,frames,label,delta_s,delta_c"


def export_dataset(samples: list[TrainingSample], path: str | Path) -> Path:
    """Write patches as lossless PNGs plus an index file that allows
    exact reconstruction of each sample's geometry and label."""
    path = Path(path)
    patches_dir = path / "patches"
    patches_dir.mkdir(parents=True, exist_ok=True)
    lines = [INDEX_HEADER]
    for i, s in enumerate(samples):
        j = s.provenance.jitter
        frames = ":".join(str(f) for f in s.provenance.frames)
        delta_c = f"{j.delta_c[0]!r}:{j.delta_c[1]!r}"
        lines.append(f"{i},{s.provenance.sequence},{frames},{int(s.label)},{j.delta_s!r},{delta_c}")
        for tag, patch in (("cand", s.candidate), ("z0", s.z0), ("zd", s.zd)):
            if patch is not None:
                save_image(patches_dir / f"{i:06d}_{tag}.png", patch.pixels)
    (path / "index.csv").write_text("\n".join(lines) + "\n")
    return path


def import_dataset(path: str | Path, sequences: list[Sequence]) -> list[TrainingSample]:
    """Rebuild exported samples (geometry from the index plus the source
    sequences' ground truth; patches are not reloaded)."""
    path = Path(path)
    by_name = {s.name: s for s in sequences}
    lines = (path / "index.csv").read_text().splitlines()
    if not lines or lines[0] != INDEX_HEADER:
        raise ValueError(f"{path}: bad index header")
    samples = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        ident, seq_name, frames_s, label_s, ds_s, dc_s = line.split(",")
        if seq_name not in by_name:
            raise ValueError(f"{path}: line {ln}: unknown sequence {seq_name!r}")
        frames = tuple(int(v) for v in frames_s.split(":"))
        dcx, dcy = (float(v) for v in dc_s.split(":"))
        jitter = JitterParams(delta_s=float(ds_s), delta_c=(dcx, dcy))
        gt = by_name[seq_name].gt[frames[2]]
        rect = jittered_candidate(gt, jitter)
        samples.append(
            TrainingSample(
                candidate=None,
                z0=None,
                zd=None,
                label=RadiusCategory(int(label_s)),
                provenance=SampleProvenance(seq_name, frames, jitter),
                candidate_rect=rect,
                gt=gt,
            )
        )
    return samples
