"""Search region regulator: dual-reference matching over a candidate
region, producing a probability over the four radius categories, plus the
locking-state determined update of the dynamic reference.

The feature extractor is classical (cell intensity + gradient-orientation
histograms on a stride-8 grid) and the probability head is a scoring
rule: the best-match displacement and scale imply a minimum radius
factor, which is bucketized; a best score under `tau_miss` is treated as
evidence the target left the candidate region entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .correlate import valid_correlate_per_channel, zncc_score_map
from .geometry import (
    CATEGORIES,
    CATEGORY_INDEX,
    BoundingBox,
    Patch,
    RadiusCategory,
    bucketize_factor,
    crop_resize,
    min_required_factor,
    resize_patch,
    search_region_rect,
    to_gray,
)

REFERENCE_SIDE = 128
CANDIDATE_SIDE = 384
CANDIDATE_FACTOR = 6.0
# Size of the previous box after the per-axis candidate crop: 384 / 6.
NOMINAL_MATCH_SIDE = CANDIDATE_SIDE / CANDIDATE_FACTOR

DEFAULT_STRIDE = 8
_N_ORIENT_BINS = 8


@dataclass
class FeatureMap:
    """Planar (channels, rows, cols) feature grid with its cell stride."""

    values: np.ndarray
    stride: int

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def spatial(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]


@dataclass(frozen=True)
class RegulatorOutput:
    """Probability over (SR2, SR4, SR6, SR8); entries sum to 1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (4,):
            raise ValueError(f"expected 4 probabilities, got shape {p.shape}")
        if (p < 0).any() or abs(float(p.sum()) - 1.0) > 1e-6:
            raise ValueError(f"probabilities must be non-negative and sum to 1, got {p}")
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class RegulatorState:
    """Dual reference patches plus the target-locking counter.

    `zd` starts equal to `z0` and is replaced after `locking_threshold`
    consecutive smallest-category frames.
    """

    z0: Patch
    zd: Patch
    locking_count: int = 0
    locking_threshold: int = 5
    last_update_frame: int | None = None
    frames_seen: int = 0

    def __post_init__(self):
        if self.locking_threshold < 1:
            raise ValueError("locking threshold must be >= 1")
        if not 0 <= self.locking_count <= self.locking_threshold:
            raise ValueError("locking count out of range")


@dataclass(frozen=True)
class RegulatorConfig:
    tau_miss: float = 0.3
    fusion_weights: tuple[float, float] = (0.5, 0.5)
    scale_sweep: tuple[float, ...] = (0.8, 1.0, 1.25)
    stride: int = DEFAULT_STRIDE


def reference_patch(image: np.ndarray, box: BoundingBox, mode: str = "bilinear") -> Patch:
    """Tight (factor 1) crop of `box`, resampled to the reference side."""
    return crop_resize(image, search_region_rect(box, 1.0), REFERENCE_SIDE, mode)


def init_state(
    image: np.ndarray,
    box: BoundingBox,
    locking_threshold: int = 5,
    mode: str = "bilinear",
) -> RegulatorState:
    z0 = reference_patch(image, box, mode)
    return RegulatorState(z0=z0, zd=z0, locking_threshold=locking_threshold)


def make_candidate_region(image: np.ndarray, prev: BoundingBox, mode: str = "bilinear") -> Patch:
    """Candidate region: a factor-6 crop around the previous box, resampled
    to 384 x 384. The previous box always lands as a centered 64 x 64
    square in candidate coordinates."""
    rect = search_region_rect(prev, CANDIDATE_FACTOR)
    return crop_resize(image, rect, CANDIDATE_SIDE, mode)


def extract_features(patch: Patch, stride: int = DEFAULT_STRIDE) -> FeatureMap:
    """Cell features on a stride grid: mean intensity plus an 8-bin
    gradient-orientation histogram normalized by cell gradient mass.

    Deterministic; a side of `n` yields an n // stride grid per axis.
    """
    if patch.side < 32:
        raise ValueError(f"patch side must be >= 32 for feature extraction, got {patch.side}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    gray = (to_gray(patch.pixels) / 255.0).astype(np.float32)
    grid_h = gray.shape[0] // stride
    grid_w = gray.shape[1] // stride
    gray = gray[: grid_h * stride, : grid_w * stride]

    gy, gx = np.gradient(gray)
    mag = np.sqrt(gx * gx + gy * gy)
    orient = np.mod(np.arctan2(gy, gx), np.float32(math.pi))
    bins = np.minimum((orient * (_N_ORIENT_BINS / math.pi)).astype(np.int64), _N_ORIENT_BINS - 1)

    # One scatter-add over (cell, bin) pairs instead of a sum per bin.
    rows = np.arange(grid_h * stride) // stride
    cols = np.arange(grid_w * stride) // stride
    cell_of = rows[:, None] * grid_w + cols[None, :]
    flat = (cell_of * _N_ORIENT_BINS + bins).ravel()
    hist = np.bincount(flat, weights=mag.ravel(), minlength=grid_h * grid_w * _N_ORIENT_BINS)
    hist = hist.reshape(grid_h, grid_w, _N_ORIENT_BINS).transpose(2, 0, 1)
    mass = hist.sum(axis=0)
    hist = hist / np.maximum(mass, 1e-3)[None]
    intensity = gray.reshape(grid_h, stride, grid_w, stride).mean(axis=(1, 3))
    return FeatureMap(values=np.concatenate([intensity[None], hist]), stride=stride)


def depthwise_correlate(ref: FeatureMap, cand: FeatureMap) -> FeatureMap:
    """Per-channel valid cross-correlation of candidate features with the
    reference features as kernel; channel count is preserved."""
    out = valid_correlate_per_channel(cand.values, ref.values)
    return FeatureMap(values=out, stride=cand.stride)


def _reference_pyramid(reference: Patch, cfg: RegulatorConfig) -> list[tuple[int, FeatureMap]]:
    """Reference features at every sweep scale, cached on the patch
    (references change rarely; candidates change every frame)."""
    key = (cfg.stride, cfg.scale_sweep)
    cached = getattr(reference, "_feature_pyramid", None)
    if cached is not None and cached[0] == key:
        return cached[1]
    pyramid = []
    for scale in cfg.scale_sweep:
        cells = max(2, round(NOMINAL_MATCH_SIDE * scale / cfg.stride))
        ref_scaled = resize_patch(reference, cells * cfg.stride)
        pyramid.append((cells, extract_features(ref_scaled, cfg.stride)))
    reference._feature_pyramid = (key, pyramid)
    return pyramid


def _match_score_maps(
    reference: Patch, candidate_features: FeatureMap, cfg: RegulatorConfig
) -> list[tuple[int, np.ndarray]]:
    """ZNCC score maps of one reference against the candidate, one per
    sweep scale. Returns (kernel_cells, score_map) pairs."""
    return [
        (cells, zncc_score_map(candidate_features.values, ref_features.values))
        for cells, ref_features in _reference_pyramid(reference, cfg)
    ]


def _implied_factors(cells: int, out_shape: tuple[int, int], stride: int) -> np.ndarray:
    """Minimum radius factor implied by a match at each offset of a score
    map, for a kernel of `cells` feature cells."""
    side_px = cells * stride
    center = CANDIDATE_SIDE / 2.0
    oy = np.arange(out_shape[0]) * stride + side_px / 2.0
    ox = np.arange(out_shape[1]) * stride + side_px / 2.0
    fy = (2.0 * np.abs(oy - center) + side_px) / NOMINAL_MATCH_SIDE
    fx = (2.0 * np.abs(ox - center) + side_px) / NOMINAL_MATCH_SIDE
    return np.maximum(fy[:, None], fx[None, :])


def regulate(state: RegulatorState, candidate: Patch, cfg: RegulatorConfig | None = None) -> RegulatorOutput:
    """Score the candidate region against both references and convert the
    fused evidence to a probability over the four categories.

    Each match offset/scale implies a minimum radius factor that falls in
    the SR2/SR4/SR6 buckets; the SR8 (target missing) hypothesis carries
    a constant evidence of `tau_miss`, so it wins exactly when every
    in-region match scores below the threshold.
    """
    cfg = cfg or RegulatorConfig()
    w0, wd = cfg.fusion_weights
    cand_features = extract_features(candidate, cfg.stride)
    maps0 = _match_score_maps(state.z0, cand_features, cfg)
    mapsd = _match_score_maps(state.zd, cand_features, cfg)

    evidence = np.full(4, -np.inf)
    evidence[CATEGORY_INDEX[RadiusCategory.SR8]] = cfg.tau_miss
    for (cells, m0), (_, md) in zip(maps0, mapsd):
        fused = w0 * m0 + wd * md
        factors = _implied_factors(cells, fused.shape, cfg.stride)
        for cat in (RadiusCategory.SR2, RadiusCategory.SR4, RadiusCategory.SR6):
            mask = _bucket_mask(factors, cat)
            if mask.any():
                idx = CATEGORY_INDEX[cat]
                evidence[idx] = max(evidence[idx], float(fused[mask].max()))

    shifted = np.exp(evidence - evidence.max())
    return RegulatorOutput(probs=shifted / shifted.sum())


def _bucket_mask(factors: np.ndarray, cat: RadiusCategory) -> np.ndarray:
    lo = {RadiusCategory.SR2: 0.0, RadiusCategory.SR4: 2.0, RadiusCategory.SR6: 4.0}[cat]
    return (factors > lo) & (factors <= lo + 2.0)


def select_category(out: RegulatorOutput) -> RadiusCategory:
    """Argmax category; exact ties resolve toward the smaller radius."""
    return CATEGORIES[int(np.argmax(out.probs))]


def one_hot_output(cat: RadiusCategory) -> RegulatorOutput:
    probs = np.zeros(4)
    probs[CATEGORY_INDEX[cat]] = 1.0
    return RegulatorOutput(probs=probs)


def oracle_regulate(prev: BoundingBox, cur_gt: BoundingBox | None) -> RadiusCategory:
    """Ground-truth regulator: the bucket of the exact minimum factor.

    Only usable in test/benchmark mode where ground truth exists.
    """
    if cur_gt is None:
        raise RuntimeError("oracle regulation requires ground truth for the current frame")
    return bucketize_factor(min_required_factor(prev, cur_gt))


def ldu_step(
    state: RegulatorState,
    chosen: RadiusCategory,
    predicted: BoundingBox,
    image: np.ndarray,
    mode: str = "bilinear",
) -> RegulatorState:
    """Locking-state determined update.

    Choosing the smallest category increments the locking counter; any
    other choice resets it. At the threshold the dynamic reference is
    replaced with a tight crop of the predicted box and the counter
    restarts.
    """
    frame = state.frames_seen + 1
    if chosen is RadiusCategory.SR2:
        count = state.locking_count + 1
    else:
        count = 0
    if count >= state.locking_threshold:
        zd = reference_patch(image, predicted, mode)
        return replace(state, zd=zd, locking_count=0, last_update_frame=frame, frames_seen=frame)
    return replace(state, locking_count=count, frames_seen=frame)


class ScoreTable:
    """Per-frame regulator probabilities loaded from a CSV file, so an
    externally trained regulator can drive the pipeline.

    Format: header `frame,p2,p4,p6,p8`, then comma-separated decimals.
    """

    HEADER = "frame,p2,p4,p6,p8"

    def __init__(self, rows: dict[int, np.ndarray]):
        self.rows = rows

    @classmethod
    def load(cls, path: str | Path) -> "ScoreTable":
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0].strip() != cls.HEADER:
            raise ValueError(f"{path}: expected header line {cls.HEADER!r}")
        rows: dict[int, np.ndarray] = {}
        for ln, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}: line {ln}: expected 5 fields, got {len(parts)}")
            frame = int(parts[0])
            probs = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            if (probs < 0).any() or probs.sum() <= 0:
                raise ValueError(f"{path}: line {ln}: probabilities must be non-negative with positive sum")
            rows[frame] = probs / probs.sum()
        return cls(rows)

    def output(self, frame: int) -> RegulatorOutput:
        if frame not in self.rows:
            raise KeyError(f"no regulator scores for frame {frame}")
        return RegulatorOutput(probs=self.rows[frame])
