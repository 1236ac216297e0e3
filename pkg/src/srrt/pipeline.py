"""Online tracking loops: the regulated (SRRT) loop and the fixed-radius
baseline, both producing per-frame trajectories.

Frame 0 initializes the references and tracker templates from the given
box; every later frame is regulated (or forced), cropped, tracked,
mapped back to image coordinates, and recorded.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import regulator as reg
from .geometry import (
    CATEGORIES,
    BoundingBox,
    RadiusCategory,
    crop_resize,
    search_region_rect,
)
from .sequences import Sequence
from .trackers import (
    DEFAULT_SCALE_SWEEP,
    DEFAULT_WINDOW_WEIGHT,
    TrackerSet,
    ncc_track,
    oracle_noisy_track,
    patch_to_image_coords,
)


@dataclass(frozen=True)
class TrajectoryRecord:
    frame: int
    box: BoundingBox
    category: RadiusCategory
    confidence: float
    latency_ms: float


@dataclass
class Trajectory:
    """Per-frame predictions from frame 1 on (frame 0 is initialization)."""

    records: list[TrajectoryRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def boxes(self) -> list[BoundingBox]:
        return [r.box for r in self.records]

    def categories(self) -> list[RadiusCategory]:
        return [r.category for r in self.records]

    def latencies_ms(self) -> list[float]:
        return [r.latency_ms for r in self.records]

    def same_tracking(self, other: "Trajectory") -> bool:
        """Exact equality of everything except wall-clock latency."""
        if len(self) != len(other):
            return False
        return all(
            a.frame == b.frame
            and a.box == b.box
            and a.category == b.category
            and a.confidence == b.confidence
            for a, b in zip(self.records, other.records)
        )


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the online loop; defaults give the regulated NCC
    pipeline over all four categories."""

    regulator: str = "classical"  # classical | oracle | file:<path>
    tracker: str = "ncc"  # ncc | oracle
    locking_frames: int = 5
    window_weight: float = DEFAULT_WINDOW_WEIGHT
    tau_miss: float = 0.3
    fusion_weights: tuple[float, float] = (0.5, 0.5)
    categories: tuple[RadiusCategory, ...] = CATEGORIES
    seed: int = 0
    noise_sigma: float = 0.0
    noise_sigma_scale: float = 0.0
    tracker_scale_sweep: tuple[float, ...] = DEFAULT_SCALE_SWEEP
    regulator_scale_sweep: tuple[float, ...] = (0.8, 1.0, 1.25)
    feature_stride: int = reg.DEFAULT_STRIDE
    resample: str = "bilinear"

    def __post_init__(self):
        cats = tuple(sorted(set(self.categories)))
        if not cats or any(c not in CATEGORIES for c in cats):
            raise ValueError("category restriction must be a non-empty subset of SR2/SR4/SR6/SR8")
        object.__setattr__(self, "categories", cats)
        if not 0.0 <= self.window_weight <= 1.0:
            raise ValueError("window weight must be in [0, 1]")
        if self.locking_frames < 1:
            raise ValueError("locking_frames must be >= 1")
        if self.regulator not in ("classical", "oracle") and not self.regulator.startswith("file:"):
            raise ValueError(f"unknown regulator kind {self.regulator!r}")
        if self.tracker not in ("ncc", "oracle"):
            raise ValueError(f"unknown tracker kind {self.tracker!r}")

    def regulator_config(self) -> reg.RegulatorConfig:
        return reg.RegulatorConfig(
            tau_miss=self.tau_miss,
            fusion_weights=self.fusion_weights,
            scale_sweep=self.regulator_scale_sweep,
            stride=self.feature_stride,
        )


def clamp_category(chosen: RadiusCategory, allowed: tuple[RadiusCategory, ...]) -> RadiusCategory:
    """Restrict to the allowed set: nearest allowed category upward when
    one exists (losing the target costs more than extra search area),
    otherwise nearest downward."""
    if chosen in allowed:
        return chosen
    larger = [c for c in allowed if c > chosen]
    if larger:
        return min(larger)
    return max(c for c in allowed if c < chosen)


def _tracker_kind(cfg: PipelineConfig) -> str:
    return "oracle-noisy" if cfg.tracker == "oracle" else "ncc"


def _track_step(
    trackers: TrackerSet,
    image: np.ndarray,
    prev: BoundingBox,
    chosen: RadiusCategory,
    gt: BoundingBox | None,
    rng: np.random.Generator,
    cfg: PipelineConfig,
) -> tuple[BoundingBox, float]:
    region = search_region_rect(prev, chosen.factor())
    handle = trackers.dispatch(chosen)
    if handle.kind == "oracle-noisy":
        result = oracle_noisy_track(handle, gt, region, prev, rng)
        return result.box, result.confidence
    search = crop_resize(image, region, handle.input_side, cfg.resample)
    _, patch_box, confidence = ncc_track(
        handle,
        search,
        scale_sweep=cfg.tracker_scale_sweep,
        lam=cfg.window_weight,
        crop_factor=chosen.factor(),
    )
    return patch_to_image_coords(patch_box, region, handle.input_side), confidence


def _check_sequence(seq: Sequence) -> BoundingBox:
    if len(seq) < 2:
        raise ValueError(f"sequence {seq.name!r} needs at least 2 frames")
    return seq.initial_box()


def srrt_track_sequence(seq: Sequence, cfg: PipelineConfig | None = None) -> Trajectory:
    """Run the regulated loop over one sequence.

    Per frame: candidate region from the previous prediction, regulate,
    clamp the category to the restriction set, crop the chosen region,
    dispatch and track, record, then advance the locking state.
    """
    cfg = cfg or PipelineConfig()
    box0 = _check_sequence(seq)
    rng = np.random.default_rng(cfg.seed)
    img0 = seq.image(0)

    state = reg.init_state(img0, box0, cfg.locking_frames, cfg.resample)
    trackers = TrackerSet.initialize(
        img0, box0, _tracker_kind(cfg), cfg.noise_sigma, cfg.noise_sigma_scale, cfg.resample
    )
    reg_cfg = cfg.regulator_config()
    table = reg.ScoreTable.load(cfg.regulator[5:]) if cfg.regulator.startswith("file:") else None

    traj = Trajectory()
    prev = box0
    for t in range(1, len(seq)):
        start = time.perf_counter()
        image = seq.image(t)
        gt_t = seq.gt[t] if seq.gt is not None else None

        if cfg.regulator == "classical":
            candidate = reg.make_candidate_region(image, prev, cfg.resample)
            output = reg.regulate(state, candidate, reg_cfg)
        elif cfg.regulator == "oracle":
            output = reg.one_hot_output(reg.oracle_regulate(prev, gt_t))
        else:
            output = table.output(t)

        chosen = clamp_category(reg.select_category(output), cfg.categories)
        box, confidence = _track_step(trackers, image, prev, chosen, gt_t, rng, cfg)
        latency = (time.perf_counter() - start) * 1000.0
        traj.records.append(TrajectoryRecord(t, box, chosen, confidence, latency))

        state = reg.ldu_step(state, chosen, box, image, cfg.resample)
        prev = box
    return traj


def fixed_sr_track_sequence(
    seq: Sequence, gamma: RadiusCategory, cfg: PipelineConfig | None = None
) -> Trajectory:
    """Baseline loop: the regulator is bypassed and the category constant."""
    cfg = cfg or PipelineConfig()
    box0 = _check_sequence(seq)
    rng = np.random.default_rng(cfg.seed)
    trackers = TrackerSet.initialize(
        seq.image(0), box0, _tracker_kind(cfg), cfg.noise_sigma, cfg.noise_sigma_scale, cfg.resample
    )

    traj = Trajectory()
    prev = box0
    for t in range(1, len(seq)):
        start = time.perf_counter()
        image = seq.image(t)
        gt_t = seq.gt[t] if seq.gt is not None else None
        box, confidence = _track_step(trackers, image, prev, gamma, gt_t, rng, cfg)
        latency = (time.perf_counter() - start) * 1000.0
        traj.records.append(TrajectoryRecord(t, box, gamma, confidence, latency))
        prev = box
    return traj


def write_trajectory(traj: Trajectory, path: str | Path) -> None:
    """One line per frame: frame,x,y,w,h,category,confidence,latency_ms
    (top-left box convention, no header)."""
    lines = []
    for r in traj.records:
        x, y, w, h = r.box.to_topleft()
        lines.append(f"{r.frame},{x!r},{y!r},{w!r},{h!r},{int(r.category)},{r.confidence!r},{r.latency_ms:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path: str | Path) -> Trajectory:
    traj = Trajectory()
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ValueError(f"{path}: line {ln}: expected 8 fields, got {len(parts)}")
        frame = int(parts[0])
        x, y, w, h = (float(v) for v in parts[1:5])
        category = RadiusCategory(int(parts[5]))
        traj.records.append(
            TrajectoryRecord(
                frame=frame,
                box=BoundingBox.from_topleft(x, y, w, h),
                category=category,
                confidence=float(parts[6]),
                latency_ms=float(parts[7]),
            )
        )
    return traj


def write_run_metadata(path: str | Path, cfg: PipelineConfig, extra: dict | None = None) -> None:
    """Sidecar metadata: the full config and seed (no timing data)."""
    payload = asdict(cfg)
    payload["categories"] = [int(c) for c in cfg.categories]
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
