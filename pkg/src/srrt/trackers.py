"""Radius-dedicated base trackers behind one interface.

Three handles cover the 2/4/6 radius categories at fixed input sides
128/256/384; the largest also serves category 8 (its crop is taken at
factor 8 and resampled to 384). The stand-in implementations are a
multi-scale normalized-cross-correlation matcher and a ground-truth
oracle with configurable noise for harness runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlate import zncc_score_map
from .geometry import (
    BoundingBox,
    Patch,
    RadiusCategory,
    RegionRect,
    crop_resize,
    rect_contains_point,
    resize_patch,
    search_region_rect,
    to_gray,
)

INPUT_SIDES = {
    RadiusCategory.SR2: 128,
    RadiusCategory.SR4: 256,
    RadiusCategory.SR6: 384,
}

DEFAULT_SCALE_SWEEP = (0.9, 1.0, 1.1)
DEFAULT_WINDOW_WEIGHT = 0.35

ScoreMap = np.ndarray


@dataclass
class TrackerHandle:
    """One radius-dedicated tracker: its category, input side, and the
    template captured at initialization (None for the oracle kind)."""

    dedicated_category: RadiusCategory
    input_side: int
    template: Patch | None
    kind: str = "ncc"
    noise_sigma: float = 0.0
    noise_sigma_scale: float = 0.0


@dataclass(frozen=True)
class TrackerResult:
    box: BoundingBox
    confidence: float
    category_used: RadiusCategory


@dataclass
class TrackerSet:
    """The dispatch table of radius-dedicated handles owned by one
    pipeline instance."""

    handles: dict[RadiusCategory, TrackerHandle] = field(default_factory=dict)

    @classmethod
    def initialize(
        cls,
        image: np.ndarray,
        box: BoundingBox,
        kind: str = "ncc",
        noise_sigma: float = 0.0,
        noise_sigma_scale: float = 0.0,
        mode: str = "bilinear",
    ) -> "TrackerSet":
        if kind not in ("ncc", "oracle-noisy"):
            raise ValueError(f"unknown tracker kind {kind!r}")
        template = None
        if kind == "ncc":
            template = crop_resize(image, search_region_rect(box, 1.0), 128, mode)
        handles = {
            cat: TrackerHandle(
                dedicated_category=cat,
                input_side=side,
                template=template,
                kind=kind,
                noise_sigma=noise_sigma,
                noise_sigma_scale=noise_sigma_scale,
            )
            for cat, side in INPUT_SIDES.items()
        }
        return cls(handles=handles)

    def dispatch(self, chosen: RadiusCategory) -> TrackerHandle:
        """SR2/SR4/SR6 go to their own handle; SR8 reuses the largest."""
        if not self.handles:
            raise RuntimeError("tracker set not initialized with a template frame")
        key = RadiusCategory.SR6 if chosen is RadiusCategory.SR8 else chosen
        return self.handles[key]


def dispatch(trackers: TrackerSet, chosen: RadiusCategory) -> TrackerHandle:
    return trackers.dispatch(chosen)


def window_penalty(scores: ScoreMap, lam: float) -> ScoreMap:
    """Mix a center-peaked cosine window into a score map.

    out = (1 - lam) * scores + lam * H, with H the outer product of 1-D
    Hann windows scaled so its peak equals max(scores).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"window weight must be in [0, 1], got {lam}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("score map must be 2-D")
    window = np.outer(np.hanning(scores.shape[0]), np.hanning(scores.shape[1]))
    peak = window.max()
    window = window / peak if peak > 0 else np.ones_like(window)
    return (1.0 - lam) * scores + lam * window * scores.max()


def ncc_track(
    h: TrackerHandle,
    search: Patch,
    scale_sweep: tuple[float, ...] = DEFAULT_SCALE_SWEEP,
    lam: float = 0.0,
    crop_factor: float | None = None,
) -> tuple[ScoreMap, BoundingBox, float]:
    """Multi-scale normalized cross-correlation of the template over a
    search patch.

    The template's nominal side inside the patch is input_side divided by
    the crop factor (the handle's own category by default; pass factor 8
    when the largest handle serves category 8). Returns the winning
    scale's score map, the matched box in patch coordinates, and the peak
    normalized score clamped to [0, 1]. `lam` > 0 applies the window
    penalty to each map before peak selection; confidence always reads
    the unpenalized score at the chosen peak.
    """
    if h.template is None:
        raise RuntimeError("handle has no template (oracle handles cannot run ncc_track)")
    if search.side != h.input_side:
        raise ValueError(f"search side {search.side} does not match tracker input {h.input_side}")
    factor = crop_factor if crop_factor is not None else h.dedicated_category.factor()
    nominal = h.input_side / factor

    search_gray = to_gray(search.pixels)[None]
    best = None  # (mixed_peak, raw_peak, row, col, side, mixed_map)
    for scale in scale_sweep:
        side = int(round(nominal * scale))
        if side < 4 or side > search.side:
            continue
        kernel = to_gray(resize_patch(h.template, side).pixels)[None]
        raw = zncc_score_map(search_gray, kernel)
        mixed = window_penalty(raw, lam) if lam > 0.0 else raw
        r, c = np.unravel_index(int(np.argmax(mixed)), mixed.shape)
        cand = (float(mixed[r, c]), float(raw[r, c]), int(r), int(c), side, mixed)
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        raise ValueError("template does not fit the search patch at any sweep scale")
    _, raw_peak, row, col, side, mixed = best
    box = BoundingBox(col + side / 2.0, row + side / 2.0, float(side), float(side))
    return mixed, box, float(np.clip(raw_peak, 0.0, 1.0))


def patch_to_image_coords(box_in_patch: BoundingBox, rect: RegionRect, patch_side: int) -> BoundingBox:
    """Affine map from patch pixel coordinates back to image coordinates."""
    if patch_side <= 0:
        raise ValueError("patch side must be positive")
    sx = rect.w / patch_side
    sy = rect.h / patch_side
    return BoundingBox(
        rect.x0 + box_in_patch.cx * sx,
        rect.y0 + box_in_patch.cy * sy,
        box_in_patch.w * sx,
        box_in_patch.h * sy,
    )


def image_to_patch_coords(box: BoundingBox, rect: RegionRect, patch_side: int) -> BoundingBox:
    """Inverse of patch_to_image_coords."""
    if patch_side <= 0:
        raise ValueError("patch side must be positive")
    sx = patch_side / rect.w
    sy = patch_side / rect.h
    return BoundingBox(
        (box.cx - rect.x0) * sx,
        (box.cy - rect.y0) * sy,
        box.w * sx,
        box.h * sy,
    )


def oracle_noisy_track(
    h: TrackerHandle,
    gt: BoundingBox | None,
    region: RegionRect,
    prev: BoundingBox,
    rng: np.random.Generator,
) -> TrackerResult:
    """Ground-truth tracker with configurable noise.

    If the ground-truth center lies inside the dispatched region, returns
    it perturbed by sigma pixels on the center and sigma_scale relative
    on the size (center clamped back into the region). Otherwise the
    previous prediction carries forward with confidence 0, simulating a
    lost target.
    """
    if gt is None or not rect_contains_point(region, gt.cx, gt.cy):
        return TrackerResult(box=prev, confidence=0.0, category_used=h.dedicated_category)
    dx, dy = rng.normal(0.0, 1.0, 2) * h.noise_sigma
    sw, sh = 1.0 + rng.normal(0.0, 1.0, 2) * h.noise_sigma_scale
    w = gt.w * max(sw, 0.2)
    hh = gt.h * max(sh, 0.2)
    cx = float(np.clip(gt.cx + dx, region.x0, region.x1))
    cy = float(np.clip(gt.cy + dy, region.y0, region.y1))
    return TrackerResult(
        box=BoundingBox(cx, cy, w, hh),
        confidence=1.0,
        category_used=h.dedicated_category,
    )
