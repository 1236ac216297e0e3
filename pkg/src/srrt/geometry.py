"""Box and search-region arithmetic shared by every other module.

Boxes live in center form (cx, cy, w, h) in image pixels; files use the
top-left (x, y, w, h) convention and are converted at the I/O boundary.
Images and patches are planar float arrays of shape (channels, height,
width).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RadiusCategory(enum.IntEnum):
    """Discrete search-radius factors, ordered smallest to largest.

    An `SRn` region covers n^2 times the previous target area (n times
    the previous size per axis).
    """

    SR2 = 2
    SR4 = 4
    SR6 = 6
    SR8 = 8

    def factor(self) -> float:
        return float(self.value)


CATEGORIES: tuple[RadiusCategory, ...] = tuple(RadiusCategory)
CATEGORY_INDEX = {c: i for i, c in enumerate(CATEGORIES)}


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, center form, pixels. Sizes must be positive."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got {self.w}x{self.h}")

    @classmethod
    def from_topleft(cls, x: float, y: float, w: float, h: float) -> "BoundingBox":
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    def to_topleft(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.w, self.h)

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class RegionRect:
    """A crop rectangle in image coordinates; may extend past image bounds."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"rect size must be positive, got {self.w}x{self.h}")

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2.0


@dataclass
class Patch:
    """A square resampled crop. `pixels` is planar (channels, side, side)."""

    pixels: np.ndarray
    rect: RegionRect

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[1] != self.pixels.shape[2]:
            raise ValueError(f"patch pixels must be (C, side, side), got {self.pixels.shape}")

    @property
    def side(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[0]


def search_region_rect(prev: BoundingBox, gamma: float) -> RegionRect:
    """Region centered on the previous box, scaled `gamma` per axis.

    The region area is gamma^2 times the previous box area.
    """
    if not gamma > 0:
        raise ValueError(f"search radius factor must be positive, got {gamma}")
    return RegionRect(prev.cx, prev.cy, gamma * prev.w, gamma * prev.h)


def min_required_factor(prev: BoundingBox, cur: BoundingBox) -> float:
    """Smallest factor whose region around `prev` fully contains `cur`.

    Closed form: the region half-size must cover the center offset plus
    the current half-size, independently per axis.
    """
    gx = (2.0 * abs(cur.cx - prev.cx) + cur.w) / prev.w
    gy = (2.0 * abs(cur.cy - prev.cy) + cur.h) / prev.h
    return max(gx, gy)


def bucketize_factor(gamma: float) -> RadiusCategory:
    """Map a positive factor to its category; boundaries belong to the
    smaller bucket (a region exactly gamma times suffices)."""
    if not gamma > 0:
        raise ValueError(f"factor must be positive, got {gamma}")
    if gamma <= 2.0:
        return RadiusCategory.SR2
    if gamma <= 4.0:
        return RadiusCategory.SR4
    if gamma <= 6.0:
        return RadiusCategory.SR6
    return RadiusCategory.SR8


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    # Areas from the same extents keep the result exactly in [0, 1].
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    return inter / (area_a + area_b - inter)


def rect_contains_box(rect: RegionRect, box: BoundingBox, tol: float = 0.0) -> bool:
    """True when `box` lies fully inside `rect` (tol loosens the edges)."""
    return (
        rect.x0 <= box.x0 + tol
        and rect.y0 <= box.y0 + tol
        and rect.x1 >= box.x1 - tol
        and rect.y1 >= box.y1 - tol
    )


def rect_contains_point(rect: RegionRect, x: float, y: float) -> bool:
    return rect.x0 <= x <= rect.x1 and rect.y0 <= y <= rect.y1


def as_planar_float(image: np.ndarray) -> np.ndarray:
    """Coerce (H, W) or (C, H, W) input to planar float64 without copying
    when already in that layout."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"image must be (H, W) or (C, H, W), got shape {arr.shape}")
    return arr.astype(np.float64, copy=False)


def _resample(
    image: np.ndarray,
    rect: RegionRect,
    out_side: int,
    mode: str,
    fill: np.ndarray | None,
) -> np.ndarray:
    """Sample `rect` from a planar image onto an out_side grid.

    `fill` gives per-channel values for samples outside the image; None
    clamps to the nearest edge pixel instead (used for plain resizes).
    """
    chans, height, width = image.shape
    xs = rect.x0 + (np.arange(out_side) + 0.5) * (rect.w / out_side)
    ys = rect.y0 + (np.arange(out_side) + 0.5) * (rect.h / out_side)

    if mode == "nearest":
        cols = np.floor(xs).astype(np.int64)
        rows = np.floor(ys).astype(np.int64)
        if fill is None:
            out = image[:, np.clip(rows, 0, height - 1)[:, None], np.clip(cols, 0, width - 1)[None, :]]
        else:
            inside = ((rows >= 0) & (rows < height))[:, None] & ((cols >= 0) & (cols < width))[None, :]
            vals = image[:, np.clip(rows, 0, height - 1)[:, None], np.clip(cols, 0, width - 1)[None, :]]
            out = np.where(inside[None], vals, fill[:, None, None])
        return out.copy()

    if mode != "bilinear":
        raise ValueError(f"unknown resample mode {mode!r}")

    # Pixel (r, c) covers [c, c+1) x [r, r+1); interpolate between centers.
    u = xs - 0.5
    v = ys - 0.5
    c0 = np.floor(u).astype(np.int64)
    r0 = np.floor(v).astype(np.int64)
    fc = (u - c0)[None, :]
    fr = (v - r0)[:, None]

    interior = (
        fill is None
        or (r0.min() >= 0 and r0.max() + 1 < height and c0.min() >= 0 and c0.max() + 1 < width)
    )
    out = np.zeros((chans, out_side, out_side), dtype=np.float64)
    for dr in (0, 1):
        wr = fr if dr else 1.0 - fr
        rr = r0 + dr
        for dc in (0, 1):
            wc = fc if dc else 1.0 - fc
            cc = c0 + dc
            vals = image[:, np.clip(rr, 0, height - 1)[:, None], np.clip(cc, 0, width - 1)[None, :]]
            if not interior:
                inside = ((rr >= 0) & (rr < height))[:, None] & ((cc >= 0) & (cc < width))[None, :]
                vals = np.where(inside[None], vals, fill[:, None, None])
            out += (wr * wc)[None] * vals
    return out


def crop_resize(
    image: np.ndarray,
    rect: RegionRect,
    out_side: int,
    mode: str = "bilinear",
) -> Patch:
    """Crop `rect` from an image and resample it to out_side x out_side.

    Area outside the image is filled with the per-channel image mean.
    `mode` is "bilinear" (default) or "nearest" for exact-value tests.
    """
    if out_side <= 0:
        raise ValueError(f"output side must be positive, got {out_side}")
    planar = as_planar_float(image)
    if planar.size == 0:
        raise ValueError("cannot crop an empty image")
    fill = planar.mean(axis=(1, 2))
    pixels = _resample(planar, rect, out_side, mode, fill)
    return Patch(pixels=pixels, rect=rect)


def resize_patch(patch: Patch, out_side: int, mode: str = "bilinear") -> Patch:
    """Resample a patch to a new side length (edge-clamped, no fill)."""
    if out_side <= 0:
        raise ValueError(f"output side must be positive, got {out_side}")
    side = patch.side
    full = RegionRect(side / 2.0, side / 2.0, float(side), float(side))
    pixels = _resample(as_planar_float(patch.pixels), full, out_side, mode, None)
    return Patch(pixels=pixels, rect=patch.rect)


def to_gray(pixels: np.ndarray) -> np.ndarray:
    """Channel-mean grayscale plane of a planar array."""
    return as_planar_float(pixels).mean(axis=0)
