"""Dataset ingestion: sequence directories, annotation parsing, image
decoding. Annotations on disk use the top-left (x, y, w, h) convention;
everything in memory is center-form."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import BoundingBox

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


class FrameReadError(Exception):
    def __init__(self, index: int, detail: str):
        self.index = index
        super().__init__(f"cannot read frame {index}: {detail}")


def decode_image(path: str | Path) -> np.ndarray:
    """Decode an image file to planar (C, H, W) float32."""
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB" if "A" in img.mode or len(img.getbands()) > 1 else "L")
        arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return arr.astype(np.float32)


def save_image(path: str | Path, planar: np.ndarray) -> None:
    """Write a planar (C, H, W) array as an 8-bit image file."""
    arr = np.clip(np.rint(np.asarray(planar)), 0, 255).astype(np.uint8)
    if arr.shape[0] == 1:
        Image.fromarray(arr[0], mode="L").save(path)
    else:
        Image.fromarray(arr.transpose(1, 2, 0), mode="RGB").save(path)


@dataclass
class Sequence:
    """Ordered frames with optional per-frame ground truth.

    Frames are lazy: each entry is either an in-memory planar array or a
    path decoded on access. Ground truth, when present, has one entry per
    frame; None marks an absent target (degenerate annotation).
    """

    name: str
    frames: list = field(repr=False)
    gt: list[BoundingBox | None] | None = None

    def __post_init__(self):
        if self.gt is not None and len(self.gt) != len(self.frames):
            raise ValueError(
                f"sequence {self.name!r}: annotation count mismatch "
                f"({len(self.gt)} boxes for {len(self.frames)} frames)"
            )

    def __len__(self) -> int:
        return len(self.frames)

    def image(self, t: int) -> np.ndarray:
        ref = self.frames[t]
        if isinstance(ref, np.ndarray):
            arr = ref
            if arr.ndim == 2:
                arr = arr[None]
            return arr.astype(np.float32, copy=False)
        try:
            return decode_image(ref)
        except Exception as exc:
            raise FrameReadError(t, f"{ref}: {exc}") from exc

    def initial_box(self) -> BoundingBox:
        if self.gt is None or not self.gt or self.gt[0] is None:
            raise ValueError(f"sequence {self.name!r} has no initial box")
        return self.gt[0]


def parse_groundtruth(text: str) -> list[BoundingBox | None]:
    """Parse annotation lines of 4 comma- or tab-separated numbers
    (top-left x, y, w, h). Non-positive sizes become absent markers."""
    boxes: list[BoundingBox | None] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.replace("\t", ",").split(",")
        if len(parts) != 4:
            raise ValueError(f"annotation line {ln}: expected 4 fields, got {len(parts)}")
        try:
            x, y, w, h = (float(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"annotation line {ln}: {exc}") from exc
        if w <= 0 or h <= 0:
            boxes.append(None)
        else:
            boxes.append(BoundingBox.from_topleft(x, y, w, h))
    return boxes


def _numeric_key(path: Path):
    digits = re.findall(r"\d+", path.stem)
    return (int(digits[-1]) if digits else float("inf"), path.name)


def load_sequence(directory: str | Path) -> Sequence:
    """Load one sequence directory: an image subfolder plus an optional
    `groundtruth.txt`. Frames sort by the numeric part of the filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"not a sequence directory: {directory}")

    img_dir = directory / "img"
    if not img_dir.is_dir():
        candidates = [
            d
            for d in sorted(directory.iterdir())
            if d.is_dir() and any(p.suffix.lower() in IMAGE_SUFFIXES for p in d.iterdir())
        ]
        if not candidates:
            raise ValueError(f"sequence {directory.name!r}: no image subfolder found")
        img_dir = candidates[0]

    frames = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
        key=_numeric_key,
    )
    if not frames:
        raise ValueError(f"sequence {directory.name!r}: image folder {img_dir.name!r} is empty")

    gt = None
    gt_path = directory / "groundtruth.txt"
    if gt_path.exists():
        try:
            gt = parse_groundtruth(gt_path.read_text())
        except ValueError as exc:
            raise ValueError(f"sequence {directory.name!r}: {exc}") from exc
        if len(gt) != len(frames):
            raise ValueError(
                f"sequence {directory.name!r}: annotation count mismatch "
                f"({len(gt)} boxes for {len(frames)} frames)"
            )
    return Sequence(name=directory.name, frames=list(frames), gt=gt)


def is_sequence_dir(directory: Path) -> bool:
    if not directory.is_dir():
        return False
    try:
        return any(
            d.is_dir() and any(p.suffix.lower() in IMAGE_SUFFIXES for p in d.iterdir())
            for d in directory.iterdir()
        )
    except PermissionError:
        return False


def load_dataset(root: str | Path) -> list[Sequence]:
    """Load a dataset root (sequence subdirectories) or a single sequence
    directory; sequences come back sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset path does not exist: {root}")
    if is_sequence_dir(root) and not any(is_sequence_dir(d) for d in root.iterdir()):
        return [load_sequence(root)]
    seq_dirs = sorted(d for d in root.iterdir() if is_sequence_dir(d))
    if not seq_dirs:
        raise ValueError(f"no sequences found under {root}")
    return [load_sequence(d) for d in seq_dirs]


def write_sequence(seq: Sequence, directory: str | Path) -> Path:
    """Materialize a sequence to disk in the layout load_sequence reads."""
    directory = Path(directory)
    img_dir = directory / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for t in range(len(seq)):
        save_image(img_dir / f"{t + 1:08d}.png", seq.image(t))
    if seq.gt is not None:
        lines = []
        for box in seq.gt:
            if box is None:
                lines.append("0,0,0,0")
            else:
                x, y, w, h = box.to_topleft()
                lines.append(f"{x!r},{y!r},{w!r},{h!r}")
        (directory / "groundtruth.txt").write_text("\n".join(lines) + "\n")
    return directory
