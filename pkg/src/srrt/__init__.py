"""Search Region Regulation Tracking (SRRT) harness.

Per-frame estimation of the optimal search-region radius, locking-state
reference updating, dispatch to radius-dedicated trackers, a training
sample generator for the regulator, and a one-pass evaluation toolkit.
"""

from .geometry import (
    CATEGORIES,
    BoundingBox,
    Patch,
    RadiusCategory,
    RegionRect,
    bucketize_factor,
    crop_resize,
    iou,
    min_required_factor,
    search_region_rect,
)
from .pipeline import PipelineConfig, Trajectory, fixed_sr_track_sequence, srrt_track_sequence
from .sequences import Sequence, load_dataset, load_sequence, parse_groundtruth

__all__ = [
    "CATEGORIES",
    "BoundingBox",
    "Patch",
    "PipelineConfig",
    "RadiusCategory",
    "RegionRect",
    "Sequence",
    "Trajectory",
    "bucketize_factor",
    "crop_resize",
    "fixed_sr_track_sequence",
    "iou",
    "load_dataset",
    "load_sequence",
    "min_required_factor",
    "parse_groundtruth",
    "search_region_rect",
    "srrt_track_sequence",
]

__version__ = "0.1.0"
