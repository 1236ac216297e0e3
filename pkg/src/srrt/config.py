"""Flat key-value run configuration and motion-spec files.

Format: one `key = value` per line, `#` comments. Unknown keys are
rejected and every value is range-checked at load; load -> serialize ->
load is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .evaluation import MotionSpec
from .geometry import RadiusCategory
from .pipeline import PipelineConfig


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_categories(s: str) -> tuple[int, ...]:
    vals = tuple(int(v) for v in s.split(",") if v.strip())
    bad = [v for v in vals if v not in (2, 4, 6, 8)]
    if bad or not vals:
        raise ValueError(f"categories must be a non-empty subset of 2,4,6,8, got {s!r}")
    return tuple(sorted(set(vals)))


def _parse_floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the pipeline plus dataset/output paths."""

    regulator: str = "classical"
    tracker: str = "ncc"
    locking_frames: int = 5
    window_weight: float = 0.35
    tau_miss: float = 0.3
    fusion_w0: float = 0.5
    fusion_wd: float = 0.5
    categories: tuple[int, ...] = (2, 4, 6, 8)
    seed: int = 0
    noise_sigma: float = 0.0
    noise_sigma_scale: float = 0.0
    tracker_scale_sweep: tuple[float, ...] = (0.9, 1.0, 1.1)
    regulator_scale_sweep: tuple[float, ...] = (0.8, 1.0, 1.25)
    feature_stride: int = 8
    resample: str = "bilinear"
    delta_s_range: float = 0.25
    sample_ratio: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    workers: int = 0
    dataset: str = ""
    output: str = ""

    def __post_init__(self):
        if self.locking_frames < 1:
            raise ValueError("locking_frames must be >= 1")
        if not 0.0 <= self.window_weight <= 1.0:
            raise ValueError("window_weight must be in [0, 1]")
        if not 0.0 <= self.tau_miss <= 1.0:
            raise ValueError("tau_miss must be in [0, 1]")
        if self.noise_sigma < 0 or self.noise_sigma_scale < 0:
            raise ValueError("noise sigmas must be non-negative")
        if self.workers < 0:
            raise ValueError("workers must be >= 0")
        if self.feature_stride < 1:
            raise ValueError("feature_stride must be >= 1")
        if self.resample not in ("bilinear", "nearest"):
            raise ValueError(f"unknown resample mode {self.resample!r}")
        if not self.delta_s_range > 0:
            raise ValueError("delta_s_range must be positive")
        if len(self.sample_ratio) != 4 or any(w < 0 for w in self.sample_ratio):
            raise ValueError("sample_ratio needs 4 non-negative weights")
        _parse_categories(",".join(str(c) for c in self.categories))
        if self.regulator not in ("classical", "oracle") and not self.regulator.startswith("file:"):
            raise ValueError(f"unknown regulator {self.regulator!r}")
        if self.tracker not in ("ncc", "oracle"):
            raise ValueError(f"unknown tracker {self.tracker!r}")

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            regulator=self.regulator,
            tracker=self.tracker,
            locking_frames=self.locking_frames,
            window_weight=self.window_weight,
            tau_miss=self.tau_miss,
            fusion_weights=(self.fusion_w0, self.fusion_wd),
            categories=tuple(RadiusCategory(c) for c in self.categories),
            seed=self.seed,
            noise_sigma=self.noise_sigma,
            noise_sigma_scale=self.noise_sigma_scale,
            tracker_scale_sweep=self.tracker_scale_sweep,
            regulator_scale_sweep=self.regulator_scale_sweep,
            feature_stride=self.feature_stride,
            resample=self.resample,
        )


_PARSERS = {"int": int, "float": float, "str": str, "bool": _parse_bool}


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_key_values(text: str) -> dict[str, str]:
    pairs = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {ln}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def load_run_config(path: str | Path) -> RunConfig:
    return run_config_from_text(Path(path).read_text())


def run_config_from_text(text: str) -> RunConfig:
    pairs = parse_key_values(text)
    by_name = {f.name: f for f in fields(RunConfig)}
    kwargs = {}
    for key, raw in pairs.items():
        if key not in by_name:
            raise ValueError(f"unknown config key {key!r}")
        f = by_name[key]
        if f.name == "categories":
            kwargs[key] = _parse_categories(raw)
        elif f.name in ("tracker_scale_sweep", "regulator_scale_sweep", "sample_ratio"):
            kwargs[key] = _parse_floats(raw)
        else:
            kwargs[key] = _PARSERS[f.type](raw)
    return RunConfig(**kwargs)


def serialize_run_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def override_run_config(cfg: RunConfig, **overrides) -> RunConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


_MOTION_KEYS = {
    "name": str,
    "length": int,
    "width": int,
    "height": int,
    "target_w": int,
    "target_h": int,
    "start_x": int,
    "start_y": int,
    "law": str,
    "vel_x": int,
    "vel_y": int,
    "walk_sigma": float,
    "jumps": str,  # frame:dx:dy;frame:dx:dy
    "texture_seed": int,
    "channels": int,
}


def parse_motion_spec(text: str) -> tuple[str, MotionSpec]:
    """Parse a motion-spec file; returns (sequence name, spec)."""
    pairs = parse_key_values(text)
    values = {}
    for key, raw in pairs.items():
        if key not in _MOTION_KEYS:
            raise ValueError(f"unknown motion spec key {key!r}")
        values[key] = _MOTION_KEYS[key](raw)
    jumps = ()
    if values.get("jumps"):
        jumps = tuple(
            tuple(int(v) for v in item.split(":")) for item in values["jumps"].split(";") if item
        )
        if any(len(j) != 3 for j in jumps):
            raise ValueError("each jump must be frame:dx:dy")
    start = None
    if "start_x" in values or "start_y" in values:
        start = (values.get("start_x", 0), values.get("start_y", 0))
    spec = MotionSpec(
        length=values.get("length", 60),
        image_size=(values.get("width", 256), values.get("height", 256)),
        target_size=(values.get("target_w", 24), values.get("target_h", 24)),
        start=start,
        law=values.get("law", "constant"),
        velocity=(values.get("vel_x", 0), values.get("vel_y", 0)),
        walk_sigma=values.get("walk_sigma", 0.0),
        jumps=jumps,
        texture_seed=values.get("texture_seed", 0),
        channels=values.get("channels", 1),
    )
    return values.get("name", "synthetic"), spec
