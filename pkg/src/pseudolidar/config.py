"""Run configuration: flat key = value files, presets, and flag precedence.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines are ignored.  Values are typed per key: integers (``seed``,
``workers``, ``max_points_per_voxel``), booleans (``require_masks``:
true/false), names (``preset``, ``layout``), comma-separated float tuples
(``spherical_voxel``, ``voxel_size``: three values; ``x_range``,
``y_range``, ``z_range``: two), and paths (``depth_dir``, ``image_dir``,
``mask_dir``, ``calib_dir``, ``output_dir``).

Precedence, lowest to highest: built-in defaults, preset values, config
file values, command-line flags.  The preset layer sits below the file even
when the preset name itself comes from a flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import InputError, LayoutError
from .pcio import CloudLayout
from .sparsify import SparsifyConfig

_RANGE_KEYS = ("x_range", "y_range", "z_range")
_TRIPLE_KEYS = ("spherical_voxel", "voxel_size")
_PATH_KEYS = ("depth_dir", "image_dir", "mask_dir", "calib_dir", "output_dir")
_INT_KEYS = ("seed", "workers", "max_points_per_voxel")

_DEFAULTS: dict[str, object] = {
    "preset": "kitti",
    "seed": 0,
    "workers": 1,
    "layout": "xyzrgb",
    "require_masks": False,
    "spherical_voxel": (0.2, 0.2, 0.05),
    "x_range": (0.0, 70.4),
    "y_range": (-40.0, 40.0),
    "z_range": (-3.0, 1.0),
    "voxel_size": (0.05, 0.05, 0.1),
    "max_points_per_voxel": 5,
    **{key: None for key in _PATH_KEYS},
}

PRESETS: dict[str, dict[str, object]] = {
    "kitti": {},
    "waymo": {
        "x_range": (0.0, 75.2),
        "y_range": (-75.2, 75.2),
        "z_range": (-2.0, 4.0),
        "voxel_size": (0.1, 0.1, 0.15),
    },
}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a batch run needs: preset, knobs, and directories.

    Directory fields are None for single-file commands that take explicit
    paths.
    """

    preset: str = "kitti"
    seed: int = 0
    workers: int = 1
    layout: CloudLayout = CloudLayout.XYZRGB
    require_masks: bool = False
    sparsify: SparsifyConfig = SparsifyConfig()
    depth_dir: Path | None = None
    image_dir: Path | None = None
    mask_dir: Path | None = None
    calib_dir: Path | None = None
    output_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise InputError(f"worker count must be at least 1, got {self.workers}")


def _parse_floats(key: str, value: str, arity: int) -> tuple[float, ...]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != arity:
        raise InputError(f"{key} needs {arity} comma-separated values, got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise InputError(f"{key}: could not parse {value!r} as numbers") from None


def _parse_value(key: str, value: str) -> object:
    if key in _INT_KEYS:
        try:
            return int(value)
        except ValueError:
            raise InputError(f"{key}: expected an integer, got {value!r}") from None
    if key == "require_masks":
        lowered = value.lower()
        if lowered not in ("true", "false"):
            raise InputError(f"require_masks: expected true or false, got {value!r}")
        return lowered == "true"
    if key == "preset":
        if value not in PRESETS:
            raise InputError(f"unknown preset {value!r}; expected one of {', '.join(PRESETS)}")
        return value
    if key == "layout":
        try:
            return CloudLayout.from_string(value).value
        except LayoutError as exc:
            raise InputError(str(exc)) from None
    if key in _TRIPLE_KEYS:
        return _parse_floats(key, value, 3)
    if key in _RANGE_KEYS:
        return _parse_floats(key, value, 2)
    if key in _PATH_KEYS:
        return value
    raise InputError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> dict[str, object]:
    """Parse config file text into typed values, validating every key."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            values[key] = _parse_value(key, value)
        except InputError as exc:
            raise InputError(f"config line {lineno}: {exc}") from None
    return values


def resolve_config(
    file_values: Mapping[str, object] | None = None,
    flag_values: Mapping[str, object] | None = None,
) -> PipelineConfig:
    """Merge defaults, preset, file, and flags into a PipelineConfig.

    ``flag_values`` uses the same keys as the file grammar; None entries
    mean "flag not given" and are skipped.
    """
    file_values = dict(file_values or {})
    flag_values = {k: v for k, v in (flag_values or {}).items() if v is not None}
    for source in (file_values, flag_values):
        for key in source:
            if key not in _DEFAULTS:
                raise InputError(f"unknown config key {key!r}")

    preset = str(flag_values.get("preset", file_values.get("preset", _DEFAULTS["preset"])))
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    merged = dict(_DEFAULTS)
    merged.update(PRESETS[preset])
    merged.update(file_values)
    merged.update(flag_values)
    merged["preset"] = preset

    sparsify = SparsifyConfig(
        spherical_voxel_deg_deg_m=tuple(merged["spherical_voxel"]),  # type: ignore[arg-type]
        x_range=tuple(merged["x_range"]),  # type: ignore[arg-type]
        y_range=tuple(merged["y_range"]),  # type: ignore[arg-type]
        z_range=tuple(merged["z_range"]),  # type: ignore[arg-type]
        voxel_size=tuple(merged["voxel_size"]),  # type: ignore[arg-type]
        max_points_per_voxel=int(merged["max_points_per_voxel"]),  # type: ignore[call-overload]
        seed=int(merged["seed"]),  # type: ignore[call-overload]
    )
    return PipelineConfig(
        preset=preset,
        seed=int(merged["seed"]),  # type: ignore[call-overload]
        workers=int(merged["workers"]),  # type: ignore[call-overload]
        layout=CloudLayout.from_string(str(merged["layout"])),
        require_masks=bool(merged["require_masks"]),
        sparsify=sparsify,
        **{key: Path(merged[key]) if merged[key] is not None else None for key in _PATH_KEYS},  # type: ignore[arg-type]
    )


def config_to_text(cfg: PipelineConfig) -> str:
    """Serialize a config in the file grammar (paths included when set)."""
    sp = cfg.sparsify
    lines = [
        f"preset = {cfg.preset}",
        f"seed = {cfg.seed}",
        f"workers = {cfg.workers}",
        f"layout = {cfg.layout.value}",
        f"require_masks = {str(cfg.require_masks).lower()}",
        "spherical_voxel = " + ", ".join(repr(v) for v in sp.spherical_voxel_deg_deg_m),
        "x_range = " + ", ".join(repr(v) for v in sp.x_range),
        "y_range = " + ", ".join(repr(v) for v in sp.y_range),
        "z_range = " + ", ".join(repr(v) for v in sp.z_range),
        "voxel_size = " + ", ".join(repr(v) for v in sp.voxel_size),
        f"max_points_per_voxel = {sp.max_points_per_voxel}",
    ]
    for key in _PATH_KEYS:
        value = getattr(cfg, key)
        if value is not None:
            lines.append(f"{key} = {value}")
    return "".join(line + "\n" for line in lines)
