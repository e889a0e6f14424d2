"""Scene loading, validation and the on-disk scene layout.

A scene directory looks like::

    <root>/input/<prefix><index>.png        frames, contiguous from 0
    <root>/groundtruth/<prefix><index>.png  masks, optional
    <root>/manifest.json                    metadata, optional

Frames are 8-bit gray ``(H, W)`` or color ``(H, W, 3)`` arrays. Ground-truth
masks use a 4-value encoding; ``IGNORE`` and ``UNKNOWN`` pixels are excluded
from confusion counting downstream.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SceneLoadError

BACKGROUND = 0
IGNORE = 85
UNKNOWN = 170
FOREGROUND = 255
MASK_VALUES = frozenset((BACKGROUND, IGNORE, UNKNOWN, FOREGROUND))

LAYOUT_TEMPORAL_ROI = "temporal-roi"
LAYOUT_FULL_LABEL = "full-label"

INPUT_DIR = "input"
GT_DIR = "groundtruth"
MANIFEST_NAME = "manifest.json"

MANIFEST_KEYS = (
    "scene_id",
    "layout",
    "labeled_range",
    "human_foreground",
    "clean_frame_index",
    "foreground_appear_index",
    "category",
)

_FRAME_RE = re.compile(r"^(?P<prefix>\D*)(?P<index>\d+)\.(?P<ext>png|jpg|jpeg|bmp)$", re.I)


@dataclass
class Frame:
    index: int
    pixels: np.ndarray  # (H, W) or (H, W, 3) uint8
    timestamp: float | None = None


@dataclass
class SceneManifest:
    scene_id: str
    layout: str = LAYOUT_FULL_LABEL
    labeled_range: tuple[int, int] | None = None
    human_foreground: bool = False
    clean_frame_index: int | None = None
    foreground_appear_index: int | None = None
    category: str = ""

    def to_json_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "layout": self.layout,
            "labeled_range": list(self.labeled_range) if self.labeled_range else None,
            "human_foreground": self.human_foreground,
            "clean_frame_index": self.clean_frame_index,
            "foreground_appear_index": self.foreground_appear_index,
            "category": self.category,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SceneManifest":
        rng = d.get("labeled_range")
        return cls(
            scene_id=d["scene_id"],
            layout=d.get("layout", LAYOUT_FULL_LABEL),
            labeled_range=(int(rng[0]), int(rng[1])) if rng else None,
            human_foreground=bool(d.get("human_foreground", False)),
            clean_frame_index=d.get("clean_frame_index"),
            foreground_appear_index=d.get("foreground_appear_index"),
            category=d.get("category", ""),
        )


@dataclass
class Scene:
    manifest: SceneManifest
    frames: list[Frame]
    masks: dict[int, np.ndarray] = field(default_factory=dict)
    provenance: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def scene_id(self) -> str:
        return self.manifest.scene_id

    def with_frames(self, frames: list[Frame], note: str) -> "Scene":
        """Copy of this scene with replaced frames and a provenance note."""
        return Scene(
            manifest=replace(self.manifest),
            frames=frames,
            masks=self.masks,
            provenance=self.provenance + [note],
        )


def to_gray(pixels: np.ndarray) -> np.ndarray:
    """Luma conversion, round-half-up: 0.299 R + 0.587 G + 0.114 B."""
    if pixels.ndim == 2:
        return pixels
    p = pixels.astype(np.float64)
    luma = 0.299 * p[..., 0] + 0.587 * p[..., 1] + 0.114 * p[..., 2]
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_png(path: Path, pixels: np.ndarray) -> None:
    """Write an image atomically (temp file + rename)."""
    tmp = path.with_name(path.name + ".tmp.png")
    Image.fromarray(pixels).save(tmp, format="PNG")
    os.replace(tmp, path)


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise SceneLoadError(f"unreadable image {path}: {exc}") from exc


def _indexed_files(directory: Path) -> dict[int, Path]:
    """Map frame index -> file, parsed from names like ``in000123.png``.

    Sorted numerically by the parsed index, never by directory order.
    """
    out: dict[int, Path] = {}
    for name in sorted(os.listdir(directory)):
        m = _FRAME_RE.match(name)
        if not m:
            continue
        idx = int(m.group("index"))
        if idx in out:
            raise SceneLoadError(f"duplicate frame index {idx}: {directory / name} and {out[idx]}")
        out[idx] = directory / name
    return dict(sorted(out.items()))


def load_scene(root_dir: str | Path, layout_hint: str | None = None) -> Scene:
    """Load a scene directory into memory.

    Frames must form a contiguous 0-based index range. Masks may cover any
    subset; ``labeled_range`` is inferred from the present masks when no
    manifest file exists. Mask dimension mismatches are load errors; illegal
    mask values are left to :func:`validate_scene`.
    """
    root = Path(root_dir)
    input_dir = root / INPUT_DIR
    if not input_dir.is_dir():
        raise SceneLoadError(f"missing input directory {input_dir}")

    frame_files = _indexed_files(input_dir)
    if not frame_files:
        raise SceneLoadError(f"no frames found in {input_dir}")
    expected = range(len(frame_files))
    missing = sorted(set(expected) - set(frame_files))
    if missing or min(frame_files) != 0:
        raise SceneLoadError(
            f"frame indices not contiguous from 0 in {input_dir}: missing index "
            f"{missing[0] if missing else min(frame_files)}"
        )

    frames: list[Frame] = []
    shape = None
    for idx, path in frame_files.items():
        pixels = _read_image(path)
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise SceneLoadError(
                f"dimension mismatch in {path}: got {pixels.shape}, expected {shape}"
            )
        frames.append(Frame(index=idx, pixels=pixels))

    masks: dict[int, np.ndarray] = {}
    gt_dir = root / GT_DIR
    if gt_dir.is_dir():
        for idx, path in _indexed_files(gt_dir).items():
            if idx not in frame_files:
                raise SceneLoadError(f"mask {path} has no matching frame index {idx}")
            mask = to_gray(_read_image(path))
            if mask.shape != shape[:2]:
                raise SceneLoadError(
                    f"dimension mismatch in {path}: mask {mask.shape} vs frames {shape[:2]}"
                )
            masks[idx] = mask

    manifest_path = root / MANIFEST_NAME
    if manifest_path.is_file():
        try:
            manifest = SceneManifest.from_json_dict(json.loads(manifest_path.read_text()))
        except (ValueError, KeyError) as exc:
            raise SceneLoadError(f"bad manifest {manifest_path}: {exc}") from exc
    else:
        labeled = (min(masks), max(masks)) if masks else None
        manifest = SceneManifest(scene_id=root.name, labeled_range=labeled)
        manifest.layout = (
            LAYOUT_FULL_LABEL
            if labeled == (0, len(frames) - 1)
            else LAYOUT_TEMPORAL_ROI
        )
    if layout_hint is not None:
        manifest.layout = layout_hint

    return Scene(manifest=manifest, frames=frames, masks=masks)


def validate_scene(scene: Scene) -> list[str]:
    """Check every Scene invariant; returns one diagnostic string per violation."""
    diags: list[str] = []
    n = len(scene.frames)
    if n == 0:
        return ["scene has no frames"]

    for pos, frame in enumerate(scene.frames):
        if frame.index != pos:
            diags.append(f"frame index {frame.index} at position {pos}: indices not contiguous from 0")
            break
    shape = scene.frames[0].pixels.shape
    for frame in scene.frames:
        if frame.pixels.shape != shape:
            diags.append(f"frame {frame.index}: shape {frame.pixels.shape} differs from {shape}")

    rng = scene.manifest.labeled_range
    labeled = set(range(rng[0], rng[1] + 1)) if rng else set()
    if rng is not None and not (0 <= rng[0] <= rng[1] < n):
        diags.append(f"labeled_range {rng} outside [0, {n})")
    for idx in sorted(labeled - set(scene.masks)):
        diags.append(f"mask missing at index {idx} inside labeled_range")
    for idx in sorted(set(scene.masks) - labeled):
        diags.append(f"mask present at index {idx} outside labeled_range")

    for idx, mask in sorted(scene.masks.items()):
        if mask.shape != shape[:2]:
            diags.append(f"mask {idx}: shape {mask.shape} differs from frames {shape[:2]}")
            continue
        bad = set(np.unique(mask)) - MASK_VALUES
        if bad:
            diags.append(f"mask {idx}: illegal label value {sorted(bad)[0]}")

    for name in ("clean_frame_index", "foreground_appear_index"):
        val = getattr(scene.manifest, name)
        if val is not None and not (0 <= val < n):
            diags.append(f"{name} {val} outside [0, {n})")
    return diags


def save_scene(
    scene: Scene,
    root_dir: str | Path,
    frame_prefix: str = "in",
    mask_prefix: str = "gt",
    pad: int = 6,
) -> Path:
    """Write a scene in the standard directory layout; returns the root."""
    root = Path(root_dir)
    input_dir = root / INPUT_DIR
    input_dir.mkdir(parents=True, exist_ok=True)
    for frame in scene.frames:
        write_png(input_dir / f"{frame_prefix}{frame.index:0{pad}d}.png", frame.pixels)
    if scene.masks:
        gt_dir = root / GT_DIR
        gt_dir.mkdir(parents=True, exist_ok=True)
        for idx, mask in sorted(scene.masks.items()):
            write_png(gt_dir / f"{mask_prefix}{idx:0{pad}d}.png", mask)
    payload = json.dumps(scene.manifest.to_json_dict(), indent=2).encode()
    atomic_write_bytes(root / MANIFEST_NAME, payload)
    return root
