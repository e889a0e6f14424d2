"""6-channel sample assembly, preprocessing, SDE/SIE splits, and the portable
dataset format.

A sample stacks six gray channels in the fixed order

    [current, background, past@d1, past@d2, past@d3, past@d4]

with past offsets of 25, 50, 75 and 100 frames by default. Channels are
resized bilinearly, masks nearest-neighbor, to 224x224 unless overridden.
Targets are strictly binary; IGNORE/UNKNOWN ground-truth pixels go into a
separate weight mask that downstream loss and metrics exclude.

The export format is one directory per sample holding seven (or eight) PNGs
plus a top-level ``dataset.json`` with per-file SHA-256 hashes, so round
trips are bit-exact and tampering is detected on import.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, HashMismatchError, InsufficientHistoryError
from .sequence_io import (
    FOREGROUND,
    IGNORE,
    UNKNOWN,
    Scene,
    SceneManifest,
    atomic_write_bytes,
    to_gray,
    write_png,
)

DATASET_MANIFEST = "dataset.json"
DATASET_VERSION = 1
DEFAULT_INTERVALS = (25, 50, 75, 100)
DEFAULT_SIZE = (224, 224)  # (W, H)

SPLIT_SDE = "SDE"
SPLIT_SIE = "SIE"


@dataclass(frozen=True)
class SampleMeta:
    scene_id: str
    index: int
    bg_aug: str = "none"
    interval_aug: bool = False

    @property
    def sample_id(self) -> str:
        sid = f"{self.scene_id}-{self.index:06d}"
        if self.bg_aug != "none":
            sid += "-bg"
        if self.interval_aug:
            sid += "-iv"
        return sid


@dataclass
class Sample:
    channels: np.ndarray  # (6, H, W) uint8
    target: np.ndarray    # (H, W) uint8 in {0, 1}
    weight: np.ndarray    # (H, W) uint8 in {0, 1}; 0 = excluded pixel
    meta: SampleMeta

    @property
    def sample_id(self) -> str:
        return self.meta.sample_id


@dataclass
class NormalizedSample:
    channels: np.ndarray  # (6, H, W) float32 in [-0.5, 0.5]
    target: np.ndarray
    weight: np.ndarray
    meta: SampleMeta


@dataclass
class Split:
    mode: str = SPLIT_SDE
    train: list[tuple[str, int]] = field(default_factory=list)
    val: list[tuple[str, int]] = field(default_factory=list)
    test: list[tuple[str, int]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "train": [list(p) for p in self.train],
            "val": [list(p) for p in self.val],
            "test": [list(p) for p in self.test],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Split":
        return cls(
            mode=d["mode"],
            train=[(s, int(i)) for s, i in d["train"]],
            val=[(s, int(i)) for s, i in d["val"]],
            test=[(s, int(i)) for s, i in d["test"]],
        )


def _resize(pixels: np.ndarray, size: tuple[int, int], nearest: bool) -> np.ndarray:
    if pixels.shape == (size[1], size[0]):
        return pixels
    method = Image.Resampling.NEAREST if nearest else Image.Resampling.BILINEAR
    return np.asarray(Image.fromarray(pixels).resize(size, method), dtype=np.uint8)


def assemble_sample(
    scene: Scene,
    bg_series: list[np.ndarray],
    t: int,
    intervals: tuple[int, ...] = DEFAULT_INTERVALS,
    size: tuple[int, int] = DEFAULT_SIZE,
    bg_aug: str = "none",
) -> Sample:
    """Build the 6-channel sample for frame ``t``.

    Past channels come from ``t - d`` for each interval ``d``; ``t`` must be
    at least the largest interval and must carry a ground-truth mask.
    """
    horizon = max(intervals)
    if t < horizon:
        raise InsufficientHistoryError(
            f"scene {scene.scene_id}: index {t} needs {horizon} frames of history"
        )
    if t >= len(scene):
        raise DataError(f"scene {scene.scene_id}: index {t} out of range [0, {len(scene)})")
    rng = scene.manifest.labeled_range
    if rng is None or not rng[0] <= t <= rng[1] or t not in scene.masks:
        raise DataError(f"scene {scene.scene_id}: no ground-truth mask at index {t}")
    if len(bg_series) <= t:
        raise DataError(
            f"scene {scene.scene_id}: background series covers {len(bg_series)} frames, need {t + 1}"
        )

    planes = [to_gray(scene.frames[t].pixels), np.asarray(bg_series[t], dtype=np.uint8)]
    planes += [to_gray(scene.frames[t - d].pixels) for d in intervals]
    channels = np.stack([_resize(p, size, nearest=False) for p in planes])

    mask = _resize(scene.masks[t], size, nearest=True)
    target = (mask == FOREGROUND).astype(np.uint8)
    weight = ((mask != IGNORE) & (mask != UNKNOWN)).astype(np.uint8)
    return Sample(
        channels=channels,
        target=target,
        weight=weight,
        meta=SampleMeta(scene_id=scene.scene_id, index=t, bg_aug=bg_aug),
    )


def preprocess(sample: Sample) -> NormalizedSample:
    """Map 8-bit channels through (v - 127.5) / 255 into [-0.5, 0.5].

    The target and weight masks pass through untouched.
    """
    channels = (sample.channels.astype(np.float32) - 127.5) / 255.0
    return NormalizedSample(
        channels=channels,
        target=sample.target,
        weight=sample.weight,
        meta=sample.meta,
    )


def split_sde(
    scene_samples: dict[str, list[int]], train_fraction: float = 0.8
) -> Split:
    """Per-scene contiguous-prefix split: the leading floor(n * fraction)
    sample indices of each scene train, the rest validate."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    split = Split(mode=SPLIT_SDE)
    for scene_id, indices in scene_samples.items():
        if not indices:
            raise DataError(f"scene {scene_id} has no samples to split")
        n_train = int(len(indices) * train_fraction)
        split.train += [(scene_id, t) for t in indices[:n_train]]
        split.val += [(scene_id, t) for t in indices[n_train:]]
    return split


def split_sie(
    manifests: list[SceneManifest],
    test_scene_ids: list[str],
    scene_samples: dict[str, list[int]],
    train_fraction: float = 0.8,
) -> Split:
    """Scene-independent split: whole scenes go to test; the remaining scenes
    are divided train/val like SDE."""
    known = {m.scene_id for m in manifests}
    unknown = sorted(set(test_scene_ids) - known)
    if unknown:
        raise DataError(f"unknown test scene id {unknown[0]!r}")
    test_ids = set(test_scene_ids)
    train_scenes = {sid: idxs for sid, idxs in scene_samples.items() if sid not in test_ids}
    if not train_scenes:
        raise DataError("SIE split leaves no scenes for training")
    inner = split_sde(train_scenes, train_fraction)
    split = Split(mode=SPLIT_SIE, train=inner.train, val=inner.val)
    for sid, idxs in scene_samples.items():
        if sid in test_ids:
            split.test += [(sid, t) for t in idxs]
    return split


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _file_keys(has_weight: bool) -> list[str]:
    keys = [f"c{i}" for i in range(6)] + ["target"]
    return keys + (["weight"] if has_weight else [])


def channel_order_labels(intervals: tuple[int, ...] = DEFAULT_INTERVALS) -> list[str]:
    return ["current", "background"] + [f"past@{d}" for d in intervals]


def export_dataset(
    samples: list[Sample],
    out_dir: str | Path,
    split: Split | None = None,
    intervals: tuple[int, ...] = DEFAULT_INTERVALS,
) -> dict:
    """Write samples and the hashed ``dataset.json`` manifest; returns the
    manifest document."""
    out = Path(out_dir)
    seen: set[str] = set()
    entries = []
    for sample in samples:
        sid = sample.sample_id
        if sid in seen:
            raise DataError(f"duplicate sample id {sid}")
        seen.add(sid)
        sdir = out / "samples" / sid
        sdir.mkdir(parents=True, exist_ok=True)
        files: dict[str, str] = {}
        for i in range(6):
            files[f"c{i}"] = f"samples/{sid}/c{i}.png"
            write_png(sdir / f"c{i}.png", sample.channels[i])
        files["target"] = f"samples/{sid}/target.png"
        write_png(sdir / "target.png", sample.target * 255)
        files["weight"] = f"samples/{sid}/weight.png"
        write_png(sdir / "weight.png", sample.weight * 255)
        sha256s = {key: _sha256(out / rel) for key, rel in files.items()}
        entries.append({
            "id": sid,
            "scene_id": sample.meta.scene_id,
            "index": sample.meta.index,
            "bg_aug": sample.meta.bg_aug,
            "interval_aug": sample.meta.interval_aug,
            "files": files,
            "sha256s": sha256s,
        })
    manifest = {
        "version": DATASET_VERSION,
        "channel_order": channel_order_labels(intervals),
        "samples": entries,
        "split": (split or Split()).to_json_dict(),
    }
    atomic_write_bytes(out / DATASET_MANIFEST, json.dumps(manifest, indent=2).encode())
    return manifest


def _read_gray_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_manifest(data_dir: str | Path) -> dict:
    path = Path(data_dir) / DATASET_MANIFEST
    if not path.is_file():
        raise DataError(f"missing dataset manifest {path}")
    return json.loads(path.read_text())


def import_dataset(data_dir: str | Path) -> tuple[list[Sample], Split, dict]:
    """Load an exported dataset, verifying every content hash."""
    root = Path(data_dir)
    manifest = load_manifest(root)
    samples: list[Sample] = []
    for entry in manifest["samples"]:
        arrays: dict[str, np.ndarray] = {}
        for key, rel in entry["files"].items():
            path = root / rel
            if not path.is_file():
                raise DataError(f"sample {entry['id']}: missing file {path}")
            digest = _sha256(path)
            if digest != entry["sha256s"][key]:
                raise HashMismatchError(
                    f"sample {entry['id']}: hash mismatch for {rel} "
                    f"(expected {entry['sha256s'][key][:12]}..., got {digest[:12]}...)"
                )
            arrays[key] = _read_gray_png(path)
        channels = np.stack([arrays[f"c{i}"] for i in range(6)])
        target = (arrays["target"] // 255).astype(np.uint8)
        weight = (arrays["weight"] // 255).astype(np.uint8) if "weight" in arrays \
            else np.ones_like(target)
        samples.append(Sample(
            channels=channels,
            target=target,
            weight=weight,
            meta=SampleMeta(
                scene_id=entry["scene_id"],
                index=int(entry["index"]),
                bg_aug=entry["bg_aug"],
                interval_aug=bool(entry["interval_aug"]),
            ),
        ))
    return samples, Split.from_json_dict(manifest["split"]), manifest
