"""Reader for the exported dataset format.

A dataset directory holds ``dataset.json`` plus one directory per sample with
six gray channel PNGs, a binary target PNG and a binary weight PNG stored as
0/255. The manifest records a per-file SHA-256 and the split membership as
(scene_id, index) pairs; any sample variant whose pair is in a split list
belongs to that split. Channels are normalized with (v - 127.5) / 255 when
tensors are built.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

EXPECTED_CHANNEL_ORDER = ["current", "background", "past@25", "past@50",
                          "past@75", "past@100"]


class DatasetError(Exception):
    pass


@dataclass
class DatasetSample:
    sample_id: str
    scene_id: str
    index: int
    bg_aug: str
    interval_aug: bool
    channels: np.ndarray  # (6, H, W) uint8
    target: np.ndarray    # (H, W) float32 in {0, 1}
    weight: np.ndarray    # (H, W) float32 in {0, 1}


@dataclass
class LoadedDataset:
    samples: list[DatasetSample]
    split: dict[str, list[tuple[str, int]]]  # mode plus train/val/test pairs
    mode: str
    channel_order: list[str]
    manifest_sha256: str

    def in_split(self, which: str) -> list[DatasetSample]:
        if which == "all":
            return list(self.samples)
        members = set(self.split[which])
        return [s for s in self.samples if (s.scene_id, s.index) in members]


def manifest_digest(data_dir: str | Path) -> str:
    return hashlib.sha256((Path(data_dir) / "dataset.json").read_bytes()).hexdigest()


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_dataset(data_dir: str | Path, verify_hashes: bool = True) -> LoadedDataset:
    root = Path(data_dir)
    manifest_path = root / "dataset.json"
    if not manifest_path.is_file():
        raise DatasetError(f"missing dataset manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())

    order = manifest.get("channel_order", EXPECTED_CHANNEL_ORDER)
    if order[:2] != ["current", "background"]:
        raise DatasetError(f"unsupported channel order {order}")

    samples: list[DatasetSample] = []
    for entry in manifest["samples"]:
        arrays = {}
        for key, rel in entry["files"].items():
            path = root / rel
            if not path.is_file():
                raise DatasetError(f"sample {entry['id']}: missing file {path}")
            if verify_hashes:
                digest = hashlib.sha256(path.read_bytes()).hexdigest()
                if digest != entry["sha256s"][key]:
                    raise DatasetError(f"sample {entry['id']}: corrupted file {rel}")
            arrays[key] = _read_png(path)
        channels = np.stack([arrays[f"c{i}"] for i in range(6)])
        target = (arrays["target"] > 127).astype(np.float32)
        weight = (arrays["weight"] > 127).astype(np.float32) if "weight" in arrays \
            else np.ones_like(target)
        samples.append(DatasetSample(
            sample_id=entry["id"],
            scene_id=entry["scene_id"],
            index=int(entry["index"]),
            bg_aug=entry["bg_aug"],
            interval_aug=bool(entry["interval_aug"]),
            channels=channels,
            target=target,
            weight=weight,
        ))

    split_doc = manifest["split"]
    split = {k: [(s, int(i)) for s, i in split_doc[k]] for k in ("train", "val", "test")}
    return LoadedDataset(
        samples=samples,
        split=split,
        mode=split_doc["mode"],
        channel_order=list(order),
        manifest_sha256=manifest_digest(root),
    )


def normalize_channels(channels: np.ndarray) -> np.ndarray:
    """8-bit stack -> float32 in [-0.5, 0.5]."""
    return (channels.astype(np.float32) - 127.5) / 255.0


def to_tensors(samples: list[DatasetSample]):
    """Stack samples into (inputs, targets, weights) torch tensors."""
    import torch

    if not samples:
        raise DatasetError("no samples to stack")
    x = np.stack([normalize_channels(s.channels) for s in samples])
    y = np.stack([s.target for s in samples])[:, None]
    w = np.stack([s.weight for s in samples])[:, None]
    return torch.from_numpy(x), torch.from_numpy(y), torch.from_numpy(w)
