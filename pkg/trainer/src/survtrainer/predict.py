"""Inference: probability maps per sample, and bulk evaluation that writes
8-bit PNG maps named by sample id, consumable by the pipeline's eval command."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .data import DatasetSample, load_dataset, normalize_channels
from .train import Checkpoint


def predict(checkpoint: Checkpoint, sample: DatasetSample,
            model: torch.nn.Module | None = None) -> np.ndarray:
    """Probability map in [0, 1] for one sample."""
    if model is None:
        model = checkpoint.build_model()
    x = torch.from_numpy(normalize_channels(sample.channels))[None]
    if x.shape[1] != checkpoint.in_channels:
        raise ValueError(
            f"sample has {x.shape[1]} channels, checkpoint expects {checkpoint.in_channels}"
        )
    with torch.no_grad():
        out = model(x)
    return out[0, 0].numpy()


def evaluate(checkpoint: Checkpoint, dataset_dir: str | Path, out_dir: str | Path,
             split: str = "test") -> list[Path]:
    """Write ``round(255 * p)`` gray PNGs for every sample in the split."""
    dataset = load_dataset(dataset_dir)
    if dataset.manifest_sha256 != checkpoint.manifest_sha256:
        print(
            "warning: dataset manifest hash differs from the one this "
            "checkpoint was trained on", file=sys.stderr,
        )
    if dataset.channel_order != checkpoint.channel_order:
        raise ValueError(
            f"channel order mismatch: dataset {dataset.channel_order} vs "
            f"checkpoint {checkpoint.channel_order}"
        )
    samples = dataset.in_split(split)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = checkpoint.build_model()
    written = []
    for sample in samples:
        prob = predict(checkpoint, sample, model=model)
        png = np.rint(255.0 * prob).astype(np.uint8)
        path = out / f"{sample.sample_id}.png"
        Image.fromarray(png).save(path)
        written.append(path)
    return written
