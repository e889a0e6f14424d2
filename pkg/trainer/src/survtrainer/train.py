"""Training loop: masked binary cross-entropy, Adam, LR halving on validation
plateau, early stopping, best-validation-weights checkpoint.

Runs are reproducible for a fixed seed on CPU; GPU backends may introduce
their own nondeterminism.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .controller import PlateauController
from .data import DatasetError, LoadedDataset, load_dataset, to_tensors
from .unet import UNet


@dataclass
class TrainConfig:
    width_mult: float = 0.125
    batch_size: int = 8
    lr: float = 1e-3
    lr_patience: int = 5
    stop_patience: int = 10
    min_delta: float = 0.0
    max_epochs: int = 200
    seed: int = 0

    def validate(self) -> None:
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not self.stop_patience > self.lr_patience:
            raise ValueError("stop_patience must exceed lr_patience")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")


@dataclass
class Checkpoint:
    state_dict: dict
    config: TrainConfig
    curves: list[dict]  # epoch, train_loss, val_loss, lr
    manifest_sha256: str
    channel_order: list[str]
    in_channels: int = 6

    def build_model(self) -> UNet:
        model = UNet(in_channels=self.in_channels, width_mult=self.config.width_mult)
        model.load_state_dict(self.state_dict)
        model.eval()
        return model


def masked_bce(pred: torch.Tensor, target: torch.Tensor,
               weight: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy averaged over non-excluded pixels."""
    eps = 1e-7
    pred = pred.clamp(eps, 1.0 - eps)
    loss = -(target * torch.log(pred) + (1.0 - target) * torch.log(1.0 - pred))
    denom = weight.sum().clamp(min=1.0)
    return (loss * weight).sum() / denom


def _epoch_loss(model, x, y, w, batch_size) -> float:
    model.eval()
    total = 0.0
    denom = 0.0
    with torch.no_grad():
        for i in range(0, len(x), batch_size):
            xb, yb, wb = x[i:i + batch_size], y[i:i + batch_size], w[i:i + batch_size]
            pred = model(xb)
            eps = 1e-7
            pred = pred.clamp(eps, 1.0 - eps)
            loss = -(yb * torch.log(pred) + (1.0 - yb) * torch.log(1.0 - pred))
            total += float((loss * wb).sum())
            denom += float(wb.sum())
    return total / max(denom, 1.0)


def train(dataset_dir: str | Path, config: TrainConfig = TrainConfig()) -> Checkpoint:
    """Fit a U-Net on the dataset's train split, validating on its val split."""
    config.validate()
    dataset = load_dataset(dataset_dir)
    train_samples = dataset.in_split("train")
    val_samples = dataset.in_split("val")
    if not train_samples:
        raise DatasetError("dataset has an empty train split")
    if not val_samples:
        raise DatasetError("dataset has an empty val split")

    torch.manual_seed(config.seed)
    model = UNet(in_channels=6, width_mult=config.width_mult)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    controller = PlateauController(
        lr_patience=config.lr_patience,
        stop_patience=config.stop_patience,
        min_delta=config.min_delta,
    )

    x_train, y_train, w_train = to_tensors(train_samples)
    x_val, y_val, w_val = to_tensors(val_samples)

    shuffler = torch.Generator().manual_seed(config.seed)
    curves: list[dict] = []
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    best_val = float("inf")

    for epoch in range(1, config.max_epochs + 1):
        model.train()
        order = torch.randperm(len(x_train), generator=shuffler)
        running = 0.0
        batches = 0
        for i in range(0, len(order), config.batch_size):
            idx = order[i:i + config.batch_size]
            optimizer.zero_grad()
            pred = model(x_train[idx])
            loss = masked_bce(pred, y_train[idx], w_train[idx])
            loss.backward()
            optimizer.step()
            running += loss.item()
            batches += 1

        val_loss = _epoch_loss(model, x_val, y_val, w_val, config.batch_size)
        lr_now = optimizer.param_groups[0]["lr"]
        curves.append({
            "epoch": epoch,
            "train_loss": running / max(batches, 1),
            "val_loss": val_loss,
            "lr": lr_now,
        })
        if val_loss < best_val:
            best_val = val_loss
            best_state = {k: v.clone() for k, v in model.state_dict().items()}

        halve, stop = controller.update(val_loss)
        if halve:
            for group in optimizer.param_groups:
                group["lr"] *= 0.5
        if stop:
            break

    return Checkpoint(
        state_dict=best_state,
        config=config,
        curves=curves,
        manifest_sha256=dataset.manifest_sha256,
        channel_order=dataset.channel_order,
    )


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    torch.save({
        "state_dict": checkpoint.state_dict,
        "config": asdict(checkpoint.config),
        "curves": checkpoint.curves,
        "manifest_sha256": checkpoint.manifest_sha256,
        "channel_order": checkpoint.channel_order,
        "in_channels": checkpoint.in_channels,
    }, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> Checkpoint:
    doc = torch.load(path, map_location="cpu", weights_only=False)
    return Checkpoint(
        state_dict=doc["state_dict"],
        config=TrainConfig(**doc["config"]),
        curves=doc["curves"],
        manifest_sha256=doc["manifest_sha256"],
        channel_order=doc["channel_order"],
        in_channels=doc.get("in_channels", 6),
    )


def curves_to_csv(curves: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["epoch", "train_loss", "val_loss", "lr"])
    writer.writeheader()
    writer.writerows(curves)
    return buf.getvalue()


def write_curves(curves: list[dict], path: str | Path) -> None:
    Path(path).write_text(curves_to_csv(curves))


def fm_score(pred_binary: np.ndarray, target: np.ndarray,
             weight: np.ndarray | None = None) -> float:
    """F-measure with the empty-frame convention (both empty -> 1)."""
    mask = weight > 0 if weight is not None else np.ones_like(target, dtype=bool)
    p = pred_binary.astype(bool) & mask
    t = (target > 0.5) & mask
    tp = int((p & t).sum())
    fp = int((p & ~t).sum())
    fn = int((~p & t).sum())
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)
