"""Desk-scale U-Net trainer for exported surveillance segmentation datasets."""

from .controller import PlateauController
from .data import DatasetSample, LoadedDataset, load_dataset, normalize_channels
from .predict import evaluate, predict
from .train import (
    Checkpoint,
    TrainConfig,
    fm_score,
    load_checkpoint,
    masked_bce,
    save_checkpoint,
    train,
)
from .unet import UNet, parameter_counts

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "DatasetSample", "LoadedDataset", "PlateauController",
    "TrainConfig", "UNet", "evaluate", "fm_score", "load_checkpoint",
    "load_dataset", "masked_bce", "normalize_channels", "parameter_counts",
    "predict", "save_checkpoint", "train",
]
