"""Spatio-temporal augmentation toolkit for visual surveillance."""

from .augmentation import (
    AugPlan,
    interval_zero,
    plan_augmentation,
    splice_correct,
    splice_corrupt,
)
from .background_model import BackgroundModel, BgParams, background_image, run_sequence
from .dataset_builder import (
    NormalizedSample,
    Sample,
    Split,
    assemble_sample,
    export_dataset,
    import_dataset,
    preprocess,
    split_sde,
    split_sie,
)
from .errors import DataError
from .metrics import ConfusionCounts, MetricReport, aggregate, binarize, compute_metrics, confusion
from .sequence_io import Frame, Scene, SceneManifest, load_scene, save_scene, validate_scene
from .synth import ActorSpec, BackgroundSpec, SynthSpec, generate_scene, scenario_presets

__version__ = "0.1.0"

__all__ = [
    "ActorSpec", "AugPlan", "BackgroundModel", "BackgroundSpec", "BgParams",
    "ConfusionCounts", "DataError", "Frame", "MetricReport", "NormalizedSample",
    "Sample", "Scene", "SceneManifest", "Split", "SynthSpec", "aggregate",
    "assemble_sample", "background_image", "binarize", "compute_metrics",
    "confusion", "export_dataset", "generate_scene", "import_dataset",
    "interval_zero", "load_scene", "plan_augmentation", "preprocess",
    "run_sequence", "save_scene", "scenario_presets", "splice_correct",
    "splice_corrupt", "split_sde", "split_sie", "validate_scene",
]
