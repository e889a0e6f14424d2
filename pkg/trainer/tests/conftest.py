import json
import shutil
import subprocess

import pytest

PRESET_SEED = 31
BG_SEED = 9


def survaug(*args):
    """Run the pipeline CLI; the trainer talks to it only through its public
    interfaces (scene directories, dataset.json, report JSON)."""
    exe = shutil.which("survaug")
    if exe is None:
        pytest.fail("survaug CLI not on PATH; install the pipeline package first")
    result = subprocess.run([exe, *map(str, args)], capture_output=True, text=True)
    if result.returncode != 0:
        pytest.fail(f"survaug {' '.join(map(str, args))} failed:\n{result.stderr}")
    return result.stdout


@pytest.fixture(scope="session")
def scenes_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    for preset in ("moving", "ghost", "bootstrap", "static_person"):
        survaug("synth", "--preset", preset, "--out", root / f"scene_{preset}",
                "--seed", PRESET_SEED)
    return root


def build_dataset(out_dir, scenes, config_path, **overrides):
    cfg = {
        "scenes": [str(s) for s in scenes],
        "out": str(out_dir),
        "size": [64, 64],
        "bg_params": {"seed": BG_SEED},
    }
    cfg.update(overrides)
    config_path.write_text(json.dumps(cfg))
    survaug("build", "--config", config_path)
    return out_dir


@pytest.fixture(scope="session")
def smoke_dataset(tmp_path_factory, scenes_dir):
    """One scene, 20 samples, 16 train / 4 val."""
    root = tmp_path_factory.mktemp("smoke")
    return build_dataset(root / "ds", [scenes_dir / "scene_moving"],
                         root / "cfg.json", samples_per_scene=20)


@pytest.fixture(scope="session")
def stall_dataset(tmp_path_factory, scenes_dir):
    """2 train / 8 val: memorization makes validation loss climb, which makes
    the LR-halving and early-stop rules fire."""
    root = tmp_path_factory.mktemp("stall")
    return build_dataset(root / "ds", [scenes_dir / "scene_moving"],
                         root / "cfg.json", samples_per_scene=10,
                         split={"mode": "sde", "train_fraction": 0.2})


@pytest.fixture(scope="session")
def sie_datasets(tmp_path_factory, scenes_dir):
    """SIE pair: train on moving+ghost, test on bootstrap+static_person,
    with and without the two augmentations."""
    root = tmp_path_factory.mktemp("sie")
    scenes = [scenes_dir / f"scene_{p}"
              for p in ("moving", "ghost", "bootstrap", "static_person")]
    split = {"mode": "sie", "test_scenes": ["bootstrap", "static_person"],
             "train_fraction": 0.8}
    plain = build_dataset(root / "ds_noaug", scenes, root / "noaug.json",
                          samples_per_scene=16, split=split,
                          bg_aug=False, interval_aug=False)
    augmented = build_dataset(root / "ds_aug", scenes, root / "aug.json",
                              samples_per_scene=16, split=split,
                              bg_aug=True, interval_aug=True)
    return plain, augmented
