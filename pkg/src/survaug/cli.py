"""Command-line front end.

Subcommands: synth, bgs, augment, build, eval, report. Every command prints
one ``[config]`` line with all defaults resolved, so a run can be reproduced
from its log. Exit codes: 0 success, 2 usage, 3 data error, 4 internal.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import augmentation, background_model, dataset_builder, metrics, sequence_io, synth
from .errors import DataError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _echo_config(command: str, cfg: dict) -> None:
    print(f"[config] {json.dumps({'command': command, **cfg}, sort_keys=True)}")


# ---------------------------------------------------------------- synth

def cmd_synth(args: argparse.Namespace) -> int:
    presets = synth.scenario_presets()
    spec = dataclasses.replace(presets[args.preset], seed=args.seed)
    _echo_config("synth", {"preset": args.preset, "out": str(args.out), "seed": args.seed})
    scene = synth.generate_scene(spec)
    sequence_io.save_scene(scene, args.out)
    print(f"wrote scene {scene.scene_id!r}: {len(scene)} frames -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- bgs

def _bg_params(args: argparse.Namespace) -> background_model.BgParams:
    return background_model.BgParams(
        n_samples=args.n_samples,
        min_matches=args.min_matches,
        match_radius=args.match_radius,
        subsample_factor=args.subsample,
        neighbor_diffusion=not args.no_diffusion,
        seed=args.seed,
    )


def cmd_bgs(args: argparse.Namespace) -> int:
    params = _bg_params(args)
    out = Path(args.out or args.scene)
    _echo_config("bgs", {"scene": str(args.scene), "out": str(out), **params.__dict__})
    scene = sequence_io.load_scene(args.scene)
    backgrounds, masks = background_model.run_sequence(scene, params)
    bg_dir = out / "bgmodel"
    mask_dir = out / "bgsmask"
    bg_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)
    for idx, (bg, mask) in enumerate(zip(backgrounds, masks)):
        sequence_io.write_png(bg_dir / f"bg{idx:06d}.png", bg)
        sequence_io.write_png(mask_dir / f"fg{idx:06d}.png", mask)
    print(f"wrote {len(backgrounds)} background images -> {bg_dir}")
    return EXIT_OK


# ---------------------------------------------------------------- augment

def cmd_augment(args: argparse.Namespace) -> int:
    _echo_config("augment", {
        "scene": str(args.scene), "out": str(args.out),
        "mode": args.mode, "span": args.span,
    })
    scene = sequence_io.load_scene(args.scene)
    spliced = augmentation.splice_for(scene, args.mode, args.span)
    sequence_io.save_scene(spliced, args.out)
    print(f"wrote spliced scene -> {args.out} ({spliced.provenance[-1]})")
    return EXIT_OK


# ---------------------------------------------------------------- build

BUILD_DEFAULTS = {
    "scenes": [],
    "out": "",
    "samples_per_scene": 20,
    "intervals": list(dataset_builder.DEFAULT_INTERVALS),
    "size": list(dataset_builder.DEFAULT_SIZE),
    "span": augmentation.DEFAULT_SPAN,
    "bg_aug": False,
    "interval_aug": False,
    "split": {"mode": "sde", "train_fraction": 0.8, "test_scenes": []},
    "bg_params": {
        "n_samples": 20, "min_matches": 2, "match_radius": 20,
        "subsample_factor": 16, "neighbor_diffusion": True, "seed": 0,
    },
    "jobs": 1,
}


def _merge_config(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge_config(out[key], value)
        elif value is not None:
            out[key] = value
    return out


def _pick_indices(eligible: list[int], count: int, scene_id: str) -> list[int]:
    if count > len(eligible):
        raise DataError(
            f"scene {scene_id}: requested {count} samples but only "
            f"{len(eligible)} indices have enough history and a mask"
        )
    n = len(eligible)
    return [eligible[i * n // count] for i in range(count)]


def _build_scene_samples(scene, plan_entry, cfg, is_test: bool) -> list:
    """All sample variants for one scene. Test scenes get natural samples only."""
    intervals = tuple(cfg["intervals"])
    size = tuple(cfg["size"])
    params = background_model.BgParams(**cfg["bg_params"])
    rng = scene.manifest.labeled_range
    horizon = max(intervals)
    eligible = [t for t in range(rng[0], rng[1] + 1) if t >= horizon and t in scene.masks] \
        if rng else []
    chosen = _pick_indices(eligible, cfg["samples_per_scene"], scene.scene_id)

    natural_bg, _ = background_model.run_sequence(scene, params)
    alt_bg = None
    if not is_test and plan_entry.bg_aug != augmentation.BG_AUG_NONE:
        spliced = augmentation.splice_for(scene, plan_entry.bg_aug, cfg["span"])
        alt_bg, _ = background_model.run_sequence(spliced, params)

    samples = []
    for t in chosen:
        base = dataset_builder.assemble_sample(scene, natural_bg, t, intervals, size)
        samples.append(base)
        if not is_test and plan_entry.interval_aug:
            samples.append(augmentation.interval_zero(base))
        if alt_bg is not None:
            aug = dataset_builder.assemble_sample(
                scene, alt_bg, t, intervals, size, bg_aug=plan_entry.bg_aug)
            samples.append(aug)
            if plan_entry.interval_aug:
                samples.append(augmentation.interval_zero(aug))
    return samples


def run_build(cfg: dict) -> dict:
    """Load scenes, run the subtractor, apply planned augmentations, split,
    and export. Returns the dataset manifest."""
    if not cfg["scenes"]:
        raise DataError("no scenes configured")
    if not cfg["out"]:
        raise DataError("no output directory configured")

    with ThreadPoolExecutor(max_workers=max(1, cfg["jobs"])) as pool:
        scenes = list(pool.map(sequence_io.load_scene, cfg["scenes"]))
    for scene in scenes:
        diags = sequence_io.validate_scene(scene)
        if diags:
            raise DataError(f"scene {scene.scene_id}: {diags[0]}")
    by_id = {s.scene_id: s for s in scenes}
    if len(by_id) != len(scenes):
        raise DataError("duplicate scene ids in configuration")

    split_cfg = cfg["split"]
    mode = split_cfg["mode"].lower()
    test_ids = set(split_cfg.get("test_scenes") or [])
    if mode == "sde" and test_ids:
        raise DataError("test_scenes only apply to the SIE split mode")
    unknown = sorted(test_ids - set(by_id))
    if unknown:
        raise DataError(f"unknown test scene id {unknown[0]!r}")

    train_manifests = [s.manifest for s in scenes if s.scene_id not in test_ids]
    plan = augmentation.plan_augmentation(
        train_manifests, cfg["samples_per_scene"], cfg["bg_aug"],
        cfg["interval_aug"], cfg["span"])
    plan_by_id = {p.scene_id: p for p in plan.scenes}

    def build_one(scene):
        is_test = scene.scene_id in test_ids
        entry = plan_by_id.get(
            scene.scene_id, augmentation.ScenePlan(scene_id=scene.scene_id))
        return _build_scene_samples(scene, entry, cfg, is_test)

    with ThreadPoolExecutor(max_workers=max(1, cfg["jobs"])) as pool:
        per_scene = list(pool.map(build_one, scenes))
    samples = [s for group in per_scene for s in group]

    scene_samples = {
        scene.scene_id: sorted({s.meta.index for s in group})
        for scene, group in zip(scenes, per_scene)
    }
    if mode == "sie":
        split = dataset_builder.split_sie(
            [s.manifest for s in scenes], sorted(test_ids), scene_samples,
            split_cfg["train_fraction"])
    else:
        split = dataset_builder.split_sde(scene_samples, split_cfg["train_fraction"])

    manifest = dataset_builder.export_dataset(
        samples, cfg["out"], split, tuple(cfg["intervals"]))
    n_test_natural = sum(len(g) for s, g in zip(scenes, per_scene) if s.scene_id in test_ids)
    expected = plan.after_bg + n_test_natural
    if len(samples) != expected:
        raise DataError(
            f"internal accounting mismatch: built {len(samples)} samples, "
            f"planned {plan.after_bg} (+{n_test_natural} test)"
        )
    print(
        f"built {len(samples)} samples "
        f"(plan: base {plan.base}, +interval {plan.after_interval}, "
        f"+bg {plan.after_bg}; natural test {n_test_natural}) -> {cfg['out']}"
    )
    return manifest


def cmd_build(args: argparse.Namespace) -> int:
    file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "scenes": args.scenes or None,
        "out": args.out,
        "samples_per_scene": args.samples_per_scene,
        "bg_aug": args.bg_aug,
        "interval_aug": args.interval_aug,
        "span": args.span,
        "jobs": args.jobs,
        "split": {
            "mode": args.split_mode,
            "test_scenes": args.test_scenes or None,
            "train_fraction": args.train_fraction,
        },
        "bg_params": {"seed": args.seed},
    }
    cfg = _merge_config(_merge_config(BUILD_DEFAULTS, file_cfg), overrides)
    _echo_config("build", cfg)
    run_build(cfg)
    return EXIT_OK


# ---------------------------------------------------------------- eval

_INDEX_RE = re.compile(r"(\d+)\.(?:png|jpg|jpeg|bmp)$", re.I)


def _read_gray(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def _prob_from_png(path: Path) -> np.ndarray:
    return _read_gray(path).astype(np.float64) / 255.0


def _eval_dataset(args) -> tuple[list, dict]:
    samples, split, _ = dataset_builder.import_dataset(args.dataset)
    which = args.split_set
    members = {
        "train": set(split.train), "val": set(split.val), "test": set(split.test),
    }
    if which == "all":
        selected = samples
    else:
        selected = [s for s in samples
                    if (s.meta.scene_id, s.meta.index) in members[which]]
    if not selected:
        raise DataError(f"no samples in split {which!r}")
    pred_dir = Path(args.pred)
    per_scene: dict[str, metrics.ConfusionCounts] = {}
    for sample in selected:
        pred_path = pred_dir / f"{sample.sample_id}.png"
        if not pred_path.is_file():
            raise DataError(f"missing prediction for sample {sample.sample_id}: {pred_path}")
        pred = metrics.binarize(_prob_from_png(pred_path))
        counts = metrics.confusion(pred, sample.target, sample.weight)
        key = sample.meta.scene_id
        per_scene[key] = per_scene.get(key, metrics.ConfusionCounts()) + counts
    rows = [(sid, metrics.compute_metrics(c)) for sid, c in sorted(per_scene.items())]
    return rows, {}


def _eval_scene_dir(args) -> tuple[list, dict]:
    gt_root = Path(args.gt)
    category = ""
    label = gt_root.name
    if (gt_root / sequence_io.GT_DIR).is_dir():
        scene = sequence_io.load_scene(gt_root)
        gt_masks = scene.masks
        category = scene.manifest.category
        label = scene.scene_id
    else:
        gt_masks = {}
        for name in sorted(gt_root.iterdir()):
            m = _INDEX_RE.search(name.name)
            if m:
                gt_masks[int(m.group(1))] = _read_gray(name)
    if not gt_masks:
        raise DataError(f"no ground-truth masks found under {gt_root}")

    pred_dir = Path(args.pred)
    pred_files: dict[int, Path] = {}
    for name in sorted(pred_dir.iterdir()):
        m = _INDEX_RE.search(name.name)
        if m:
            pred_files[int(m.group(1))] = name
    total = metrics.ConfusionCounts()
    for idx, gt in sorted(gt_masks.items()):
        if idx not in pred_files:
            raise DataError(f"missing prediction for frame {idx} in {pred_dir}")
        pred = metrics.binarize(_prob_from_png(pred_files[idx]))
        total = total + metrics.confusion(pred, gt)
    rows = [(label, metrics.compute_metrics(total))]
    return rows, ({label: category} if category else {})


def cmd_eval(args: argparse.Namespace) -> int:
    _echo_config("eval", {
        "pred": str(args.pred), "dataset": args.dataset and str(args.dataset),
        "gt": args.gt and str(args.gt), "split_set": args.split_set,
        "out": str(args.out),
    })
    if bool(args.dataset) == bool(args.gt):
        raise DataError("exactly one of --dataset or --gt is required")
    rows, categories = _eval_dataset(args) if args.dataset else _eval_scene_dir(args)
    extra = [("Average", metrics.aggregate([r for _, r in rows]))] if len(rows) > 1 else []
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_report_csv(out.with_suffix(".csv"), rows, extra)
    metrics.write_report_json(out.with_suffix(".json"), rows, extra, categories)
    for label, report in rows + extra:
        print(f"{label}: " + " ".join(
            f"{c}={v:.4f}" for c, v in zip(metrics.COLUMNS, report.as_row())))
    return EXIT_OK


# ---------------------------------------------------------------- report

def cmd_report(args: argparse.Namespace) -> int:
    _echo_config("report", {
        "inputs": [str(p) for p in args.inputs], "out": str(args.out),
        "by_category": args.by_category,
    })
    rows: list[tuple[str, metrics.MetricReport]] = []
    categories: dict[str, str] = {}
    for path in args.inputs:
        doc = json.loads(Path(path).read_text())
        for label, values in doc["scenes"].items():
            rows.append((label, metrics.MetricReport.from_dict(values)))
        categories.update(doc.get("categories", {}))
    if not rows:
        raise DataError("no scene rows found in inputs")
    extra: list[tuple[str, metrics.MetricReport]] = []
    if args.by_category:
        grouped = metrics.aggregate_by_category(
            [(categories.get(label, ""), rep) for label, rep in rows])
        extra += [(f"Category:{cat or 'uncategorized'}", rep) for cat, rep in grouped.items()]
        extra.append(("Average", metrics.aggregate(list(grouped.values()))))
    else:
        extra.append(("Average", metrics.aggregate([r for _, r in rows])))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_report_csv(out.with_suffix(".csv"), rows, extra)
    metrics.write_report_json(out.with_suffix(".json"), rows, extra, categories)
    for label, report in extra:
        print(f"{label}: FM={report.fm:.4f} PWC={report.pwc:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survaug",
        description="Spatio-temporal augmentation pipeline for visual surveillance",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--preset", required=True, choices=sorted(synth.scenario_presets()))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bgs", help="run the background subtractor over a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", default=None, help="output root (default: scene dir)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-samples", type=int, default=20)
    p.add_argument("--min-matches", type=int, default=2)
    p.add_argument("--match-radius", type=int, default=20)
    p.add_argument("--subsample", type=int, default=16)
    p.add_argument("--no-diffusion", action="store_true")
    p.set_defaults(func=cmd_bgs)

    p = sub.add_parser("augment", help="write a splice-augmented copy of a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", required=True,
                   choices=[augmentation.BG_AUG_CORRUPT, augmentation.BG_AUG_CORRECT])
    p.add_argument("--span", type=int, default=augmentation.DEFAULT_SPAN)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("build", help="assemble and export a training dataset")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--scenes", nargs="*", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--samples-per-scene", type=int, default=None)
    p.add_argument("--bg-aug", dest="bg_aug", action="store_true", default=None)
    p.add_argument("--no-bg-aug", dest="bg_aug", action="store_false")
    p.add_argument("--interval-aug", dest="interval_aug", action="store_true", default=None)
    p.add_argument("--no-interval-aug", dest="interval_aug", action="store_false")
    p.add_argument("--span", type=int, default=None)
    p.add_argument("--split-mode", choices=["sde", "sie"], default=None)
    p.add_argument("--test-scenes", nargs="*", default=None)
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--dataset", default=None, help="exported dataset directory")
    p.add_argument("--gt", default=None, help="scene root or mask directory")
    p.add_argument("--split-set", dest="split_set", default="test",
                   choices=["train", "val", "test", "all"])
    p.add_argument("--out", required=True, help="report path prefix")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge and aggregate eval reports")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--by-category", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
