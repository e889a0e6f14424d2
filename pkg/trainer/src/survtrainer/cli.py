"""Trainer command line: ``train`` fits a checkpoint from an exported dataset,
``evaluate`` writes probability-map PNGs for a split."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import DatasetError
from .predict import evaluate
from .train import TrainConfig, load_checkpoint, save_checkpoint, train, write_curves


def cmd_train(args: argparse.Namespace) -> int:
    config = TrainConfig(
        width_mult=args.width_mult,
        batch_size=args.batch_size,
        lr=args.lr,
        lr_patience=args.lr_patience,
        stop_patience=args.stop_patience,
        max_epochs=args.max_epochs,
        seed=args.seed,
    )
    print(f"[config] {json.dumps({'command': 'train', 'dataset': str(args.dataset), **config.__dict__}, sort_keys=True)}")
    checkpoint = train(args.dataset, config)
    save_checkpoint(checkpoint, args.out)
    if args.curves:
        write_curves(checkpoint.curves, args.curves)
    last = checkpoint.curves[-1]
    print(f"trained {last['epoch']} epochs; final val loss {last['val_loss']:.5f} -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    print(f"[config] {json.dumps({'command': 'evaluate', 'checkpoint': str(args.checkpoint), 'dataset': str(args.dataset), 'split': args.split, 'out': str(args.out)}, sort_keys=True)}")
    checkpoint = load_checkpoint(args.checkpoint)
    written = evaluate(checkpoint, args.dataset, args.out, split=args.split)
    print(f"wrote {len(written)} probability maps -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survtrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a U-Net on an exported dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.pt)")
    p.add_argument("--curves", default=None, help="optional training-curves CSV")
    p.add_argument("--width-mult", type=float, default=0.125)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr-patience", type=int, default=5)
    p.add_argument("--stop-patience", type=int, default=10)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="write probability maps for a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test", "all"])
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (DatasetError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
