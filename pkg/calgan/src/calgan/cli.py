"""calgan command line: train on a pair corpus, render composite corpora."""

from __future__ import annotations

import argparse
import sys

from .model import DiscriminatorConfig, GeneratorConfig
from .render import render_corpus
from .train import TrainConfig, save_checkpoint, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calgan")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    t = sub.add_parser("train", help="train on a (clean, corrupted, mask) pair corpus")
    t.add_argument("--pairs", required=True, help="pair manifest JSONL")
    t.add_argument("--out", required=True, help="checkpoint output path")
    t.add_argument("--steps", type=int, default=200)
    t.add_argument("--batch", type=int, default=4)
    t.add_argument("--size", type=int, default=256, help="working resolution")
    t.add_argument("--base", type=int, default=64, help="base feature width")
    t.add_argument("--lr", type=float, default=0.0002)
    t.add_argument("--lambda-l1", dest="lambda_l1", type=float, default=100.0)
    t.add_argument("--d-scale", dest="d_scale", type=float, default=0.5,
                   help="discriminator gradient scale (half gradient = 0.5)")
    t.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("render", help="context-render a composite corpus")
    r.add_argument("--ckpt", required=True, help="trained checkpoint")
    r.add_argument("--manifest", required=True, help="corpus manifest JSONL")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--masks", default=None,
                   help="mask directory (default: masks/ next to the manifest)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        if args.command == "train":
            gen_config = GeneratorConfig(resolution=args.size, base_width=args.base)
            disc_config = DiscriminatorConfig(base_width=args.base)
            train_config = TrainConfig(
                lambda_l1=args.lambda_l1, learning_rate=args.lr,
                d_grad_scale=args.d_scale, batch_size=args.batch,
                steps=args.steps, seed=args.seed,
            )
            result = train(args.pairs, gen_config, disc_config, train_config)
            save_checkpoint(result, args.out)
            print(f"train: {args.steps} steps, L1 {result.l1_start:.4f} -> "
                  f"{result.l1_end:.4f}, checkpoint -> {args.out}")
        else:
            count = render_corpus(args.ckpt, args.manifest, args.out, args.masks)
            print(f"render: {count} images -> {args.out}")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
