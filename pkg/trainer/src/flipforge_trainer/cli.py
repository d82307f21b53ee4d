"""`python -m flipforge_trainer` entry point."""

from __future__ import annotations

import argparse
import sys

from .config import TrainConfig
from .errors import TrainerError
from .inference import infer
from .training import train


def _cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        sigma=args.sigma,
        augmentations=tuple(a for a in args.augment.split(",") if a) if args.augment else (),
        seed=args.seed,
        deterministic=args.deterministic,
    )
    ckpt = train(args.dataset, cfg, args.out)
    print(f"checkpoint written to {ckpt}")
    return 0


def _cmd_infer(args) -> int:
    n = infer(args.ckpt, args.frames, args.out)
    print(f"wrote {n} heatmaps to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flipforge-trainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the toy heatmap regressor")
    p.add_argument("--dataset", required=True, help="flipforge-dataset-v1 directory")
    p.add_argument("--out", required=True, help="checkpoint/log output directory")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--sigma", type=float, default=6.0)
    p.add_argument(
        "--augment",
        default="flip,crop,brightness",
        help="comma-separated subset of flip,crop,brightness ('' disables)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="emit HMAP heatmaps for consecutive frame pairs")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--frames", required=True, help="directory of t%%04d.png frames")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_infer)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrainerError, ValueError) as exc:
        print(f"flipforge-trainer: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"flipforge-trainer: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
