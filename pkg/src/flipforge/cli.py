"""Command-line front end.

Exit codes are a stable contract: 0 success, 1 usage error, 2 data error
(bad formats, inconsistent content, invalid configuration), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .datagen import (
    DATASET_FORMAT_VERSION,
    GenConfig,
    generate_dataset,
    sample_partial_labels,
)
from .errors import DataError, FlipforgeError
from .heatmap import (
    DEFAULT_NMS_RADIUS,
    DEFAULT_PEAK_THRESHOLD,
    DEFAULT_SIGMA,
    HMAP_VERSION,
    load_detections,
    save_detections,
)
from .imagecore import load_annotations, load_sequence, save_annotations
from .metrics import (
    DEFAULT_SPATIAL_TOL,
    DEFAULT_TEMPORAL_TOL,
    MatchConfig,
    match,
    score,
)
from .pipeline import (
    CONFIG_FORMAT_VERSION,
    StageError,
    _dataclass_from_mapping,
    load_pipeline_config,
    peaks_from_heatmaps,
    render_dataset_heatmaps,
    run_pipeline,
    write_simulation,
)
from .simulate import SimConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

_VERSION_LINE = (
    f"flipforge {__version__} "
    f"(dataset format {DATASET_FORMAT_VERSION}, heatmap format {HMAP_VERSION}, "
    f"config format {CONFIG_FORMAT_VERSION})"
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from exc


def _cmd_simulate(args) -> int:
    doc = _load_json(Path(args.config))
    cfg = _dataclass_from_mapping(SimConfig, doc, str(args.config))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    write_simulation(cfg, args.out)
    print(f"wrote {cfg.n_frames} frames and gt.json to {args.out}")
    return EXIT_OK


def _cmd_sample_labels(args) -> int:
    labels = load_annotations(args.labels)
    if args.n_shot is not None:
        sampled = sample_partial_labels(labels, n_shot=args.n_shot, seed=args.seed)
    else:
        sampled = sample_partial_labels(labels, missing_rate=args.missing_rate, seed=args.seed)
    save_annotations(sampled, args.out)
    print(f"kept {len(sampled)} of {len(labels)} events -> {args.out}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    seq = load_sequence(args.frames)
    labels = load_annotations(args.labels)
    cfg = GenConfig(
        crop_size=args.crop_size,
        k_min=args.k_min,
        k_max=args.k_max,
        mask_sigma_min=args.sigma_min,
        mask_sigma_max=args.sigma_max,
        paste_mode=args.paste_mode,
        seed=args.seed,
    )
    manifest = generate_dataset(seq, labels, cfg, args.out, workers=args.threads)
    n_events = sum(p["n_events"] for p in manifest["pairs"])
    print(f"wrote {len(manifest['pairs'])} pairs ({n_events} pasted events) to {args.out}")
    return EXIT_OK


def _cmd_render(args) -> int:
    n = render_dataset_heatmaps(args.dataset, args.sigma, args.out, workers=args.threads)
    print(f"rendered {n} heatmaps to {args.out}")
    return EXIT_OK


def _cmd_peaks(args) -> int:
    detections = peaks_from_heatmaps(args.heatmaps, args.threshold, args.nms_radius)
    save_detections(detections, args.out)
    print(f"wrote {len(detections)} detections to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    gt = load_annotations(args.gt).events
    detections = load_detections(args.det)
    if args.threshold is not None:
        detections = [d for d in detections if d.score >= args.threshold]
    cfg = MatchConfig(spatial_tol=args.spatial_tol, temporal_tol=args.temporal_tol)
    report = score(match(gt, detections, cfg))
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    cfg = load_pipeline_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = args.out or cfg.out
    if out is None:
        raise DataError("no output directory: pass --out or set 'out' in the config")
    summary = run_pipeline(cfg, out, workers=args.threads)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _add_threads_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker cap for parallel stages (default: available parallelism)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flipforge", description=__doc__)
    parser.add_argument("--version", action="version", version=_VERSION_LINE)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic sequence with exact ground truth")
    p.add_argument("--config", required=True, help="SimConfig JSON file")
    p.add_argument("--out", required=True, help="output directory (frames/ + gt.json)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sample-labels", help="subsample an annotation file")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--n-shot", type=int, default=None)
    mode.add_argument("--missing-rate", type=float, default=None)
    p.set_defaults(func=_cmd_sample_labels)

    p = sub.add_parser("generate", help="emit a fully labeled pair dataset")
    p.add_argument("--frames", required=True, help="directory of t%%04d.png frames")
    p.add_argument("--labels", required=True, help="annotation JSON (partial labels)")
    p.add_argument("--out", required=True)
    p.add_argument("--crop-size", type=int, default=40)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--sigma-min", type=float, default=2.0)
    p.add_argument("--sigma-max", type=float, default=8.0)
    p.add_argument("--paste-mode", choices=("alpha", "direct"), default="alpha")
    p.add_argument("--seed", type=int, default=0)
    _add_threads_flag(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("render", help="render ground-truth heatmaps for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--out", required=True)
    _add_threads_flag(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("peaks", help="decode detections from heatmap files")
    p.add_argument("--heatmaps", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_PEAK_THRESHOLD)
    p.add_argument("--nms-radius", type=float, default=DEFAULT_NMS_RADIUS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_peaks)

    p = sub.add_parser("evaluate", help="score detections against ground truth")
    p.add_argument("--gt", required=True, help="annotation JSON")
    p.add_argument("--det", required=True, help="detections JSON")
    p.add_argument("--spatial-tol", type=float, default=DEFAULT_SPATIAL_TOL)
    p.add_argument("--temporal-tol", type=float, default=DEFAULT_TEMPORAL_TOL)
    p.add_argument("--threshold", type=float, default=None, help="score cutoff before matching")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the configured stage list end to end")
    p.add_argument("--config", required=True, help="pipeline JSON config")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    _add_threads_flag(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"flipforge: {exc}", file=sys.stderr)
        return _exit_code_for(exc.cause)
    except (FlipforgeError, ValueError) as exc:
        print(f"flipforge: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"flipforge: {exc}", file=sys.stderr)
        return EXIT_IO


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (FlipforgeError, ValueError)):
        return EXIT_DATA
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
