"""Command-line entry point: ``segment``, ``eval`` and ``selftest``.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .io import ImageFormatError, ParamFormatError, load_image, load_labels, load_params, save_image, save_labels
from .masks import ObjectMask
from .metrics import DEFAULT_TOLERANCE_FRACTION, frame_scores
from .pipeline import PipelineParams, init_params, iter_sequence
from .visualize import visualize_flow, visualize_uncertainty

log = logging.getLogger("munet")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser():
    parser = _Parser(prog="munet", description="Motion-uncertainty video object segmentation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    seg = sub.add_parser("segment", help="segment a frame sequence given the first mask")
    seg.add_argument("--frames", required=True, type=Path, help="directory of PPM frames (sorted by name)")
    seg.add_argument("--first-mask", required=True, type=Path, help="PGM label mask of the first frame")
    seg.add_argument("--out", required=True, type=Path)
    seg.add_argument("--config", required=True, type=Path)
    seg.add_argument("--params", type=Path, help="parameter file (defaults to seeded/analytic weights)")
    seg.add_argument("--emit-flow", action="store_true")
    seg.add_argument("--emit-uncertainty", action="store_true")

    ev = sub.add_parser("eval", help="score predicted masks against ground truth")
    ev.add_argument("--pred", required=True, type=Path)
    ev.add_argument("--gt", required=True, type=Path)
    ev.add_argument("--report", required=True, type=Path)
    ev.add_argument("--tolerance-fraction", type=float, default=DEFAULT_TOLERANCE_FRACTION)

    st = sub.add_parser("selftest", help="run the built-in oracle checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _sorted_files(directory, suffix):
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == suffix)


def cmd_segment(args):
    cfg = load_config(args.config)
    frame_paths = _sorted_files(args.frames, ".ppm")
    if len(frame_paths) < 2:
        raise ValueError(f"need at least two .ppm frames in {args.frames}")
    frames = [load_image(p) for p in frame_paths]
    labels = load_labels(args.first_mask)
    if labels.shape != frames[0].shape[1:]:
        raise ValueError(f"first mask {labels.shape} does not match frame size {frames[0].shape[1:]}")
    params = PipelineParams.from_dict(load_params(args.params)) if args.params else init_params(cfg)

    args.out.mkdir(parents=True, exist_ok=True)
    first = ObjectMask.from_labels(labels)
    save_labels(args.out / f"{0:05d}.pgm", first.labels)
    h, w = labels.shape
    for number, mask, motion in iter_sequence(frames, first, cfg, params):
        stem = f"{number - 1:05d}"
        save_labels(args.out / f"{stem}.pgm", mask.labels)
        if args.emit_flow:
            rgb = visualize_flow(motion.displacement)
            scale_h, scale_w = -(-h // rgb.shape[1]), -(-w // rgb.shape[2])
            rgb = np.repeat(np.repeat(rgb, scale_h, axis=1), scale_w, axis=2)[:, :h, :w]
            save_image(args.out / f"{stem}_flow.ppm", rgb)
        if args.emit_uncertainty:
            save_image(args.out / f"{stem}_uncertainty.ppm", visualize_uncertainty(motion.uncertainty, h, w))
        log.info("frame %s: %d labelled pixels", stem, int(np.count_nonzero(mask.labels)))
    return EXIT_OK


def evaluate_dirs(pred_dir, gt_dir, tolerance_fraction=DEFAULT_TOLERANCE_FRACTION):
    """Per-frame J, F and J&F records for every ground-truth PGM that has a prediction."""
    gt_paths = [p for p in _sorted_files(gt_dir, ".pgm")]
    if not gt_paths:
        raise ValueError(f"no .pgm ground-truth masks in {gt_dir}")
    records = []
    for gt_path in gt_paths:
        pred_path = pred_dir / gt_path.name
        if not pred_path.exists():
            raise FileNotFoundError(f"missing prediction {pred_path}")
        pred, gt = load_labels(pred_path), load_labels(gt_path)
        if pred.shape != gt.shape:
            raise ValueError(f"{gt_path.name}: prediction {pred.shape} and ground truth {gt.shape} differ")
        j, f = frame_scores(pred, gt, tolerance_fraction)
        records.append({"frame": gt_path.stem, "J": j, "F": f, "JF": (j + f) / 2.0})
    return records


def summarize(records):
    return {
        "frames": len(records),
        "J": float(np.mean([r["J"] for r in records])),
        "F": float(np.mean([r["F"] for r in records])),
        "JF": float(np.mean([r["JF"] for r in records])),
    }


def cmd_eval(args):
    records = evaluate_dirs(args.pred, args.gt, args.tolerance_fraction)
    summary = summarize(records)
    lines = [json.dumps(r, sort_keys=True) for r in records]
    lines.append(json.dumps({"summary": summary}, sort_keys=True))
    args.report.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"J {summary['J']:.4f}  F {summary['F']:.4f}  J&F {summary['JF']:.4f}  ({summary['frames']} frames)")
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    return EXIT_OK if run_selftest(args.seed) else EXIT_INVALID


COMMANDS = {"segment": cmd_segment, "eval": cmd_eval, "selftest": cmd_selftest}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ImageFormatError, ParamFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
