"""``mosaic`` command line: build, eval, synth."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from .errors import RegistrationFailed
from .evaluation import GroundTruth, evaluate_pair
from .imaging import list_frame_files, load_frames, read_image, to_grayscale, write_image
from .pipeline import PipelineConfig, build_mosaic, config_from_mapping, load_config
from .synthetic import generate_sequence, load_spec, write_sequence

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REGISTRATION = 3

log = logging.getLogger("mosaic")


def _pipeline_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        "block_size": args.block_size,
        "search_range": args.search_range,
        "offset_threshold": args.offset_threshold,
        "max_keypoints": args.max_keypoints,
        "contrast_threshold": args.contrast_threshold,
        "blend": args.blend,
        "blend_levels": args.blend_levels,
        "seed": args.seed,
    }
    if args.no_color_align:
        overrides["color_align"] = False
    return config_from_mapping(overrides, base=cfg)


def cmd_build(args) -> int:
    try:
        cfg = _pipeline_config(args)
    except (OSError, ValueError) as exc:
        print(f"mosaic build: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not list_frame_files(args.input):
        print(f"mosaic build: no frames match {args.input!r}", file=sys.stderr)
        return EXIT_USAGE
    frames = load_frames(args.input)
    report_path = args.report or os.path.splitext(args.output)[0] + ".json"
    try:
        result = build_mosaic(frames, cfg, debug_dir=args.debug_dir)
    except RegistrationFailed as exc:
        exc.report.write(report_path)
        print(f"mosaic build: registration failed for pair {exc.pair}: {exc}", file=sys.stderr)
        return EXIT_REGISTRATION
    except ValueError as exc:
        print(f"mosaic build: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_image(args.output, result.quantized())
    result.report.write(report_path)
    log.info("wrote %s (%dx%d) from frames %s", args.output, *result.report.canvas, result.report.selected_indices)
    return EXIT_OK


def cmd_eval(args) -> int:
    if len(args.gt_homography) != 9:
        print("mosaic eval: --gt-homography takes 9 numbers (row-major)", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        gt = GroundTruth(np.array(args.gt_homography).reshape(3, 3), args.tolerance)
        left = to_grayscale(read_image(args.left))
        right = to_grayscale(read_image(args.right))
    except (OSError, ValueError) as exc:
        print(f"mosaic eval: {exc}", file=sys.stderr)
        return EXIT_USAGE
    row = evaluate_pair(left, right, gt, cfg)
    print(json.dumps(asdict(row)))
    if args.csv:
        new = not os.path.exists(args.csv)
        with open(args.csv, "a") as fh:
            fh.write(row.to_csv(header=new))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = load_spec(args.spec)
        seq = generate_sequence(spec)
    except (OSError, ValueError) as exc:
        print(f"mosaic synth: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = write_sequence(seq, args.out)
    log.info("wrote %d frames and %s", len(seq.frames), manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mosaic", description="Texture-feature video mosaicing")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a mosaic from a frame directory or glob")
    b.add_argument("--input", required=True, help="directory of PNG/PPM frames, or a glob")
    b.add_argument("--output", required=True, help="mosaic image path (.png or .ppm)")
    b.add_argument("--config", help="flat key=value config file")
    b.add_argument("--report", help="JSON report path (default: next to the output)")
    b.add_argument("--debug-dir")
    b.add_argument("--seed", type=int)
    b.add_argument("--block-size", type=int)
    b.add_argument("--search-range", type=int)
    b.add_argument("--offset-threshold", type=float)
    b.add_argument("--max-keypoints", type=int)
    b.add_argument("--contrast-threshold", type=float)
    b.add_argument("--blend", choices=("none", "multiband"))
    b.add_argument("--blend-levels", type=int)
    b.add_argument("--no-color-align", action="store_true")
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eval", help="repeatability / recall / 1-precision for an image pair")
    e.add_argument("--left", required=True)
    e.add_argument("--right", required=True)
    e.add_argument("--gt-homography", required=True, type=float, nargs="+", metavar="H")
    e.add_argument("--tolerance", type=float, default=3.0)
    e.add_argument("--config")
    e.add_argument("--csv", help="append the metric row to this CSV file")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a synthetic sequence with ground truth")
    s.add_argument("--spec", required=True, help="scene spec JSON")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
