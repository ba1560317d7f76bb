"""Command-line pipeline: render one frame, run a campaign, evaluate predictions.

Exit codes: 0 success, 2 invalid configuration or input schema, 3 render
failure. Log level comes from the SEADRONESIM_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import (CocoValidationError, ConfigError, MeshError, RenderError,
                     SceneError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RENDER = 3

log = logging.getLogger("seadronesim")


def _setup_logging() -> None:
    level = os.environ.get("SEADRONESIM_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _cmd_render(args) -> int:
    from . import annotate
    from .configio import load_config, load_scene_config
    from .render import RenderSettings, render_frame, write_png, write_radiance_bin
    from .scene import assemble_scene
    import dataclasses

    config = load_config(args.config)
    spec, settings = load_scene_config(config, base_dir=Path(args.config).parent)
    if args.seed is not None:
        settings = dataclasses.replace(settings, seed=args.seed)
    if args.spp is not None:
        settings = dataclasses.replace(settings, samples_per_pixel=args.spp)
    scene = assemble_scene(spec)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frame = render_frame(scene, settings, workers=args.workers)
    write_png(out / "image.png", frame.rgb8)
    write_png(out / "mask.png", frame.mask)
    annotate.write_meta_sidecar(frame.meta, out / "image.meta.json")
    if args.dump_radiance:
        write_radiance_bin(out / "radiance.bin", frame.radiance)
    log.info("wrote frame bundle to %s (mask pixels: %d)", out, int(frame.mask.sum()))
    return EXIT_OK


def _cmd_campaign(args) -> int:
    from .campaign import plan_campaign, run_campaign
    from .configio import load_campaign_config, load_config
    import dataclasses

    config = load_config(args.config)
    spec = load_campaign_config(config)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.spp is not None:
        spec = dataclasses.replace(spec, spp=args.spp)

    jobs = plan_campaign(spec)
    cells: dict[tuple, int] = {}
    for job in jobs:
        key = (job.altitude_m, job.color, job.turbidity, job.source)
        cells[key] = cells.get(key, 0) + 1
    for (alt, color, turb, source), n in sorted(cells.items()):
        print(f"  {source:>6}  altitude {alt:>5.1f} m  {color:>5}/{turb:<4}  {n} frames")
    print(f"planned {len(jobs)} render jobs")
    if args.dry_run:
        return EXIT_OK

    manifest = run_campaign(spec, args.out, workers=args.workers,
                            base_dir=Path(args.config).parent)
    print(f"dataset written to {args.out}: "
          f"{len(manifest.train)} train / {len(manifest.val)} val images")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from .cocoeval import evaluate, load_detections, validate_coco_gt, write_report

    with open(args.gt, "r", encoding="utf-8") as fh:
        gt = json.load(fh)
    validate_coco_gt(gt)  # lenient: segmentation-free ground truth is accepted
    preds = load_detections(args.pred)
    report = evaluate(gt, preds)
    print(report.to_table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / "report.json")
        log.info("report written to %s", out / "report.json")
    return EXIT_OK


def _cmd_validate_config(args) -> int:
    from .configio import (config_kind, load_campaign_config, load_config,
                           load_scene_config)

    config = load_config(args.config)
    kind = config_kind(config)
    if kind == "campaign":
        load_campaign_config(config)
    elif kind == "scene":
        load_scene_config(config, base_dir=Path(args.config).parent)
    else:
        raise ConfigError(f"unknown config kind {kind!r}")
    print(f"OK: valid {kind} configuration")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seadronesim",
        description="Synthetic aerial maritime imagery with ground-truth masks, "
                    "COCO annotations, and detection metrics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one frame bundle (image, mask, sidecar)")
    p.add_argument("--config", required=True, help="scene JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--spp", type=int, default=None, help="samples per pixel override")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dump-radiance", action="store_true",
                   help="also write linear radiance as float32 binary")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("campaign", help="run (or plan) a dataset-generation campaign")
    p.add_argument("--config", required=True, help="campaign JSON file")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--spp", type=int, default=None)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dry-run", action="store_true", help="print the job plan and exit")
    p.set_defaults(func=_cmd_campaign)

    p = sub.add_parser("evaluate", help="score predictions against COCO ground truth")
    p.add_argument("--gt", required=True, help="ground-truth COCO JSON")
    p.add_argument("--pred", required=True, help="predictions results JSON")
    p.add_argument("--out", help="directory for report.json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("validate-config", help="check a scene or campaign JSON file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate_config)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "campaign" and not args.dry_run and not args.out:
        parser.error("campaign requires --out unless --dry-run is given")
    try:
        return args.func(args)
    except (ConfigError, SceneError, MeshError, CocoValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RenderError as e:
        print(f"render failure: {e}", file=sys.stderr)
        return EXIT_RENDER


if __name__ == "__main__":
    sys.exit(main())
