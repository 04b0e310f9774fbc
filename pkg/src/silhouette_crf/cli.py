"""Command-line interface.

Subcommands::

    silhouette-crf simulate OUT --preset motion1 --seed 0
    silhouette-crf train SEQ [SEQ ...] --out params.txt
    silhouette-crf track SEQ/frames --target M1 M2 [--target ...] --out RESULT
    silhouette-crf eval PRED TRUTH [--report report.json]

A sequence directory holds ``frames/NNN.png`` and ``masks/NNN.png``;
``simulate`` also writes ``targets/J/NNN.png`` with the visible pixels of
each object. Settings come from ``--config FILE`` (JSON) and are
overridden by flags. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, load_config
from .errors import DataError, NumericalError
from .fields import LabelField, SequenceAnnotation
from .metrics import CORRECT_IOU, accuracy, format_accuracy, iou
from .simulate import PRESETS, MotionSpec, crossing_specs, generate_scene
from .tracker import initialize, step
from .training import TrainingInstance, default_params, fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("silhouette_crf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _settings_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("settings (override --config)")
    g.add_argument("--config", type=Path, help="JSON run configuration")
    g.add_argument("--alpha", type=float, help="Horn-Schunck smoothness weight")
    g.add_argument("--flow-iterations", type=int)
    g.add_argument("--presmooth", type=float, help="Gaussian sigma applied before flow")
    g.add_argument("--damping", type=float, help="BP message damping")
    g.add_argument("--bp-tolerance", type=float)
    g.add_argument("--bp-max-iter", type=int)
    g.add_argument("--beta", type=float, help="edge contrast sensitivity")
    g.add_argument("--q", type=float, help="region-merging granularity")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.override("flow", alpha=args.alpha, iterations=args.flow_iterations, presmooth=args.presmooth)
    cfg = cfg.override("bp", damping=args.damping, tolerance=args.bp_tolerance, max_iter=args.bp_max_iter)
    cfg = cfg.override("features", beta=args.beta, q=args.q)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="silhouette-crf", description="CRF object-silhouette tracking")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic sequence with truth masks")
    p.add_argument("out", type=Path)
    p.add_argument("--preset", choices=sorted(PRESETS) + ["crossing"])
    p.add_argument("--position", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--velocity", type=float, nargs=2, metavar=("VX", "VY"))
    p.add_argument("--acceleration", type=float, nargs=2, metavar=("AX", "AY"))
    p.add_argument("--half-size", type=float)
    p.add_argument("--growth", type=float)
    p.add_argument("--frames", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    _settings_flags(p)

    p = sub.add_parser("train", help="fit feature weights on labelled sequences")
    p.add_argument("sequences", type=Path, nargs="+", help="directories with frames/ and masks/")
    p.add_argument("--out", type=Path, required=True, help="parameter file to write")
    p.add_argument("--at", type=int, nargs="+", metavar="T",
                   help="frame indices to train on (default: every t >= 2)")
    p.add_argument("--step", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--report", type=Path)
    _settings_flags(p)

    p = sub.add_parser("track", help="track annotated targets through a frame directory")
    p.add_argument("frames", type=Path, help="directory of numbered frames")
    p.add_argument("--target", nargs=2, action="append", type=Path, required=True,
                   metavar=("MASK1", "MASK2"), help="masks of frames 1 and 2; repeat per target")
    p.add_argument("--params", type=Path, help="parameter file (default: built-in trained weights)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--truth", type=Path, action="append", metavar="DIR",
                   help="truth mask directory per target, in --target order")
    _settings_flags(p)

    p = sub.add_parser("eval", help="score predicted masks against truth")
    p.add_argument("predicted", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--skip", type=int, default=2, help="leading frames to exclude (the annotated ones)")
    p.add_argument("--threshold", type=float, default=CORRECT_IOU)
    p.add_argument("--report", type=Path)
    return ap


def cmd_simulate(args) -> dict:
    cfg = _config(args)
    custom = {k: getattr(args, k) for k in ("position", "velocity", "acceleration", "half_size", "growth")
              if getattr(args, k) is not None}
    canvas = {k: v for k, v in (("n_frames", args.frames), ("width", args.width),
                                ("height", args.height), ("noise", args.noise)) if v is not None}
    if args.preset == "crossing":
        if custom:
            raise UsageError("the crossing preset takes no object flags")
        specs = crossing_specs(**canvas)
    else:
        base = PRESETS[args.preset] if args.preset else MotionSpec()
        custom = {k: tuple(v) if isinstance(v, list) else v for k, v in custom.items()}
        specs = [replace(base, **custom, **canvas)]
    try:
        frames, combined, per_target = generate_scene(specs, seed=cfg.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    io.write_sequence(args.out, frames, combined)
    for j, masks in enumerate(per_target):
        d = args.out / "targets" / str(j)
        d.mkdir(parents=True, exist_ok=True)
        for t, m in enumerate(masks):
            io.save_mask(m, d / f"{t:03d}.png")
    return {"command": "simulate", "out": str(args.out), "frames": len(frames),
            "targets": len(specs), "seed": cfg.seed}


def _instances(seq: Path, at):
    frames = io.load_sequence(seq / "frames")
    masks = io.load_masks(seq / "masks", frames[0].shape)
    if len(masks) != len(frames):
        raise DataError(f"{seq}: {len(frames)} frames but {len(masks)} masks")
    times = at if at else range(2, len(frames))
    out = []
    for t in times:
        if not 2 <= t < len(frames):
            raise DataError(f"{seq}: frame index {t} outside [2, {len(frames) - 1}]")
        out.append(TrainingInstance((frames[t - 2], frames[t - 1], frames[t]), masks[t - 1], masks[t]))
    return out


def cmd_train(args) -> dict:
    cfg = _config(args).override("train", step=args.step, epochs=args.epochs, l2=args.l2)
    instances = [inst for seq in args.sequences for inst in _instances(seq, args.at)]
    t0 = time.perf_counter()
    result = fit(instances, cfg.train, cfg.bp, flow_settings=cfg.flow, feature_settings=cfg.features)
    io.save_params(result.params, args.out)
    report = {"command": "train", "instances": len(instances), "params": result.params.as_dict(),
              "epochs": result.epochs, "converged": result.converged, "grad_norm": result.grad_norm,
              "trace": result.trace, "seconds": time.perf_counter() - t0}
    if args.report:
        io.write_report(report, args.report)
    return report


def cmd_track(args) -> dict:
    cfg = _config(args)
    frames = io.load_sequence(args.frames)
    if len(frames) < 3:
        raise DataError(f"{args.frames}: need at least 3 frames, found {len(frames)}")
    shape = frames[0].shape
    try:
        annotation = SequenceAnnotation(tuple((io.load_mask(a, shape), io.load_mask(b, shape))
                                              for a, b in args.target))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    truth = None
    if args.truth:
        if len(args.truth) != len(args.target):
            raise UsageError(f"got {len(args.truth)} --truth directories for {len(args.target)} targets")
        truth = [io.load_masks(d, shape) for d in args.truth]
        for d, masks in zip(args.truth, truth):
            if len(masks) != len(frames):
                raise DataError(f"{d}: {len(masks)} masks for {len(frames)} frames")
    params = io.load_params(args.params) if args.params else default_params()

    t0 = time.perf_counter()
    try:
        state = initialize(frames[0], frames[1], annotation, params, cfg.tracker)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    per_frame = []
    out_masks = args.out / "masks"
    out_masks.mkdir(parents=True, exist_ok=True)
    target_dirs = []
    for j in range(annotation.n_targets):
        d = args.out / "targets" / str(j)
        d.mkdir(parents=True, exist_ok=True)
        target_dirs.append(d)
        io.save_mask(annotation.masks[j][0], d / "000.png")
        io.save_mask(annotation.masks[j][1], d / "001.png")
    for t, frame in enumerate(frames[2:], start=2):
        tf = time.perf_counter()
        state, decoded = step(state, frame)
        if not np.all(np.isfinite(state.flow.vx)) or not np.all(np.isfinite(state.flow.vy)):
            raise NumericalError(f"non-finite optical flow at frame {t}")
        io.save_mask(decoded, out_masks / f"{t:03d}.png")
        entry = {"frame": t, "converged": state.converged, "bp_iterations": state.bp_iterations,
                 "coasting": [tg.coasting for tg in state.targets], "seconds": time.perf_counter() - tf}
        for j, tg in enumerate(state.targets):
            io.save_mask(LabelField.from_mask(tg.silhouette), target_dirs[j] / f"{t:03d}.png")
        if truth is not None:
            entry["iou"] = [iou(tg.silhouette, truth[j][t]) for j, tg in enumerate(state.targets)]
        per_frame.append(entry)

    report = {"command": "track", "frames": len(frames), "targets": annotation.n_targets,
              "params": params.as_dict(), "seconds": time.perf_counter() - t0,
              "all_converged": all(e["converged"] for e in per_frame), "per_frame": per_frame}
    if truth is not None:
        report["accuracy"] = [accuracy([e["iou"][j] >= CORRECT_IOU for e in per_frame])
                              for j in range(annotation.n_targets)]
    io.write_report(report, args.out / "report.json")
    return report


def cmd_eval(args) -> dict:
    pred = io.load_masks(args.predicted)
    truth = io.load_masks(args.truth, pred[0].shape)
    if len(pred) != len(truth):
        raise DataError(f"{len(pred)} predicted masks but {len(truth)} truth masks")
    if not 0 <= args.skip < len(pred):
        raise UsageError(f"--skip must lie in [0, {len(pred) - 1}]")
    scores = [iou(p, t) for p, t in zip(pred, truth)][args.skip:]
    acc = accuracy([s >= args.threshold for s in scores])
    for t, s in enumerate(scores, start=args.skip):
        print(f"{t:4d}  {s:.3f}")
    print(f"accuracy {format_accuracy(acc)}  mean IoU {np.mean(scores):.3f}")
    report = {"command": "eval", "frames": list(range(args.skip, len(pred))), "iou": scores,
              "accuracy": acc, "mean_iou": float(np.mean(scores)), "threshold": args.threshold}
    if args.report:
        io.write_report(report, args.report)
    return report


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "track": cmd_track, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"silhouette-crf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"silhouette-crf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, OSError) as exc:
        print(f"silhouette-crf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.command != "eval":
        summary = {k: v for k, v in report.items() if k not in ("per_frame", "trace")}
        print(" ".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
