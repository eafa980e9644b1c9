"""Command-line interface.

Subcommands: ``synth`` (generate a synthetic sequence), ``perturb`` (corrupt
ground truth into detector-like output), ``track`` (run the tracker over
detection + embedding files), ``eval`` (score results against ground truth),
and ``overlay`` (render results as per-frame SVG files).  Every command
prints its resolved configuration; every source of randomness takes --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import mot_io, perturb, synth
from .metrics import evaluate
from .tracker import PRESETS, TrackerConfig, make_config, run

_CONFIG_PARSERS = {
    "tau": float,
    "delta": float,
    "iou_candidate_gate": float,
    "iou_match_gate": float,
    "lambda_fusion": float,
    "retention_frames": int,
    "k1": int,
    "k2": int,
    "lambda_rr": float,
    "bank_alphas": lambda text: tuple(float(p) for p in text.split(",") if p.strip()),
    "use_nsa": None,  # parsed as bool below
    "use_reid": None,
    "use_reranking": None,
    "use_greedy_one_to_many": None,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_key_values(path: str | Path) -> dict[str, str]:
    """Read a `key = value` file; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise mot_io.ParseError(path, line_no, f"expected key = value, got {line!r}")
            key, value = text.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def load_config_overrides(path: str | Path) -> dict:
    """Typed TrackerConfig overrides from a key-value file."""
    overrides = {}
    for key, raw in parse_key_values(path).items():
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"unknown config key {key!r} in {path}")
        parser = _CONFIG_PARSERS[key]
        overrides[key] = _parse_bool(raw) if parser is None else parser(raw)
    return overrides


def _print_resolved(title: str, values: dict) -> None:
    print(f"# resolved {title}")
    for key in sorted(values):
        value = values[key]
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        print(f"{key} = {value}")


def _config_as_dict(config: TrackerConfig) -> dict:
    return {
        "tau": config.tau,
        "delta": config.delta,
        "iou_candidate_gate": config.iou_candidate_gate,
        "iou_match_gate": config.iou_match_gate,
        "lambda_fusion": config.lambda_fusion,
        "retention_frames": config.retention_frames,
        "k1": config.rerank.k1,
        "k2": config.rerank.k2,
        "lambda_rr": config.rerank.lambda_rr,
        "bank_alphas": config.bank_alphas,
        "use_nsa": config.use_nsa,
        "use_reid": config.use_reid,
        "use_reranking": config.use_reranking,
        "use_greedy_one_to_many": config.use_greedy_one_to_many,
    }


def _frame_size(args) -> tuple[int, int]:
    if args.seqinfo is not None:
        info = parse_key_values(args.seqinfo)
        try:
            return int(info["width"]), int(info["height"])
        except KeyError as missing:
            raise ValueError(f"{args.seqinfo} lacks key {missing}")
    return args.width, args.height


# ----------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    scenario = synth.SynthScenario(
        n_objects=args.objects,
        n_frames=args.frames,
        frame_size=(args.width, args.height),
        embed_dim=args.embed_dim,
        similarity=args.similarity,
        embed_jitter=args.embed_jitter,
        size_range=(args.size_min, args.size_max),
        speed_range=(args.speed_min, args.speed_max),
        n_random_occlusions=args.occlusions,
        occlusion_length=args.occlusion_length,
        occlusion_turn_degrees=args.occlusion_turn,
        det_score=args.det_score,
    )
    shown = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    _print_resolved("synth scenario", shown)
    bundle = synth.synth_sequence(scenario, seed=args.seed)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mot_io.write_ground_truth(out / "gt.txt", bundle.ground_truth)
    mot_io.write_detections(
        out / "det.txt",
        [[(d.box, d.score) for d in frame] for frame in bundle.detections],
    )
    mot_io.write_embeddings(
        out / "embed.cteb",
        [[d.embedding for d in frame] for frame in bundle.detections],
    )
    with open(out / "seqinfo.txt", "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"width = {args.width}\n")
        handle.write(f"height = {args.height}\n")
        handle.write(f"frames = {args.frames}\n")
    print(f"wrote gt.txt, det.txt, embed.cteb, seqinfo.txt to {out}")
    return 0


def _cmd_perturb(args) -> int:
    width, height = _frame_size(args)
    params = perturb.preset(
        args.level,
        seed=args.seed,
        **{
            key: getattr(args, key)
            for key in (
                "ln_probability",
                "fn_rate",
                "fp_rate",
                "ln_center_sigma",
                "ln_scale_sigma",
                "ln_score",
                "fp_score_min",
            )
            if getattr(args, key) is not None
        },
    )
    _print_resolved(
        "perturbation",
        {**dataclasses.asdict(params), "level": args.level, "width": width, "height": height},
    )

    ground_truth = mot_io.load_ground_truth(args.ground_truth)
    ids = sorted({gid for frame in ground_truth for gid, _ in frame})
    bases = synth.identity_embeddings(len(ids), args.embed_dim, args.similarity)
    identity_map = {gid: bases[i] for i, gid in enumerate(ids)}

    frames = perturb.perturb_sequence(
        ground_truth,
        params,
        frame_size=(width, height),
        identity_embeddings=identity_map,
        embed_jitter=args.embed_jitter,
    )

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mot_io.write_detections(
        out / "det.txt", [[(d.box, d.score) for d in frame] for frame in frames]
    )
    mot_io.write_embeddings(
        out / "embed.cteb", [[d.embedding for d in frame] for frame in frames]
    )
    print(f"wrote det.txt, embed.cteb to {out}")
    return 0


def _cmd_track(args) -> int:
    overrides = {}
    if args.config is not None:
        overrides = load_config_overrides(args.config)
    config = make_config(args.preset, **overrides)
    _print_resolved("tracker config", {**_config_as_dict(config), "preset": args.preset})

    frames = mot_io.load_detection_bundle(args.detections, args.embeddings)
    results = run(frames, config)
    mot_io.write_results(args.output, results)
    total = sum(len(r.entries) for r in results)
    print(f"wrote {total} entries over {len(results)} frames to {args.output}")
    return 0


def _cmd_eval(args) -> int:
    _print_resolved("evaluation", {"iou": args.iou})
    gt = mot_io.load_ground_truth(args.ground_truth)
    pred = mot_io.load_ground_truth(args.results)
    n = max(len(gt), len(pred))
    gt += [[] for _ in range(n - len(gt))]
    pred += [[] for _ in range(n - len(pred))]
    report = evaluate(gt, pred, iou_threshold=args.iou)

    for key, value in report.as_dict().items():
        if isinstance(value, float):
            print(f"{key:5s} {value:.4f}")
        else:
            print(f"{key:5s} {value}")
    if args.csv is not None:
        fields = list(report.as_dict())
        with open(args.csv, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(",".join(fields) + "\n")
            handle.write(
                ",".join(
                    f"{report.as_dict()[f]:.6f}"
                    if isinstance(report.as_dict()[f], float)
                    else str(report.as_dict()[f])
                    for f in fields
                )
                + "\n"
            )
        print(f"wrote report to {args.csv}")
    return 0


_PALETTE = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
]


def _cmd_overlay(args) -> int:
    width, height = _frame_size(args)
    _print_resolved("overlay", {"width": width, "height": height})
    frames = mot_io.load_ground_truth(args.results)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for frame_no, entries in enumerate(frames, start=1):
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="#202020"/>',
        ]
        for track_id, box in entries:
            color = _PALETTE[track_id % len(_PALETTE)]
            parts.append(
                f'<rect x="{box.x:.2f}" y="{box.y:.2f}" width="{box.w:.2f}" '
                f'height="{box.h:.2f}" fill="none" stroke="{color}" stroke-width="3"/>'
            )
            parts.append(
                f'<text x="{box.x:.2f}" y="{max(box.y - 4.0, 10.0):.2f}" '
                f'fill="{color}" font-size="16">{track_id}</text>'
            )
        parts.append("</svg>")
        (out / f"frame_{frame_no:06d}.svg").write_text(
            "\n".join(parts) + "\n", encoding="utf-8"
        )
    print(f"wrote {len(frames)} SVG files to {out}")
    return 0


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="croptrack",
        description="Multi-object tracking with appearance reranking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--objects", type=int, default=20)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--similarity", type=float, default=0.0)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--embed-jitter", type=float, default=0.02)
    p.add_argument("--size-min", type=float, default=60.0)
    p.add_argument("--size-max", type=float, default=140.0)
    p.add_argument("--speed-min", type=float, default=3.0)
    p.add_argument("--speed-max", type=float, default=10.0)
    p.add_argument("--occlusions", type=int, default=0)
    p.add_argument("--occlusion-length", type=int, default=8)
    p.add_argument("--occlusion-turn", type=float, default=0.0)
    p.add_argument("--det-score", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("perturb", help="corrupt ground truth into detections")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--level", choices=sorted(perturb.LEVELS), default="B")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--seqinfo", default=None)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--similarity", type=float, default=0.0)
    p.add_argument("--embed-jitter", type=float, default=0.02)
    for key in (
        "ln-probability",
        "fn-rate",
        "fp-rate",
        "ln-center-sigma",
        "ln-scale-sigma",
        "ln-score",
        "fp-score-min",
    ):
        p.add_argument(f"--{key}", type=float, default=None)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("track", help="run the tracker over detection files")
    p.add_argument("--detections", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--preset", choices=sorted(PRESETS), default="croptrack")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("eval", help="score results against ground truth")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("overlay", help="render results as per-frame SVGs")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--seqinfo", default=None)
    p.set_defaults(func=_cmd_overlay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
