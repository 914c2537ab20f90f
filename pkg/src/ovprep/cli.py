"""Command-line surface for batch use.

Subcommands: ``plan`` (geometry plus token budget for media descriptors),
``pack`` (JSONL conversations to a binary packed manifest), ``mix``
(mixture-manifest statistics, sampling, dedupe, prompt application), and
``stages`` (curriculum validation and emission). Every subcommand is
deterministic given its inputs and ``--seed``; parallel record processing
buffers results and emits them in input order. Exit codes: 0 success, 1
partial failure or validation findings, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import yaml

from . import curriculum, datamix, packfile
from .errors import PrepError
from .feature_resample import kept_token_counts
from .geometry import (
    GridCatalog,
    ImageShape,
    crop_plan_to_dict,
    pad_spec_to_dict,
    pad_to_square,
    plan_crops,
    select_config,
)
from .packing import PackSettings, pack_sample
from .sequence_builder import RawSample, RawTurn, Role, parse_jsonl_line, sanitize_markers
from .token_budget import (
    DEFAULT_GEOM,
    Scenario,
    ScenarioPolicy,
    TokenPlan,
    plan_multi_image,
    plan_video,
    token_plan_to_dict,
    tokens_after_threshold,
)

_LENGTH_BUCKETS = (512, 1024, 2048, 4096, 8192, 16384)


def _dump_json(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_dims(spec: str) -> ImageShape:
    try:
        w, h = spec.lower().split("x")
        return ImageShape(width_px=int(w), height_px=int(h))
    except ValueError as exc:
        raise PrepError(f"bad dimension spec {spec!r}, expected WIDTHxHEIGHT") from exc


def _cmd_plan(args: argparse.Namespace) -> int:
    catalog = GridCatalog.square(args.max_grid, base_edge_px=args.base_edge)
    geom_tokens = DEFAULT_GEOM.tokens_per_view
    if args.video_frames is not None:
        policy = ScenarioPolicy(
            Scenario.VIDEO, max_views=args.max_frames, video_frame_tokens=args.frame_tokens
        )
        plan = plan_video(args.video_frames, policy)
        _dump_json(
            {
                "scenario": "video",
                "input": {"frames": args.video_frames},
                "frames_used": len(plan.per_view_tokens),
                "token_plan": token_plan_to_dict(plan),
            },
            args.out,
        )
        return 0
    if args.multi_image:
        policy = ScenarioPolicy(Scenario.MULTI_IMAGE, max_views=args.max_images)
        shapes = [_parse_dims(s) for s in args.multi_image]
        items = []
        kept_totals = []
        for shape in shapes:
            pad = pad_to_square(shape, args.base_edge)
            rows, cols = kept_token_counts(pad, 27)
            kept_totals.append(rows * cols)
            items.append(
                {
                    "input": {"width_px": shape.width_px, "height_px": shape.height_px},
                    "pad_spec": pad_spec_to_dict(pad),
                    "kept_rows": rows,
                    "kept_cols": cols,
                    "tokens": rows * cols,
                }
            )
        combined = plan_multi_image(len(shapes), kept_totals, policy)
        _dump_json(
            {
                "scenario": "multi_image",
                "items": items,
                "token_plan": token_plan_to_dict(combined),
            },
            args.out,
        )
        return 0
    if args.width is None or args.height is None:
        raise PrepError("plan needs --width/--height, --multi-image, or --video-frames")
    shape = ImageShape(width_px=args.width, height_px=args.height)
    config = select_config(shape, catalog)
    crop_plan = plan_crops(shape, config, args.base_edge)
    per_view = tokens_after_threshold(config, geom_tokens, args.tau)
    plan = TokenPlan.of([per_view] * (config.crop_count + 1))
    _dump_json(
        {
            "scenario": "single_image",
            "input": {"width_px": shape.width_px, "height_px": shape.height_px},
            "crop_plan": crop_plan_to_dict(crop_plan),
            "token_plan": token_plan_to_dict(plan),
        },
        args.out,
    )
    return 0


def _pack_one(indexed_line: tuple[int, str], settings: PackSettings):
    """Worker: returns (kind, payload); pure, so scheduling cannot reorder truth."""
    index, line = indexed_line
    line = line.strip()
    if not line:
        return ("empty", None)
    try:
        sample = parse_jsonl_line(line, fallback_id=f"record{index}")
    except PrepError as exc:
        return ("malformed", f"line {index + 1}: {exc}")
    verdict = sanitize_markers(sample)
    if not verdict.clean:
        return ("flagged", (sample.sample_id, verdict.reason))
    try:
        seq = pack_sample(sample, settings)
    except PrepError as exc:
        return ("malformed", f"line {index + 1}: {exc}")
    return ("packed", (sample.sample_id, seq))


def _cmd_pack(args: argparse.Namespace) -> int:
    settings = PackSettings(
        single=ScenarioPolicy(Scenario.SINGLE_IMAGE, tau=args.tau),
        multi=ScenarioPolicy(Scenario.MULTI_IMAGE, max_views=args.max_images),
        video=ScenarioPolicy(Scenario.VIDEO, max_views=args.max_frames),
        default_width=args.default_width,
        default_height=args.default_height,
    )
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    indexed = list(enumerate(lines))
    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(lambda item: _pack_one(item, settings), indexed))
    else:
        results = [_pack_one(item, settings) for item in indexed]

    records = []
    flagged = []
    malformed = []
    histogram = {f"<={b}": 0 for b in _LENGTH_BUCKETS}
    histogram[f">{_LENGTH_BUCKETS[-1]}"] = 0
    for kind, payload in results:
        if kind == "packed":
            sample_id, seq = payload
            records.append((sample_id, seq))
            for bound in _LENGTH_BUCKETS:
                if len(seq.token_ids) <= bound:
                    histogram[f"<={bound}"] += 1
                    break
            else:
                histogram[f">{_LENGTH_BUCKETS[-1]}"] += 1
        elif kind == "flagged":
            flagged.append({"id": payload[0], "reason": payload[1]})
        elif kind == "malformed":
            malformed.append(payload)

    with open(args.out, "wb") as fp:
        packfile.write_manifest(records, fp)
    summary = {
        "input": str(args.input),
        "records": len(records),
        "flagged": flagged,
        "malformed": malformed,
        "length_histogram": histogram,
        "seed": args.seed,
    }
    _dump_json(summary, args.summary)
    if args.strict and (flagged or malformed):
        return 1
    return 0


def _cmd_mix(args: argparse.Namespace) -> int:
    spec = datamix.load_mixture(args.manifest)
    if args.stats:
        report = datamix.distribution(spec)
        if args.format == "json":
            _dump_json(
                {"name": report.name, "total": report.total, "rows": report.rows()},
                args.out,
            )
        else:
            lines = [f"mixture {report.name}: {report.total} samples"]
            for row in report.rows():
                lines.append(
                    f"  {row['category']:<18} {row['count']:>9}  {row['percent']:>5.1f}%"
                )
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
        return 0
    if args.sample is not None:
        subset = datamix.sample_subset(spec, args.sample, args.strategy, args.seed)
        doc = {
            "version": 1,
            "name": f"{spec.name}-sample{args.sample}",
            "seed": args.seed if args.seed is not None else spec.seed,
            "entries": [
                {
                    "name": e.name,
                    "category": e.category,
                    "count": e.sample_count,
                    **({"prompt_id": list(e.prompt_ids)} if e.prompt_ids else {}),
                    "form": e.answer_form,
                }
                for e in subset.entries
            ],
        }
        text = yaml.safe_dump(doc, sort_keys=False, width=120)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    if args.dedupe:
        others = [datamix.load_mixture(p) for p in args.dedupe]
        collisions = datamix.dedupe_scan([spec, *others])
        _dump_json(
            {
                "collisions": [
                    {"name": name, "manifests": list(sources)} for name, sources in collisions
                ]
            },
            args.out,
        )
        return 0
    if args.apply_prompt is not None:
        prompt = spec.prompt(args.apply_prompt)
        rng = random.Random(args.seed)
        sample = RawSample(
            sample_id="cli",
            images=(),
            video=None,
            turns=(RawTurn(role=Role.USER, text=args.instruction),),
        )
        out = datamix.apply_prompt(sample, prompt, rng)
        _dump_json(
            {
                "prompt_id": prompt.id,
                "position": prompt.position.value,
                "instruction": out.turns[0].text,
            },
            args.out,
        )
        return 0
    raise PrepError("mix needs one of --stats, --sample, --dedupe, --apply-prompt")


def _cmd_stages(args: argparse.Namespace) -> int:
    if args.validate:
        plan = curriculum.load_plan(args.validate)
        violations = curriculum.validate_plan(plan)
        _dump_json(
            {
                "plan": str(args.validate),
                "violations": [
                    {"code": v.code, "stage": v.stage, "message": v.message}
                    for v in violations
                ],
            },
            args.out,
        )
        return 1 if violations else 0
    if args.emit:
        plan = curriculum.shipped_plan(args.emit)
        if args.out:
            curriculum.emit_manifest(plan, args.out)
        else:
            sys.stdout.write(yaml.safe_dump(curriculum.plan_to_dict(plan), sort_keys=False, width=100))
        return 0
    raise PrepError("stages needs --validate or --emit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ovprep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="crop and token plan for media descriptors")
    p_plan.add_argument("--width", type=int)
    p_plan.add_argument("--height", type=int)
    p_plan.add_argument("--multi-image", nargs="+", metavar="WxH")
    p_plan.add_argument("--video-frames", type=int)
    p_plan.add_argument("--tau", type=int, default=7290)
    p_plan.add_argument("--base-edge", type=int, default=384)
    p_plan.add_argument("--max-grid", type=int, default=6)
    p_plan.add_argument("--max-images", type=int, default=12)
    p_plan.add_argument("--max-frames", type=int, default=32)
    p_plan.add_argument("--frame-tokens", type=int, default=196)
    p_plan.add_argument("--out")
    p_plan.set_defaults(func=_cmd_plan)

    p_pack = sub.add_parser("pack", help="pack a conversation JSONL into a binary manifest")
    p_pack.add_argument("input")
    p_pack.add_argument("--out", required=True)
    p_pack.add_argument("--summary")
    p_pack.add_argument("--strict", action="store_true")
    p_pack.add_argument("--parallel", type=int, default=1)
    p_pack.add_argument("--seed", type=int, default=0)
    p_pack.add_argument("--tau", type=int, default=7290)
    p_pack.add_argument("--max-images", type=int, default=12)
    p_pack.add_argument("--max-frames", type=int, default=32)
    p_pack.add_argument("--default-width", type=int, default=384)
    p_pack.add_argument("--default-height", type=int, default=384)
    p_pack.set_defaults(func=_cmd_pack)

    p_mix = sub.add_parser("mix", help="mixture-manifest reports and sampling")
    p_mix.add_argument("manifest")
    p_mix.add_argument("--stats", action="store_true")
    p_mix.add_argument("--format", choices=("text", "json"), default="text")
    p_mix.add_argument("--sample", type=int)
    p_mix.add_argument("--strategy", choices=("proportional", "balanced"), default="proportional")
    p_mix.add_argument("--seed", type=int)
    p_mix.add_argument("--dedupe", nargs="+", metavar="MANIFEST")
    p_mix.add_argument("--apply-prompt", type=int)
    p_mix.add_argument("--instruction", default="")
    p_mix.add_argument("--parallel", type=int, default=1)
    p_mix.add_argument("--out")
    p_mix.set_defaults(func=_cmd_mix)

    p_stages = sub.add_parser("stages", help="curriculum plan validation and emission")
    p_stages.add_argument("--validate", metavar="PLAN_YAML")
    p_stages.add_argument("--emit", metavar="PROFILE")
    p_stages.add_argument("--out")
    p_stages.set_defaults(func=_cmd_stages)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PrepError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[E_IO]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
