"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance is pinned here; nothing is deferred to calibration.
"""

from __future__ import annotations

import io
import json
import random
import time

import numpy as np

from conftest import brute_force_select

from ovprep import packfile
from ovprep.cli import main
from ovprep.curriculum import TrainingPlan, shipped_plan, validate_plan
from ovprep.datamix import distribution, load_shipped, shipped_manifest_path
from ovprep.feature_resample import FeatureGrid, InterpSpec, bilinear_resize
from ovprep.geometry import GridCatalog, ImageShape, SpatialConfig, select_config
from ovprep.sequence_builder import (
    VISION_SENTINEL,
    ByteTokenizer,
    parse_jsonl_line,
    render_template,
    scan_template,
    to_conversation,
)
from ovprep.packing import pack_sample
from ovprep.token_budget import (
    plan_single_image,
    scenario_maxima,
    tokens_after_threshold,
)


def _ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def test_eq2_enforcement_over_random_shapes():
    """Budget ceiling holds for 10k random shapes in under a second."""
    rng = random.Random(20240801)
    catalog = GridCatalog.square(6)
    shapes = [
        ImageShape(rng.randint(1, 4608), rng.randint(1, 4608)) for _ in range(10_000)
    ]
    start = time.perf_counter()
    for shape in shapes:
        plan = plan_single_image(shape, catalog)
        assert plan.total <= 7290
        views = len(plan.per_view_tokens)
        if views * 729 <= 7290:
            assert plan.total == views * 729
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"10k plans took {elapsed:.3f}s"
    _ok(f"threshold enforcement on 10,000 shapes in {elapsed:.3f}s")


def test_eq2_worked_value_six_by_six():
    """(6,6) at 729 tokens/view over a 7290 ceiling floors to 197/view."""
    assert tokens_after_threshold(SpatialConfig(6, 6), 729, 7290) == 197
    plan = plan_single_image(ImageShape(2304, 2304))
    assert plan.per_view_tokens == (197,) * 37
    assert plan.total == 7289
    _ok("6x6 reduction: 197 tokens/view, 7289 total")


def test_scenario_budget_balance():
    """Default ceilings are exactly 7290/8748/6272 and within 1.5x."""
    maxima = sorted(scenario_maxima().values())
    assert maxima == [6272, 7290, 8748]
    assert maxima[-1] / maxima[0] < 1.5
    _ok("scenario maxima {7290, 8748, 6272}, ratio 1.39")


def test_video_pooling_geometry_and_bilinear_exactness():
    """27 -> 14 per axis (196 tokens) and affine fields survive resizing."""
    out = bilinear_resize(
        FeatureGrid.from_array(np.zeros((27, 27, 1))), InterpSpec(14, 14)
    )
    assert out.token_count == 196
    rng = random.Random(77)
    centers = (np.arange(14) + 0.5) * (27 / 14) - 0.5
    for _ in range(100):
        cr, cc, c0 = (rng.uniform(-100, 100) for _ in range(3))
        r = np.arange(27, dtype=np.float64)[:, None]
        c = np.arange(27, dtype=np.float64)[None, :]
        grid = FeatureGrid.from_array((cr * r + cc * c + c0)[:, :, None])
        resized = bilinear_resize(grid, InterpSpec(14, 14))
        expected = cr * centers[:, None] + cc * centers[None, :] + c0
        scale = max(1.0, float(np.abs(expected).max()))
        err = float(np.abs(resized.values[:, :, 0] - expected).max()) / scale
        assert err < 1e-9, f"affine field error {err}"
    _ok("video pooling 27->14 (196 tokens); bilinear affine-exact < 1e-9")


def test_grid_selection_matches_brute_force():
    """Selection agrees with exhaustive search on 1,000 random shapes."""
    rng = random.Random(5150)
    catalog = GridCatalog.square(6)
    agree = 0
    for _ in range(1000):
        shape = ImageShape(rng.randint(1, 6000), rng.randint(1, 6000))
        if select_config(shape, catalog) == brute_force_select(shape, catalog):
            agree += 1
    assert agree == 1000
    _ok("grid selection matches brute force 1000/1000")


def test_mixture_distributions_match_published_shares():
    """Shipped manifests reproduce the published category percentages."""
    single = distribution(load_shipped("single_image_3p2m"))
    expected_single = {
        "General": 36.1,
        "Doc/Chart/Screen": 20.6,
        "Math/Reasoning": 20.1,
        "General OCR": 8.9,
        "Language": 14.3,
    }
    for category, target in expected_single.items():
        assert abs(single.percentage(category) - target) <= 0.1
    onevision = distribution(load_shipped("onevision_1p6m"))
    expected_ov = {"Single-Image": 31.2, "Multi-Image": 43.0, "Video": 25.9}
    for category, target in expected_ov.items():
        assert abs(onevision.percentage(category) - target) <= 0.1
    _ok("mixture shares 36.1/20.6/20.1/8.9/14.3 and 31.2/43.0/25.9 within 0.1pp")


def _generated_corpus(n: int) -> list[dict]:
    rng = random.Random(4242)
    words = "river stone cloud lantern orchard violet thunder marble".split()
    corpus = []
    for i in range(n):
        kind = rng.choice(["single", "multi", "video", "text"])
        n_turns = rng.randint(1, 3)
        convs = []
        media: dict = {}
        markers_left = 0
        if kind == "single":
            media["images"] = [
                {"path": f"img{i}.jpg", "width": rng.randint(1, 3000), "height": rng.randint(1, 3000)}
            ]
            markers_left = 1
        elif kind == "multi":
            count = rng.randint(2, 5)
            media["images"] = [
                {"path": f"img{i}_{j}.jpg", "width": rng.randint(1, 2000), "height": rng.randint(1, 2000)}
                for j in range(count)
            ]
            markers_left = count
        elif kind == "video":
            media["video"] = {"path": f"clip{i}.mp4", "frames": rng.randint(1, 64)}
            markers_left = 1
        for t in range(n_turns):
            q = " ".join(rng.choice(words) for _ in range(rng.randint(1, 6)))
            if t == 0 and markers_left:
                q = "<image>" * markers_left + "\n" + q
            a = " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))
            convs.append({"from": "human", "value": q})
            convs.append({"from": "gpt", "value": a})
        corpus.append({"id": f"gen{i}", **media, "conversations": convs})
    return corpus


def test_packing_correctness_on_generated_corpus():
    """Mask totals match independent tokenization; vision is never supervised."""
    tok = ByteTokenizer()
    end_len = len(tok.encode("<|im_end|>"))
    corpus = _generated_corpus(20)
    assert len(corpus) == 20
    for raw in corpus:
        sample = parse_jsonl_line(json.dumps(raw))
        packed = pack_sample(sample)
        independent = sum(
            len(tok.encode(turn["value"])) + end_len
            for turn in raw["conversations"]
            if turn["from"] == "gpt"
        )
        assert sum(packed.loss_mask) == independent
        for tid, masked in zip(packed.token_ids, packed.loss_mask):
            assert not (tid == VISION_SENTINEL and masked)
        conv = to_conversation(sample)
        scanned = scan_template(render_template(conv))
        assert len(scanned) == len(conv.turns)
        for got, turn in zip(scanned, conv.turns):
            assert got.role_name == turn.role.value
    _ok("packing: mask totals, unsupervised vision, render/scan round trip (20 samples)")


def test_curriculum_conformance_and_mutation_detection():
    """Shipped plan validates clean; every injected defect is caught."""
    from dataclasses import replace

    plan = shipped_plan("7b")
    assert validate_plan(plan) == []

    def mutate(index, **changes):
        stages = list(plan.stages)
        stages[index] = replace(stages[index], **changes)
        return TrainingPlan(plan.profile, tuple(stages))

    cases = {
        "lr_ratio": mutate(2, lr_vision=1e-5),
        "trainable_modules": mutate(0, trainable=frozenset({"projector", "vision", "llm"})),
        "epochs": mutate(1, epochs=2),
        "token_ceiling": mutate(1, max_visual_tokens=7290),
    }
    for expected_code, mutated in cases.items():
        found = {v.code for v in validate_plan(mutated)}
        assert found == {expected_code}, f"{expected_code}: got {found}"
    _ok("curriculum: shipped plan clean, 4/4 injected violations caught")


def test_cli_determinism_across_runs_and_parallelism(tmp_path, capsys):
    """pack and mix outputs are byte-identical across runs and worker counts."""
    corpus = _generated_corpus(20)
    src = tmp_path / "corpus.jsonl"
    src.write_text(
        "".join(json.dumps(line) + "\n" for line in corpus), encoding="utf-8"
    )
    outputs = []
    for tag, workers in (("r1", 1), ("r2", 1), ("p8", 8)):
        out = tmp_path / f"{tag}.bin"
        summary = tmp_path / f"{tag}.json"
        rc = main(
            [
                "pack",
                str(src),
                "--out",
                str(out),
                "--summary",
                str(summary),
                "--seed",
                "9",
                "--parallel",
                str(workers),
            ]
        )
        assert rc == 0
        outputs.append((out.read_bytes(), summary.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]
    records = packfile.read_manifest(io.BytesIO(outputs[0][0]))
    assert len(records) == 20

    manifest = str(shipped_manifest_path("single_image_3p2m"))
    mixes = []
    for tag, workers in (("m1", 1), ("m2", 1), ("m8", 8)):
        out = tmp_path / f"{tag}.yaml"
        rc = main(
            [
                "mix",
                manifest,
                "--sample",
                "800000",
                "--strategy",
                "proportional",
                "--seed",
                "7",
                "--parallel",
                str(workers),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        mixes.append(out.read_bytes())
    assert mixes[0] == mixes[1] == mixes[2]
    capsys.readouterr()
    _ok("pack and mix byte-identical across reruns and parallelism 1 vs 8")
