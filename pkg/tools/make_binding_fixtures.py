"""Generate the shared binding-parity corpus.

Writes frontend/fixtures/corpus.json: 50 fixtures (30 plan inputs, 20 pack
records) with golden outputs computed by the library in-process. The
foreign-language bindings must reproduce every golden field-for-field through
the CLI. Regenerate after any intentional output change:

    python3 tools/make_binding_fixtures.py
"""

from __future__ import annotations

import io
import json
import random
from pathlib import Path

from ovprep import packfile
from ovprep.cli import main as cli_main


def _capture_cli(argv: list[str], tmp: Path, name: str) -> dict:
    out = tmp / name
    rc = cli_main(argv + ["--out", str(out)])
    assert rc == 0, f"cli failed for {argv}"
    return json.loads(out.read_text(encoding="utf-8"))


def plan_fixtures(rng: random.Random, tmp: Path) -> list[dict]:
    fixtures = []
    dims = [(384, 384), (768, 768), (1000, 400), (2304, 2304), (5000, 333)]
    dims += [(rng.randint(1, 4000), rng.randint(1, 4000)) for _ in range(13)]
    for i, (w, h) in enumerate(dims):
        golden = _capture_cli(
            ["plan", "--width", str(w), "--height", str(h)], tmp, f"plan{i}.json"
        )
        fixtures.append(
            {"kind": "plan", "input": {"width": w, "height": h}, "golden": golden}
        )
    for frames in (1, 8, 32, 100, 64, 3):
        golden = _capture_cli(
            ["plan", "--video-frames", str(frames)], tmp, f"vid{frames}.json"
        )
        fixtures.append({"kind": "plan", "input": {"frames": frames}, "golden": golden})
    multi_sets = [
        [(384, 384)] * 12,
        [(768, 384), (768, 384)],
        [(100, 400), (640, 480), (1024, 1024)],
        [(rng.randint(1, 2000), rng.randint(1, 2000)) for _ in range(rng.randint(2, 6))],
        [(333, 777)] * 2,
        [(1920, 1080), (1080, 1920)],
    ]
    for i, shapes in enumerate(multi_sets):
        argv = ["plan", "--multi-image"] + [f"{w}x{h}" for w, h in shapes]
        golden = _capture_cli(argv, tmp, f"multi{i}.json")
        fixtures.append(
            {
                "kind": "plan",
                "input": {"images": [{"width": w, "height": h} for w, h in shapes]},
                "golden": golden,
            }
        )
    return fixtures


def _corpus_records(rng: random.Random, n: int) -> list[dict]:
    words = "delta ember quartz willow sable onyx harbor tundra".split()
    records = []
    for i in range(n):
        kind = ["single", "multi", "video", "text"][i % 4]
        media: dict = {}
        markers = 0
        if kind == "single":
            media["images"] = [
                {
                    "path": f"im{i}.jpg",
                    "width": rng.randint(1, 3000),
                    "height": rng.randint(1, 3000),
                }
            ]
            markers = 1
        elif kind == "multi":
            count = rng.randint(2, 6)
            media["images"] = [
                {
                    "path": f"im{i}_{j}.jpg",
                    "width": rng.randint(1, 2000),
                    "height": rng.randint(1, 2000),
                }
                for j in range(count)
            ]
            markers = count
        elif kind == "video":
            media["video"] = {"path": f"v{i}.mp4", "frames": rng.randint(1, 48)}
            markers = 1
        convs = []
        for t in range(rng.randint(1, 3)):
            q = " ".join(rng.choice(words) for _ in range(rng.randint(1, 5)))
            if t == 0 and markers:
                q = "<image>" * markers + "\n" + q
            a = " ".join(rng.choice(words) for _ in range(rng.randint(1, 7)))
            convs.append({"from": "human", "value": q})
            convs.append({"from": "gpt", "value": a})
        records.append({"id": f"fx{i}", **media, "conversations": convs})
    return records


def pack_fixtures(rng: random.Random, tmp: Path) -> list[dict]:
    fixtures = []
    for record in _corpus_records(rng, 20):
        src = tmp / "one.jsonl"
        src.write_text(json.dumps(record) + "\n", encoding="utf-8")
        out = tmp / "one.bin"
        summary = tmp / "one.json"
        rc = cli_main(
            ["pack", str(src), "--out", str(out), "--summary", str(summary)]
        )
        assert rc == 0
        records = packfile.read_manifest(io.BytesIO(out.read_bytes()))
        assert len(records) == 1
        sample_id, seq = records[0]
        fixtures.append(
            {
                "kind": "pack",
                "record": record,
                "golden": {
                    "id": sample_id,
                    "tokenIds": list(seq.token_ids),
                    "lossMask": [1 if m else 0 for m in seq.loss_mask],
                    "spans": [
                        {"kind": s.kind.value, "start": s.start, "end": s.end}
                        for s in seq.spans
                    ],
                },
            }
        )
    return fixtures


def main() -> None:
    import tempfile

    rng = random.Random(20240806)
    root = Path(__file__).resolve().parents[1]
    out_dir = root / "frontend" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        fixtures = plan_fixtures(rng, Path(tmp)) + pack_fixtures(rng, Path(tmp))
    assert len(fixtures) == 50, len(fixtures)
    payload = json.dumps(fixtures, indent=1, sort_keys=True) + "\n"
    (out_dir / "corpus.json").write_text(payload, encoding="utf-8")
    print(f"wrote {len(fixtures)} fixtures to {out_dir / 'corpus.json'}")


if __name__ == "__main__":
    main()
