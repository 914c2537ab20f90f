"""Dataset-mixture manifests: loading, prompt formatting, and reporting.

A manifest is a YAML document listing dataset entries (name, category, sample
count, optional formatting-prompt assignment, answer form). The toolkit ships
the instruction-tuning mixtures it targets as package data, together with the
two formatting-prompt tables they reference. Sampling and prompt-variant
selection are deterministic under a seed.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import yaml

from .errors import (
    DanglingPromptError,
    MixtureSchemaError,
    SampleSizeError,
    UnknownCategoryError,
)
from .sequence_builder import IMAGE_MARKER, RawSample, RawTurn, Role

CATEGORIES = (
    "General",
    "Doc/Chart/Screen",
    "Math/Reasoning",
    "General OCR",
    "Language",
    "Single-Image",
    "Multi-Image",
    "Video",
)

ANSWER_FORMS = ("fixed", "free")


class PromptPosition(enum.Enum):
    HEAD = "Head"
    TAIL = "Tail"
    ALL = "All"


@dataclass(frozen=True)
class FormattingPrompt:
    """A reusable instruction fragment standardizing answer behavior."""

    id: int
    kind: str
    position: PromptPosition
    variants: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.variants:
            raise MixtureSchemaError(f"prompt {self.id} has no variants")


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    category: str
    sample_count: int
    prompt_ids: tuple[int, ...] = ()
    answer_form: str = "fixed"
    path: str | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise UnknownCategoryError(
                f"dataset {self.name!r} has unknown category {self.category!r}"
            )
        if self.sample_count < 0:
            raise MixtureSchemaError(f"dataset {self.name!r} has negative count")
        if self.answer_form not in ANSWER_FORMS:
            raise MixtureSchemaError(
                f"dataset {self.name!r} has invalid answer form {self.answer_form!r}"
            )


@dataclass(frozen=True)
class MixtureSpec:
    name: str
    entries: tuple[DatasetEntry, ...]
    seed: int = 0
    target_total: int | None = None
    prompt_table: tuple[FormattingPrompt, ...] = ()

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise MixtureSchemaError(f"duplicate dataset names: {dupes}")
        known = {p.id for p in self.prompt_table}
        for entry in self.entries:
            for pid in entry.prompt_ids:
                if pid not in known:
                    raise DanglingPromptError(
                        f"dataset {entry.name!r} references unknown prompt id {pid}"
                    )

    @property
    def total(self) -> int:
        return sum(e.sample_count for e in self.entries)

    def prompt(self, prompt_id: int) -> FormattingPrompt:
        for p in self.prompt_table:
            if p.id == prompt_id:
                return p
        raise DanglingPromptError(f"no prompt with id {prompt_id}")


@dataclass(frozen=True)
class DistributionReport:
    name: str
    total: int
    category_counts: tuple[tuple[str, int], ...]  # canonical category order

    def percentage(self, category: str) -> float:
        if self.total == 0:
            return 0.0
        count = dict(self.category_counts).get(category, 0)
        return 100.0 * count / self.total

    def rows(self) -> list[dict]:
        return [
            {
                "category": cat,
                "count": count,
                "percent": round(self.percentage(cat), 1),
            }
            for cat, count in self.category_counts
        ]


def _parse_prompt(obj: Mapping) -> FormattingPrompt:
    try:
        position = PromptPosition(obj["position"])
    except (KeyError, ValueError) as exc:
        raise MixtureSchemaError(f"prompt entry has invalid position: {exc}") from exc
    variants = obj.get("variants")
    if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
        raise MixtureSchemaError("prompt variants must be a list of strings")
    return FormattingPrompt(
        id=int(obj["id"]),
        kind=str(obj.get("kind", "")),
        position=position,
        variants=tuple(variants),
    )


def load_prompt_table(source: str | Path) -> tuple[FormattingPrompt, ...]:
    """Load a prompt table from a shipped name ('single_image', 'onevision') or path."""
    if isinstance(source, str) and "/" not in source and not source.endswith(".yaml"):
        text = _read_source(f"prompts_{source}.yaml")
    else:
        text = _read_source(Path(source))
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or not isinstance(doc.get("prompts"), list):
        raise MixtureSchemaError("prompt table must have a top-level 'prompts' list")
    prompts = tuple(_parse_prompt(p) for p in doc["prompts"])
    ids = [p.id for p in prompts]
    if len(set(ids)) != len(ids):
        raise MixtureSchemaError("prompt table contains duplicate ids")
    return prompts


def _read_source(source: str | Path) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    ref = resources.files("ovprep").joinpath("data", source)
    if ref.is_file():
        return ref.read_text(encoding="utf-8")
    return Path(source).read_text(encoding="utf-8")


def _parse_prompt_ids(raw) -> tuple[int, ...]:
    if raw is None:
        return ()
    if isinstance(raw, int):
        return (raw,)
    if isinstance(raw, list) and all(isinstance(v, int) for v in raw):
        return tuple(raw)
    raise MixtureSchemaError(f"prompt_id must be an integer or integer list, got {raw!r}")


def load_mixture(path: str | Path) -> MixtureSpec:
    """Parse and validate a mixture manifest.

    Schema violations, unknown categories, and dangling prompt references
    raise distinct error types.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise MixtureSchemaError(f"manifest is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise MixtureSchemaError("manifest must be a mapping")
    if "entries" not in doc or not isinstance(doc["entries"], list):
        raise MixtureSchemaError("manifest needs a top-level 'entries' list")
    version = doc.get("version", 1)
    if version != 1:
        raise MixtureSchemaError(f"unsupported manifest version {version!r}")

    table_ref = doc.get("prompt_table")
    prompt_table = load_prompt_table(table_ref) if table_ref else ()

    entries = []
    for raw in doc["entries"]:
        if not isinstance(raw, dict) or "name" not in raw or "category" not in raw:
            raise MixtureSchemaError(f"entry missing name/category: {raw!r}")
        count = raw.get("count")
        if not isinstance(count, int):
            raise MixtureSchemaError(f"entry {raw['name']!r} needs an integer count")
        entries.append(
            DatasetEntry(
                name=str(raw["name"]),
                category=str(raw["category"]),
                sample_count=count,
                prompt_ids=_parse_prompt_ids(raw.get("prompt_id")),
                answer_form=str(raw.get("form", "fixed")),
                path=raw.get("path"),
            )
        )
    return MixtureSpec(
        name=str(doc.get("name", path.stem)),
        entries=tuple(entries),
        seed=int(doc.get("seed", 0)),
        target_total=doc.get("target_total"),
        prompt_table=prompt_table,
    )


def shipped_manifest_path(name: str) -> Path:
    """Filesystem path of a manifest shipped as package data."""
    ref = resources.files("ovprep").joinpath("data", f"{name}.yaml")
    with resources.as_file(ref) as p:
        return Path(p)


def load_shipped(name: str) -> MixtureSpec:
    return load_mixture(shipped_manifest_path(name))


def apply_prompt(
    sample: RawSample,
    prompt: FormattingPrompt,
    rng: random.Random,
) -> RawSample:
    """Attach a formatting prompt to the sample's first instruction turn.

    Head prompts precede the instruction, tail prompts follow it (newline
    joined); an all-position prompt replaces the instruction text while
    preserving any media markers. Answer turns are never touched.
    """
    variant = prompt.variants[rng.randrange(len(prompt.variants))]
    turns = list(sample.turns)
    for i, turn in enumerate(turns):
        if turn.role is not Role.USER:
            continue
        if prompt.position is PromptPosition.HEAD:
            new_text = variant + "\n" + turn.text
        elif prompt.position is PromptPosition.TAIL:
            new_text = turn.text + "\n" + variant
        else:
            markers = turn.text.count(IMAGE_MARKER)
            new_text = (IMAGE_MARKER + "\n") * markers + variant
        turns[i] = RawTurn(role=turn.role, text=new_text)
        break
    return replace(sample, turns=tuple(turns))


def distribution(spec: MixtureSpec) -> DistributionReport:
    """Per-category counts and percentages; order-invariant."""
    counts = {cat: 0 for cat in CATEGORIES}
    for entry in spec.entries:
        counts[entry.category] += entry.sample_count
    present = tuple((cat, counts[cat]) for cat in CATEGORIES if counts[cat] > 0)
    return DistributionReport(name=spec.name, total=spec.total, category_counts=present)


def _largest_remainder(weights: list[int], n: int) -> list[int]:
    """Apportion n among integer weights, ratio-preserving within one unit."""
    total = sum(weights)
    if total == 0:
        return [0] * len(weights)
    shares = [n * w / total for w in weights]
    floors = [int(s) for s in shares]
    leftover = n - sum(floors)
    order = sorted(
        range(len(weights)),
        key=lambda i: (-(shares[i] - floors[i]), i),
    )
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def sample_subset(
    spec: MixtureSpec,
    n: int,
    strategy: str = "proportional",
    seed: int | None = None,
) -> MixtureSpec:
    """Shrink a mixture to n samples.

    ``proportional`` keeps category ratios within one sample per category;
    ``balanced`` equalizes categories up to each category's availability.
    Entry counts inside a category are apportioned proportionally either way.
    The result is fully determined by the inputs (the seed is recorded on the
    returned spec for provenance).
    """
    if n > spec.total:
        raise SampleSizeError(f"requested {n} samples from a mixture of {spec.total}")
    if strategy not in ("proportional", "balanced"):
        raise MixtureSchemaError(f"unknown sampling strategy {strategy!r}")

    report = distribution(spec)
    cats = [cat for cat, _ in report.category_counts]
    avail = [count for _, count in report.category_counts]
    if strategy == "proportional":
        cat_take = _largest_remainder(avail, n)
    else:
        cat_take = _water_fill(avail, n)

    take_by_cat = dict(zip(cats, cat_take))
    new_entries = []
    for cat in cats:
        entries = [e for e in spec.entries if e.category == cat]
        counts = _largest_remainder([e.sample_count for e in entries], take_by_cat[cat])
        for entry, count in zip(entries, counts):
            new_entries.append(replace(entry, sample_count=count))
    # entries in categories with zero weight pass through at zero
    for entry in spec.entries:
        if entry.category not in take_by_cat:
            new_entries.append(replace(entry, sample_count=0))
    order = {e.name: i for i, e in enumerate(spec.entries)}
    new_entries.sort(key=lambda e: order[e.name])
    return replace(
        spec,
        entries=tuple(new_entries),
        seed=spec.seed if seed is None else seed,
        target_total=n,
    )


def _water_fill(avail: list[int], n: int) -> list[int]:
    """Equal shares capped by availability; surplus redistributed evenly."""
    take = [0] * len(avail)
    remaining = n
    open_idx = list(range(len(avail)))
    while remaining > 0 and open_idx:
        fair = remaining // len(open_idx)
        if fair == 0:
            # hand out the last few one by one, smallest index first
            for i in open_idx[:remaining]:
                take[i] += 1
            break
        capped = [i for i in open_idx if avail[i] - take[i] <= fair]
        if capped:
            for i in capped:
                remaining -= avail[i] - take[i]
                take[i] = avail[i]
            open_idx = [i for i in open_idx if i not in capped]
        else:
            for i in open_idx:
                take[i] += fair
                remaining -= fair
            if remaining < len(open_idx):
                for i in open_idx[:remaining]:
                    take[i] += 1
                remaining = 0
    return take


def dedupe_scan(specs: Iterable[MixtureSpec]) -> list[tuple[str, tuple[str, ...]]]:
    """Dataset names that appear in more than one manifest."""
    specs = list(specs)
    if len(specs) < 2:
        raise MixtureSchemaError("dedupe scan needs at least two manifests")
    seen: dict[str, list[str]] = {}
    for spec in specs:
        for entry in spec.entries:
            seen.setdefault(entry.name, []).append(spec.name)
    return [
        (name, tuple(sources))
        for name, sources in sorted(seen.items())
        if len(sources) > 1
    ]
