"""Training-curriculum configuration: validation, cost bounds, and manifests.

The shipped plans encode the four-stage curriculum (alignment, high-quality
knowledge, single-image instruction tuning, mixed-modality tuning) with the
token ceiling rising 729 -> 3645 -> 7290 -> 7290. Stage one trains the
projector only; later stages train the full model with the vision encoder's
learning rate pinned to one fifth of the LLM's. Nothing here executes
training; plans are validated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .datamix import MixtureSpec
from .errors import InvalidPlanError, ManifestFormatError, UnresolvedDatasetError
from .geometry import GridCatalog, SpatialConfig
from .token_budget import Scenario, default_policies, scenario_maxima

STAGE_NAMES = ("Stage-1", "Stage-1.5", "Stage-2-SingleImage", "Stage-2-OneVision")
TOKEN_CEILINGS = (729, 729 * 5, 729 * 10, 729 * 10)
FULL_MODEL = frozenset({"projector", "vision", "llm"})
PROJECTOR_ONLY = frozenset({"projector"})
VISION_LR_DIVISOR = 5

_CATEGORY_SCENARIO = {"Multi-Image": Scenario.MULTI_IMAGE, "Video": Scenario.VIDEO}


@dataclass(frozen=True)
class StageConfig:
    name: str
    catalog: GridCatalog
    max_visual_tokens: int
    dataset_ref: str
    sample_count: int
    trainable: frozenset[str]
    batch_size: int
    lr_vision: float
    lr_proj_llm: float
    epochs: int = 1

    def __post_init__(self) -> None:
        if self.lr_vision <= 0 or self.lr_proj_llm <= 0:
            raise InvalidPlanError(f"stage {self.name}: learning rates must be positive")
        if self.max_visual_tokens < 1:
            raise InvalidPlanError(f"stage {self.name}: token ceiling must be positive")


@dataclass(frozen=True)
class TrainingPlan:
    profile: str
    stages: tuple[StageConfig, ...]


@dataclass(frozen=True)
class Violation:
    code: str
    stage: str
    message: str


def validate_plan(plan: TrainingPlan) -> list[Violation]:
    """Check a plan against the curriculum's structural rules.

    Violations come back as data, not exceptions: stage order and count,
    trainable modules (projector-only first, full model after), the 5x
    vision-LR reduction in full-model stages, the fixed token-ceiling
    progression, and single-epoch training.
    """
    violations: list[Violation] = []
    names = tuple(s.name for s in plan.stages)
    if names != STAGE_NAMES:
        violations.append(
            Violation(
                code="stage_order",
                stage=",".join(names) or "<empty>",
                message=f"stages must be {list(STAGE_NAMES)} in order, got {list(names)}",
            )
        )
    for i, stage in enumerate(plan.stages):
        expected_trainable = PROJECTOR_ONLY if i == 0 else FULL_MODEL
        if stage.trainable != expected_trainable:
            violations.append(
                Violation(
                    code="trainable_modules",
                    stage=stage.name,
                    message=(
                        f"expected trainable {sorted(expected_trainable)}, "
                        f"got {sorted(stage.trainable)}"
                    ),
                )
            )
        if i > 0 and not math.isclose(
            stage.lr_vision * VISION_LR_DIVISOR, stage.lr_proj_llm, rel_tol=1e-9
        ):
            violations.append(
                Violation(
                    code="lr_ratio",
                    stage=stage.name,
                    message=(
                        f"vision LR {stage.lr_vision} must be 1/{VISION_LR_DIVISOR} of "
                        f"the LLM LR {stage.lr_proj_llm}"
                    ),
                )
            )
        if i < len(TOKEN_CEILINGS) and stage.max_visual_tokens != TOKEN_CEILINGS[i]:
            violations.append(
                Violation(
                    code="token_ceiling",
                    stage=stage.name,
                    message=(
                        f"token ceiling must be {TOKEN_CEILINGS[i]}, "
                        f"got {stage.max_visual_tokens}"
                    ),
                )
            )
        if stage.epochs != 1:
            violations.append(
                Violation(
                    code="epochs",
                    stage=stage.name,
                    message=f"single-epoch training required, got {stage.epochs}",
                )
            )
    return violations


def token_cost_estimate(
    plan: TrainingPlan,
    manifests: dict[str, MixtureSpec],
    expected_per_scenario: dict[Scenario, int] | None = None,
) -> dict[str, int]:
    """Upper-bound visual-token totals per stage.

    Per-sample cost defaults to the stage ceiling for single-image entries and
    the scenario maxima for multi-image/video entries; callers with a known
    shape distribution can pass expectations instead. The per-stage estimate
    is the manifest-weighted mean cost times the stage's sample count.
    """
    maxima = scenario_maxima(default_policies())
    estimates: dict[str, int] = {}
    for stage in plan.stages:
        if stage.dataset_ref not in manifests:
            raise UnresolvedDatasetError(
                f"stage {stage.name} references unknown dataset {stage.dataset_ref!r}"
            )
        spec = manifests[stage.dataset_ref]
        weighted = 0
        total = 0
        for entry in spec.entries:
            scenario = _CATEGORY_SCENARIO.get(entry.category, Scenario.SINGLE_IMAGE)
            if expected_per_scenario and scenario in expected_per_scenario:
                per_sample = expected_per_scenario[scenario]
            elif scenario is Scenario.SINGLE_IMAGE:
                per_sample = stage.max_visual_tokens
            else:
                per_sample = maxima[scenario]
            weighted += entry.sample_count * per_sample
            total += entry.sample_count
        if total == 0:
            estimates[stage.name] = 0
        else:
            estimates[stage.name] = stage.sample_count * weighted // total
    return estimates


def _catalog_to_strings(catalog: GridCatalog) -> list[str]:
    return [f"{c.a}x{c.b}" for c in catalog.configs]


def _catalog_from_strings(base_edge: int, names: list[str]) -> GridCatalog:
    configs = []
    for name in names:
        try:
            a, b = name.lower().split("x")
            configs.append(SpatialConfig(int(a), int(b)))
        except ValueError as exc:
            raise ManifestFormatError(f"bad grid shape {name!r}") from exc
    return GridCatalog(base_edge_px=base_edge, configs=tuple(configs))


def plan_to_dict(plan: TrainingPlan) -> dict:
    return {
        "version": 1,
        "profile": plan.profile,
        "stages": [
            {
                "name": s.name,
                "catalog": {
                    "base_edge_px": s.catalog.base_edge_px,
                    "configs": _catalog_to_strings(s.catalog),
                },
                "max_visual_tokens": s.max_visual_tokens,
                "dataset_ref": s.dataset_ref,
                "sample_count": s.sample_count,
                "trainable": sorted(s.trainable),
                "batch_size": s.batch_size,
                "lr_vision": s.lr_vision,
                "lr_proj_llm": s.lr_proj_llm,
                "epochs": s.epochs,
            }
            for s in plan.stages
        ],
    }


def plan_from_dict(doc: dict) -> TrainingPlan:
    if not isinstance(doc, dict) or not isinstance(doc.get("stages"), list):
        raise ManifestFormatError("plan manifest needs a 'stages' list")
    if doc.get("version", 1) != 1:
        raise ManifestFormatError(f"unsupported plan version {doc.get('version')!r}")
    stages = []
    for raw in doc["stages"]:
        try:
            catalog = _catalog_from_strings(
                int(raw["catalog"]["base_edge_px"]), list(raw["catalog"]["configs"])
            )
            stages.append(
                StageConfig(
                    name=str(raw["name"]),
                    catalog=catalog,
                    max_visual_tokens=int(raw["max_visual_tokens"]),
                    dataset_ref=str(raw["dataset_ref"]),
                    sample_count=int(raw["sample_count"]),
                    trainable=frozenset(raw["trainable"]),
                    batch_size=int(raw["batch_size"]),
                    lr_vision=float(raw["lr_vision"]),
                    lr_proj_llm=float(raw["lr_proj_llm"]),
                    epochs=int(raw.get("epochs", 1)),
                )
            )
        except KeyError as exc:
            raise ManifestFormatError(f"stage entry missing field {exc}") from exc
    return TrainingPlan(profile=str(doc.get("profile", "default")), stages=tuple(stages))


def emit_manifest(plan: TrainingPlan, path: str | Path, force: bool = False) -> str:
    """Serialize a plan deterministically; invalid plans need ``force``."""
    violations = validate_plan(plan)
    if violations and not force:
        summary = "; ".join(f"{v.code}@{v.stage}" for v in violations)
        raise InvalidPlanError(f"refusing to emit invalid plan ({summary})")
    text = yaml.safe_dump(plan_to_dict(plan), sort_keys=False, width=100)
    Path(path).write_text(text, encoding="utf-8")
    return text


def load_plan(path: str | Path) -> TrainingPlan:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ManifestFormatError(f"plan manifest is not valid YAML: {exc}") from exc
    return plan_from_dict(doc)


def _stage(
    i: int,
    catalog: GridCatalog,
    dataset_ref: str,
    sample_count: int,
    batch_size: int,
) -> StageConfig:
    first = i == 0
    return StageConfig(
        name=STAGE_NAMES[i],
        catalog=catalog,
        max_visual_tokens=TOKEN_CEILINGS[i],
        dataset_ref=dataset_ref,
        sample_count=sample_count,
        trainable=PROJECTOR_ONLY if first else FULL_MODEL,
        batch_size=batch_size,
        lr_vision=1e-3 if first else 2e-6,
        lr_proj_llm=1e-3 if first else 1e-5,
        epochs=1,
    )


# Stage-wide batch sizes per model-scale profile: the 0.5B model trains at a
# global batch of 512 throughout; 7B/72B drop to 256 after alignment.
PROFILES = {
    "0.5b": (512, 512, 512, 512),
    "7b": (512, 256, 256, 256),
}

_BASE_ONLY = GridCatalog(configs=(SpatialConfig(1, 1),))
# Knowledge-stage grids: 2x2 plus single-row/column shapes (and the base 1x1).
_KNOWLEDGE_CATALOG = GridCatalog(
    configs=(
        SpatialConfig(1, 1),
        SpatialConfig(1, 2),
        SpatialConfig(1, 3),
        SpatialConfig(2, 1),
        SpatialConfig(2, 2),
        SpatialConfig(3, 1),
    )
)
_FULL_CATALOG = GridCatalog.square(6)


def shipped_plan(profile: str = "7b") -> TrainingPlan:
    """The curriculum for one model-scale profile."""
    if profile not in PROFILES:
        raise InvalidPlanError(f"unknown profile {profile!r}; have {sorted(PROFILES)}")
    b1, b15, b2s, b2o = PROFILES[profile]
    return TrainingPlan(
        profile=profile,
        stages=(
            _stage(0, _BASE_ONLY, "lcs_558k", 558_000, b1),
            _stage(1, _KNOWLEDGE_CATALOG, "high_quality_knowledge_4m", 4_000_000, b15),
            _stage(2, _FULL_CATALOG, "single_image_3p2m", 3_200_000, b2s),
            _stage(3, _FULL_CATALOG, "onevision_1p6m", 1_600_000, b2o),
        ),
    )


def shipped_plan_path(profile: str) -> Path:
    ref = resources.files("ovprep").joinpath("data", f"stages_{profile.replace('.', 'p')}.yaml")
    with resources.as_file(ref) as p:
        return Path(p)
