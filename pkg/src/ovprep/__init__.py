"""Preprocessing toolkit for OneVision-style multimodal training pipelines.

Plans any-resolution crop grids, budgets visual tokens per scenario, packs
chat-formatted conversations into supervised token streams, curates
dataset-mixture manifests, and validates the training curriculum. No model
weights are involved anywhere; everything is deterministic data plumbing.
"""

from .errors import PrepError
from .geometry import (
    CropPlan,
    GridCatalog,
    ImageShape,
    PadSpec,
    Rect,
    SpatialConfig,
    pad_to_square,
    plan_crops,
    select_config,
)
from .token_budget import (
    EncoderGeom,
    Scenario,
    ScenarioPolicy,
    TokenPlan,
    plan_multi_image,
    plan_single_image,
    plan_video,
    scenario_maxima,
    tokens_after_threshold,
)
from .feature_resample import (
    FeatureGrid,
    InterpSpec,
    bilinear_resize,
    mock_encode,
    strip_padding,
)
from .sequence_builder import (
    ByteTokenizer,
    Conversation,
    PackedSequence,
    RawSample,
    TemplateSpec,
    build_loss_mask,
    expand,
    pack_conversation,
    render_template,
    sanitize_markers,
    tokenize_with_placeholders,
)
from .datamix import (
    DatasetEntry,
    DistributionReport,
    FormattingPrompt,
    MixtureSpec,
    apply_prompt,
    dedupe_scan,
    distribution,
    load_mixture,
    sample_subset,
)
from .curriculum import StageConfig, TrainingPlan, shipped_plan, token_cost_estimate, validate_plan

__version__ = "0.1.0"

__all__ = [
    "PrepError",
    "ImageShape",
    "SpatialConfig",
    "GridCatalog",
    "Rect",
    "CropPlan",
    "PadSpec",
    "select_config",
    "plan_crops",
    "pad_to_square",
    "EncoderGeom",
    "Scenario",
    "ScenarioPolicy",
    "TokenPlan",
    "tokens_after_threshold",
    "plan_single_image",
    "plan_multi_image",
    "plan_video",
    "scenario_maxima",
    "FeatureGrid",
    "InterpSpec",
    "bilinear_resize",
    "strip_padding",
    "mock_encode",
    "ByteTokenizer",
    "Conversation",
    "PackedSequence",
    "RawSample",
    "TemplateSpec",
    "render_template",
    "tokenize_with_placeholders",
    "pack_conversation",
    "expand",
    "build_loss_mask",
    "sanitize_markers",
    "DatasetEntry",
    "FormattingPrompt",
    "MixtureSpec",
    "DistributionReport",
    "load_mixture",
    "apply_prompt",
    "distribution",
    "sample_subset",
    "dedupe_scan",
    "StageConfig",
    "TrainingPlan",
    "validate_plan",
    "token_cost_estimate",
    "shipped_plan",
    "__version__",
]
