"""Record-level orchestration: raw JSONL sample to packed sequence.

Per sample the scenario is inferred from its attachments (video beats
multi-image beats single-image), token plans are computed per medium, and the
rendered conversation is tokenized and expanded. Pure given the sample and
settings, so records can be processed in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .feature_resample import kept_token_counts
from .geometry import DEFAULT_CATALOG, GridCatalog, ImageShape, pad_to_square
from .sequence_builder import (
    ByteTokenizer,
    PackedSequence,
    RawSample,
    TemplateSpec,
    Tokenizer,
    expand,
    pack_conversation,
    to_conversation,
)
from .token_budget import (
    DEFAULT_GEOM,
    EncoderGeom,
    Scenario,
    ScenarioPolicy,
    TokenPlan,
    plan_multi_image,
    plan_single_image,
    plan_video,
)


@dataclass(frozen=True)
class PackSettings:
    catalog: GridCatalog = DEFAULT_CATALOG
    geom: EncoderGeom = DEFAULT_GEOM
    single: ScenarioPolicy = field(
        default_factory=lambda: ScenarioPolicy.default_for(Scenario.SINGLE_IMAGE)
    )
    multi: ScenarioPolicy = field(
        default_factory=lambda: ScenarioPolicy.default_for(Scenario.MULTI_IMAGE)
    )
    video: ScenarioPolicy = field(
        default_factory=lambda: ScenarioPolicy.default_for(Scenario.VIDEO)
    )
    default_width: int = 384
    default_height: int = 384
    supervise_end_marker: bool = True


def infer_scenario(sample: RawSample) -> Scenario:
    if sample.video is not None:
        return Scenario.VIDEO
    if len(sample.images) > 1:
        return Scenario.MULTI_IMAGE
    return Scenario.SINGLE_IMAGE


def _image_shape(descriptor, settings: PackSettings) -> ImageShape:
    return ImageShape(
        width_px=descriptor.width_px or settings.default_width,
        height_px=descriptor.height_px or settings.default_height,
    )


def plans_for_sample(sample: RawSample, settings: PackSettings) -> list[TokenPlan]:
    """One token plan per attached medium, in media order."""
    scenario = infer_scenario(sample)
    if scenario is Scenario.VIDEO:
        frames = sample.video.frames or settings.video.max_views
        video_plan = plan_video(frames, settings.video)
        image_plans = [
            _single_plan(_image_shape(d, settings), settings) for d in sample.images
        ]
        return image_plans + [video_plan]
    if scenario is Scenario.MULTI_IMAGE:
        kept: list[int] = []
        for descriptor in sample.images:
            shape = _image_shape(descriptor, settings)
            rows, cols = kept_token_counts(
                pad_to_square(shape, settings.geom.base_edge_px),
                settings.geom.grid_side,
            )
            kept.append(rows * cols)
        combined = plan_multi_image(len(kept), kept, settings.multi, settings.geom)
        return [TokenPlan.of([k]) for k in combined.per_view_tokens]
    return [_single_plan(_image_shape(d, settings), settings) for d in sample.images]


def _single_plan(shape: ImageShape, settings: PackSettings) -> TokenPlan:
    return plan_single_image(shape, settings.catalog, settings.geom, settings.single)


def pack_sample(
    sample: RawSample,
    settings: PackSettings | None = None,
    tokenizer: Tokenizer | None = None,
    tmpl: TemplateSpec | None = None,
) -> PackedSequence:
    """Render, tokenize, and expand one clean sample."""
    settings = settings or PackSettings()
    tokenizer = tokenizer or ByteTokenizer()
    conv = to_conversation(sample)
    seq = pack_conversation(
        conv,
        tokenizer,
        tmpl=tmpl,
        supervise_end_marker=settings.supervise_end_marker,
    )
    plans = plans_for_sample(sample, settings)
    return expand(seq, plans)
