"""Visual-token accounting and per-scenario budget enforcement.

A 384x384 encoder view yields a 27x27 token grid (729 tokens). Single images
go through the crop grid and may have their per-view token count reduced so
the sample stays under a threshold; multi-image samples use one base view per
image with padding tokens stripped; video frames are pooled down to 196
tokens each. The default ceilings per scenario work out to 7290 / 8748 / 6272
tokens, deliberately within ~1.4x of each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import (
    InvalidConfigError,
    SampleSizeError,
    ThresholdTooSmallError,
    TooManyViewsError,
)
from .geometry import DEFAULT_CATALOG, GridCatalog, ImageShape, SpatialConfig, select_config


class Scenario(enum.Enum):
    SINGLE_IMAGE = "single_image"
    MULTI_IMAGE = "multi_image"
    VIDEO = "video"


@dataclass(frozen=True)
class EncoderGeom:
    """Token-grid geometry of the vision encoder (edge pixels, tokens per side)."""

    base_edge_px: int = 384
    grid_side: int = 27

    def __post_init__(self) -> None:
        if self.base_edge_px < 1 or self.grid_side < 1:
            raise InvalidConfigError("encoder geometry fields must be positive")

    @property
    def tokens_per_view(self) -> int:
        return self.grid_side * self.grid_side


DEFAULT_GEOM = EncoderGeom()

SINGLE_IMAGE_TAU = 7290  # 10 encoder views' worth of tokens
MULTI_IMAGE_MAX_VIEWS = 12
VIDEO_MAX_FRAMES = 32
VIDEO_FRAME_TOKENS = 196  # 14x14 grid after 2x2 pooling of 27x27


@dataclass(frozen=True)
class ScenarioPolicy:
    """Budget knobs for one scenario."""

    scenario: Scenario
    tau: int = SINGLE_IMAGE_TAU
    max_views: int = 1
    video_frame_tokens: int = VIDEO_FRAME_TOKENS

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise InvalidConfigError(f"tau must be positive, got {self.tau}")
        if self.max_views < 1:
            raise InvalidConfigError(f"max_views must be >= 1, got {self.max_views}")
        if self.video_frame_tokens < 1:
            raise InvalidConfigError("video_frame_tokens must be >= 1")

    @classmethod
    def default_for(cls, scenario: Scenario) -> "ScenarioPolicy":
        if scenario is Scenario.SINGLE_IMAGE:
            return cls(scenario, tau=SINGLE_IMAGE_TAU, max_views=1)
        if scenario is Scenario.MULTI_IMAGE:
            return cls(scenario, max_views=MULTI_IMAGE_MAX_VIEWS)
        return cls(scenario, max_views=VIDEO_MAX_FRAMES)


@dataclass(frozen=True)
class TokenPlan:
    """Per-view visual token counts for one sample."""

    per_view_tokens: tuple[int, ...]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.per_view_tokens):
            raise InvalidConfigError("token plan total must equal the per-view sum")

    @classmethod
    def of(cls, per_view: list[int] | tuple[int, ...]) -> "TokenPlan":
        per_view = tuple(per_view)
        return cls(per_view_tokens=per_view, total=sum(per_view))


def tokens_after_threshold(config: SpatialConfig, tokens_per_view: int, tau: int) -> int:
    """Per-view token count after budget enforcement.

    With ``n = a*b + 1`` views, the raw sample cost is ``n * tokens_per_view``.
    At or below ``tau`` the count passes through unchanged; above it each view
    is reduced to ``floor(tau / n)`` so the total never exceeds the threshold.
    """
    if tokens_per_view <= 0:
        raise InvalidConfigError(f"tokens_per_view must be positive, got {tokens_per_view}")
    if tau <= 0:
        raise InvalidConfigError(f"tau must be positive, got {tau}")
    views = config.crop_count + 1
    if tau < views:
        raise ThresholdTooSmallError(
            f"tau={tau} cannot fund even one token for each of {views} views"
        )
    if views * tokens_per_view <= tau:
        return tokens_per_view
    return max(1, tau // views)


def plan_single_image(
    shape: ImageShape,
    catalog: GridCatalog = DEFAULT_CATALOG,
    geom: EncoderGeom = DEFAULT_GEOM,
    policy: ScenarioPolicy | None = None,
) -> TokenPlan:
    """Budget a single image: grid selection, then threshold reduction.

    The plan has one entry per view (base view first, then crops), all equal.
    """
    policy = policy or ScenarioPolicy.default_for(Scenario.SINGLE_IMAGE)
    if policy.scenario is not Scenario.SINGLE_IMAGE:
        raise InvalidConfigError("plan_single_image requires a single-image policy")
    config = select_config(shape, catalog)
    per_view = tokens_after_threshold(config, geom.tokens_per_view, policy.tau)
    return TokenPlan.of([per_view] * (config.crop_count + 1))


def plan_multi_image(
    n_images: int,
    per_image_kept: list[int] | tuple[int, ...],
    policy: ScenarioPolicy | None = None,
    geom: EncoderGeom = DEFAULT_GEOM,
) -> TokenPlan:
    """Budget a multi-image sample from already-stripped per-image token counts.

    Images are encoded at base resolution only (no crop grid) and padding
    tokens are stripped upstream, so no threshold reduction applies here.
    """
    policy = policy or ScenarioPolicy.default_for(Scenario.MULTI_IMAGE)
    if policy.scenario is not Scenario.MULTI_IMAGE:
        raise InvalidConfigError("plan_multi_image requires a multi-image policy")
    if n_images > policy.max_views:
        raise TooManyViewsError(
            f"{n_images} images exceed the per-sample limit of {policy.max_views}"
        )
    kept = tuple(per_image_kept)
    if len(kept) != n_images:
        raise SampleSizeError(
            f"expected {n_images} per-image token counts, got {len(kept)}"
        )
    cap = geom.tokens_per_view
    for i, k in enumerate(kept):
        if not 1 <= k <= cap:
            raise SampleSizeError(f"image {i} kept-token count {k} outside [1, {cap}]")
    return TokenPlan.of(kept)


def plan_video(n_frames: int, policy: ScenarioPolicy | None = None) -> TokenPlan:
    """Budget a video: up to ``max_views`` frames at the pooled per-frame count."""
    policy = policy or ScenarioPolicy.default_for(Scenario.VIDEO)
    if policy.scenario is not Scenario.VIDEO:
        raise InvalidConfigError("plan_video requires a video policy")
    if n_frames < 1:
        raise SampleSizeError(f"videos must have at least one frame, got {n_frames}")
    frames = min(n_frames, policy.max_views)
    return TokenPlan.of([policy.video_frame_tokens] * frames)


def default_policies() -> dict[Scenario, ScenarioPolicy]:
    return {s: ScenarioPolicy.default_for(s) for s in Scenario}


def scenario_maxima(
    policies: dict[Scenario, ScenarioPolicy] | None = None,
    geom: EncoderGeom = DEFAULT_GEOM,
) -> dict[Scenario, int]:
    """Worst-case total visual tokens per scenario under the given policies."""
    policies = policies or default_policies()
    maxima: dict[Scenario, int] = {}
    for scenario, policy in policies.items():
        if scenario is Scenario.SINGLE_IMAGE:
            maxima[scenario] = policy.tau
        elif scenario is Scenario.MULTI_IMAGE:
            maxima[scenario] = policy.max_views * geom.tokens_per_view
        else:
            maxima[scenario] = policy.max_views * policy.video_frame_tokens
    return maxima


def token_plan_to_dict(plan: TokenPlan) -> dict:
    return {"per_view_tokens": list(plan.per_view_tokens), "total": plan.total}
