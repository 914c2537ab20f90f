"""Spatial planning for any-resolution image encoding.

Given an image's pixel dimensions and a catalog of (a, b) grid shapes, this
module picks the grid that covers the image with the fewest crops, lays out
the crop rectangles on the resized canvas, and computes square zero-padding
geometry for base-resolution encoding. Everything here is pure arithmetic on
value types; no pixels are touched (a decode/resample adapter is injected by
callers that own actual image data).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidConfigError, InvalidShapeError

DEFAULT_BASE_EDGE = 384


def _round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)).__floor__())


@dataclass(frozen=True)
class ImageShape:
    """Raw pixel dimensions of a source image."""

    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidShapeError(
                f"image dimensions must be >= 1, got {self.width_px}x{self.height_px}"
            )


@dataclass(frozen=True, order=True)
class SpatialConfig:
    """An a x b crop grid: ``a`` crops along width, ``b`` along height."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 1 or self.b < 1:
            raise InvalidConfigError(f"grid shape must be >= 1x1, got {self.a}x{self.b}")

    @property
    def crop_count(self) -> int:
        return self.a * self.b


@dataclass(frozen=True)
class GridCatalog:
    """The set of admissible grid shapes plus the encoder input edge."""

    base_edge_px: int = DEFAULT_BASE_EDGE
    configs: tuple[SpatialConfig, ...] = ()

    def __post_init__(self) -> None:
        if self.base_edge_px < 1:
            raise InvalidConfigError(f"base edge must be positive, got {self.base_edge_px}")
        if not self.configs:
            raise InvalidConfigError("catalog must contain at least one grid shape")
        ordered = tuple(sorted(set(self.configs)))
        if len(ordered) != len(self.configs):
            raise InvalidConfigError("catalog contains duplicate grid shapes")
        if SpatialConfig(1, 1) not in ordered:
            raise InvalidConfigError("catalog must contain the 1x1 base shape")
        object.__setattr__(self, "configs", ordered)

    @classmethod
    def square(cls, max_side: int = 6, base_edge_px: int = DEFAULT_BASE_EDGE) -> "GridCatalog":
        """Full {1..max_side} x {1..max_side} catalog (the instruction-tuning default)."""
        configs = tuple(
            SpatialConfig(a, b)
            for a in range(1, max_side + 1)
            for b in range(1, max_side + 1)
        )
        return cls(base_edge_px=base_edge_px, configs=configs)


DEFAULT_CATALOG = GridCatalog.square()


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle; x grows right, y grows down."""

    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class CropPlan:
    """How one image maps onto a crop grid.

    ``resized_w_px`` x ``resized_h_px`` is the aspect-preserved content placed
    at offset (``offset_x_px``, ``offset_y_px``) inside the zero-padded canvas
    of ``config.a * base_edge_px`` by ``config.b * base_edge_px``. The crop
    rectangles tile that canvas row-major; the base view (whole image resized
    to one encoder tile) is always emitted first in the view order.
    """

    config: SpatialConfig
    base_edge_px: int
    resized_w_px: int
    resized_h_px: int
    offset_x_px: int
    offset_y_px: int
    crop_rects: tuple[Rect, ...]
    base_view: bool = True

    @property
    def canvas_w_px(self) -> int:
        return self.config.a * self.base_edge_px

    @property
    def canvas_h_px(self) -> int:
        return self.config.b * self.base_edge_px

    @property
    def view_count(self) -> int:
        # base view + one per crop
        return self.config.crop_count + (1 if self.base_view else 0)


@dataclass(frozen=True)
class PadSpec:
    """Placement of an aspect-preserved image inside a square padded canvas."""

    canvas_edge_px: int
    content_rect: Rect


def _covers(cfg: SpatialConfig, shape: ImageShape, edge: int) -> bool:
    return cfg.a * edge >= shape.width_px and cfg.b * edge >= shape.height_px


def select_config(shape: ImageShape, catalog: GridCatalog = DEFAULT_CATALOG) -> SpatialConfig:
    """Pick the grid shape for an image.

    A shape is covered by (a, b) when a*edge >= width and b*edge >= height.
    Among covering shapes the one with the fewest crops wins; ties fall to
    least wasted canvas area, then lexicographic (a, b). When nothing covers
    (the image outsizes even the largest grid), the shape preserving the most
    effective resolution (largest uniform fit scale) wins, same tie-breaks.

    The fit scale min(a*edge/w, b*edge/h) and the wasted canvas area rank
    identically to min(a*h, b*w) and crop_count*w*h - min(a*h, b*w)^2, which
    keeps the whole selection in exact integer arithmetic.
    """
    edge = catalog.base_edge_px
    w, h = shape.width_px, shape.height_px

    def scale_rank(c: SpatialConfig) -> int:
        return min(c.a * h, c.b * w)

    def wasted_rank(c: SpatialConfig) -> int:
        m = scale_rank(c)
        return c.crop_count * w * h - m * m

    pool = [c for c in catalog.configs if _covers(c, shape, edge)]
    if not pool:
        best_scale = max(scale_rank(c) for c in catalog.configs)
        pool = [c for c in catalog.configs if scale_rank(c) == best_scale]
    best_count = min(c.crop_count for c in pool)
    pool = [c for c in pool if c.crop_count == best_count]
    if len(pool) == 1:
        return pool[0]
    return min(pool, key=lambda c: (wasted_rank(c), c.a, c.b))


def plan_crops(
    shape: ImageShape,
    config: SpatialConfig,
    base_edge: int = DEFAULT_BASE_EDGE,
) -> CropPlan:
    """Lay out the resized content and crop grid for a chosen config."""
    if base_edge <= 0:
        raise InvalidConfigError(f"base edge must be positive, got {base_edge}")
    canvas_w = config.a * base_edge
    canvas_h = config.b * base_edge
    scale = min(Fraction(canvas_w, shape.width_px), Fraction(canvas_h, shape.height_px))
    # The binding axis lands exactly on the canvas edge; the other one rounds
    # but never collapses below one pixel.
    resized_w = min(canvas_w, max(1, _round_half_up(scale * shape.width_px)))
    resized_h = min(canvas_h, max(1, _round_half_up(scale * shape.height_px)))
    rects = tuple(
        Rect(col * base_edge, row * base_edge, base_edge, base_edge)
        for row in range(config.b)
        for col in range(config.a)
    )
    return CropPlan(
        config=config,
        base_edge_px=base_edge,
        resized_w_px=resized_w,
        resized_h_px=resized_h,
        offset_x_px=(canvas_w - resized_w) // 2,
        offset_y_px=(canvas_h - resized_h) // 2,
        crop_rects=rects,
    )


def pad_to_square(shape: ImageShape, canvas_edge: int = DEFAULT_BASE_EDGE) -> PadSpec:
    """Aspect-preserving fit of an image into a zero-padded square canvas.

    The longer image edge is scaled to ``canvas_edge``; the shorter edge is
    centered. The content never overflows the canvas.
    """
    if canvas_edge <= 0:
        raise InvalidConfigError(f"canvas edge must be positive, got {canvas_edge}")
    scale = Fraction(canvas_edge, max(shape.width_px, shape.height_px))
    w = min(canvas_edge, max(1, _round_half_up(scale * shape.width_px)))
    h = min(canvas_edge, max(1, _round_half_up(scale * shape.height_px)))
    return PadSpec(
        canvas_edge_px=canvas_edge,
        content_rect=Rect((canvas_edge - w) // 2, (canvas_edge - h) // 2, w, h),
    )


def crop_plan_to_dict(plan: CropPlan) -> dict:
    """Plain-data form used by the plan manifest (all fields pixel integers)."""
    return {
        "grid": [plan.config.a, plan.config.b],
        "base_edge_px": plan.base_edge_px,
        "canvas_px": [plan.canvas_w_px, plan.canvas_h_px],
        "resized_px": [plan.resized_w_px, plan.resized_h_px],
        "offset_px": [plan.offset_x_px, plan.offset_y_px],
        "base_view_first": plan.base_view,
        "crop_rects": [[r.x, r.y, r.w, r.h] for r in plan.crop_rects],
    }


def pad_spec_to_dict(pad: PadSpec) -> dict:
    return {
        "canvas_edge_px": pad.canvas_edge_px,
        "content_rect": [
            pad.content_rect.x,
            pad.content_rect.y,
            pad.content_rect.w,
            pad.content_rect.h,
        ],
    }
