"""Numeric operations on encoder token grids.

Bilinear resizing under the half-pixel-center convention (sample i of an
N-long axis sits at (i + 0.5) / N), removal of token rows/columns that fall
on zero-padding, and a deterministic mock encoder so the full pipeline can be
exercised without a neural network. All arithmetic runs in float64; the
serialized form stores float32.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Union

import numpy as np

from .errors import EmptyContentError, InvalidConfigError
from .geometry import CropPlan, PadSpec


@dataclass(frozen=True)
class FeatureGrid:
    """A rows x cols token grid with ``dim`` channels per token."""

    rows: int
    cols: int
    dim: int
    values: np.ndarray  # float64, shape (rows, cols, dim), read-only

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (self.rows, self.cols, self.dim):
            raise InvalidConfigError(
                f"values shape {arr.shape} does not match "
                f"({self.rows}, {self.cols}, {self.dim})"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidConfigError("feature grid contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def token_count(self) -> int:
        return self.rows * self.cols

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FeatureGrid":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3:
            raise InvalidConfigError(f"expected a (rows, cols, dim) array, got ndim={arr.ndim}")
        r, c, d = arr.shape
        return cls(rows=r, cols=c, dim=d, values=arr)


@dataclass(frozen=True)
class InterpSpec:
    """Output grid size for a bilinear resize; half-pixel centers are fixed."""

    out_rows: int
    out_cols: int

    def __post_init__(self) -> None:
        if self.out_rows < 1 or self.out_cols < 1:
            raise InvalidConfigError("output grid must be at least 1x1")


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and blend weight per output sample, clamped at borders."""
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0.0, n_in - 1)
    lo = np.floor(x).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = x - lo
    return lo, hi, frac


def bilinear_resize(grid: FeatureGrid, spec: InterpSpec) -> FeatureGrid:
    """Resize a token grid; each output token blends its <=4 source neighbors.

    Downsampling never extrapolates, so fields affine in (row, col) are
    reproduced exactly at the output token centers; constants are exact in
    both directions.
    """
    if spec.out_rows == grid.rows and spec.out_cols == grid.cols:
        return grid
    r_lo, r_hi, r_frac = _axis_weights(grid.rows, spec.out_rows)
    c_lo, c_hi, c_frac = _axis_weights(grid.cols, spec.out_cols)
    v = grid.values
    rows = v[r_lo] * (1.0 - r_frac)[:, None, None] + v[r_hi] * r_frac[:, None, None]
    out = (
        rows[:, c_lo] * (1.0 - c_frac)[None, :, None]
        + rows[:, c_hi] * c_frac[None, :, None]
    )
    return FeatureGrid(rows=spec.out_rows, cols=spec.out_cols, dim=grid.dim, values=out)


def _kept_window(n_bands: int, canvas_px: int, lo_px: int, len_px: int) -> tuple[int, int]:
    """First band and band count kept along one axis.

    The kept count is the content extent measured in bands, rounded up
    (fractional coverage on the two boundary bands counts once). The window is
    placed to maximize covered content, lower start on ties.
    """
    if len_px <= 0:
        raise EmptyContentError("content rectangle is empty")
    band = Fraction(canvas_px, n_bands)
    count = min(n_bands, -(-(n_bands * len_px) // canvas_px))  # ceil
    lo = Fraction(lo_px)
    hi = Fraction(lo_px + len_px)

    def overlap(i: int) -> Fraction:
        b_lo, b_hi = band * i, band * (i + 1)
        return max(Fraction(0), min(hi, b_hi) - max(lo, b_lo))

    best_start, best_cover = 0, Fraction(-1)
    for start in range(n_bands - count + 1):
        cover = sum(overlap(i) for i in range(start, start + count))
        if cover > best_cover:
            best_start, best_cover = start, cover
    return best_start, count


def kept_token_counts(pad: PadSpec, grid_side: int) -> tuple[int, int]:
    """(rows, cols) kept after stripping padding bands from a grid_side^2 grid."""
    rect = pad.content_rect
    _, rows = _kept_window(grid_side, pad.canvas_edge_px, rect.y, rect.h)
    _, cols = _kept_window(grid_side, pad.canvas_edge_px, rect.x, rect.w)
    return rows, cols


def strip_padding(grid: FeatureGrid, pad: PadSpec, patch_px: float | None = None) -> FeatureGrid:
    """Drop token rows/columns that encode only zero-padding.

    ``patch_px`` is informational (it always equals canvas_edge / grid side
    and is derived exactly when omitted). The output stays rectangular.
    """
    rect = pad.content_rect
    if rect.w <= 0 or rect.h <= 0:
        raise EmptyContentError("content rectangle is empty")
    if patch_px is not None:
        expect_r = pad.canvas_edge_px / grid.rows
        expect_c = pad.canvas_edge_px / grid.cols
        if abs(patch_px - expect_r) > 0.5 and abs(patch_px - expect_c) > 0.5:
            raise InvalidConfigError(
                f"patch_px={patch_px} inconsistent with canvas {pad.canvas_edge_px} "
                f"over a {grid.rows}x{grid.cols} grid"
            )
    r0, n_rows = _kept_window(grid.rows, pad.canvas_edge_px, rect.y, rect.h)
    c0, n_cols = _kept_window(grid.cols, pad.canvas_edge_px, rect.x, rect.w)
    out = grid.values[r0 : r0 + n_rows, c0 : c0 + n_cols, :]
    return FeatureGrid(rows=n_rows, cols=n_cols, dim=grid.dim, values=out)


MockSource = Union[CropPlan, PadSpec, int]


def _source_tag(source: MockSource) -> str:
    if isinstance(source, CropPlan):
        return (
            f"crop:{source.config.a}x{source.config.b}:"
            f"{source.resized_w_px}x{source.resized_h_px}"
        )
    if isinstance(source, PadSpec):
        r = source.content_rect
        return f"pad:{source.canvas_edge_px}:{r.x},{r.y},{r.w},{r.h}"
    return f"frame:{int(source)}"


def mock_encode(source: MockSource, dim: int = 2, grid_side: int = 27) -> FeatureGrid:
    """Deterministic stand-in for a vision encoder.

    Channels 0 and 1 hold the normalized token-center coordinates
    ((r + 0.5) / rows, (c + 0.5) / cols); any further channels hold a constant
    derived from the source description, so distinct inputs can be told apart
    while equal inputs encode identically.
    """
    if dim < 2:
        raise InvalidConfigError(f"mock encoder needs dim >= 2, got {dim}")
    n = grid_side
    out = np.zeros((n, n, dim), dtype=np.float64)
    centers = (np.arange(n, dtype=np.float64) + 0.5) / n
    out[:, :, 0] = centers[:, None]
    out[:, :, 1] = centers[None, :]
    if dim > 2:
        seed = zlib.crc32(_source_tag(source).encode("utf-8"))
        for k in range(2, dim):
            out[:, :, k] = ((seed + k) % 1000) / 1000.0
    return FeatureGrid(rows=n, cols=n, dim=dim, values=out)


# Binary layout: three little-endian uint32 (rows, cols, dim) then
# rows*cols*dim little-endian float32 in row-major order.
_GRID_HEADER = struct.Struct("<III")


def write_grid(grid: FeatureGrid, fp: BinaryIO) -> None:
    fp.write(_GRID_HEADER.pack(grid.rows, grid.cols, grid.dim))
    fp.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes())


def read_grid(fp: BinaryIO) -> FeatureGrid:
    header = fp.read(_GRID_HEADER.size)
    if len(header) != _GRID_HEADER.size:
        raise InvalidConfigError("truncated feature-grid header")
    rows, cols, dim = _GRID_HEADER.unpack(header)
    payload = fp.read(rows * cols * dim * 4)
    if len(payload) != rows * cols * dim * 4:
        raise InvalidConfigError("truncated feature-grid payload")
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(rows, cols, dim)
    return FeatureGrid(rows=rows, cols=cols, dim=dim, values=arr)
