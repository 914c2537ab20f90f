# Bilinear token-grid resampling and padding-token removal.
import numpy as np

from ovprep.feature_resample import (
    InterpSpec,
    bilinear_resize,
    mock_encode,
    strip_padding,
)
from ovprep.geometry import ImageShape, pad_to_square

# The mock encoder stores normalized token-center coordinates, so resampling
# effects are directly visible in the values.
grid = mock_encode(0, dim=2)
print("27x27 grid, channel 0 (row coordinate) corners:")
print(np.round(grid.values[[0, -1]][:, [0, -1], 0], 4))

half = bilinear_resize(grid, InterpSpec(14, 14))
print(f"\nresized to 14x14 -> {half.token_count} tokens per frame")
print("row-coordinate channel stays affine, first column:")
print(np.round(half.values[:, 0, 0], 4))

print("\npadding removal for a 768x384 (2:1) image:")
pad = pad_to_square(ImageShape(768, 384))
print("  content rect:", pad.content_rect)
stripped = strip_padding(grid, pad)
print(f"  kept grid: {stripped.rows} rows x {stripped.cols} cols = {stripped.token_count} tokens")

print("\npadding removal for a 100x400 (1:4) image:")
pad = pad_to_square(ImageShape(100, 400))
stripped = strip_padding(grid, pad)
print(f"  kept grid: {stripped.rows} rows x {stripped.cols} cols = {stripped.token_count} tokens")
