# How images of assorted sizes map onto the crop grid.
from ovprep.geometry import GridCatalog, ImageShape, plan_crops, select_config

catalog = GridCatalog.square(6)

samples = [
    (384, 384),    # exactly one encoder tile
    (768, 768),    # 2x2
    (1000, 400),   # wide: 3x2
    (640, 1920),   # tall: 2x5
    (2304, 2304),  # the largest covered square: 6x6
    (9000, 500),   # wider than any canvas: best-effort fit
]

for w, h in samples:
    shape = ImageShape(w, h)
    cfg = select_config(shape, catalog)
    plan = plan_crops(shape, cfg, catalog.base_edge_px)
    print(
        f"{w:>5}x{h:<5} -> grid {cfg.a}x{cfg.b} "
        f"({cfg.crop_count} crops + base view), "
        f"canvas {plan.canvas_w_px}x{plan.canvas_h_px}, "
        f"content {plan.resized_w_px}x{plan.resized_h_px} "
        f"at ({plan.offset_x_px},{plan.offset_y_px})"
    )

print()
print("crop rectangles for 1000x400 (row-major):")
plan = plan_crops(ImageShape(1000, 400), select_config(ImageShape(1000, 400)))
for rect in plan.crop_rects:
    print(f"  x={rect.x:>4} y={rect.y:>4} {rect.w}x{rect.h}")
