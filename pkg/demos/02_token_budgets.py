# Per-scenario visual token budgets and the threshold reduction curve.
from ovprep.geometry import ImageShape, SpatialConfig
from ovprep.token_budget import (
    Scenario,
    plan_multi_image,
    plan_single_image,
    plan_video,
    scenario_maxima,
    tokens_after_threshold,
)

print("tokens per view as the grid grows (tau = 7290):")
for side in range(1, 7):
    cfg = SpatialConfig(side, side)
    views = cfg.crop_count + 1
    per_view = tokens_after_threshold(cfg, 729, 7290)
    print(
        f"  {side}x{side}: {views:>2} views, raw {views * 729:>5}, "
        f"kept {per_view}/view -> total {views * per_view}"
    )

print()
print("single-image plans:")
for w, h in [(384, 384), (768, 768), (2304, 2304)]:
    plan = plan_single_image(ImageShape(w, h))
    print(f"  {w}x{h}: {len(plan.per_view_tokens)} views x {plan.per_view_tokens[0]} = {plan.total}")

print()
print("multi-image: 12 square images ->", plan_multi_image(12, [729] * 12).total)
print("video: 32 frames ->", plan_video(32).total, "| 100 frames (clamped) ->", plan_video(100).total)

print()
maxima = scenario_maxima()
print("scenario maxima:", {s.value: v for s, v in maxima.items()})
print("max/min ratio: %.3f" % (max(maxima.values()) / min(maxima.values())))
