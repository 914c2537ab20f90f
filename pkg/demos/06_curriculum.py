# Validate the shipped training curriculum and bound its token volume.
from dataclasses import replace

from ovprep import datamix
from ovprep.curriculum import (
    TrainingPlan,
    shipped_plan,
    token_cost_estimate,
    validate_plan,
)

plan = shipped_plan("7b")
print(f"profile {plan.profile}:")
for stage in plan.stages:
    grids = ", ".join(f"{c.a}x{c.b}" for c in stage.catalog.configs)
    print(
        f"  {stage.name:<20} ceiling {stage.max_visual_tokens:>5}  "
        f"batch {stage.batch_size:>3}  lr(vision/llm) {stage.lr_vision:g}/{stage.lr_proj_llm:g}"
    )
    print(f"    grids: {grids}")
print("violations:", validate_plan(plan) or "none")

manifests = {
    name: datamix.load_shipped(name)
    for name in (
        "lcs_558k",
        "high_quality_knowledge_4m",
        "single_image_3p2m",
        "onevision_1p6m",
    )
}
print("\nupper-bound visual-token volume per stage:")
for name, tokens in token_cost_estimate(plan, manifests).items():
    print(f"  {name:<20} {tokens:>16,}")

broken = TrainingPlan(
    plan.profile,
    (replace(plan.stages[0], trainable=frozenset({"projector", "vision", "llm"})),)
    + plan.stages[1:],
)
print("\ninjecting a stage-one trainable-module defect:")
for violation in validate_plan(broken):
    print(f"  [{violation.code}] {violation.stage}: {violation.message}")
