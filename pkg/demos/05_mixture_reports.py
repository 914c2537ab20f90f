# Inspect the shipped dataset mixtures: distributions, sampling, duplicates.
import random

from ovprep.datamix import (
    apply_prompt,
    dedupe_scan,
    distribution,
    load_shipped,
    sample_subset,
)
from ovprep.sequence_builder import RawSample, RawTurn, Role

single = load_shipped("single_image_3p2m")
onevision = load_shipped("onevision_1p6m")

for spec in (single, onevision):
    report = distribution(spec)
    print(f"{report.name}: {report.total:,} samples")
    for row in report.rows():
        print(f"  {row['category']:<18} {row['count']:>9,}  {row['percent']:>5.1f}%")
    print()

subset = sample_subset(single, 800_000, "proportional", seed=7)
print("800K proportional subset keeps the shares:")
for row in distribution(subset).rows():
    print(f"  {row['category']:<18} {row['count']:>9,}  {row['percent']:>5.1f}%")

print("\ndatasets appearing in both mixtures:")
for name, sources in dedupe_scan([single, onevision])[:6]:
    print(f"  {name} <- {', '.join(sources)}")

prompt = single.prompt(1)
sample = RawSample(
    sample_id="demo",
    images=(),
    video=None,
    turns=(RawTurn(role=Role.USER, text="What color is the ball?"),),
)
formatted = apply_prompt(sample, prompt, random.Random(7))
print("\nformatting prompt 1 applied:")
print(" ", formatted.turns[0].text.replace("\n", " / "))
