# From a JSONL conversation record to a supervised token stream.
import json

from ovprep.packing import pack_sample
from ovprep.sequence_builder import (
    ByteTokenizer,
    parse_jsonl_line,
    render_template,
    sanitize_markers,
    to_conversation,
)

record = {
    "id": "demo",
    "images": [{"path": "scene.jpg", "width": 768, "height": 768}],
    "conversations": [
        {"from": "human", "value": "<image>\nWhat stands out here?"},
        {"from": "gpt", "value": "A red lighthouse."},
        {"from": "human", "value": "Anything else?"},
        {"from": "gpt", "value": "Gulls on the rocks."},
    ],
}

sample = parse_jsonl_line(json.dumps(record))
print("marker check:", sanitize_markers(sample))

conv = to_conversation(sample)
print("\nrendered template:")
print(render_template(conv))

packed = pack_sample(sample)
n_vision = sum(1 for t in packed.token_ids if t == -200)
print(f"tokens: {len(packed.token_ids)} total, {n_vision} vision positions")
print(f"supervised positions: {sum(packed.loss_mask)}")
print("spans:")
for span in packed.spans:
    print(f"  {span.kind.value:<12} [{span.start:>5}, {span.end:>5})")

tok = ByteTokenizer()
supervised = bytes(
    t for t, m in zip(packed.token_ids, packed.loss_mask) if m and 0 <= t < 256
)
print("\nsupervised text:", supervised.decode("utf-8"))
