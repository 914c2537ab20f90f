"""Binary container for packed-sequence records.

Layout (all integers little-endian)::

    magic    4 bytes  b"OVPK"
    version  u32      currently 1
    count    u32      number of records
    record:
      id_len   u16, then id_len bytes of UTF-8 sample id
      n_tokens u32, then n_tokens * i32 token ids (vision positions = -200)
      mask     ceil(n_tokens / 8) bytes, bit i of byte k = position 8k + i
      n_spans  u32, then per span: u8 kind, u32 start, u32 end (end exclusive)

Span kind codes: 0 system, 1 instruction, 2 answer, 3 vision.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

from .errors import ManifestFormatError
from .sequence_builder import PackedSequence, Span, SpanKind

MAGIC = b"OVPK"
VERSION = 1

_KIND_CODE = {
    SpanKind.SYSTEM: 0,
    SpanKind.INSTRUCTION: 1,
    SpanKind.ANSWER: 2,
    SpanKind.VISION: 3,
}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def _pack_mask(mask: tuple[bool, ...]) -> bytes:
    out = bytearray((len(mask) + 7) // 8)
    for i, bit in enumerate(mask):
        if bit:
            out[i >> 3] |= 1 << (i & 7)
    return bytes(out)


def _unpack_mask(data: bytes, n: int) -> tuple[bool, ...]:
    return tuple(bool(data[i >> 3] >> (i & 7) & 1) for i in range(n))


def encode_record(sample_id: str, seq: PackedSequence) -> bytes:
    id_bytes = sample_id.encode("utf-8")
    parts = [
        struct.pack("<H", len(id_bytes)),
        id_bytes,
        struct.pack("<I", len(seq.token_ids)),
        struct.pack(f"<{len(seq.token_ids)}i", *seq.token_ids) if seq.token_ids else b"",
        _pack_mask(seq.loss_mask),
        struct.pack("<I", len(seq.spans)),
    ]
    for span in seq.spans:
        parts.append(struct.pack("<BII", _KIND_CODE[span.kind], span.start, span.end))
    return b"".join(parts)


def write_manifest(records: list[tuple[str, PackedSequence]], fp: BinaryIO) -> None:
    fp.write(MAGIC)
    fp.write(struct.pack("<II", VERSION, len(records)))
    for sample_id, seq in records:
        fp.write(encode_record(sample_id, seq))


def read_manifest(fp: BinaryIO) -> list[tuple[str, PackedSequence]]:
    def take(n: int) -> bytes:
        data = fp.read(n)
        if len(data) != n:
            raise ManifestFormatError("truncated packed manifest")
        return data

    if take(4) != MAGIC:
        raise ManifestFormatError("not a packed manifest (bad magic)")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise ManifestFormatError(f"unsupported manifest version {version}")
    records: list[tuple[str, PackedSequence]] = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2))
        sample_id = take(id_len).decode("utf-8")
        (n_tok,) = struct.unpack("<I", take(4))
        tokens = struct.unpack(f"<{n_tok}i", take(4 * n_tok)) if n_tok else ()
        mask = _unpack_mask(take((n_tok + 7) // 8), n_tok)
        (n_spans,) = struct.unpack("<I", take(4))
        spans = []
        for _ in range(n_spans):
            kind, start, end = struct.unpack("<BII", take(9))
            if kind not in _CODE_KIND:
                raise ManifestFormatError(f"unknown span kind code {kind}")
            spans.append(Span(kind=_CODE_KIND[kind], start=start, end=end))
        records.append(
            (sample_id, PackedSequence(token_ids=tokens, loss_mask=mask, spans=tuple(spans)))
        )
    return records
