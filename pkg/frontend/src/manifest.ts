import { BindingError } from "./errors.js";

/** Typed position range inside a packed sequence; end is exclusive. */
export interface SpanRecord {
  kind: "system" | "instruction" | "answer" | "vision";
  start: number;
  end: number;
}

export interface PackedRecord {
  id: string;
  tokenIds: number[];
  lossMask: number[]; // 0/1 per position
  spans: SpanRecord[];
}

const MAGIC = "OVPK";
const SPAN_KINDS: SpanRecord["kind"][] = ["system", "instruction", "answer", "vision"];

/**
 * Parse the binary packed-manifest container: magic "OVPK", u32 version,
 * u32 record count, then per record a length-prefixed id, i32 token ids,
 * an LSB-first bit-packed loss mask, and a span table. Little-endian
 * throughout.
 */
export function parseManifest(buffer: Buffer): PackedRecord[] {
  let offset = 0;
  const need = (n: number) => {
    if (offset + n > buffer.length) {
      throw new BindingError("E_MANIFEST_FORMAT", "truncated packed manifest");
    }
  };
  need(4);
  if (buffer.toString("ascii", 0, 4) !== MAGIC) {
    throw new BindingError("E_MANIFEST_FORMAT", "bad magic");
  }
  offset = 4;
  need(8);
  const version = buffer.readUInt32LE(offset);
  const count = buffer.readUInt32LE(offset + 4);
  offset += 8;
  if (version !== 1) {
    throw new BindingError("E_MANIFEST_FORMAT", `unsupported version ${version}`);
  }
  const records: PackedRecord[] = [];
  for (let r = 0; r < count; r++) {
    need(2);
    const idLen = buffer.readUInt16LE(offset);
    offset += 2;
    need(idLen);
    const id = buffer.toString("utf-8", offset, offset + idLen);
    offset += idLen;
    need(4);
    const nTokens = buffer.readUInt32LE(offset);
    offset += 4;
    need(4 * nTokens);
    const tokenIds = new Array<number>(nTokens);
    for (let i = 0; i < nTokens; i++) {
      tokenIds[i] = buffer.readInt32LE(offset + 4 * i);
    }
    offset += 4 * nTokens;
    const maskBytes = Math.ceil(nTokens / 8);
    need(maskBytes);
    const lossMask = new Array<number>(nTokens);
    for (let i = 0; i < nTokens; i++) {
      lossMask[i] = (buffer[offset + (i >> 3)] >> (i & 7)) & 1;
    }
    offset += maskBytes;
    need(4);
    const nSpans = buffer.readUInt32LE(offset);
    offset += 4;
    const spans: SpanRecord[] = [];
    for (let s = 0; s < nSpans; s++) {
      need(9);
      const kindCode = buffer.readUInt8(offset);
      const start = buffer.readUInt32LE(offset + 1);
      const end = buffer.readUInt32LE(offset + 5);
      offset += 9;
      const kind = SPAN_KINDS[kindCode];
      if (!kind) {
        throw new BindingError("E_MANIFEST_FORMAT", `unknown span kind ${kindCode}`);
      }
      spans.push({ kind, start, end });
    }
    records.push({ id, tokenIds, lossMask, spans });
  }
  return records;
}
