import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BindingError } from "./errors.js";
import { PackedRecord, parseManifest } from "./manifest.js";
import { RunnerOptions, runCli, runCliJson } from "./runner.js";

export { BindingError, ERROR_CODES, ErrorCode } from "./errors.js";
export { PackedRecord, SpanRecord, parseManifest } from "./manifest.js";

export interface SingleImageInput {
  width: number;
  height: number;
}

export interface VideoInput {
  frames: number;
}

export interface MultiImageInput {
  images: SingleImageInput[];
}

export type PlanInput = SingleImageInput | VideoInput | MultiImageInput;

export interface PlanOverrides {
  tau?: number;
  maxFrames?: number;
  maxImages?: number;
}

export interface TokenPlan {
  per_view_tokens: number[];
  total: number;
}

/** Plan manifest as emitted by the pipeline; mirrors its JSON field-for-field. */
export type BoundPlan = Record<string, unknown> & { token_plan: TokenPlan };

/** Conversation record in the training JSONL layout. */
export interface SampleRecord {
  id?: string;
  images?: Array<string | { path?: string; width?: number; height?: number }>;
  video?: string | { path?: string; frames?: number };
  conversations: Array<{ from: string; value: string }>;
}

function planArgs(input: PlanInput, overrides: PlanOverrides): string[] {
  const args = ["plan"];
  if ("frames" in input) {
    args.push("--video-frames", String(input.frames));
  } else if ("images" in input) {
    args.push("--multi-image", ...input.images.map((im) => `${im.width}x${im.height}`));
  } else {
    args.push("--width", String(input.width), "--height", String(input.height));
  }
  if (overrides.tau !== undefined) args.push("--tau", String(overrides.tau));
  if (overrides.maxFrames !== undefined) args.push("--max-frames", String(overrides.maxFrames));
  if (overrides.maxImages !== undefined) args.push("--max-images", String(overrides.maxImages));
  return args;
}

/**
 * Crop/token plan for one media descriptor. Numbers are identical to the
 * command-line `plan` output for the same input: the bindings only marshal.
 */
export function bindPlan(
  input: PlanInput,
  overrides: PlanOverrides = {},
  options: RunnerOptions = {},
): BoundPlan {
  return runCliJson(planArgs(input, overrides), options) as BoundPlan;
}

/**
 * Pack one conversation record; byte-equivalent to running `pack` on a
 * one-record file. A marker/media mismatch (the record would need a
 * different number of token plans than it has attachments) surfaces as
 * E_PLAN_MISMATCH; malformed records surface as E_CONVERSATION.
 */
export function bindPack(
  record: SampleRecord,
  options: RunnerOptions = {},
): PackedRecord {
  const dir = mkdtempSync(join(tmpdir(), "ovprep-bind-"));
  try {
    const src = join(dir, "one.jsonl");
    const out = join(dir, "one.bin");
    const summaryPath = join(dir, "summary.json");
    writeFileSync(src, JSON.stringify(record) + "\n", "utf-8");
    runCli(["pack", src, "--out", out, "--summary", summaryPath], options);
    const summary = JSON.parse(readFileSync(summaryPath, "utf-8")) as {
      flagged: Array<{ id: string; reason: string }>;
      malformed: string[];
    };
    if (summary.flagged.length > 0) {
      throw new BindingError("E_PLAN_MISMATCH", summary.flagged[0].reason);
    }
    if (summary.malformed.length > 0) {
      throw new BindingError("E_CONVERSATION", summary.malformed[0]);
    }
    const records = parseManifest(readFileSync(out));
    if (records.length !== 1) {
      throw new BindingError("E_MANIFEST_FORMAT", `expected 1 record, got ${records.length}`);
    }
    return records[0];
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Apply a formatting prompt from a mixture manifest's prompt table to an
 * instruction; deterministic under the seed.
 */
export function applyPrompt(
  manifestPath: string,
  promptId: number,
  instruction: string,
  seed = 0,
  options: RunnerOptions = {},
): string {
  const payload = runCliJson(
    [
      "mix",
      manifestPath,
      "--apply-prompt",
      String(promptId),
      "--instruction",
      instruction,
      "--seed",
      String(seed),
    ],
    options,
  ) as { instruction: string };
  return payload.instruction;
}
