/**
 * Differential parity: every fixture in the shared corpus must come back
 * from the bindings field-for-field equal to the golden output the backing
 * library produced in-process. Exceptions must carry the documented codes.
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  BindingError,
  PlanInput,
  SampleRecord,
  applyPrompt,
  bindPack,
  bindPlan,
} from "../src/index.js";


const here = dirname(fileURLToPath(import.meta.url));

interface PlanFixture {
  kind: "plan";
  input: PlanInput;
  golden: Record<string, unknown>;
}

interface PackFixture {
  kind: "pack";
  record: SampleRecord;
  golden: {
    id: string;
    tokenIds: number[];
    lossMask: number[];
    spans: Array<{ kind: string; start: number; end: number }>;
  };
}

type Fixture = PlanFixture | PackFixture;

const corpus: Fixture[] = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "corpus.json"), "utf-8"),
);

const planFixtures = corpus.filter((f): f is PlanFixture => f.kind === "plan");
const packFixtures = corpus.filter((f): f is PackFixture => f.kind === "pack");

describe("binding parity over the shared corpus", () => {
  it("ships the full 50-fixture corpus", () => {
    expect(corpus.length).toBe(50);
    expect(planFixtures.length).toBe(30);
    expect(packFixtures.length).toBe(20);
  });

  it.each(planFixtures.map((f, i) => [i, f] as const))(
    "plan fixture %i matches golden",
    (_i, fixture) => {
      const got = bindPlan(fixture.input);
      expect(got).toStrictEqual(fixture.golden);
    },
  );

  it.each(packFixtures.map((f, i) => [i, f] as const))(
    "pack fixture %i matches golden",
    (_i, fixture) => {
      const got = bindPack(fixture.record);
      expect(got.id).toBe(fixture.golden.id);
      expect(got.tokenIds).toStrictEqual(fixture.golden.tokenIds);
      expect(got.lossMask).toStrictEqual(fixture.golden.lossMask);
      expect(got.spans).toStrictEqual(fixture.golden.spans);
    },
  );
});

describe("documented error codes", () => {
  it("invalid shape surfaces E_INVALID_SHAPE", () => {
    expect.assertions(2);
    try {
      bindPlan({ width: 0, height: 5 });
    } catch (err) {
      expect(err).toBeInstanceOf(BindingError);
      expect((err as BindingError).code).toBe("E_INVALID_SHAPE");
    }
  });

  it("marker/plan mismatch surfaces E_PLAN_MISMATCH", () => {
    expect.assertions(2);
    const record: SampleRecord = {
      id: "mismatch",
      images: [],
      conversations: [
        { from: "human", value: "stray <image> marker" },
        { from: "gpt", value: "reply" },
      ],
    };
    try {
      bindPack(record);
    } catch (err) {
      expect(err).toBeInstanceOf(BindingError);
      expect((err as BindingError).code).toBe("E_PLAN_MISMATCH");
    }
  });

  it("malformed record surfaces E_CONVERSATION", () => {
    expect.assertions(2);
    const record = { id: "broken" } as unknown as SampleRecord;
    try {
      bindPack(record);
    } catch (err) {
      expect(err).toBeInstanceOf(BindingError);
      expect((err as BindingError).code).toBe("E_CONVERSATION");
    }
  });
});

describe("facade completeness", () => {
  const manifest = join(
    here,
    "..",
    "..",
    "src",
    "ovprep",
    "data",
    "single_image_3p2m.yaml",
  );

  it("empty conversation packs to empty arrays", () => {
    const got = bindPack({ id: "empty", conversations: [] });
    expect(got.tokenIds).toStrictEqual([]);
    expect(got.lossMask).toStrictEqual([]);
    expect(got.spans).toStrictEqual([]);
  });

  it("tails the single-word prompt onto the instruction", () => {
    const out = applyPrompt(manifest, 1, "What color is the ball?", 3);
    expect(out).toBe(
      "What color is the ball?\nAnswer the question with a single word (or phrase).",
    );
  });

  it("same seed picks the same variant", () => {
    const a = applyPrompt(manifest, 11, "ignored", 42);
    const b = applyPrompt(manifest, 11, "ignored", 42);
    expect(a).toBe(b);
  });
});
