import { spawnSync } from "node:child_process";

import { BindingError, errorFromStderr } from "./errors.js";

/**
 * The bindings are a pure facade: every number is produced by the backing
 * pipeline, reached through its command-line interface. The interpreter and
 * entry module are overridable for non-standard environments.
 */
export interface RunnerOptions {
  python?: string; // default: OVPREP_PYTHON env or "python3"
}

export function runCli(args: string[], options: RunnerOptions = {}): string {
  const python = options.python ?? process.env.OVPREP_PYTHON ?? "python3";
  const result = spawnSync(python, ["-m", "ovprep.cli", ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new BindingError("E_SUBPROCESS", String(result.error));
  }
  if (result.status !== 0) {
    throw errorFromStderr(result.stderr ?? "");
  }
  return result.stdout ?? "";
}

export function runCliJson(args: string[], options: RunnerOptions = {}): unknown {
  return JSON.parse(runCli(args, options));
}
