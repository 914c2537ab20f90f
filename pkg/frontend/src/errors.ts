/** Stable error codes shared with the backing command-line pipeline. */
export const ERROR_CODES = [
  "E_INVALID_SHAPE",
  "E_INVALID_CONFIG",
  "E_TAU_TOO_SMALL",
  "E_TOO_MANY_VIEWS",
  "E_EMPTY_CONTENT",
  "E_MARKER_IN_TEXT",
  "E_TOKENIZER",
  "E_PLAN_MISMATCH",
  "E_CONVERSATION",
  "E_SCHEMA",
  "E_UNKNOWN_CATEGORY",
  "E_DANGLING_PROMPT",
  "E_SAMPLE_TOO_LARGE",
  "E_UNRESOLVED_DATASET",
  "E_INVALID_PLAN",
  "E_MANIFEST_FORMAT",
  "E_USAGE",
  "E_SUBPROCESS",
] as const;

export type ErrorCode = (typeof ERROR_CODES)[number];

export class BindingError extends Error {
  readonly code: ErrorCode;

  constructor(code: ErrorCode, message: string) {
    super(`${code}: ${message}`);
    this.name = "BindingError";
    this.code = code;
  }
}

const STDERR_PATTERN = /error\[(E_[A-Z_]+)\]:\s*(.*)/;

/** Map a CLI stderr line to a typed error; unknown shapes become E_SUBPROCESS. */
export function errorFromStderr(stderr: string): BindingError {
  const match = STDERR_PATTERN.exec(stderr);
  if (match && (ERROR_CODES as readonly string[]).includes(match[1])) {
    return new BindingError(match[1] as ErrorCode, match[2].trim());
  }
  return new BindingError("E_SUBPROCESS", stderr.trim() || "pipeline invocation failed");
}
