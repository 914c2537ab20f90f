"""Typed errors with stable codes.

Every error raised by the library carries a short machine-readable code so
that out-of-process callers (the CLI, foreign-language bindings) can match on
it without parsing prose.
"""

from __future__ import annotations


class PrepError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "E_PREP"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class InvalidShapeError(PrepError):
    code = "E_INVALID_SHAPE"


class InvalidConfigError(PrepError):
    code = "E_INVALID_CONFIG"


class ThresholdTooSmallError(PrepError):
    code = "E_TAU_TOO_SMALL"


class TooManyViewsError(PrepError):
    code = "E_TOO_MANY_VIEWS"


class EmptyContentError(PrepError):
    code = "E_EMPTY_CONTENT"


class MarkerInTextError(PrepError):
    code = "E_MARKER_IN_TEXT"


class TokenizerError(PrepError):
    code = "E_TOKENIZER"


class PlanMismatchError(PrepError):
    code = "E_PLAN_MISMATCH"


class ConversationError(PrepError):
    code = "E_CONVERSATION"


class MixtureSchemaError(PrepError):
    code = "E_SCHEMA"


class UnknownCategoryError(PrepError):
    code = "E_UNKNOWN_CATEGORY"


class DanglingPromptError(PrepError):
    code = "E_DANGLING_PROMPT"


class SampleSizeError(PrepError):
    code = "E_SAMPLE_TOO_LARGE"


class UnresolvedDatasetError(PrepError):
    code = "E_UNRESOLVED_DATASET"


class InvalidPlanError(PrepError):
    code = "E_INVALID_PLAN"


class ManifestFormatError(PrepError):
    code = "E_MANIFEST_FORMAT"
