"""Chat-template rendering, placeholder tokenization, and loss masking.

Conversations render in the ChatML layout::

    <|im_start|>role
    content<|im_end|>

with one ``<image>`` marker per image reference at its position in the turn
(video references contribute a single marker at the head of the turn). After
tokenization each marker becomes one -200 sentinel; expansion replaces the
i-th sentinel with the i-th token plan's worth of vision positions. The loss
mask is true exactly on assistant answer spans (by default including the
assistant's end-of-turn marker, so the model learns to stop).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Union

from .errors import (
    ConversationError,
    MarkerInTextError,
    PlanMismatchError,
    TokenizerError,
)
from .token_budget import TokenPlan

VISION_SENTINEL = -200
IMAGE_MARKER = "<image>"


class Role(enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


_ROLE_ALIASES = {
    "system": Role.SYSTEM,
    "human": Role.USER,
    "user": Role.USER,
    "gpt": Role.ASSISTANT,
    "assistant": Role.ASSISTANT,
}


@dataclass(frozen=True)
class TextSegment:
    text: str


@dataclass(frozen=True)
class ImageRef:
    media_index: int


@dataclass(frozen=True)
class VideoRef:
    media_index: int


Segment = Union[TextSegment, ImageRef, VideoRef]


@dataclass(frozen=True)
class MediaDescriptor:
    """What a marker points at; dimensions/frame counts drive token planning."""

    kind: str  # "image" | "video"
    path: str | None = None
    width_px: int | None = None
    height_px: int | None = None
    frames: int | None = None


@dataclass(frozen=True)
class Turn:
    role: Role
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class Conversation:
    turns: tuple[Turn, ...]
    media: tuple[MediaDescriptor, ...] = ()

    def __post_init__(self) -> None:
        expected = Role.USER
        for i, turn in enumerate(self.turns):
            if turn.role is Role.SYSTEM:
                if i != 0:
                    raise ConversationError("system turn only allowed at the start")
                continue
            if turn.role is not expected:
                raise ConversationError(
                    f"turn {i} has role {turn.role.value}, expected {expected.value}"
                )
            expected = Role.ASSISTANT if expected is Role.USER else Role.USER
        for turn in self.turns:
            for seg in turn.segments:
                if isinstance(seg, (ImageRef, VideoRef)):
                    if not 0 <= seg.media_index < len(self.media):
                        raise ConversationError(
                            f"media index {seg.media_index} has no attached descriptor"
                        )
                    kind = self.media[seg.media_index].kind
                    want = "video" if isinstance(seg, VideoRef) else "image"
                    if kind != want:
                        raise ConversationError(
                            f"media index {seg.media_index} is {kind}, referenced as {want}"
                        )


@dataclass(frozen=True)
class TemplateSpec:
    """Markers and separators of the rendered layout."""

    begin_marker: str = "<|im_start|>"
    end_marker: str = "<|im_end|>"
    role_names: dict[Role, str] = field(
        default_factory=lambda: {
            Role.SYSTEM: "system",
            Role.USER: "user",
            Role.ASSISTANT: "assistant",
        }
    )
    header_sep: str = "\n"
    turn_sep: str = "\n"
    image_marker: str = IMAGE_MARKER

    @classmethod
    def chatml(cls) -> "TemplateSpec":
        return cls()


class SpanKind(enum.Enum):
    SYSTEM = "system"
    INSTRUCTION = "instruction"
    ANSWER = "answer"
    VISION = "vision"


@dataclass(frozen=True)
class Span:
    kind: SpanKind
    start: int
    end: int  # exclusive
    media_index: int | None = None


@dataclass(frozen=True)
class PackedSequence:
    """Token stream plus supervision mask and typed position ranges."""

    token_ids: tuple[int, ...]
    loss_mask: tuple[bool, ...]
    spans: tuple[Span, ...]

    def __post_init__(self) -> None:
        if len(self.token_ids) != len(self.loss_mask):
            raise ConversationError("loss mask and token ids must have equal length")
        in_answer = [False] * len(self.token_ids)
        for span in self.spans:
            if not 0 <= span.start <= span.end <= len(self.token_ids):
                raise ConversationError(f"span {span} out of range")
            if span.kind is SpanKind.ANSWER:
                for i in range(span.start, span.end):
                    in_answer[i] = True
        for i, masked in enumerate(self.loss_mask):
            if masked != in_answer[i]:
                raise ConversationError(
                    f"loss mask at position {i} disagrees with answer spans"
                )

    def vision_spans(self) -> tuple[Span, ...]:
        return tuple(s for s in self.spans if s.kind is SpanKind.VISION)


class Tokenizer(Protocol):
    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: Iterable[int]) -> str: ...


class ByteTokenizer:
    """Reference tokenizer mapping UTF-8 bytes to ids 0..255; keeps goldens stable."""

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: Iterable[int]) -> str:
        return bytes(ids).decode("utf-8")


def _ordered_segments(turn: Turn) -> tuple[Segment, ...]:
    # Video markers render at the head of the turn; everything else in order.
    videos = tuple(s for s in turn.segments if isinstance(s, VideoRef))
    rest = tuple(s for s in turn.segments if not isinstance(s, VideoRef))
    return videos + rest


def _check_text(text: str, tmpl: TemplateSpec) -> str:
    for marker in (tmpl.image_marker, tmpl.begin_marker, tmpl.end_marker):
        if marker in text:
            raise MarkerInTextError(f"text segment contains reserved marker {marker!r}")
    return text


def render_template(conv: Conversation, tmpl: TemplateSpec | None = None) -> str:
    """Render a conversation to template text with media markers in place."""
    tmpl = tmpl or TemplateSpec.chatml()
    parts: list[str] = []
    for turn in conv.turns:
        parts.append(tmpl.begin_marker + tmpl.role_names[turn.role] + tmpl.header_sep)
        for seg in _ordered_segments(turn):
            if isinstance(seg, TextSegment):
                parts.append(_check_text(seg.text, tmpl))
            else:
                parts.append(tmpl.image_marker)
        parts.append(tmpl.end_marker + tmpl.turn_sep)
    return "".join(parts)


@dataclass(frozen=True)
class ScannedTurn:
    role_name: str
    content: str


def scan_template(text: str, tmpl: TemplateSpec | None = None) -> tuple[ScannedTurn, ...]:
    """Recover (role, content) turns from rendered text; inverse of rendering."""
    tmpl = tmpl or TemplateSpec.chatml()
    turns: list[ScannedTurn] = []
    pos = 0
    while pos < len(text):
        if not text.startswith(tmpl.begin_marker, pos):
            raise ConversationError(f"expected turn begin marker at offset {pos}")
        pos += len(tmpl.begin_marker)
        header_end = text.find(tmpl.header_sep, pos)
        if header_end < 0:
            raise ConversationError("missing role header separator")
        role_name = text[pos:header_end]
        pos = header_end + len(tmpl.header_sep)
        content_end = text.find(tmpl.end_marker, pos)
        if content_end < 0:
            raise ConversationError("missing turn end marker")
        turns.append(ScannedTurn(role_name=role_name, content=text[pos:content_end]))
        pos = content_end + len(tmpl.end_marker)
        if not text.startswith(tmpl.turn_sep, pos):
            raise ConversationError(f"expected turn separator at offset {pos}")
        pos += len(tmpl.turn_sep)
    return tuple(turns)


def tokenize_with_placeholders(
    text: str,
    tokenizer: Tokenizer,
    marker: str = IMAGE_MARKER,
) -> list[int]:
    """Tokenize text, emitting one -200 sentinel per media marker.

    The text is tokenized around markers so a marker can never straddle a
    token boundary.
    """
    ids: list[int] = []
    chunks = text.split(marker)
    for i, chunk in enumerate(chunks):
        if i > 0:
            ids.append(VISION_SENTINEL)
        if chunk:
            try:
                ids.extend(tokenizer.encode(chunk))
            except Exception as exc:  # surface as a typed error
                raise TokenizerError(f"tokenizer failed on chunk: {exc}") from exc
    return ids


def _encode(tokenizer: Tokenizer, text: str) -> list[int]:
    if not text:
        return []
    try:
        return tokenizer.encode(text)
    except Exception as exc:
        raise TokenizerError(f"tokenizer failed: {exc}") from exc


def pack_conversation(
    conv: Conversation,
    tokenizer: Tokenizer,
    tmpl: TemplateSpec | None = None,
    supervise_end_marker: bool = True,
) -> PackedSequence:
    """Tokenize a conversation into a pre-expansion packed sequence.

    Each media reference occupies a single sentinel position; spans classify
    every non-scaffold position. With ``supervise_end_marker`` the assistant's
    end-of-turn marker tokens join the answer span.
    """
    tmpl = tmpl or TemplateSpec.chatml()
    ids: list[int] = []
    spans: list[Span] = []

    def emit(piece_ids: list[int], kind: SpanKind | None, media_index: int | None = None) -> None:
        if not piece_ids:
            return
        start = len(ids)
        ids.extend(piece_ids)
        if kind is not None:
            spans.append(Span(kind=kind, start=start, end=len(ids), media_index=media_index))

    content_kind = {
        Role.SYSTEM: SpanKind.SYSTEM,
        Role.USER: SpanKind.INSTRUCTION,
        Role.ASSISTANT: SpanKind.ANSWER,
    }
    for turn in conv.turns:
        header = tmpl.begin_marker + tmpl.role_names[turn.role] + tmpl.header_sep
        emit(_encode(tokenizer, header), None)
        for seg in _ordered_segments(turn):
            if isinstance(seg, TextSegment):
                _check_text(seg.text, tmpl)
                emit(_encode(tokenizer, seg.text), content_kind[turn.role])
            else:
                emit([VISION_SENTINEL], SpanKind.VISION, seg.media_index)
        end_ids = _encode(tokenizer, tmpl.end_marker)
        if turn.role is Role.ASSISTANT and supervise_end_marker:
            emit(end_ids, SpanKind.ANSWER)
        else:
            emit(end_ids, None)
        emit(_encode(tokenizer, tmpl.turn_sep), None)

    mask = _mask_from_spans(len(ids), spans)
    return PackedSequence(token_ids=tuple(ids), loss_mask=mask, spans=tuple(spans))


def _mask_from_spans(length: int, spans: Iterable[Span]) -> tuple[bool, ...]:
    mask = [False] * length
    for span in spans:
        if span.kind is SpanKind.ANSWER:
            for i in range(span.start, span.end):
                mask[i] = True
    return tuple(mask)


def expand(seq: PackedSequence, plans: list[TokenPlan] | tuple[TokenPlan, ...]) -> PackedSequence:
    """Replace the i-th vision sentinel with plans[i].total vision positions.

    Plans bind to sentinels in media order: when every vision span carries a
    media index (the normal pipeline), plan i expands medium i even if
    rendering moved its marker; otherwise pairing is positional.
    """
    vision = seq.vision_spans()
    if len(vision) != len(plans):
        raise PlanMismatchError(
            f"sequence has {len(vision)} vision sentinels but {len(plans)} plans"
        )
    for span in vision:
        if span.end - span.start != 1:
            raise PlanMismatchError("sequence is already expanded")

    indices = [s.media_index for s in vision]
    by_media = set(indices) == set(range(len(plans))) and len(plans) > 0
    if by_media:
        plan_at = {span.start: plans[span.media_index] for span in vision}
    else:
        plan_at = {span.start: plan for span, plan in zip(vision, plans)}
    shift = 0
    ids: list[int] = []
    new_spans: list[Span] = []
    vision_starts = {span.start for span in vision}
    pos_map: dict[int, int] = {}
    for old_pos, tok in enumerate(seq.token_ids):
        pos_map[old_pos] = old_pos + shift
        if old_pos in vision_starts:
            total = plan_at[old_pos].total
            ids.extend([VISION_SENTINEL] * total)
            shift += total - 1
        else:
            ids.append(tok)
    pos_map[len(seq.token_ids)] = len(ids)

    for span in seq.spans:
        if span.kind is SpanKind.VISION:
            start = pos_map[span.start]
            new_spans.append(
                Span(
                    kind=SpanKind.VISION,
                    start=start,
                    end=start + plan_at[span.start].total,
                    media_index=span.media_index,
                )
            )
        else:
            new_spans.append(
                Span(
                    kind=span.kind,
                    start=pos_map[span.start],
                    end=pos_map[span.end],
                    media_index=span.media_index,
                )
            )
    mask = _mask_from_spans(len(ids), new_spans)
    return PackedSequence(token_ids=tuple(ids), loss_mask=mask, spans=tuple(new_spans))


def build_loss_mask(seq: PackedSequence, conv: Conversation | None = None) -> tuple[bool, ...]:
    """Recompute the supervision mask from the sequence's answer spans.

    When the source conversation is supplied, the number of answer regions is
    cross-checked against its assistant turns.
    """
    mask = _mask_from_spans(len(seq.token_ids), seq.spans)
    if conv is not None:
        assistant_turns = [t for t in conv.turns if t.role is Role.ASSISTANT]
        with_text = sum(
            1
            for t in assistant_turns
            if any(isinstance(s, TextSegment) and s.text for s in t.segments)
        )
        media_free = all(
            isinstance(s, TextSegment) for t in assistant_turns for s in t.segments
        )
        regions = 0
        prev = False
        for m in mask:
            if m and not prev:
                regions += 1
            prev = m
        # One contiguous region per assistant turn (or per turn with text when
        # the end marker is unsupervised); answers split by media are exempt.
        if media_free and regions not in {len(assistant_turns), with_text}:
            raise ConversationError(
                f"{regions} supervised regions for {len(assistant_turns)} assistant turns"
            )
    return mask


@dataclass(frozen=True)
class RawTurn:
    role: Role
    text: str


@dataclass(frozen=True)
class RawSample:
    """One line of the conversation JSONL, parsed but not yet templated."""

    sample_id: str
    images: tuple[MediaDescriptor, ...]
    video: MediaDescriptor | None
    turns: tuple[RawTurn, ...]

    @property
    def media(self) -> tuple[MediaDescriptor, ...]:
        return self.images + ((self.video,) if self.video else ())


def _parse_media(value, kind: str, default_frames: int = 32) -> MediaDescriptor:
    if isinstance(value, str):
        return MediaDescriptor(kind=kind, path=value, frames=default_frames if kind == "video" else None)
    if isinstance(value, dict):
        return MediaDescriptor(
            kind=kind,
            path=value.get("path"),
            width_px=value.get("width"),
            height_px=value.get("height"),
            frames=value.get("frames", default_frames if kind == "video" else None),
        )
    raise ConversationError(f"media entry must be a path or object, got {type(value).__name__}")


def parse_record(obj: dict, fallback_id: str = "record") -> RawSample:
    """Validate one JSONL object: {id, images, video, conversations}."""
    if not isinstance(obj, dict):
        raise ConversationError("record must be a JSON object")
    convs = obj.get("conversations")
    if not isinstance(convs, list):
        raise ConversationError("record is missing a conversations list")
    turns: list[RawTurn] = []
    for entry in convs:
        if not isinstance(entry, dict) or "from" not in entry or "value" not in entry:
            raise ConversationError("each conversation entry needs 'from' and 'value'")
        role = _ROLE_ALIASES.get(str(entry["from"]).lower())
        if role is None:
            raise ConversationError(f"unknown speaker {entry['from']!r}")
        turns.append(RawTurn(role=role, text=str(entry["value"])))
    images = tuple(_parse_media(v, "image") for v in obj.get("images") or [])
    video_raw = obj.get("video")
    video = _parse_media(video_raw, "video") if video_raw else None
    return RawSample(
        sample_id=str(obj.get("id", fallback_id)),
        images=images,
        video=video,
        turns=tuple(turns),
    )


def parse_jsonl_line(line: str, fallback_id: str = "record") -> RawSample:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ConversationError(f"invalid JSON: {exc}") from exc
    return parse_record(obj, fallback_id=fallback_id)


@dataclass(frozen=True)
class MarkerVerdict:
    clean: bool
    marker_count: int
    media_count: int
    reason: str | None = None


def sanitize_markers(sample: RawSample, marker: str = IMAGE_MARKER) -> MarkerVerdict:
    """Flag samples whose literal marker count disagrees with attached media.

    Catches stray markers (HTML ``<image>...</image>`` fragments in
    code-writing data) as well as under-marked samples.
    """
    marker_count = sum(turn.text.count(marker) for turn in sample.turns)
    media_count = len(sample.media)
    if marker_count == media_count:
        return MarkerVerdict(clean=True, marker_count=marker_count, media_count=media_count)
    return MarkerVerdict(
        clean=False,
        marker_count=marker_count,
        media_count=media_count,
        reason=f"{marker_count} {marker} markers for {media_count} attached media",
    )


def to_conversation(sample: RawSample, marker: str = IMAGE_MARKER) -> Conversation:
    """Turn a clean raw sample into a structured conversation.

    The i-th marker in reading order binds to the i-th attached medium
    (images in listed order, then the video).
    """
    verdict = sanitize_markers(sample, marker)
    if not verdict.clean:
        raise ConversationError(f"sample {sample.sample_id}: {verdict.reason}")
    media = sample.media
    next_media = 0
    turns: list[Turn] = []
    for raw in sample.turns:
        segments: list[Segment] = []
        chunks = raw.text.split(marker)
        for i, chunk in enumerate(chunks):
            if i > 0:
                descriptor = media[next_media]
                if descriptor.kind == "video":
                    segments.append(VideoRef(media_index=next_media))
                else:
                    segments.append(ImageRef(media_index=next_media))
                next_media += 1
            if chunk:
                segments.append(TextSegment(text=chunk))
        turns.append(Turn(role=raw.role, segments=tuple(segments)))
    return Conversation(turns=tuple(turns), media=media)
