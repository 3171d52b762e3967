"""Marker linearization: tagged sentences <-> flat token sequences.

A sentence becomes an alternating list of text and entity segments; an entity
segment with type T renders as ``<START_T> tokens... <END_T>``. An optional
task prefix (e.g. ``transfer source to target:``) is prepended when rendering
model inputs. ``parse_rendered`` inverts ``render`` and rejects every way a
token sequence can fail to be a valid linearization, naming the offending
token index.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .corpus import BioTag, CorpusError, TaggedSentence, TypeRegistry, entity_spans

__all__ = [
    "TextSegment",
    "EntitySegment",
    "Segment",
    "TaskPrefix",
    "PrefixScheme",
    "LinearizedSentence",
    "ParseErrorCode",
    "RenderedParseError",
    "start_marker",
    "end_marker",
    "marker_type",
    "linearize",
    "delinearize",
    "render_tokens",
    "render",
    "parse_rendered",
    "surface_tokens",
]


@dataclass(frozen=True)
class TextSegment:
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise CorpusError("empty text segment")


@dataclass(frozen=True)
class EntitySegment:
    entity_type: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise CorpusError("empty entity segment")


Segment = Union[TextSegment, EntitySegment]


@dataclass(frozen=True)
class TaskPrefix:
    """Direction marker prepended to model inputs."""

    direction: str  # "source_to_target" or "target_to_source"
    text: str

    def __post_init__(self):
        if self.direction not in ("source_to_target", "target_to_source"):
            raise CorpusError(f"bad prefix direction {self.direction!r}")
        if not self.text.strip():
            raise CorpusError("prefix text is empty")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.text.split())


@dataclass(frozen=True)
class PrefixScheme:
    source_to_target: TaskPrefix
    target_to_source: TaskPrefix

    @classmethod
    def default(cls) -> "PrefixScheme":
        return cls(
            TaskPrefix("source_to_target", "transfer source to target:"),
            TaskPrefix("target_to_source", "transfer target to source:"),
        )

    def for_direction(self, direction: str) -> TaskPrefix:
        if direction == "source_to_target":
            return self.source_to_target
        if direction == "target_to_source":
            return self.target_to_source
        raise CorpusError(f"bad prefix direction {direction!r}")

    def reverse_of(self, prefix: TaskPrefix) -> TaskPrefix:
        if prefix.direction == "source_to_target":
            return self.target_to_source
        return self.source_to_target

    def all_tokens(self) -> tuple[str, ...]:
        return self.source_to_target.tokens + self.target_to_source.tokens


@dataclass(frozen=True)
class LinearizedSentence:
    """Prefix plus a segment list. Adjacent text segments are merged by
    construction, so the segment form of a sentence is unique."""

    segments: tuple[Segment, ...]
    prefix: TaskPrefix | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise CorpusError("a linearized sentence needs at least one segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if isinstance(a, TextSegment) and isinstance(b, TextSegment):
                raise CorpusError("adjacent text segments must be merged")

    def without_prefix(self) -> "LinearizedSentence":
        return LinearizedSentence(self.segments, None)


class ParseErrorCode(enum.Enum):
    UNCLOSED_ENTITY = "UnclosedEntity"
    TYPE_MISMATCH = "TypeMismatch"
    NESTED_ENTITY = "NestedEntity"
    EMPTY_ENTITY = "EmptyEntity"
    STRAY_END_MARKER = "StrayEndMarker"
    EMPTY_SENTENCE = "EmptySentence"


class RenderedParseError(CorpusError):
    def __init__(self, code: ParseErrorCode, index: int, message: str):
        super().__init__(f"{code.value} at token {index}: {message}")
        self.code = code
        self.index = index


_START_RE = re.compile(r"^<START_([A-Z0-9_]+)>$")
_END_RE = re.compile(r"^<END_([A-Z0-9_]+)>$")


def start_marker(entity_type: str) -> str:
    return f"<START_{entity_type}>"


def end_marker(entity_type: str) -> str:
    return f"<END_{entity_type}>"


def marker_type(token: str, types: TypeRegistry) -> tuple[str, str] | None:
    """("start"|"end", TYPE) when token is a marker for a registered type,
    else None. Marker-shaped tokens with unregistered types count as plain
    text, mirroring how the decoding vocabulary classifies them."""
    m = _START_RE.match(token)
    if m and m.group(1) in types:
        return ("start", m.group(1))
    m = _END_RE.match(token)
    if m and m.group(1) in types:
        return ("end", m.group(1))
    return None


def linearize(sentence: TaggedSentence, prefix: TaskPrefix | None = None) -> LinearizedSentence:
    segments: list[Segment] = []
    cursor = 0
    for start, end, t in entity_spans(sentence):
        if start > cursor:
            segments.append(TextSegment(sentence.tokens[cursor:start]))
        segments.append(EntitySegment(t, sentence.tokens[start:end]))
        cursor = end
    if cursor < len(sentence.tokens):
        segments.append(TextSegment(sentence.tokens[cursor:]))
    return LinearizedSentence(tuple(segments), prefix)


def delinearize(lin: LinearizedSentence) -> TaggedSentence:
    tokens: list[str] = []
    tags: list[BioTag] = []
    for seg in lin.segments:
        if isinstance(seg, TextSegment):
            tokens.extend(seg.tokens)
            tags.extend(BioTag.outside() for _ in seg.tokens)
        else:
            tokens.extend(seg.tokens)
            tags.append(BioTag.begin(seg.entity_type))
            tags.extend(BioTag.inside(seg.entity_type) for _ in seg.tokens[1:])
    return TaggedSentence(tuple(tokens), tuple(tags))


def render_tokens(lin: LinearizedSentence) -> list[str]:
    out: list[str] = []
    if lin.prefix is not None:
        out.extend(lin.prefix.tokens)
    for seg in lin.segments:
        if isinstance(seg, TextSegment):
            out.extend(seg.tokens)
        else:
            out.append(start_marker(seg.entity_type))
            out.extend(seg.tokens)
            out.append(end_marker(seg.entity_type))
    return out


def render(lin: LinearizedSentence) -> str:
    return " ".join(render_tokens(lin))


def surface_tokens(lin: LinearizedSentence) -> list[str]:
    """Plain tokens with markers and prefix stripped (scoring surface)."""
    out: list[str] = []
    for seg in lin.segments:
        out.extend(seg.tokens)
    return out


def _detect_prefix(tokens: Sequence[str], prefixes: PrefixScheme | None) -> tuple[TaskPrefix | None, int]:
    if prefixes is None:
        return None, 0
    for prefix in (prefixes.source_to_target, prefixes.target_to_source):
        pt = prefix.tokens
        if len(tokens) >= len(pt) and tuple(tokens[: len(pt)]) == pt:
            return prefix, len(pt)
    return None, 0


def parse_rendered(
    tokens: Sequence[str],
    types: TypeRegistry,
    prefixes: PrefixScheme | None = None,
) -> LinearizedSentence:
    """Invert :func:`render_tokens`, validating the marker grammar.

    When ``prefixes`` is given and the sequence starts with one of the two
    prefixes, that prefix is consumed and recorded. Raises
    :class:`RenderedParseError` whose code names the first violation and
    whose index points at the offending token (for UNCLOSED_ENTITY, the
    opening marker).
    """
    tokens = list(tokens)
    prefix, i = _detect_prefix(tokens, prefixes)
    segments: list[Segment] = []
    text_run: list[str] = []

    def flush() -> None:
        if text_run:
            segments.append(TextSegment(tuple(text_run)))
            text_run.clear()

    n = len(tokens)
    while i < n:
        tok = tokens[i]
        kind = marker_type(tok, types)
        if kind is None:
            text_run.append(tok)
            i += 1
            continue
        side, t = kind
        if side == "end":
            raise RenderedParseError(
                ParseErrorCode.STRAY_END_MARKER, i, f"{tok} closes nothing"
            )
        open_at = i
        i += 1
        entity_tokens: list[str] = []
        while True:
            if i >= n:
                raise RenderedParseError(
                    ParseErrorCode.UNCLOSED_ENTITY,
                    open_at,
                    f"{start_marker(t)} never closed",
                )
            inner = tokens[i]
            inner_kind = marker_type(inner, types)
            if inner_kind is None:
                entity_tokens.append(inner)
                i += 1
                continue
            inner_side, inner_t = inner_kind
            if inner_side == "start":
                raise RenderedParseError(
                    ParseErrorCode.NESTED_ENTITY,
                    i,
                    f"{inner} opened inside {start_marker(t)}",
                )
            if inner_t != t:
                raise RenderedParseError(
                    ParseErrorCode.TYPE_MISMATCH,
                    i,
                    f"{inner} closes {start_marker(t)}",
                )
            if not entity_tokens:
                raise RenderedParseError(
                    ParseErrorCode.EMPTY_ENTITY, i, f"{start_marker(t)} has no tokens"
                )
            flush()
            segments.append(EntitySegment(t, tuple(entity_tokens)))
            i += 1
            break
    flush()
    if not segments:
        raise RenderedParseError(
            ParseErrorCode.EMPTY_SENTENCE, len(tokens), "no content tokens"
        )
    return LinearizedSentence(tuple(segments), prefix)
