"""BIO-tagged corpora: data model, CoNLL-style I/O, and sampling regimes.

The on-disk format is one ``token<TAB>tag`` pair per line, a blank line
between sentences, UTF-8. Tags are ``O`` or ``B-TYPE``/``I-TYPE`` where TYPE
is an uppercase identifier registered in a :class:`TypeRegistry`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence, Union

from .seeding import derive_rng

__all__ = [
    "DEFAULT_ENTITY_TYPES",
    "CorpusError",
    "ConllFormatError",
    "BioValidationError",
    "TypeRegistry",
    "BioTag",
    "TaggedSentence",
    "NerCorpus",
    "ParallelPair",
    "FewShotSpec",
    "entity_spans",
    "read_conll",
    "write_conll",
    "read_pairs_jsonl",
    "write_pairs_jsonl",
    "sample_few_shot",
    "sample_low_resource",
    "linearized_length",
    "filter_by_linearized_length",
    "augment_entity_replacement",
]

# OntoNotes-style inventory used as the default registry.
DEFAULT_ENTITY_TYPES = (
    "WORK_OF_ART",
    "ORG",
    "FAC",
    "LAW",
    "PERCENT",
    "PRODUCT",
    "MONEY",
    "DATE",
    "PERSON",
    "GPE",
    "QUANTITY",
    "CARDINAL",
    "NORP",
    "TIME",
    "EVENT",
    "ORDINAL",
    "LOC",
    "LANGUAGE",
)

_TYPE_NAME_RE = re.compile(r"^[A-Z0-9_]+$")


class CorpusError(ValueError):
    """Base class for corpus construction and I/O errors."""


class ConllFormatError(CorpusError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BioValidationError(CorpusError):
    def __init__(self, message: str, sentence_index: int | None = None, position: int | None = None):
        loc = ""
        if sentence_index is not None:
            loc += f"sentence {sentence_index}"
        if position is not None:
            loc += f"{', ' if loc else ''}token {position}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.sentence_index = sentence_index
        self.position = position


def _check_type_name(name: str) -> str:
    if not name or not _TYPE_NAME_RE.match(name):
        raise CorpusError(f"invalid entity type name {name!r}: must match [A-Z0-9_]+")
    return name


class TypeRegistry:
    """Ordered, duplicate-free set of entity type names."""

    def __init__(self, names: Iterable[str] = DEFAULT_ENTITY_TYPES):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        for name in names:
            self.add(name)
        if not self._names:
            raise CorpusError("a type registry needs at least one entity type")

    def add(self, name: str) -> None:
        _check_type_name(name)
        if name in self._index:
            raise CorpusError(f"duplicate entity type {name!r}")
        self._index[name] = len(self._names)
        self._names.append(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise CorpusError(f"unknown entity type {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeRegistry) and other._names == self._names

    def __repr__(self) -> str:
        return f"TypeRegistry({self._names!r})"


@dataclass(frozen=True)
class BioTag:
    """One BIO tag: kind in {O, B, I}, entity_type set iff kind != O."""

    kind: str
    entity_type: str | None = None

    def __post_init__(self):
        if self.kind not in ("O", "B", "I"):
            raise CorpusError(f"invalid tag kind {self.kind!r}")
        if self.kind == "O":
            if self.entity_type is not None:
                raise CorpusError("O tags carry no entity type")
        else:
            if self.entity_type is None:
                raise CorpusError(f"{self.kind} tag needs an entity type")
            _check_type_name(self.entity_type)

    @classmethod
    def outside(cls) -> "BioTag":
        return _O_TAG

    @classmethod
    def begin(cls, entity_type: str) -> "BioTag":
        return cls("B", entity_type)

    @classmethod
    def inside(cls, entity_type: str) -> "BioTag":
        return cls("I", entity_type)

    @classmethod
    def from_string(cls, text: str) -> "BioTag":
        if text == "O":
            return _O_TAG
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            return cls(text[0], text[2:])
        raise CorpusError(f"malformed BIO tag {text!r}")

    def __str__(self) -> str:
        if self.kind == "O":
            return "O"
        return f"{self.kind}-{self.entity_type}"


_O_TAG = BioTag("O")

_WS_RE = re.compile(r"\s")


@dataclass(frozen=True)
class TaggedSentence:
    """Immutable token/tag pair lists with a valid BIO sequence.

    Tokens must be non-empty and whitespace-free so the CoNLL rendering is
    unambiguous and round-trips.
    """

    tokens: tuple[str, ...]
    tags: tuple[BioTag, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) == 0:
            raise BioValidationError("empty sentence")
        if len(self.tokens) != len(self.tags):
            raise BioValidationError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        for i, tok in enumerate(self.tokens):
            if not tok or _WS_RE.search(tok):
                raise BioValidationError(f"bad token {tok!r}", position=i)
        validate_bio(self.tags)

    def __len__(self) -> int:
        return len(self.tokens)

    def entity_types(self) -> set[str]:
        return {t for _, _, t in entity_spans(self)}


def validate_bio(tags: Sequence[BioTag], sentence_index: int | None = None) -> None:
    """Reject I-T tags that do not continue a same-type B-T/I-T run."""
    prev: BioTag = _O_TAG
    for i, tag in enumerate(tags):
        if tag.kind == "I":
            if prev.kind == "O" or prev.entity_type != tag.entity_type:
                raise BioValidationError(
                    f"I-{tag.entity_type} does not continue an entity",
                    sentence_index=sentence_index,
                    position=i,
                )
        prev = tag


def entity_spans(sentence: TaggedSentence) -> list[tuple[int, int, str]]:
    """Maximal entity runs as (start, end_exclusive, type), left to right."""
    spans: list[tuple[int, int, str]] = []
    start = -1
    current: str | None = None
    for i, tag in enumerate(sentence.tags):
        if tag.kind == "B":
            if current is not None:
                spans.append((start, i, current))
            start, current = i, tag.entity_type
        elif tag.kind == "O":
            if current is not None:
                spans.append((start, i, current))
            current = None
        # I tags extend the open run; validate_bio already guaranteed one.
    if current is not None:
        spans.append((start, len(sentence.tags), current))
    return spans


@dataclass(frozen=True)
class NerCorpus:
    """A fixed sequence of tagged sentences with a style label."""

    sentences: tuple[TaggedSentence, ...]
    style: str  # "source" or "target"
    types: TypeRegistry = field(default_factory=TypeRegistry)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if self.style not in ("source", "target"):
            raise CorpusError(f"style must be 'source' or 'target', got {self.style!r}")
        for i, sent in enumerate(self.sentences):
            for j, tag in enumerate(sent.tags):
                if tag.kind != "O" and tag.entity_type not in self.types:
                    raise BioValidationError(
                        f"entity type {tag.entity_type!r} not in registry",
                        sentence_index=i,
                        position=j,
                    )

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[TaggedSentence]:
        return iter(self.sentences)

    def replaced(self, sentences: Iterable[TaggedSentence]) -> "NerCorpus":
        return NerCorpus(tuple(sentences), self.style, self.types)


@dataclass(frozen=True)
class ParallelPair:
    """Same content in both styles; has_ner says whether the tags are real."""

    source_side: TaggedSentence
    target_side: TaggedSentence
    has_ner: bool = False


@dataclass(frozen=True)
class FewShotSpec:
    """K entity mentions per class, capped at 2K, counted over whole sentences."""

    k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise CorpusError("few-shot k must be >= 1")


def read_conll(
    source: Union[str, Path, IO[str], IO[bytes]],
    types: TypeRegistry | None = None,
    style: str = "source",
    strict_types: bool = True,
) -> NerCorpus:
    """Parse CoNLL-style text into a corpus.

    Malformed lines raise :class:`ConllFormatError` with a 1-based line
    number. Tags with unregistered types raise when ``strict_types`` is true
    and are registered on the fly otherwise.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            return read_conll(handle, types, style, strict_types)
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")

    types = types if types is not None else TypeRegistry()
    sentences: list[TaggedSentence] = []
    tokens: list[str] = []
    tags: list[BioTag] = []

    def flush(line_number: int) -> None:
        if not tokens:
            return
        try:
            sentences.append(TaggedSentence(tuple(tokens), tuple(tags)))
        except BioValidationError as exc:
            raise ConllFormatError(str(exc), line_number) from exc
        tokens.clear()
        tags.clear()

    number = 0
    for number, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            flush(number)
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise ConllFormatError(f"expected 'token<TAB>tag', got {line!r}", number)
        token, tag_text = parts
        try:
            tag = BioTag.from_string(tag_text)
        except CorpusError as exc:
            raise ConllFormatError(str(exc), number) from exc
        if tag.kind != "O" and tag.entity_type not in types:
            if strict_types:
                raise ConllFormatError(
                    f"unknown entity type {tag.entity_type!r}", number
                )
            types.add(tag.entity_type)
        tokens.append(token)
        tags.append(tag)
    flush(number + 1)
    return NerCorpus(tuple(sentences), style, types)


def write_conll(corpus: NerCorpus, destination: Union[str, Path, IO[str]]) -> None:
    """Write the canonical form: tab-separated, one blank line between sentences."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="\n") as handle:
            write_conll(corpus, handle)
            return
    chunks = []
    for sent in corpus.sentences:
        chunks.append(
            "\n".join(f"{tok}\t{tag}" for tok, tag in zip(sent.tokens, sent.tags))
        )
    destination.write("\n\n".join(chunks) + ("\n" if chunks else ""))


def write_pairs_jsonl(pairs: Sequence[ParallelPair], destination: Union[str, Path, IO[str]]) -> None:
    """One JSON object per pair: tokens, tags (strings) and the has_ner flag."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="\n") as handle:
            write_pairs_jsonl(pairs, handle)
            return
    for pair in pairs:
        record = {
            "source_tokens": list(pair.source_side.tokens),
            "source_tags": [str(t) for t in pair.source_side.tags],
            "target_tokens": list(pair.target_side.tokens),
            "target_tags": [str(t) for t in pair.target_side.tags],
            "has_ner": pair.has_ner,
        }
        destination.write(json.dumps(record, sort_keys=True) + "\n")


def read_pairs_jsonl(
    source: Union[str, Path, IO[str]], types: TypeRegistry | None = None
) -> list[ParallelPair]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            return read_pairs_jsonl(handle, types)
    pairs: list[ParallelPair] = []
    for number, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            sides = []
            for side in ("source", "target"):
                tags = tuple(BioTag.from_string(t) for t in record[f"{side}_tags"])
                sides.append(TaggedSentence(tuple(record[f"{side}_tokens"]), tags))
            pair = ParallelPair(sides[0], sides[1], bool(record["has_ner"]))
        except (KeyError, json.JSONDecodeError, CorpusError) as exc:
            raise ConllFormatError(f"bad pair record: {exc}", number) from exc
        if types is not None:
            for sent in (pair.source_side, pair.target_side):
                for tag in sent.tags:
                    if tag.kind != "O" and tag.entity_type not in types:
                        raise ConllFormatError(
                            f"unknown entity type {tag.entity_type!r}", number
                        )
        pairs.append(pair)
    return pairs


def sample_few_shot(corpus: NerCorpus, spec: FewShotSpec) -> NerCorpus:
    """Greedy sentence pick: every class reaches >= k mentions, none exceeds 2k.

    Sentences are visited in a seed-shuffled order; one is taken when it
    contains a mention of some still-deficient class and would push no class
    past 2k. Raises if the corpus cannot satisfy some class.
    """
    k = spec.k
    classes = corpus.types.names
    counts = {name: 0 for name in classes}
    order = list(range(len(corpus.sentences)))
    derive_rng(spec.seed, "few_shot").shuffle(order)
    picked: list[int] = []
    for idx in order:
        sent = corpus.sentences[idx]
        mention_counts: dict[str, int] = {}
        for _, _, t in entity_spans(sent):
            mention_counts[t] = mention_counts.get(t, 0) + 1
        if not mention_counts:
            continue
        helps = any(counts[t] < k for t in mention_counts)
        fits = all(counts[t] + c <= 2 * k for t, c in mention_counts.items())
        if helps and fits:
            picked.append(idx)
            for t, c in mention_counts.items():
                counts[t] += c
    deficient = sorted(name for name in classes if counts[name] < k)
    if deficient:
        raise CorpusError(
            f"corpus cannot supply {k} mentions within the 2x cap for: "
            + ", ".join(deficient)
        )
    picked.sort()
    return corpus.replaced(corpus.sentences[i] for i in picked)


def sample_low_resource(corpus: NerCorpus, n: int, seed: int = 0) -> NerCorpus:
    """Uniform sample of n sentences without replacement, original order kept."""
    total = len(corpus.sentences)
    if not 1 <= n <= total:
        raise CorpusError(f"low-resource size {n} out of range 1..{total}")
    rng = derive_rng(seed, "low_resource")
    idx = sorted(rng.choice(total, size=n, replace=False).tolist())
    return corpus.replaced(corpus.sentences[i] for i in idx)


def linearized_length(sentence: TaggedSentence) -> int:
    """Token count of the marker rendering, prefix excluded.

    Each entity span contributes its tokens plus one start and one end marker.
    """
    return len(sentence.tokens) + 2 * len(entity_spans(sentence))


def filter_by_linearized_length(
    data: Union[NerCorpus, Sequence[ParallelPair]], max_len: int = 64
):
    """Keep items whose marker rendering has at most max_len tokens.

    For parallel pairs both sides must fit. Order is preserved; an empty
    result is allowed.
    """
    if max_len < 1:
        raise CorpusError("max_len must be >= 1")
    if isinstance(data, NerCorpus):
        kept = [s for s in data.sentences if linearized_length(s) <= max_len]
        return data.replaced(kept)
    return [
        p
        for p in data
        if linearized_length(p.source_side) <= max_len
        and linearized_length(p.target_side) <= max_len
    ]


def augment_entity_replacement(
    source: NerCorpus, target: NerCorpus, seed: int = 0
) -> NerCorpus:
    """Adversarial-free baseline: swap source entity spans for same-type
    target spans drawn uniformly (with replacement) from the target corpus.

    Spans whose type never occurs in the target corpus are kept as-is. The
    result reuses source sentence structure, so it is labeled pseudo-target
    data only in its entity surface forms.
    """
    inventory: dict[str, list[tuple[str, ...]]] = {}
    for sent in target.sentences:
        for start, end, t in entity_spans(sent):
            inventory.setdefault(t, []).append(sent.tokens[start:end])
    rng = derive_rng(seed, "entity_replacement")
    out: list[TaggedSentence] = []
    for sent in source.sentences:
        tokens: list[str] = []
        tags: list[BioTag] = []
        cursor = 0
        for start, end, t in entity_spans(sent):
            tokens.extend(sent.tokens[cursor:start])
            tags.extend(sent.tags[cursor:start])
            pool = inventory.get(t)
            span = pool[int(rng.integers(len(pool)))] if pool else sent.tokens[start:end]
            tokens.extend(span)
            tags.append(BioTag.begin(t))
            tags.extend(BioTag.inside(t) for _ in span[1:])
            cursor = end
        tokens.extend(sent.tokens[cursor:])
        tags.extend(sent.tags[cursor:])
        out.append(TaggedSentence(tuple(tokens), tuple(tags)))
    return NerCorpus(tuple(out), "target", source.types)
