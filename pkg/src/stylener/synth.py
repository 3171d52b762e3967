"""Built-in synthetic two-style corpus: formal source, informal target.

Sentences are drawn from templates with entity slots filled from per-type
lexicons; the informal style applies an ordered longest-match phrase
substitution table to non-entity tokens, then drops non-entity tokens with a
configurable probability. The target side fills slots from a partially
different lexicon so the two styles differ in both wording and entity
inventory, which is what makes the downstream transfer measurable.

Pairs hold the same underlying sentence in both styles and are returned
untagged (all-O, has_ner=False): tag assignment is the pseudo-labeling
step's job, as with a real style-transfer corpus. The unpaired corpora keep
their gold tags and are disjoint from the pairs and from each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import BioTag, CorpusError, NerCorpus, ParallelPair, TaggedSentence, TypeRegistry
from .seeding import derive_rng

__all__ = [
    "SynthConfig",
    "SynthError",
    "make_synthetic_style_corpus",
    "informalize",
    "DEFAULT_TEMPLATES",
    "DEFAULT_SOURCE_LEXICONS",
    "DEFAULT_TARGET_LEXICONS",
    "DEFAULT_SUBSTITUTIONS",
    "SYNTH_TYPES",
]


class SynthError(CorpusError):
    pass


SYNTH_TYPES = ("PERSON", "GPE", "ORG")

DEFAULT_TEMPLATES: tuple[str, ...] = (
    "<PERSON> will meet <PERSON> at the <ORG> office in <GPE> .",
    "The conference hosted by <ORG> takes place in <GPE> tomorrow .",
    "<PERSON> is going to visit <GPE> with colleagues from <ORG> .",
    "Please contact <PERSON> about the meeting at the <ORG> headquarters .",
    "<ORG> announced a new partnership with <ORG> today .",
    "<PERSON> traveled from <GPE> to <GPE> for the interview .",
    "We are pleased to welcome <PERSON> to the <ORG> team .",
    "The report about <ORG> was written by <PERSON> in <GPE> .",
    "<PERSON> said the offices in <GPE> will be closed tomorrow .",
    "Are you going to the <ORG> event with <PERSON> tonight ?",
    "<PERSON> wants to schedule a call with <PERSON> about <ORG> .",
    "The team from <GPE> will arrive at the <ORG> campus today .",
    "Because of the weather in <GPE> , the meeting with <ORG> is delayed .",
    "<PERSON> is really excited about the trip to <GPE> .",
    "You are invited to the <ORG> workshop in <GPE> next week .",
    "Thanks to <PERSON> , the deal with <ORG> was signed in <GPE> .",
    "<PERSON> and <PERSON> are working together at <ORG> now .",
    "The flight to <GPE> was delayed , so <PERSON> missed the briefing .",
    "I will see <PERSON> at the <GPE> airport later today .",
    "People at <ORG> say <PERSON> is moving to <GPE> soon .",
)

DEFAULT_SOURCE_LEXICONS: dict[str, tuple[str, ...]] = {
    "PERSON": (
        "Alice Johnson",
        "Marco Diaz",
        "Priya Patel",
        "John Smith",
        "Elena Petrova",
        "Ahmed Hassan",
        "Mary Chen",
        "David Lee",
        "Sara Kim",
        "Tom Brown",
        "Nina Rossi",
        "Omar Farouk",
    ),
    "GPE": (
        "New York",
        "London",
        "Paris",
        "Tokyo",
        "Berlin",
        "Madrid",
        "Cairo",
        "Mumbai",
        "Toronto",
        "Sydney",
        "Oslo",
        "Lima",
    ),
    "ORG": (
        "Acme Corp",
        "Globex Inc",
        "Initech",
        "Umbrella Group",
        "Stark Industries",
        "Wayne Enterprises",
        "Hooli",
        "Vandelay Industries",
        "Pied Piper",
        "Soylent Corp",
    ),
}

# The informal corpus shares half its entity inventory with the formal one
# and introduces the rest, so a source-trained tagger meets unseen surface
# forms at test time.
DEFAULT_TARGET_LEXICONS: dict[str, tuple[str, ...]] = {
    "PERSON": (
        "Alice Johnson",
        "Marco Diaz",
        "Priya Patel",
        "John Smith",
        "Elena Petrova",
        "Ahmed Hassan",
        "Jake Miller",
        "Tina Lopez",
        "Raj Kapoor",
        "Lucy Wang",
        "Ben Carter",
        "Zoe Adams",
    ),
    "GPE": (
        "New York",
        "London",
        "Paris",
        "Tokyo",
        "Berlin",
        "Madrid",
        "Austin",
        "Denver",
        "Seoul",
        "Dublin",
        "Miami",
        "Boston",
    ),
    "ORG": (
        "Acme Corp",
        "Globex Inc",
        "Initech",
        "Umbrella Group",
        "Stark Industries",
        "Aperture Labs",
        "Tyrell Corp",
        "Cyberdyne Systems",
        "Oceanic Airlines",
        "Massive Dynamic",
    ),
}

# Ordered formal -> informal rewrites; multi-token phrases first so the
# longest match wins.
DEFAULT_SUBSTITUTIONS: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = (
    (("you", "are"), ("ur",)),
    (("going", "to"), ("gonna",)),
    (("next", "week"), ("nxt", "wk")),
    (("wants", "to"), ("wanna",)),
    (("tomorrow",), ("tmrw",)),
    (("today",), ("2day",)),
    (("tonight",), ("2nite",)),
    (("please",), ("pls",)),
    (("Please",), ("pls",)),
    (("Thanks",), ("thx",)),
    (("People",), ("ppl",)),
    (("with",), ("w",)),
    (("at",), ("@",)),
    (("and",), ("n",)),
    (("are",), ("r",)),
    (("you",), ("u",)),
    (("You",), ("u",)),
    (("to",), ("2",)),
    (("for",), ("4",)),
    (("be",), ("b",)),
    (("see",), ("c",)),
    (("really",), ("rly",)),
    (("about",), ("abt",)),
    (("Because",), ("bc",)),
    (("later",), ("l8r",)),
    (("meeting",), ("mtg",)),
    (("schedule",), ("sched",)),
    (("office",), ("ofc",)),
    (("?",), ("??",)),
)


@dataclass(frozen=True)
class SynthConfig:
    n_pairs: int = 2000
    n_source: int = 1000
    n_target: int = 1000
    templates: tuple[str, ...] = DEFAULT_TEMPLATES
    lexicons: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_SOURCE_LEXICONS)
    )
    target_lexicons: dict[str, tuple[str, ...]] | None = field(
        default_factory=lambda: dict(DEFAULT_TARGET_LEXICONS)
    )
    substitutions: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = DEFAULT_SUBSTITUTIONS
    drop_prob: float = 0.12
    max_tries: int = 200

    def __post_init__(self):
        if min(self.n_pairs, self.n_source, self.n_target) < 0:
            raise SynthError("corpus sizes must be >= 0")
        if not 0.0 <= self.drop_prob < 1.0:
            raise SynthError("drop_prob must be in [0, 1)")
        if self.max_tries < 1:
            raise SynthError("max_tries must be >= 1")


def _draw_sentence(
    template: str,
    lexicons: dict[str, Sequence[str]],
    types: TypeRegistry,
    rng,
) -> TaggedSentence:
    tokens: list[str] = []
    tags: list[BioTag] = []
    for piece in template.split():
        if piece.startswith("<") and piece.endswith(">") and piece[1:-1] in types:
            t = piece[1:-1]
            pool = lexicons.get(t)
            if not pool:
                raise SynthError(f"no lexicon entries for entity type {t!r}")
            phrase = pool[int(rng.integers(len(pool)))].split()
            tokens.extend(phrase)
            tags.append(BioTag.begin(t))
            tags.extend(BioTag.inside(t) for _ in phrase[1:])
        else:
            tokens.append(piece)
            tags.append(BioTag.outside())
    return TaggedSentence(tuple(tokens), tuple(tags))


def informalize(
    sentence: TaggedSentence,
    rng,
    substitutions=DEFAULT_SUBSTITUTIONS,
    drop_prob: float = 0.0,
) -> TaggedSentence:
    """Apply the substitution table (longest match first, non-entity tokens
    only), then drop non-entity tokens with probability ``drop_prob``. At
    least one token always survives."""
    tokens: list[str] = []
    tags: list[BioTag] = []
    i = 0
    n = len(sentence.tokens)
    ordered = sorted(substitutions, key=lambda su: -len(su[0]))
    while i < n:
        if sentence.tags[i].kind != "O":
            tokens.append(sentence.tokens[i])
            tags.append(sentence.tags[i])
            i += 1
            continue
        hit = None
        for phrase, replacement in ordered:
            span = sentence.tokens[i : i + len(phrase)]
            if (
                len(span) == len(phrase)
                and tuple(span) == phrase
                and all(t.kind == "O" for t in sentence.tags[i : i + len(phrase)])
            ):
                hit = (phrase, replacement)
                break
        if hit is not None:
            tokens.extend(hit[1])
            tags.extend(BioTag.outside() for _ in hit[1])
            i += len(hit[0])
        else:
            tokens.append(sentence.tokens[i])
            tags.append(BioTag.outside())
            i += 1
    if drop_prob > 0.0:
        kept_tokens: list[str] = []
        kept_tags: list[BioTag] = []
        for tok, tag in zip(tokens, tags):
            droppable = tag.kind == "O" and rng.random() < drop_prob
            if droppable:
                continue
            kept_tokens.append(tok)
            kept_tags.append(tag)
        if not kept_tokens:  # dropped everything: keep the first token
            kept_tokens, kept_tags = [tokens[0]], [tags[0]]
        tokens, tags = kept_tokens, kept_tags
    return TaggedSentence(tuple(tokens), tuple(tags))


def _strip_tags(sentence: TaggedSentence) -> TaggedSentence:
    return TaggedSentence(
        sentence.tokens, tuple(BioTag.outside() for _ in sentence.tokens)
    )


def make_synthetic_style_corpus(
    config: SynthConfig, seed: int = 0
) -> tuple[list[ParallelPair], NerCorpus, NerCorpus]:
    """Generate (parallel pairs, formal source corpus, informal target corpus).

    All emitted surface forms are globally unique (pairs count both sides),
    so the three outputs are mutually disjoint. Deterministic given seed.
    """
    if not config.templates:
        raise SynthError("no templates configured")
    types = TypeRegistry(SYNTH_TYPES)
    for t in types:
        if not config.lexicons.get(t):
            raise SynthError(f"no lexicon entries for entity type {t!r}")
    tgt_lex = config.target_lexicons if config.target_lexicons is not None else config.lexicons
    rng = derive_rng(seed, "synth")
    seen: set[tuple[str, ...]] = set()

    def fresh(make):
        for _ in range(config.max_tries):
            item, keys = make()
            if any(k in seen for k in keys):
                continue
            seen.update(keys)
            return item
        raise SynthError(
            "sentence space too small for the requested corpus sizes "
            "(add templates or lexicon entries)"
        )

    def make_pair():
        template = config.templates[int(rng.integers(len(config.templates)))]
        formal = _draw_sentence(template, config.lexicons, types, rng)
        informal = informalize(formal, rng, config.substitutions, config.drop_prob)
        return (
            ParallelPair(_strip_tags(formal), _strip_tags(informal), has_ner=False),
            [formal.tokens, informal.tokens],
        )

    def make_formal():
        template = config.templates[int(rng.integers(len(config.templates)))]
        sent = _draw_sentence(template, config.lexicons, types, rng)
        return sent, [sent.tokens]

    def make_informal():
        template = config.templates[int(rng.integers(len(config.templates)))]
        formal = _draw_sentence(template, tgt_lex, types, rng)
        sent = informalize(formal, rng, config.substitutions, config.drop_prob)
        return sent, [sent.tokens]

    pairs = [fresh(make_pair) for _ in range(config.n_pairs)]
    source = NerCorpus(tuple(fresh(make_formal) for _ in range(config.n_source)), "source", types)
    target = NerCorpus(tuple(fresh(make_informal) for _ in range(config.n_target)), "target", types)
    return pairs, source, target
