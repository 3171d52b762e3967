"""Candidate over-generation, four-metric scoring, and best-of-k selection.

Each source sentence is transferred k times under constrained sampling; the
candidates are scored for style consistency (toy logistic classifier),
adequacy (content-token overlap), fluency (bigram language model) and
diversity (normalized character edit distance), combined by a weighted sum,
and the argmax survives. All scores live in [0, 1]; scoring looks only at
surface text (markers and prefixes stripped).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import kernels as K
from .corpus import NerCorpus, TaggedSentence
from .linearize import (
    LinearizedSentence,
    delinearize,
    linearize,
    parse_rendered,
    render_tokens,
    surface_tokens,
)
from .model import ParamSet, SamplerConfig, TransferModel, constrained_sample, encode, sigmoid
from .seeding import derive_rng

__all__ = [
    "SelectionWeights",
    "Candidate",
    "Scorer",
    "SelectError",
    "edit_distance_chars",
    "diversity_score",
    "adequacy_score",
    "fluency_from_entropy",
    "StyleClassifierConfig",
    "StyleClassifier",
    "train_style_classifier",
    "BigramLm",
    "DiversityScorer",
    "ConsistencyScorer",
    "AdequacyScorer",
    "FluencyScorer",
    "default_scorers",
    "score_candidate",
    "select_best",
    "AugmentResult",
    "augment_corpus",
    "DEFAULT_STOP_WORDS",
]

METRICS = ("consistency", "adequacy", "fluency", "diversity")

DEFAULT_STOP_WORDS = frozenset(
    """
    a an the this that these those is are was were be been being am
    do does did will would can could shall should may might must
    i you he she it we they me him her us them my your his its our their
    and or but if then than so nor not no yes
    to of in on at by for with from as into onto over under about
    up down out off again very too also just only own same
    u ur r w n b c y pls thx abt bc rly gonna wanna 2 4 @
    . , ! ? ; : ... !! ?? - ' " ( )
    """.split()
)


class SelectError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionWeights:
    consistency: float = 1.0
    adequacy: float = 1.0
    fluency: float = 0.1
    diversity: float = 0.5

    def __post_init__(self):
        values = self.as_dict().values()
        if any(v < 0 for v in values):
            raise SelectError("selection weights must be non-negative")
        if all(v == 0 for v in values):
            raise SelectError("at least one selection weight must be positive")

    def as_dict(self) -> dict[str, float]:
        return {
            "consistency": self.consistency,
            "adequacy": self.adequacy,
            "fluency": self.fluency,
            "diversity": self.diversity,
        }


@dataclass(frozen=True)
class Candidate:
    origin_index: int
    text: LinearizedSentence
    scores: dict[str, float]
    total: float


class Scorer(Protocol):
    name: str

    def score(self, original: LinearizedSentence, candidate: LinearizedSentence) -> float: ...


# -- metric primitives -------------------------------------------------------


def edit_distance_chars(a: str, b: str) -> int:
    """Levenshtein distance over unicode scalar values."""
    xa = np.array([ord(ch) for ch in a], dtype=np.int32)
    xb = np.array([ord(ch) for ch in b], dtype=np.int32)
    return int(K.levenshtein(xa, xb))


def _surface_text(lin: LinearizedSentence) -> str:
    return " ".join(surface_tokens(lin))


def diversity_score(original: LinearizedSentence, candidate: LinearizedSentence) -> float:
    """Character edit distance normalized by the longer surface string."""
    a, b = _surface_text(original), _surface_text(candidate)
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return min(1.0, edit_distance_chars(a, b) / longest)


def adequacy_score(
    original: LinearizedSentence,
    candidate: LinearizedSentence,
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS,
) -> float:
    """Fraction of the original's content tokens preserved by the candidate."""
    content_a = {t for t in surface_tokens(original) if t.lower() not in stop_words}
    content_b = {t for t in surface_tokens(candidate) if t.lower() not in stop_words}
    if not content_a:
        return 1.0 if not content_b else 0.0
    return len(content_a & content_b) / len(content_a)


def fluency_from_entropy(entropy: float, c: float = 0.1) -> float:
    """Squash a per-token cross-entropy into (0, 1]: exp(-H)/(exp(-H)+c)."""
    p = float(np.exp(-entropy))
    return p / (p + c)


# -- toy style classifier ----------------------------------------------------


@dataclass(frozen=True)
class StyleClassifierConfig:
    dim: int = 16
    epochs: int = 30
    learning_rate: float = 0.5
    batch_size: int = 16
    init_scale: float = 0.08
    seed: int = 0


_UNK = 0


class StyleClassifier:
    """Logistic regression over mean-pooled token embeddings.

    ``predict_proba`` returns the probability of the *target* style. With all
    weights zero the output is exactly 0.5.
    """

    def __init__(self, params: ParamSet, token_index: dict[str, int], trained: bool = False):
        self.params = params
        self.token_index = token_index
        self.trained = trained

    def _pool(self, tokens: Sequence[str]) -> np.ndarray:
        ids = np.array([self.token_index.get(t, _UNK) for t in tokens], dtype=np.int64)
        if ids.size == 0:
            return np.zeros(self.params["emb"].shape[1])
        return self.params["emb"][ids].mean(axis=0)

    def predict_proba(self, tokens: Sequence[str]) -> float:
        pooled = self._pool(tokens)
        return float(sigmoid(pooled @ self.params["w"] + self.params["b"]))


def train_style_classifier(
    source_sentences: Sequence[Sequence[str]],
    target_sentences: Sequence[Sequence[str]],
    config: StyleClassifierConfig = StyleClassifierConfig(),
) -> StyleClassifier:
    """Fit the toy classifier on labeled style examples (target = class 1)."""
    if not source_sentences or not target_sentences:
        raise SelectError("need sentences of both styles")
    words = sorted({t for s in (*source_sentences, *target_sentences) for t in s})
    token_index = {"<UNK>": _UNK}
    for w in words:
        token_index.setdefault(w, len(token_index))
    rng = derive_rng(config.seed, "style_init")
    params = ParamSet(
        {
            "emb": rng.uniform(-config.init_scale, config.init_scale, (len(token_index), config.dim)),
            "w": rng.uniform(-config.init_scale, config.init_scale, config.dim),
            "b": np.zeros(()),
        }
    )
    clf = StyleClassifier(params, token_index)
    examples = [(list(s), 0.0) for s in source_sentences] + [
        (list(s), 1.0) for s in target_sentences
    ]
    n = len(examples)
    for epoch in range(1, config.epochs + 1):
        order = derive_rng(config.seed, "style_epoch", epoch).permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            params.zero_grads()
            for i in batch:
                tokens, label = examples[i]
                ids = np.array([token_index.get(t, _UNK) for t in tokens], dtype=np.int64)
                pooled = params["emb"][ids].mean(axis=0) if ids.size else np.zeros(config.dim)
                score = float(sigmoid(pooled @ params["w"] + params["b"]))
                dact = (score - label) / batch.shape[0]
                params.grads["w"] += dact * pooled
                params.grads["b"] += dact
                if ids.size:
                    np.add.at(
                        params.grads["emb"], ids, np.tile(dact * params["w"] / ids.size, (ids.size, 1))
                    )
            for name, tensor in params.tensors.items():
                tensor -= config.learning_rate * params.grads[name]
    clf.trained = True
    return clf


# -- toy bigram language model ------------------------------------------------


class BigramLm:
    """Add-alpha bigram model over the fitted vocabulary plus UNK."""

    _START = "<S>"
    _UNK_WORD = "<UNK>"

    def __init__(
        self,
        counts: dict[tuple[str, str], int],
        context_counts: dict[str, int],
        words: frozenset[str],
        alpha: float,
    ):
        self._counts = counts
        self._context = context_counts
        self._words = words
        self._V = len(words)
        self.alpha = alpha

    @classmethod
    def fit(cls, sentences: Sequence[Sequence[str]], alpha: float = 0.1) -> "BigramLm":
        if alpha <= 0:
            raise SelectError("alpha must be > 0")
        words = {t for s in sentences for t in s}
        words.add(cls._UNK_WORD)
        counts: dict[tuple[str, str], int] = {}
        context: dict[str, int] = {}
        for s in sentences:
            prev = cls._START
            for tok in s:
                counts[(prev, tok)] = counts.get((prev, tok), 0) + 1
                context[prev] = context.get(prev, 0) + 1
                prev = tok
        return cls(counts, context, frozenset(words), alpha)

    def cross_entropy(self, tokens: Sequence[str]) -> float:
        """Mean negative log-probability per token (natural log)."""
        if not tokens:
            raise SelectError("cannot score an empty sentence")
        total = 0.0
        prev = self._START
        for raw in tokens:
            tok = raw if raw in self._words else self._UNK_WORD
            num = self._counts.get((prev, tok), 0) + self.alpha
            den = self._context.get(prev, 0) + self.alpha * self._V
            total += -float(np.log(num / den))
            prev = tok
        return total / len(tokens)


# -- the four scorers ----------------------------------------------------------


class DiversityScorer:
    name = "diversity"

    def score(self, original: LinearizedSentence, candidate: LinearizedSentence) -> float:
        return diversity_score(original, candidate)


class ConsistencyScorer:
    name = "consistency"

    def __init__(self, classifier: StyleClassifier):
        if not classifier.trained:
            raise SelectError("style classifier is untrained")
        self.classifier = classifier

    def score(self, original: LinearizedSentence, candidate: LinearizedSentence) -> float:
        return self.classifier.predict_proba(surface_tokens(candidate))


class AdequacyScorer:
    name = "adequacy"

    def __init__(self, stop_words: frozenset[str] = DEFAULT_STOP_WORDS):
        self.stop_words = stop_words

    def score(self, original: LinearizedSentence, candidate: LinearizedSentence) -> float:
        return adequacy_score(original, candidate, self.stop_words)


class FluencyScorer:
    name = "fluency"

    def __init__(self, lm: BigramLm, c: float = 0.1):
        if c <= 0:
            raise SelectError("squash constant c must be > 0")
        self.lm = lm
        self.c = c

    def score(self, original: LinearizedSentence, candidate: LinearizedSentence) -> float:
        return fluency_from_entropy(self.lm.cross_entropy(surface_tokens(candidate)), self.c)


def default_scorers(classifier: StyleClassifier, lm: BigramLm, c: float = 0.1) -> dict[str, Scorer]:
    return {
        "consistency": ConsistencyScorer(classifier),
        "adequacy": AdequacyScorer(),
        "fluency": FluencyScorer(lm, c),
        "diversity": DiversityScorer(),
    }


# -- scoring and selection ------------------------------------------------------


def score_candidate(
    original: LinearizedSentence,
    candidate: LinearizedSentence,
    scorers: dict[str, Scorer],
    weights: SelectionWeights,
    origin_index: int,
) -> Candidate:
    scores = {}
    for metric in METRICS:
        value = float(scorers[metric].score(original, candidate))
        scores[metric] = min(1.0, max(0.0, value))
    total = sum(weights.as_dict()[m] * scores[m] for m in METRICS)
    return Candidate(origin_index, candidate, scores, total)


def _argmax_candidate(candidates: Sequence[Candidate], weights: SelectionWeights) -> int:
    wd = weights.as_dict()
    best_i = 0
    best_total = -1.0
    for i, cand in enumerate(candidates):
        total = sum(wd[m] * cand.scores[m] for m in METRICS)
        if total > best_total:
            best_i, best_total = i, total
    return best_i


def select_best(candidates: Sequence[Candidate], weights: SelectionWeights) -> Candidate:
    """Weighted argmax over candidate scores; ties go to the lowest index."""
    if not candidates:
        raise SelectError("no candidates to select from")
    return candidates[_argmax_candidate(candidates, weights)]


@dataclass
class AugmentResult:
    corpus: NerCorpus
    candidates: list[list[Candidate]]  # k per source sentence
    chosen: list[int]  # index of the selected candidate per sentence


def augment_corpus(
    model: TransferModel,
    src: NerCorpus,
    scorers: dict[str, Scorer],
    weights: SelectionWeights,
    k: int = 10,
    sampler: SamplerConfig = SamplerConfig(),
    seed: int = 0,
    max_len: int | None = None,
) -> AugmentResult:
    """Transfer every source sentence k times and keep the best candidate.

    Every sample decodes under the automaton mask, so every candidate parses;
    the output corpus has exactly one BIO-valid sentence per input sentence,
    traceable through origin_index.
    """
    if k < 1:
        raise SelectError("k must be >= 1")
    vocab = model.vocab
    if vocab.prefixes is None:
        raise SelectError("transfer model vocabulary carries no prefixes")
    max_len = max_len if max_len is not None else model.config.max_len
    out_sentences: list[TaggedSentence] = []
    all_candidates: list[list[Candidate]] = []
    chosen: list[int] = []
    for i, sentence in enumerate(src.sentences):
        lin = linearize(sentence, vocab.prefixes.source_to_target)
        latents = encode(model, vocab.encode(render_tokens(lin)))
        original = lin.without_prefix()
        cands: list[Candidate] = []
        for j in range(k):
            rng = derive_rng(seed, "candidate", i, j)
            ids = constrained_sample(model, latents, sampler, max_len, rng)
            tokens = vocab.decode(ids, skip_special=True)
            cand_lin = parse_rendered(tokens, vocab.types)
            cands.append(score_candidate(original, cand_lin, scorers, weights, i))
        best_j = _argmax_candidate(cands, weights)
        out_sentences.append(delinearize(cands[best_j].text))
        all_candidates.append(cands)
        chosen.append(best_j)
    corpus = NerCorpus(tuple(out_sentences), "target", src.types)
    return AugmentResult(corpus, all_candidates, chosen)
