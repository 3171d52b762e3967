"""Toy window NER tagger, span-level micro-F1, and pseudo-labeling.

The tagger embeds each token, concatenates a fixed context window around it
and applies a per-token softmax over the BIO tag set. It exists to measure
downstream effects of augmented data and to produce weak labels, so it is
deliberately small; training is plain SGD with decoupled weight decay and
handwritten gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import (
    BioTag,
    NerCorpus,
    ParallelPair,
    TaggedSentence,
    TypeRegistry,
    entity_spans,
)
from .model import ParamSet, log_softmax, softmax
from .seeding import derive_rng

__all__ = [
    "TaggerConfig",
    "TaggerModel",
    "TaggerReport",
    "EntitySpan",
    "EvalResult",
    "TaggerError",
    "train_tagger",
    "tagger_loss",
    "predict",
    "repair_bio",
    "extract_spans",
    "micro_f1",
    "pseudo_label",
    "save_tagger",
    "load_tagger",
]

_PAD, _UNK = 0, 1


class TaggerError(ValueError):
    pass


@dataclass(frozen=True)
class TaggerConfig:
    dim: int = 32
    window: int = 2  # context tokens on each side
    learning_rate: float = 0.5
    epochs: int = 20
    batch_size: int = 32
    weight_decay: float = 0.001
    init_scale: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.window < 0:
            raise TaggerError("dim must be >= 1 and window >= 0")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise TaggerError("bad optimizer settings")
        if self.weight_decay < 0 or self.init_scale <= 0:
            raise TaggerError("bad regularizer settings")


@dataclass
class TaggerReport:
    train_loss_trace: list[float] = field(default_factory=list)
    dev_f1_trace: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based; 0 means "final parameters kept"


@dataclass
class TaggerModel:
    params: ParamSet
    token_index: dict[str, int]
    tags: tuple[str, ...]  # "O", then B-T/I-T per registry type in order
    types: TypeRegistry
    config: TaggerConfig
    report: TaggerReport = field(default_factory=TaggerReport)

    def encode_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.token_index.get(t, _UNK) for t in tokens], dtype=np.int64)


def _tag_list(types: TypeRegistry) -> tuple[str, ...]:
    tags = ["O"]
    for t in types:
        tags.append(f"B-{t}")
        tags.append(f"I-{t}")
    return tuple(tags)


def _build_token_index(corpus: NerCorpus) -> dict[str, int]:
    words = sorted({tok for sent in corpus.sentences for tok in sent.tokens})
    index = {"<PAD>": _PAD, "<UNK>": _UNK}
    for w in words:
        if w not in index:
            index[w] = len(index)
    return index


def _windows(ids: np.ndarray, window: int) -> np.ndarray:
    padded = np.concatenate(
        [np.full(window, _PAD, dtype=np.int64), ids, np.full(window, _PAD, dtype=np.int64)]
    )
    return np.lib.stride_tricks.sliding_window_view(padded, 2 * window + 1)


def _sentence_logits(model: TaggerModel, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    win = _windows(ids, model.config.window)
    X = model.params["emb"][win].reshape(ids.shape[0], -1)
    logits = X @ model.params["W"] + model.params["b"]
    return logits, X, win


def tagger_loss(
    model: TaggerModel,
    sentence: TaggedSentence,
    scale: float = 1.0,
    accumulate: bool = True,
) -> float:
    """Mean per-token cross-entropy of the gold tags; accumulates gradients."""
    ids = model.encode_tokens(sentence.tokens)
    tag_ids = np.array([model.tags.index(str(t)) for t in sentence.tags], dtype=np.int64)
    logits, X, win = _sentence_logits(model, ids)
    n = ids.shape[0]
    logp = log_softmax(logits)
    loss = float(-logp[np.arange(n), tag_ids].mean())
    if accumulate:
        dlogits = softmax(logits)
        dlogits[np.arange(n), tag_ids] -= 1.0
        dlogits *= scale / n
        grads = model.params.grads
        grads["W"] += X.T @ dlogits
        grads["b"] += dlogits.sum(axis=0)
        dX = (dlogits @ model.params["W"].T).reshape(win.shape[0], win.shape[1], -1)
        np.add.at(grads["emb"], win, dX)
    return loss


def repair_bio(tags: Sequence[BioTag]) -> list[BioTag]:
    """Turn any I-T that does not continue a same-type run into B-T."""
    out: list[BioTag] = []
    prev = BioTag.outside()
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.entity_type != tag.entity_type):
            tag = BioTag.begin(tag.entity_type)
        out.append(tag)
        prev = tag
    return out


def predict(model: TaggerModel, tokens: Sequence[str]) -> tuple[list[BioTag], np.ndarray]:
    """Tags (BIO-repaired) and per-token max-softmax confidences."""
    ids = model.encode_tokens(tokens)
    logits, _, _ = _sentence_logits(model, ids)
    probs = softmax(logits)
    raw = [BioTag.from_string(model.tags[i]) for i in np.argmax(probs, axis=1)]
    return repair_bio(raw), probs.max(axis=1)


def _predict_corpus(model: TaggerModel, corpus: NerCorpus) -> NerCorpus:
    out = []
    for sent in corpus.sentences:
        tags, _ = predict(model, sent.tokens)
        out.append(TaggedSentence(sent.tokens, tuple(tags)))
    return NerCorpus(tuple(out), corpus.style, model.types)


def _sgd(params: ParamSet, lr: float, wd: float) -> None:
    for name, tensor in params.tensors.items():
        tensor -= lr * (params.grads[name] + wd * tensor)


def train_tagger(
    train: NerCorpus,
    dev: NerCorpus | None,
    config: TaggerConfig,
    init: TaggerModel | None = None,
) -> TaggerModel:
    """Train a window tagger; with a dev corpus, keep the epoch with the best
    dev micro-F1 (earliest wins ties). ``init`` continues from an existing
    model (sequential fine-tuning) instead of a fresh random one.
    """
    if len(train.sentences) == 0:
        raise TaggerError("empty training set")
    if init is not None:
        model = TaggerModel(
            init.params.clone(), dict(init.token_index), init.tags, init.types, config
        )
    else:
        token_index = _build_token_index(train)
        tags = _tag_list(train.types)
        rng = derive_rng(config.seed, "tagger_init")
        d, w = config.dim, config.window
        tensors = {
            "emb": rng.uniform(-config.init_scale, config.init_scale, (len(token_index), d)),
            "W": rng.uniform(-config.init_scale, config.init_scale, ((2 * w + 1) * d, len(tags))),
            "b": np.zeros(len(tags)),
        }
        model = TaggerModel(ParamSet(tensors), token_index, tags, train.types, config)

    best: tuple[float, int, ParamSet] | None = None
    n = len(train.sentences)
    for epoch in range(1, config.epochs + 1):
        order = derive_rng(config.seed, "tagger_epoch", epoch).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            model.params.zero_grads()
            for i in batch:
                epoch_loss += tagger_loss(
                    model, train.sentences[i], scale=1.0 / batch.shape[0]
                )
            _sgd(model.params, config.learning_rate, config.weight_decay)
        model.report.train_loss_trace.append(epoch_loss / n)
        if dev is not None and len(dev.sentences) > 0:
            f1 = micro_f1(dev, _predict_corpus(model, dev)).micro_f1
            model.report.dev_f1_trace.append(f1)
            if best is None or f1 > best[0]:
                best = (f1, epoch, model.params.clone())
    if best is not None:
        model.params = best[2]
        model.report.best_epoch = best[1]
    return model


@dataclass(frozen=True)
class EntitySpan:
    """Inclusive token span [start, end] of one entity."""

    start: int
    end: int
    entity_type: str

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise TaggerError(f"bad span ({self.start}, {self.end})")


def extract_spans(sentence: TaggedSentence) -> list[EntitySpan]:
    return [EntitySpan(s, e - 1, t) for s, e, t in entity_spans(sentence)]


@dataclass(frozen=True)
class EvalResult:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    micro_f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "EvalResult":
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(tp, fp, fn, p, r, f1)


def micro_f1(gold: NerCorpus, pred: NerCorpus) -> EvalResult:
    """Exact-match span F1 pooled over the corpus."""
    if len(gold.sentences) != len(pred.sentences):
        raise TaggerError(
            f"corpora misaligned: {len(gold.sentences)} vs {len(pred.sentences)} sentences"
        )
    tp = fp = fn = 0
    for i, (g, p) in enumerate(zip(gold.sentences, pred.sentences)):
        if len(g.tokens) != len(p.tokens):
            raise TaggerError(f"sentence {i}: token counts differ")
        gold_spans = set(extract_spans(g))
        pred_spans = set(extract_spans(p))
        tp += len(gold_spans & pred_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    return EvalResult.from_counts(tp, fp, fn)


def pseudo_label(
    model: TaggerModel, pairs: Sequence[ParallelPair], threshold: float = 0.9
) -> list[ParallelPair]:
    """Predict tags on both sides of each pair; keep them only when every
    predicted entity token on both sides clears the confidence threshold
    (strictly). Unlabeled pairs come back all-O with has_ner=False."""
    out: list[ParallelPair] = []
    for pair in pairs:
        sides = []
        pair_conf = 1.0  # min entity-token confidence over both sides
        for sent in (pair.source_side, pair.target_side):
            tags, confs = predict(model, sent.tokens)
            for tag, c in zip(tags, confs):
                if tag.kind != "O":
                    pair_conf = min(pair_conf, float(c))
            sides.append(tags)
        if pair_conf > threshold:
            out.append(
                ParallelPair(
                    TaggedSentence(pair.source_side.tokens, tuple(sides[0])),
                    TaggedSentence(pair.target_side.tokens, tuple(sides[1])),
                    has_ner=True,
                )
            )
        else:
            o = BioTag.outside()
            out.append(
                ParallelPair(
                    TaggedSentence(pair.source_side.tokens, tuple(o for _ in pair.source_side.tokens)),
                    TaggedSentence(pair.target_side.tokens, tuple(o for _ in pair.target_side.tokens)),
                    has_ner=False,
                )
            )
    return out


def save_tagger(path: Union[str, Path], model: TaggerModel) -> None:
    tokens = [None] * len(model.token_index)
    for tok, i in model.token_index.items():
        tokens[i] = tok
    meta = {
        "config": asdict(model.config),
        "tokens": tokens,
        "types": list(model.types.names),
    }
    save_checkpoint(path, "tagger", meta, model.params.tensors)


def load_tagger(path: Union[str, Path]) -> TaggerModel:
    kind, meta, tensors = load_checkpoint(path)
    if kind != "tagger":
        raise CheckpointError(f"{path}: expected a tagger checkpoint, got {kind!r}")
    config = TaggerConfig(**meta["config"])
    types = TypeRegistry(meta["types"])
    tags = _tag_list(types)
    token_index = {tok: i for i, tok in enumerate(meta["tokens"])}
    expected = {
        "emb": (len(token_index), config.dim),
        "W": ((2 * config.window + 1) * config.dim, len(tags)),
        "b": (len(tags),),
    }
    for name, shape in expected.items():
        if name not in tensors or tuple(tensors[name].shape) != shape:
            raise CheckpointError(f"{path}: tensor {name!r} missing or misshapen")
    return TaggerModel(ParamSet(tensors), token_index, tags, types, config)
