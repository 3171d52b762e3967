"""Transfer-model training: losses, weighted objective, two-stage schedule.

Loss functions compute a scalar and accumulate analytic gradients into the
parameter sets they touch (scaled by ``scale``), so batch objectives compose
by calling them repeatedly. ``run_training`` wires them into the schedule:
stage 1 alternates paraphrase + adversarial generator updates with
discriminator updates; stage 2 (from a configurable epoch, default
ceil(epochs/2)) adds cycle-consistent reconstruction drawn from the two
nonparallel corpora, which also take over as the adversarial examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import Sequence

import numpy as np

from .corpus import NerCorpus, ParallelPair, TaggedSentence
from .linearize import TaskPrefix, linearize, render_tokens
from .model import (
    ModelConfig,
    ModelError,
    ParamSet,
    SoftSample,
    TransferModel,
    encode_ids,
    encode_ids_backward,
    encode_matrix,
    encode_matrix_backward,
    init_discriminator,
    init_transfer_model,
    log_softmax,
    paraphrase_matrix,
    sample_soft,
    sample_soft_backward,
    sigmoid,
    softmax,
    teacher_decode,
    teacher_decode_backward,
)
from .seeding import derive_rng
from .vocab import BOS, EOS, UNK, Vocabulary

__all__ = [
    "LossWeights",
    "TrainConfig",
    "TrainReport",
    "TrainResult",
    "TrainingDiverged",
    "loss_pg",
    "loss_cr",
    "loss_adv_discriminator",
    "loss_adv_generator",
    "total_loss",
    "sgd_step",
    "render_sentence_ids",
    "pair_example",
    "cycle_example",
    "run_training",
]

_CLIP = 1e-12


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class LossWeights:
    paraphrase: float = 1.0
    cycle: float = 0.5
    adversarial: float = 1.25

    def __post_init__(self):
        values = (self.paraphrase, self.cycle, self.adversarial)
        if any(v < 0 for v in values):
            raise ValueError("loss weights must be non-negative")
        if all(v == 0 for v in values):
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    epochs: int = 5
    batch_size: int = 16
    weight_decay: float = 0.001
    tau: float = 1.0
    stage2_start: int | None = None  # 1-based epoch; None = ceil(epochs/2)
    grad_clip: float = 5.0  # global-norm clip, 0 disables
    seed: int = 0
    freeze_discriminator_in_stage2: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.stage2_start is not None and self.stage2_start < 1:
            raise ValueError("stage2_start must be >= 1")
        if self.grad_clip < 0:
            raise ValueError("grad_clip must be >= 0")

    def stage2_epoch(self) -> int:
        if self.stage2_start is not None:
            return self.stage2_start
        return max(1, math.ceil(self.epochs / 2))


@dataclass
class TrainReport:
    pg_trace: list[float] = field(default_factory=list)
    cr_trace: list[float] = field(default_factory=list)
    adv_trace: list[float] = field(default_factory=list)
    total_trace: list[float] = field(default_factory=list)
    disc_accuracy_trace: list[float] = field(default_factory=list)
    stage2_start_epoch: int = 0
    wall_time_seconds: float = 0.0
    checkpoint_path: str | None = None

    def epoch_records(self) -> list[dict]:
        records = []
        for i in range(len(self.total_trace)):
            epoch = i + 1
            records.append(
                {
                    "epoch": epoch,
                    "stage": 2 if epoch >= self.stage2_start_epoch else 1,
                    "pg": self.pg_trace[i],
                    "cr": self.cr_trace[i],
                    "adv": self.adv_trace[i],
                    "total": self.total_trace[i],
                    "disc_accuracy": self.disc_accuracy_trace[i],
                }
            )
        return records


@dataclass
class TrainResult:
    model: TransferModel
    discriminator: ParamSet
    report: TrainReport


# -- rendering helpers ------------------------------------------------------


def render_sentence_ids(
    sentence: TaggedSentence,
    vocab: Vocabulary,
    prefix: TaskPrefix | None,
    with_markers: bool = True,
) -> np.ndarray:
    """Token ids of the marker rendering (or plain tokens) plus prefix."""
    if with_markers:
        lin = linearize(sentence, prefix)
        return vocab.encode(render_tokens(lin))
    tokens = list(prefix.tokens) if prefix is not None else []
    tokens.extend(sentence.tokens)
    return vocab.encode(tokens)


@dataclass(frozen=True)
class PairExample:
    """A rendered parallel pair: encoder input and decoder target ids."""

    src_in: np.ndarray  # forward prefix + source rendering
    tgt_out: np.ndarray  # target rendering + EOS


def pair_example(pair: ParallelPair, vocab: Vocabulary) -> PairExample:
    prefixes = vocab.prefixes
    src_in = render_sentence_ids(
        pair.source_side, vocab, prefixes.source_to_target, with_markers=pair.has_ner
    )
    tgt = render_sentence_ids(pair.target_side, vocab, None, with_markers=pair.has_ner)
    return PairExample(src_in, np.append(tgt, EOS).astype(np.int32))


@dataclass(frozen=True)
class CycleExample:
    """A nonparallel sentence prepared for reconstruction through transfer."""

    fwd_in: np.ndarray  # own-direction prefix + marker rendering
    rev_prefix: np.ndarray  # opposite-direction prefix ids
    content: np.ndarray  # marker rendering, the reconstruction target


def cycle_example(sentence: TaggedSentence, style: str, vocab: Vocabulary) -> CycleExample:
    prefixes = vocab.prefixes
    if style == "source":
        fwd, rev = prefixes.source_to_target, prefixes.target_to_source
    elif style == "target":
        fwd, rev = prefixes.target_to_source, prefixes.source_to_target
    else:
        raise ValueError(f"bad style {style!r}")
    content = render_sentence_ids(sentence, vocab, None)
    fwd_in = np.concatenate([vocab.encode(fwd.tokens), content]).astype(np.int32)
    return CycleExample(fwd_in, vocab.encode(rev.tokens), content)


# -- loss terms --------------------------------------------------------------


def _nll_and_dlogits(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean NLL of targets under logits rows, and its logits gradient."""
    M = targets.shape[0]
    logp = log_softmax(logits)
    loss = float(-logp[np.arange(M), targets].mean())
    dlogits = softmax(logits)
    dlogits[np.arange(M), targets] -= 1.0
    return loss, dlogits / M


def loss_pg(
    model: TransferModel,
    src_in: np.ndarray,
    tgt_out: np.ndarray,
    scale: float = 1.0,
    accumulate: bool = True,
) -> float:
    """Teacher-forced mean NLL of the gold output sequence (EOS included)."""
    tgt_out = np.asarray(tgt_out, dtype=np.int64)
    if np.any(tgt_out == UNK):
        raise ModelError("paraphrase target contains UNK")
    enc = encode_ids(model, src_in)
    dec_in = np.concatenate([[BOS], tgt_out[:-1]])
    cache = teacher_decode(model, enc.gru.H, dec_in)
    loss, dlogits = _nll_and_dlogits(cache.att.logits, tgt_out)
    if accumulate:
        dZl = teacher_decode_backward(model, cache, dlogits * scale)
        encode_ids_backward(model, enc, dZl)
    return loss


def loss_cr(
    model: TransferModel,
    example: CycleExample,
    tau: float,
    max_steps: int,
    rng: np.random.Generator | None = None,
    noises: np.ndarray | None = None,
    fixed_steps: int | None = None,
    scale: float = 1.0,
    accumulate: bool = True,
) -> float:
    """Cycle reconstruction: sample a relaxed paraphrase of the input, feed
    it back under the reverse prefix, score teacher-forced reconstruction of
    the original rendering. The gradient flows through the soft sample."""
    sample = sample_soft(
        model, example.fwd_in, tau, max_steps, rng=rng, noises=noises, fixed_steps=fixed_steps
    )
    E = model.params["emb"]
    P = paraphrase_matrix(sample)
    n_prefix = example.rev_prefix.shape[0]
    X_rev = np.vstack([E[np.asarray(example.rev_prefix, dtype=np.int64)], P @ E])
    enc_rev = encode_matrix(model, X_rev)
    content = np.asarray(example.content, dtype=np.int64)
    dec_in = np.concatenate([[BOS], content[:-1]])
    cache = teacher_decode(model, enc_rev.gru.H, dec_in)
    loss, dlogits = _nll_and_dlogits(cache.att.logits, content)
    if accumulate:
        dZl = teacher_decode_backward(model, cache, dlogits * scale)
        dX_rev = encode_matrix_backward(model, enc_rev, dZl)
        np.add.at(
            model.params.grads["emb"],
            np.asarray(example.rev_prefix, dtype=np.int64),
            dX_rev[:n_prefix],
        )
        dP = dX_rev[n_prefix:] @ E.T
        model.params.grads["emb"] += P.T @ dX_rev[n_prefix:]
        sample_soft_backward(model, sample, dP)
    return loss


def _bce_terms(score: float, positive: bool) -> tuple[float, float]:
    """(-log p, d/d_activation) for p = score if positive else 1 - score."""
    s = min(max(score, _CLIP), 1.0 - _CLIP)
    if positive:
        return -math.log(s), s - 1.0
    return -math.log(1.0 - s), s


def _disc_score(disc: ParamSet, latents: np.ndarray) -> float:
    return float(sigmoid(latents.mean(axis=0) @ disc["w"] + disc["b"]))


def loss_adv_discriminator(
    disc: ParamSet,
    src_latents: Sequence[np.ndarray],
    tgt_latents: Sequence[np.ndarray],
    scale: float = 1.0,
    accumulate: bool = True,
) -> float:
    """Discriminator BCE: source paraphrases are the positive class.

    ``latents`` are treated as constants; gradients land in ``disc`` only.
    The loss is the mean over source examples plus the mean over target
    examples, so a coin-flip discriminator scores 2 log 2.
    """
    if not src_latents and not tgt_latents:
        return 0.0
    loss = 0.0
    for group, positive in ((src_latents, True), (tgt_latents, False)):
        if not group:
            continue
        inv = 1.0 / len(group)
        for latents in group:
            pooled = latents.mean(axis=0)
            score = float(sigmoid(pooled @ disc["w"] + disc["b"]))
            term, dact = _bce_terms(score, positive)
            loss += inv * term
            if accumulate:
                disc.grads["w"] += scale * inv * dact * pooled
                disc.grads["b"] += scale * inv * dact
    return loss


@dataclass
class _AdvSample:
    """One generator-side adversarial example and its caches."""

    sample: SoftSample
    enc2: object  # EncodeCache over the re-encoded paraphrase
    latents: np.ndarray
    positive: bool  # True when the paraphrase came from a source sentence


def _adv_generator_pass(
    model: TransferModel,
    disc: ParamSet,
    src_inputs: Sequence[np.ndarray],
    tgt_inputs: Sequence[np.ndarray],
    tau: float,
    max_steps: int,
    rng_for: callable,
    scale: float = 1.0,
    accumulate: bool = True,
) -> tuple[float, list[_AdvSample]]:
    """Shared core of the generator adversarial loss.

    Samples a relaxed paraphrase per input, re-encodes it (no prefix) and
    scores it with the frozen discriminator using flipped labels: the
    generator is pushed to make source paraphrases look target-like and vice
    versa. Returns the loss and the per-example latents for the subsequent
    discriminator update. Paraphrases that terminate immediately (empty
    content) are skipped.
    """
    E = model.params["emb"]
    samples: list[_AdvSample] = []
    groups = [(src_inputs, True), (tgt_inputs, False)]
    prepared: list[list[_AdvSample]] = [[], []]
    for gi, (inputs, positive) in enumerate(groups):
        for i, ids in enumerate(inputs):
            sample = sample_soft(
                model, ids, tau, max_steps, rng=rng_for(("src" if positive else "tgt"), i)
            )
            if sample.n_content == 0:
                continue
            P = paraphrase_matrix(sample)
            enc2 = encode_matrix(model, P @ E)
            prepared[gi].append(_AdvSample(sample, enc2, enc2.gru.H, positive))
    loss = 0.0
    for group in prepared:
        if not group:
            continue
        inv = 1.0 / len(group)
        for adv in group:
            score = _disc_score(disc, adv.latents)
            # Flipped labels: want source paraphrases scored 0, target scored 1.
            term, dact = _bce_terms(score, positive=not adv.positive)
            loss += inv * term
            if accumulate:
                n = adv.latents.shape[0]
                dlat = np.tile(scale * inv * dact * np.asarray(disc["w"]) / n, (n, 1))
                dX2 = encode_matrix_backward(model, adv.enc2, dlat)
                P = paraphrase_matrix(adv.sample)
                dP = dX2 @ E.T
                model.params.grads["emb"] += P.T @ dX2
                sample_soft_backward(model, adv.sample, dP)
            samples.append(adv)
    return loss, samples


def loss_adv_generator(
    model: TransferModel,
    disc: ParamSet,
    src_inputs: Sequence[np.ndarray],
    tgt_inputs: Sequence[np.ndarray],
    tau: float,
    max_steps: int,
    seed: int = 0,
    noise_label: object = "adv",
    scale: float = 1.0,
    accumulate: bool = True,
) -> float:
    """Non-saturating flipped-label adversarial loss for the generator.

    The discriminator is frozen: its parameters receive no gradient.
    """
    loss, _ = _adv_generator_pass(
        model,
        disc,
        src_inputs,
        tgt_inputs,
        tau,
        max_steps,
        rng_for=lambda side, i: derive_rng(seed, noise_label, side, i),
        scale=scale,
        accumulate=accumulate,
    )
    return loss


def total_loss(pg: float, cr: float, adv: float, weights: LossWeights) -> float:
    """The weighted objective: exactly the sum of the weighted terms."""
    return weights.paraphrase * pg + weights.cycle * cr + weights.adversarial * adv


# -- optimizer ---------------------------------------------------------------


def sgd_step(params: ParamSet, learning_rate: float, weight_decay: float, grad_clip: float = 0.0) -> None:
    """Gradient descent with decoupled weight decay and optional global-norm
    clipping: theta <- theta - lr * g - lr * wd * theta."""
    factor = 1.0
    if grad_clip > 0.0:
        total = 0.0
        for g in params.grads.values():
            total += float(np.sum(g * g))
        norm = math.sqrt(total)
        if norm > grad_clip:
            factor = grad_clip / norm
    for name, tensor in params.tensors.items():
        tensor -= learning_rate * (factor * params.grads[name] + weight_decay * tensor)


# -- training loop ------------------------------------------------------------


def _batches(order: np.ndarray, size: int) -> list[np.ndarray]:
    return [order[i : i + size] for i in range(0, order.shape[0], size)]


def run_training(
    pairs: Sequence[ParallelPair],
    src: NerCorpus,
    tgt: NerCorpus,
    vocab: Vocabulary,
    model_config: ModelConfig,
    config: TrainConfig,
    weights: LossWeights,
) -> TrainResult:
    """Train generator + discriminator on parallel pairs and the two
    nonparallel corpora. Deterministic given the config seed."""
    if not pairs:
        raise ValueError("need at least one parallel pair")
    if vocab.prefixes is None:
        raise ValueError("vocabulary must carry task prefixes")
    started = perf_counter()
    model = init_transfer_model(model_config, vocab, config.seed)
    disc = init_discriminator(model_config, config.seed)
    max_steps = model_config.max_len

    pair_data = [pair_example(p, vocab) for p in pairs]
    src_cycle = [cycle_example(s, "source", vocab) for s in src.sentences]
    tgt_cycle = [cycle_example(s, "target", vocab) for s in tgt.sentences]

    report = TrainReport(stage2_start_epoch=config.stage2_epoch())
    for epoch in range(1, config.epochs + 1):
        stage = 2 if epoch >= report.stage2_start_epoch else 1
        use_cycle = stage == 2 and weights.cycle > 0 and (src_cycle or tgt_cycle)
        rng_epoch = derive_rng(config.seed, "epoch_order", epoch)
        order = rng_epoch.permutation(len(pair_data))
        cyc_src_order = rng_epoch.permutation(len(src_cycle)) if src_cycle else np.array([], int)
        cyc_tgt_order = rng_epoch.permutation(len(tgt_cycle)) if tgt_cycle else np.array([], int)
        half = max(1, config.batch_size // 2)

        pg_sum = cr_sum = adv_sum = 0.0
        disc_hits = disc_total = 0
        cr_count = adv_batches = 0
        batches = _batches(order, config.batch_size)
        for b, batch in enumerate(batches):
            model.params.zero_grads()
            batch_pairs = [pair_data[i] for i in batch]
            pg_scale = weights.paraphrase / len(batch_pairs)
            batch_pg = 0.0
            for ex in batch_pairs:
                batch_pg += loss_pg(model, ex.src_in, ex.tgt_out, scale=pg_scale)
            batch_pg /= len(batch_pairs)

            # Adversarial inputs: pair sides in stage 1, nonparallel
            # sentences (the cycle batch) in stage 2.
            if use_cycle:
                cyc_src = [
                    src_cycle[cyc_src_order[(b * half + j) % len(cyc_src_order)]]
                    for j in range(min(half, len(cyc_src_order)))
                ]
                cyc_tgt = [
                    tgt_cycle[cyc_tgt_order[(b * half + j) % len(cyc_tgt_order)]]
                    for j in range(min(half, len(cyc_tgt_order)))
                ]
                adv_src_in = [ex.fwd_in for ex in cyc_src]
                adv_tgt_in = [ex.fwd_in for ex in cyc_tgt]
            else:
                cyc_src, cyc_tgt = [], []
                adv_src_in = [ex.src_in for ex in batch_pairs]
                adv_tgt_in = [
                    np.concatenate(
                        [vocab.prefix_ids("target_to_source"), ex.tgt_out[:-1]]
                    ).astype(np.int32)
                    for ex in batch_pairs
                ]

            batch_adv = 0.0
            adv_samples: list[_AdvSample] = []
            if weights.adversarial > 0 and (adv_src_in or adv_tgt_in):
                batch_adv, adv_samples = _adv_generator_pass(
                    model,
                    disc,
                    adv_src_in,
                    adv_tgt_in,
                    config.tau,
                    max_steps,
                    rng_for=lambda side, i: derive_rng(
                        config.seed, "adv_noise", epoch, b, side, i
                    ),
                    scale=weights.adversarial,
                )
                adv_batches += 1

            batch_cr = 0.0
            if use_cycle and (cyc_src or cyc_tgt):
                examples = cyc_src + cyc_tgt
                cr_scale = weights.cycle / len(examples)
                for j, ex in enumerate(examples):
                    batch_cr += loss_cr(
                        model,
                        ex,
                        config.tau,
                        max_steps,
                        rng=derive_rng(config.seed, "cr_noise", epoch, b, j),
                        scale=cr_scale,
                    )
                batch_cr /= len(examples)
                cr_count += 1

            batch_total = total_loss(batch_pg, batch_cr, batch_adv, weights)
            if not math.isfinite(batch_total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} batch {b}: "
                    f"pg={batch_pg} cr={batch_cr} adv={batch_adv}"
                )
            sgd_step(model.params, config.learning_rate, config.weight_decay, config.grad_clip)
            if not model.params.all_finite():
                raise TrainingDiverged(f"non-finite parameters after epoch {epoch} batch {b}")

            train_disc = not (stage == 2 and config.freeze_discriminator_in_stage2)
            if adv_samples and train_disc:
                disc.zero_grads()
                loss_adv_discriminator(
                    disc,
                    [a.latents for a in adv_samples if a.positive],
                    [a.latents for a in adv_samples if not a.positive],
                )
                sgd_step(disc, config.learning_rate, config.weight_decay, config.grad_clip)
            for a in adv_samples:
                score = _disc_score(disc, a.latents)
                disc_hits += int((score > 0.5) == a.positive)
                disc_total += 1

            pg_sum += batch_pg
            cr_sum += batch_cr
            adv_sum += batch_adv

        n_b = max(1, len(batches))
        pg_mean = pg_sum / n_b
        cr_mean = cr_sum / max(1, cr_count)
        adv_mean = adv_sum / max(1, adv_batches)
        report.pg_trace.append(pg_mean)
        report.cr_trace.append(cr_mean)
        report.adv_trace.append(adv_mean)
        report.total_trace.append(total_loss(pg_mean, cr_mean, adv_mean, weights))
        report.disc_accuracy_trace.append(disc_hits / disc_total if disc_total else 0.0)

    report.wall_time_seconds = perf_counter() - started
    return TrainResult(model, disc, report)
