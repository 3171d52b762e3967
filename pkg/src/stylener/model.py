"""Sequence-to-sequence transfer model with handwritten gradients.

A GRU encoder reads a prefixed token sequence; a GRU decoder with additive
attention emits output logits. Everything is float64 numpy, every forward
keeps the caches its reverse-mode pass needs, and gradients accumulate into
:class:`ParamSet` buffers (so losses compose by addition). The per-timestep
recurrences run through the kernels module, jitted when numba is available.

Relaxed sampling uses the Gumbel-softmax trick so a sampled paraphrase stays
differentiable; hard sampling is the constrained path that consults the
decoding automaton and the top-k/top-p filter.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import kernels as K
from .automaton import AutomatonError, allowed_mask, initial_state, is_terminal, step
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import TypeRegistry
from .linearize import PrefixScheme, TaskPrefix
from .seeding import derive_rng
from .vocab import BOS, EOS, Vocabulary

__all__ = [
    "ModelConfig",
    "SamplerConfig",
    "ParamSet",
    "TransferModel",
    "ModelError",
    "init_transfer_model",
    "init_discriminator",
    "softmax",
    "log_softmax",
    "sigmoid",
    "gumbel_noise",
    "gumbel_softmax",
    "filter_top_k_top_p",
    "encode",
    "decode_step",
    "constrained_sample",
    "sample_soft",
    "SoftSample",
    "discriminate",
    "save_transfer_model",
    "load_transfer_model",
    "save_discriminator",
    "load_discriminator",
]

_PROB_FLOOR = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 32
    init_scale: float = 0.08
    tie_embeddings: bool = False
    max_len: int = 64

    def __post_init__(self):
        if self.dim < 1:
            raise ModelError("dim must be >= 1")
        if self.init_scale <= 0:
            raise ModelError("init_scale must be > 0")
        if self.max_len < 2:
            raise ModelError("max_len must be >= 2")


@dataclass(frozen=True)
class SamplerConfig:
    top_k: int = 50
    top_p: float = 0.98
    temperature: float = 1.5

    def __post_init__(self):
        if self.top_k < 1:
            raise ModelError("top_k must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ModelError("top_p must be in (0, 1]")
        if self.temperature <= 0.0:
            raise ModelError("temperature must be > 0")


class ParamSet:
    """Named float64 tensors, each paired with a same-shape gradient buffer."""

    def __init__(self, tensors: dict[str, np.ndarray]):
        self.tensors = {
            name: np.array(value, dtype=np.float64) for name, value in tensors.items()
        }
        self.grads = {name: np.zeros_like(v) for name, v in self.tensors.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def grad(self, name: str) -> np.ndarray:
        return self.grads[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())

    def grads_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.grads.values())

    def clone(self) -> "ParamSet":
        return ParamSet(self.tensors)


_GATES = ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh")


def _generator_shapes(config: ModelConfig, vocab_size: int) -> dict[str, tuple]:
    d = config.dim
    shapes: dict[str, tuple] = {"emb": (vocab_size, d)}
    for side in ("enc", "dec"):
        for gate in _GATES:
            shapes[f"{side}_{gate}"] = (d,) if gate.startswith("b") else (d, d)
    shapes["att_W"] = (d, d)
    shapes["att_U"] = (d, d)
    shapes["att_v"] = (d,)
    shapes["cmb_W"] = (2 * d, d)
    shapes["cmb_b"] = (d,)
    if not config.tie_embeddings:
        shapes["out_W"] = (d, vocab_size)
    shapes["out_b"] = (vocab_size,)
    return shapes


@dataclass
class TransferModel:
    params: ParamSet
    config: ModelConfig
    vocab: Vocabulary


def init_transfer_model(
    config: ModelConfig, vocab: Vocabulary, seed: int = 0
) -> TransferModel:
    rng = derive_rng(seed, "transfer_init")
    s = config.init_scale
    tensors = {
        name: rng.uniform(-s, s, size=shape)
        for name, shape in _generator_shapes(config, len(vocab)).items()
    }
    return TransferModel(ParamSet(tensors), config, vocab)


def init_discriminator(config: ModelConfig, seed: int = 0) -> ParamSet:
    rng = derive_rng(seed, "discriminator_init")
    s = config.init_scale
    return ParamSet(
        {"w": rng.uniform(-s, s, size=config.dim), "b": np.zeros(())}
    )


# -- elementary math ------------------------------------------------------


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def sigmoid(x):
    return np.where(
        x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x)))
    )


def _softmax_vjp(soft: np.ndarray, dsoft: np.ndarray) -> np.ndarray:
    """Reverse rule for y = softmax(x): dx = y * (dy - <dy, y>)."""
    inner = np.sum(dsoft * soft, axis=-1, keepdims=True)
    return soft * (dsoft - inner)


# -- Gumbel-softmax relaxation --------------------------------------------


def gumbel_noise(shape, rng: np.random.Generator) -> np.ndarray:
    u = np.clip(rng.random(shape), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    return -np.log(-np.log(u))


def gumbel_softmax(
    probs: np.ndarray,
    tau: float,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Relaxed one-hot sample of a categorical distribution.

    Computes softmax((log probs + g) / tau) with standard Gumbel noise g.
    Pass ``noise`` explicitly to reuse a draw (zero noise at tau = 1 returns
    ``probs`` itself up to rounding).
    """
    if tau <= 0:
        raise ModelError("tau must be > 0")
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0):
        raise ModelError("probabilities must be non-negative")
    if noise is None:
        if rng is None:
            raise ModelError("need an rng or explicit noise")
        noise = gumbel_noise(probs.shape, rng)
    logits = np.log(np.maximum(probs, _PROB_FLOOR))
    return softmax((logits + noise) / tau)


def _soft_from_logits(logits: np.ndarray, noise: np.ndarray, tau: float) -> np.ndarray:
    # For probs = softmax(logits) the relaxed sample equals
    # softmax((logits + g) / tau): shifting logits by the log partition
    # cancels inside the outer softmax.
    return softmax((logits + noise) / tau)


def _soft_from_logits_vjp(soft: np.ndarray, dsoft: np.ndarray, tau: float) -> np.ndarray:
    return _softmax_vjp(soft, dsoft) / tau


# -- top-k / top-p filtering ----------------------------------------------


def filter_top_k_top_p(logits: np.ndarray, sampler: SamplerConfig) -> np.ndarray:
    """Temperature softmax, keep the k most probable ids, then the smallest
    prefix of those whose cumulative mass reaches top_p, renormalized.

    Ties rank by lower id first (stable sort), so the result is deterministic.
    Masked ids (-inf logits) carry zero probability and can only survive with
    zero weight. The argmax id always survives; the result is never empty.
    """
    logits = np.asarray(logits, dtype=np.float64)
    finite = np.isfinite(logits)
    if not finite.any():
        raise ModelError("all logits are masked")
    scaled = np.where(finite, logits / sampler.temperature, -np.inf)
    shifted = scaled - np.max(scaled[finite])
    probs = np.exp(np.where(finite, shifted, -np.inf))
    probs = probs / probs.sum()
    order = np.argsort(-probs, kind="stable")
    kept = order[: min(sampler.top_k, probs.shape[0])]
    cumulative = np.cumsum(probs[kept])
    reach = np.nonzero(cumulative >= sampler.top_p)[0]
    cut = (reach[0] + 1) if reach.size else kept.shape[0]
    survivors = kept[:cut]
    out = np.zeros_like(probs)
    mass = probs[survivors].sum()
    out[survivors] = probs[survivors] / mass
    return out


# -- recurrent passes ------------------------------------------------------


@dataclass
class GruCache:
    X: np.ndarray
    h0: np.ndarray
    H: np.ndarray
    Z: np.ndarray
    R: np.ndarray
    C: np.ndarray


def _gru_run(params: ParamSet, side: str, X: np.ndarray, h0: np.ndarray | None = None) -> GruCache:
    d = params[f"{side}_bz"].shape[0]
    if h0 is None:
        h0 = np.zeros(d)
    H, Z, R, C = K.gru_forward(
        X,
        h0,
        params[f"{side}_Wz"],
        params[f"{side}_Uz"],
        params[f"{side}_bz"],
        params[f"{side}_Wr"],
        params[f"{side}_Ur"],
        params[f"{side}_br"],
        params[f"{side}_Wh"],
        params[f"{side}_Uh"],
        params[f"{side}_bh"],
    )
    return GruCache(X, h0, H, Z, R, C)


def _gru_run_backward(
    params: ParamSet,
    side: str,
    cache: GruCache,
    dH: np.ndarray,
    dh_last: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    if dh_last is None:
        dh_last = np.zeros_like(cache.h0)
    out = K.gru_backward(
        cache.X,
        cache.h0,
        cache.H,
        cache.Z,
        cache.R,
        cache.C,
        dH,
        dh_last,
        params[f"{side}_Wz"],
        params[f"{side}_Uz"],
        params[f"{side}_Wr"],
        params[f"{side}_Ur"],
        params[f"{side}_Wh"],
        params[f"{side}_Uh"],
    )
    dX, dh0 = out[0], out[1]
    for name, grad in zip(_GATES, out[2:]):
        params.grads[f"{side}_{name}"] += grad
    return dX, dh0


@dataclass
class EncodeCache:
    ids: np.ndarray | None  # None when encoding a raw input matrix
    gru: GruCache


def encode_ids(model: TransferModel, ids: np.ndarray) -> EncodeCache:
    X = model.params["emb"][np.asarray(ids, dtype=np.int64)]
    return EncodeCache(np.asarray(ids, dtype=np.int64), _gru_run(model.params, "enc", X))


def encode_matrix(model: TransferModel, X: np.ndarray) -> EncodeCache:
    return EncodeCache(None, _gru_run(model.params, "enc", X))


def encode_ids_backward(
    model: TransferModel, cache: EncodeCache, dH: np.ndarray, dh_last: np.ndarray | None = None
) -> None:
    dX, _ = _gru_run_backward(model.params, "enc", cache.gru, dH, dh_last)
    np.add.at(model.params.grads["emb"], cache.ids, dX)


def encode_matrix_backward(
    model: TransferModel, cache: EncodeCache, dH: np.ndarray, dh_last: np.ndarray | None = None
) -> np.ndarray:
    dX, _ = _gru_run_backward(model.params, "enc", cache.gru, dH, dh_last)
    return dX


def encode(model: TransferModel, ids: Sequence[int]) -> np.ndarray:
    """Latent sequence for a token id sequence (one row per input token)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ModelError("cannot encode an empty sequence")
    return encode_ids(model, ids).gru.H


# -- attention + output head ----------------------------------------------


@dataclass
class AttendCache:
    Hd: np.ndarray  # (M, d) decoder states
    Zl: np.ndarray  # (N, d) encoder latents
    Tn: np.ndarray  # (M, N, d)
    Al: np.ndarray  # (M, N) attention weights
    Cx: np.ndarray  # (M, d) contexts
    HC: np.ndarray  # (M, 2d)
    O: np.ndarray  # (M, d)
    logits: np.ndarray  # (M, V)


def _attend(params: ParamSet, Hd: np.ndarray, Zl: np.ndarray, tied: bool) -> AttendCache:
    A1 = Hd @ params["att_W"]
    A2 = Zl @ params["att_U"]
    Tn = np.tanh(A1[:, None, :] + A2[None, :, :])
    S = Tn @ params["att_v"]
    Al = softmax(S, axis=-1)
    Cx = Al @ Zl
    HC = np.hstack([Hd, Cx])
    O = np.tanh(HC @ params["cmb_W"] + params["cmb_b"])
    W_out = params["emb"].T if tied else params["out_W"]
    logits = O @ W_out + params["out_b"]
    return AttendCache(Hd, Zl, Tn, Al, Cx, HC, O, logits)


def _attend_backward(
    params: ParamSet, cache: AttendCache, dlogits: np.ndarray, tied: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (dHd, dZl); accumulates weight gradients."""
    grads = params.grads
    grads["out_b"] += dlogits.sum(axis=0)
    if tied:
        grads["emb"] += dlogits.T @ cache.O
        dO = dlogits @ params["emb"]
    else:
        grads["out_W"] += cache.O.T @ dlogits
        dO = dlogits @ params["out_W"].T
    dG = dO * (1.0 - cache.O**2)
    grads["cmb_W"] += cache.HC.T @ dG
    grads["cmb_b"] += dG.sum(axis=0)
    dHC = dG @ params["cmb_W"].T
    d = cache.Hd.shape[1]
    dHd = dHC[:, :d].copy()
    dCx = dHC[:, d:]
    dAl = dCx @ cache.Zl.T
    dZl = cache.Al.T @ dCx
    dS = _softmax_vjp(cache.Al, dAl)
    grads["att_v"] += np.einsum("mnd,mn->d", cache.Tn, dS)
    dPre = (dS[:, :, None] * params["att_v"][None, None, :]) * (1.0 - cache.Tn**2)
    dA1 = dPre.sum(axis=1)
    dA2 = dPre.sum(axis=0)
    grads["att_W"] += cache.Hd.T @ dA1
    grads["att_U"] += cache.Zl.T @ dA2
    dHd += dA1 @ params["att_W"].T
    dZl += dA2 @ params["att_U"].T
    return dHd, dZl


@dataclass
class TeacherCache:
    in_ids: np.ndarray
    enc_H: np.ndarray
    gru: GruCache
    att: AttendCache


def teacher_decode(model: TransferModel, enc_H: np.ndarray, in_ids: np.ndarray) -> TeacherCache:
    """Run the decoder over known inputs; logits[i] scores the token after
    in_ids[i]. The decoder starts from the final encoder state."""
    in_ids = np.asarray(in_ids, dtype=np.int64)
    X = model.params["emb"][in_ids]
    gru = _gru_run(model.params, "dec", X, h0=enc_H[-1].copy())
    att = _attend(model.params, gru.H, enc_H, model.config.tie_embeddings)
    return TeacherCache(in_ids, enc_H, gru, att)


def teacher_decode_backward(
    model: TransferModel, cache: TeacherCache, dlogits: np.ndarray
) -> np.ndarray:
    """Returns the gradient on the encoder latents."""
    dHd, dZl = _attend_backward(model.params, cache.att, dlogits, model.config.tie_embeddings)
    dX, dh0 = _gru_run_backward(model.params, "dec", cache.gru, dHd)
    np.add.at(model.params.grads["emb"], cache.in_ids, dX)
    dZl = dZl.copy()
    dZl[-1] += dh0
    return dZl


def decode_step(model: TransferModel, latents: np.ndarray, history: Sequence[int]) -> np.ndarray:
    """Next-token logits given encoder latents and emitted history.

    Pure function of its inputs: recomputes the decoder run from scratch, so
    it is the reference the incremental sampling path is tested against.
    """
    in_ids = np.array([BOS, *history], dtype=np.int64)
    cache = teacher_decode(model, latents, in_ids)
    return cache.att.logits[-1]


# -- stepwise decoding (sampling paths) ------------------------------------


@dataclass
class StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    z: np.ndarray
    r: np.ndarray
    c: np.ndarray
    h: np.ndarray
    Tn: np.ndarray
    al: np.ndarray
    cx: np.ndarray
    hc: np.ndarray
    o: np.ndarray
    logits: np.ndarray


def _decode_one(
    params: ParamSet, x: np.ndarray, h_prev: np.ndarray, Zl: np.ndarray, A2: np.ndarray, tied: bool
) -> StepCache:
    z = sigmoid(x @ params["dec_Wz"] + h_prev @ params["dec_Uz"] + params["dec_bz"])
    r = sigmoid(x @ params["dec_Wr"] + h_prev @ params["dec_Ur"] + params["dec_br"])
    c = np.tanh(x @ params["dec_Wh"] + (r * h_prev) @ params["dec_Uh"] + params["dec_bh"])
    h = (1.0 - z) * h_prev + z * c
    Tn = np.tanh(h @ params["att_W"] + A2)
    al = softmax(Tn @ params["att_v"])
    cx = al @ Zl
    hc = np.concatenate([h, cx])
    o = np.tanh(hc @ params["cmb_W"] + params["cmb_b"])
    W_out = params["emb"].T if tied else params["out_W"]
    logits = o @ W_out + params["out_b"]
    return StepCache(x, h_prev, z, r, c, h, Tn, al, cx, hc, o, logits)


def _decode_one_backward(
    params: ParamSet,
    sc: StepCache,
    Zl: np.ndarray,
    dlogits: np.ndarray,
    dh_next: np.ndarray,
    dZl: np.ndarray,
    dA2: np.ndarray,
    tied: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """One reverse step. Adds into dZl/dA2 in place; returns (dx, dh_prev)."""
    grads = params.grads
    d = sc.h.shape[0]
    grads["out_b"] += dlogits
    if tied:
        grads["emb"] += np.outer(dlogits, sc.o)
        do = dlogits @ params["emb"]
    else:
        grads["out_W"] += np.outer(sc.o, dlogits)
        do = params["out_W"] @ dlogits
    dg = do * (1.0 - sc.o**2)
    grads["cmb_W"] += np.outer(sc.hc, dg)
    grads["cmb_b"] += dg
    dhc = params["cmb_W"] @ dg
    dh = dh_next + dhc[:d]
    dcx = dhc[d:]
    dal = Zl @ dcx
    dZl += np.outer(sc.al, dcx)
    ds = sc.al * (dal - np.dot(dal, sc.al))
    grads["att_v"] += sc.Tn.T @ ds
    dPre = (ds[:, None] * params["att_v"][None, :]) * (1.0 - sc.Tn**2)
    da1 = dPre.sum(axis=0)
    dA2 += dPre
    grads["att_W"] += np.outer(sc.h, da1)
    dh = dh + params["att_W"] @ da1
    # GRU cell backward
    dz = dh * (sc.c - sc.h_prev)
    dc = dh * sc.z
    dh_prev = dh * (1.0 - sc.z)
    da_c = dc * (1.0 - sc.c**2)
    grads["dec_Wh"] += np.outer(sc.x, da_c)
    grads["dec_bh"] += da_c
    drh = params["dec_Uh"] @ da_c
    grads["dec_Uh"] += np.outer(sc.r * sc.h_prev, da_c)
    dh_prev += drh * sc.r
    dr = drh * sc.h_prev
    dx = params["dec_Wh"] @ da_c
    da_r = dr * sc.r * (1.0 - sc.r)
    grads["dec_Wr"] += np.outer(sc.x, da_r)
    grads["dec_Ur"] += np.outer(sc.h_prev, da_r)
    grads["dec_br"] += da_r
    dx += params["dec_Wr"] @ da_r
    dh_prev += params["dec_Ur"] @ da_r
    da_z = dz * sc.z * (1.0 - sc.z)
    grads["dec_Wz"] += np.outer(sc.x, da_z)
    grads["dec_Uz"] += np.outer(sc.h_prev, da_z)
    grads["dec_bz"] += da_z
    dx += params["dec_Wz"] @ da_z
    dh_prev += params["dec_Uz"] @ da_z
    return dx, dh_prev


@dataclass
class SoftSample:
    """A relaxed decode: per-step caches plus the soft outputs that fed the
    next step. ``n_content`` counts steps before the terminating EOS."""

    enc: EncodeCache
    steps: list[StepCache]
    softs: np.ndarray  # (S, V)
    noises: np.ndarray  # (S, V)
    hard_ids: np.ndarray  # (S,)
    n_content: int
    tau: float


def sample_soft(
    model: TransferModel,
    input_ids: np.ndarray,
    tau: float,
    max_steps: int,
    rng: np.random.Generator | None = None,
    noises: np.ndarray | None = None,
    fixed_steps: int | None = None,
) -> SoftSample:
    """Encode ``input_ids`` and decode a Gumbel-relaxed output sequence.

    Each step feeds the soft vector times the embedding table back in as the
    next input. Decoding stops after a step whose argmax is EOS (that step is
    excluded from ``n_content``) or at ``max_steps``; ``fixed_steps`` forces
    an exact step count instead, which keeps the computation a fixed graph
    for finite-difference checks.
    """
    if tau <= 0:
        raise ModelError("tau must be > 0")
    params = model.params
    tied = model.config.tie_embeddings
    enc = encode_ids(model, input_ids)
    Zl = enc.gru.H
    A2 = Zl @ params["att_U"]
    limit = fixed_steps if fixed_steps is not None else max_steps
    V = len(model.vocab)
    steps: list[StepCache] = []
    softs: list[np.ndarray] = []
    noise_rows: list[np.ndarray] = []
    hard: list[int] = []
    x = params["emb"][BOS].copy()
    h = Zl[-1].copy()
    n_content = None
    for s in range(limit):
        sc = _decode_one(params, x, h, Zl, A2, tied)
        if noises is not None:
            g = noises[s]
        else:
            if rng is None:
                raise ModelError("need an rng or explicit noises")
            g = gumbel_noise(V, rng)
        soft = _soft_from_logits(sc.logits, g, tau)
        steps.append(sc)
        softs.append(soft)
        noise_rows.append(g)
        tok = int(np.argmax(soft))
        hard.append(tok)
        if fixed_steps is None and tok == EOS:
            n_content = s
            break
        x = soft @ params["emb"]
        h = sc.h
    if n_content is None:
        n_content = len(steps)
    return SoftSample(
        enc,
        steps,
        np.array(softs).reshape(len(steps), V),
        np.array(noise_rows).reshape(len(steps), V),
        np.array(hard, dtype=np.int64),
        n_content,
        tau,
    )


def paraphrase_matrix(sample: SoftSample) -> np.ndarray:
    """Soft one-hot rows of the content steps (terminating EOS excluded)."""
    return sample.softs[: sample.n_content]


def sample_soft_backward(
    model: TransferModel, sample: SoftSample, dsofts: np.ndarray
) -> None:
    """Accumulate gradients of a function of the content-step soft outputs.

    ``dsofts`` has one row per content step. Steps at or past ``n_content``
    (the terminating EOS draw) feed nothing downstream, so they are skipped.
    """
    params = model.params
    tied = model.config.tie_embeddings
    n = sample.n_content
    if dsofts.shape[0] != n:
        raise ModelError(f"expected {n} gradient rows, got {dsofts.shape[0]}")
    Zl = sample.enc.gru.H
    dZl = np.zeros_like(Zl)
    dA2 = np.zeros_like(Zl)
    dh_next = np.zeros(Zl.shape[1])
    dsoft_carry = np.zeros(len(model.vocab))
    for s in range(n - 1, -1, -1):
        dsoft = dsofts[s] + dsoft_carry
        dlogits = _soft_from_logits_vjp(sample.softs[s], dsoft, sample.tau)
        dx, dh_prev = _decode_one_backward(
            params, sample.steps[s], Zl, dlogits, dh_next, dZl, dA2, tied
        )
        if s > 0:
            # x_s was soft_{s-1} @ emb
            dsoft_carry = params["emb"] @ dx
            params.grads["emb"] += np.outer(sample.softs[s - 1], dx)
        else:
            params.grads["emb"][BOS] += dx
        dh_next = dh_prev
    dZl += dA2 @ params["att_U"].T
    params.grads["att_U"] += Zl.T @ dA2
    dZl[-1] += dh_next
    encode_ids_backward(model, sample.enc, dZl)


# -- hard constrained sampling ---------------------------------------------


def constrained_sample(
    model: TransferModel,
    latents: np.ndarray,
    sampler: SamplerConfig,
    max_len: int,
    rng: np.random.Generator,
    masked: bool = True,
) -> np.ndarray:
    """Sample token ids autoregressively from the encoder latents.

    With ``masked`` (the normal mode) every step intersects the logits with
    the automaton's allowed set, so the function always returns a complete,
    parseable sequence of at most ``max_len`` ids ending in EOS. With
    ``masked=False`` (diagnostic only) the raw distribution is used and the
    sequence simply stops at EOS or at ``max_len`` tokens.
    """
    params = model.params
    tied = model.config.tie_embeddings
    A2 = latents @ params["att_U"]
    x = params["emb"][BOS].copy()
    h = latents[-1].copy()
    state = initial_state()
    out: list[int] = []
    while True:
        sc = _decode_one(params, x, h, latents, A2, tied)
        logits = sc.logits
        if masked:
            mask = allowed_mask(state, model.vocab, max_len)
            if not mask.any():
                raise AutomatonError("no allowed token (unreachable state)")
            logits = np.where(mask, logits, -np.inf)
        probs = filter_top_k_top_p(logits, sampler)
        tok = int(rng.choice(probs.shape[0], p=probs))
        out.append(tok)
        if masked:
            state = step(state, tok, model.vocab)
            if is_terminal(state):
                break
        else:
            if tok == EOS or len(out) >= max_len:
                break
        x = params["emb"][tok].copy()
        h = sc.h
    return np.array(out, dtype=np.int32)


# -- discriminator ----------------------------------------------------------


def discriminate(disc: ParamSet, latents: np.ndarray) -> float:
    """Probability that mean-pooled latents came from the source style."""
    if latents.shape[0] == 0:
        raise ModelError("cannot discriminate an empty latent sequence")
    pooled = latents.mean(axis=0)
    return float(sigmoid(pooled @ disc["w"] + disc["b"]))


def discriminate_backward(
    disc: ParamSet, latents: np.ndarray, dactivation: float
) -> np.ndarray:
    """Gradient wrt latents of the pre-sigmoid activation times
    ``dactivation``; accumulates the discriminator's own gradients."""
    pooled = latents.mean(axis=0)
    disc.grads["w"] += dactivation * pooled
    disc.grads["b"] += dactivation
    return np.tile(dactivation * disc["w"] / latents.shape[0], (latents.shape[0], 1))


# -- persistence ------------------------------------------------------------


def _vocab_meta(vocab: Vocabulary) -> dict:
    meta = {
        "types": list(vocab.types.names),
        "tokens": list(vocab.tokens),
        "prefixes": None,
    }
    if vocab.prefixes is not None:
        meta["prefixes"] = {
            "source_to_target": vocab.prefixes.source_to_target.text,
            "target_to_source": vocab.prefixes.target_to_source.text,
        }
    return meta


def _vocab_from_meta(meta: dict) -> Vocabulary:
    types = TypeRegistry(meta["types"])
    prefixes = None
    if meta["prefixes"] is not None:
        prefixes = PrefixScheme(
            TaskPrefix("source_to_target", meta["prefixes"]["source_to_target"]),
            TaskPrefix("target_to_source", meta["prefixes"]["target_to_source"]),
        )
    n_reserved = 4 + 2 * len(types)
    vocab = Vocabulary(types, meta["tokens"][n_reserved:], prefixes)
    if list(vocab.tokens) != list(meta["tokens"]):
        raise CheckpointError("vocabulary does not reconstruct from checkpoint meta")
    return vocab


def save_transfer_model(path: Union[str, Path], model: TransferModel) -> None:
    meta = {"config": asdict(model.config), "vocab": _vocab_meta(model.vocab)}
    save_checkpoint(path, "transfer", meta, model.params.tensors)


def load_transfer_model(path: Union[str, Path]) -> TransferModel:
    kind, meta, tensors = load_checkpoint(path)
    if kind != "transfer":
        raise CheckpointError(f"{path}: expected a transfer checkpoint, got {kind!r}")
    config = ModelConfig(**meta["config"])
    vocab = _vocab_from_meta(meta["vocab"])
    expected = _generator_shapes(config, len(vocab))
    _check_shapes(path, expected, tensors)
    return TransferModel(ParamSet(tensors), config, vocab)


def save_discriminator(path: Union[str, Path], disc: ParamSet, config: ModelConfig) -> None:
    save_checkpoint(path, "discriminator", {"config": asdict(config)}, disc.tensors)


def load_discriminator(path: Union[str, Path]) -> tuple[ParamSet, ModelConfig]:
    kind, meta, tensors = load_checkpoint(path)
    if kind != "discriminator":
        raise CheckpointError(f"{path}: expected a discriminator checkpoint, got {kind!r}")
    config = ModelConfig(**meta["config"])
    _check_shapes(path, {"w": (config.dim,), "b": ()}, tensors)
    return ParamSet(tensors), config


def _check_shapes(path, expected: dict[str, tuple], tensors: dict[str, np.ndarray]) -> None:
    missing = sorted(set(expected) - set(tensors))
    extra = sorted(set(tensors) - set(expected))
    if missing or extra:
        raise CheckpointError(f"{path}: tensor names mismatch (missing {missing}, extra {extra})")
    for name, shape in expected.items():
        if tuple(tensors[name].shape) != tuple(shape):
            raise CheckpointError(
                f"{path}: tensor {name!r} has shape {tensors[name].shape}, expected {shape}"
            )
