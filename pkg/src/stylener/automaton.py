"""Finite-state control for constrained decoding.

Tracks just enough to decide which vocabulary ids may come next so that any
finished sequence parses as a valid marker linearization: the current phase,
the open entity type, how many tokens that entity holds so far, and how many
tokens were emitted. A lookahead term keeps a terminating suffix affordable
within the length budget, so generation can never paint itself into a corner.

``max_len`` counts emitted tokens including the closing EOS (BOS is input
only and never counted).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import vocab as V
from .vocab import TokenClass, Vocabulary

__all__ = [
    "Phase",
    "DecoderState",
    "AutomatonError",
    "initial_state",
    "allowed_mask",
    "step",
    "is_terminal",
    "walk",
    "MIN_SENTENCE_LEN",
]

# Shortest legal sentence is one ordinary token plus EOS.
MIN_SENTENCE_LEN = 2


class Phase(enum.Enum):
    AT_START = "at_start"
    IN_TEXT = "in_text"
    AFTER_ENTITY = "after_entity"
    IN_ENTITY = "in_entity"
    DONE = "done"


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True)
class DecoderState:
    phase: Phase
    entity_type: str | None = None  # set iff phase == IN_ENTITY
    tokens_inside: int = 0  # ordinary tokens of the open entity
    emitted_segments: int = 0  # closed segments (text runs and entities)
    steps: int = 0  # emitted tokens so far, EOS included when taken


def initial_state() -> DecoderState:
    return DecoderState(Phase.AT_START)


def is_terminal(state: DecoderState) -> bool:
    return state.phase is Phase.DONE


def _min_steps_to_done(state: DecoderState) -> int:
    """Length of the shortest token suffix that reaches DONE."""
    if state.phase is Phase.DONE:
        return 0
    if state.phase in (Phase.IN_TEXT, Phase.AFTER_ENTITY):
        return 1  # EOS
    if state.phase is Phase.AT_START:
        return 2  # one ordinary token, then EOS
    if state.tokens_inside >= 1:
        return 2  # end marker, then EOS
    return 3  # one entity token, end marker, then EOS


def allowed_mask(state: DecoderState, vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Boolean mask over the vocabulary of ids legal in ``state``.

    PAD, BOS and UNK are never allowed. For every reachable non-terminal
    state under ``max_len >= 2`` the mask is non-empty, because a token is
    only ever allowed when the state it leads to still fits a terminating
    suffix in the remaining budget.
    """
    if max_len < MIN_SENTENCE_LEN:
        raise AutomatonError(f"max_len must be >= {MIN_SENTENCE_LEN}")
    mask = np.zeros(len(vocab), dtype=bool)
    if state.phase is Phase.DONE:
        return mask
    budget = max_len - state.steps - 1  # steps left after emitting one token
    if state.phase is Phase.IN_ENTITY:
        if budget >= 2:
            mask |= vocab.ordinary_mask
        if state.tokens_inside >= 1 and budget >= 1:
            mask[vocab.end_id(state.entity_type)] = True
        return mask
    if budget >= 1:
        mask |= vocab.ordinary_mask
    if budget >= 3:
        mask |= vocab.start_mask
    if state.phase is not Phase.AT_START:
        mask[V.EOS] = True
    return mask


def step(
    state: DecoderState,
    token_id: int,
    vocab: Vocabulary,
    max_len: int | None = None,
) -> DecoderState:
    """Apply one emitted token. Raises on any token the phase forbids; when
    ``max_len`` is given, also on tokens that break the length budget."""
    if max_len is not None:
        if not allowed_mask(state, vocab, max_len)[token_id]:
            raise AutomatonError(
                f"token {vocab.token_of(token_id)!r} not allowed in phase "
                f"{state.phase.value} at step {state.steps} (max_len {max_len})"
            )
    cls, entity_type = vocab.classify(token_id)
    steps = state.steps + 1
    if state.phase is Phase.DONE:
        raise AutomatonError("sequence already terminated")
    if state.phase is Phase.IN_ENTITY:
        if cls is TokenClass.ORDINARY:
            return replace(state, tokens_inside=state.tokens_inside + 1, steps=steps)
        if cls is TokenClass.END_MARKER:
            if entity_type != state.entity_type:
                raise AutomatonError(
                    f"<END_{entity_type}> cannot close <START_{state.entity_type}>"
                )
            if state.tokens_inside < 1:
                raise AutomatonError("entity closed with no tokens inside")
            return DecoderState(
                Phase.AFTER_ENTITY,
                emitted_segments=state.emitted_segments + 1,
                steps=steps,
            )
        raise AutomatonError(f"{cls.value} token not allowed inside an entity")
    # AT_START, IN_TEXT, AFTER_ENTITY
    if cls is TokenClass.ORDINARY:
        return DecoderState(
            Phase.IN_TEXT, emitted_segments=state.emitted_segments, steps=steps
        )
    if cls is TokenClass.START_MARKER:
        # Entering an entity closes any open text run.
        closed = 1 if state.phase is Phase.IN_TEXT else 0
        return DecoderState(
            Phase.IN_ENTITY,
            entity_type=entity_type,
            tokens_inside=0,
            emitted_segments=state.emitted_segments + closed,
            steps=steps,
        )
    if cls is TokenClass.EOS:
        if state.phase is Phase.AT_START:
            raise AutomatonError("empty sentence: EOS before any content")
        closed = 1 if state.phase is Phase.IN_TEXT else 0
        return DecoderState(
            Phase.DONE,
            emitted_segments=state.emitted_segments + closed,
            steps=steps,
        )
    raise AutomatonError(f"{cls.value} token not allowed in phase {state.phase.value}")


def walk(
    token_ids, vocab: Vocabulary, max_len: int | None = None
) -> DecoderState:
    """Replay a full sequence from the initial state; returns the end state."""
    state = initial_state()
    for token_id in token_ids:
        state = step(state, int(token_id), vocab, max_len)
    return state
