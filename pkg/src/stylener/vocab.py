"""Token vocabulary shared by the transfer model and the decoding automaton.

Id layout is fixed: PAD=0, BOS=1, EOS=2, UNK=3, then one start/end marker
pair per registry type in registry order, then every remaining surface token
(prefix words included) in sorted order. Rebuilding from the same registry,
prefixes and token set therefore reproduces identical ids.
"""

from __future__ import annotations

import enum
from typing import Iterable, Sequence

import numpy as np

from .corpus import CorpusError, TypeRegistry
from .linearize import PrefixScheme, end_marker, start_marker

__all__ = ["TokenClass", "Vocabulary", "PAD", "BOS", "EOS", "UNK"]

PAD, BOS, EOS, UNK = 0, 1, 2, 3
_SPECIAL_TOKENS = ("<PAD>", "<BOS>", "<EOS>", "<UNK>")


class TokenClass(enum.Enum):
    ORDINARY = "ordinary"
    START_MARKER = "start_marker"
    END_MARKER = "end_marker"
    BOS = "bos"
    EOS = "eos"
    PAD = "pad"
    UNK = "unk"


class Vocabulary:
    def __init__(
        self,
        types: TypeRegistry,
        surface_tokens: Iterable[str],
        prefixes: PrefixScheme | None = None,
    ):
        self.types = types
        self.prefixes = prefixes
        tokens: list[str] = list(_SPECIAL_TOKENS)
        self._start_ids: dict[str, int] = {}
        self._end_ids: dict[str, int] = {}
        for t in types:
            self._start_ids[t] = len(tokens)
            tokens.append(start_marker(t))
            self._end_ids[t] = len(tokens)
            tokens.append(end_marker(t))
        reserved = set(tokens)
        words = set(surface_tokens)
        if prefixes is not None:
            words.update(prefixes.all_tokens())
        words -= reserved
        tokens.extend(sorted(words))
        self.tokens: tuple[str, ...] = tuple(tokens)
        self._index: dict[str, int] = {tok: i for i, tok in enumerate(tokens)}

        size = len(tokens)
        self._classes = np.full(size, TokenClass.ORDINARY.value, dtype=object)
        self._classes[PAD] = TokenClass.PAD.value
        self._classes[BOS] = TokenClass.BOS.value
        self._classes[EOS] = TokenClass.EOS.value
        self._classes[UNK] = TokenClass.UNK.value
        self._marker_type: dict[int, str] = {}
        for t in types:
            sid, eid = self._start_ids[t], self._end_ids[t]
            self._classes[sid] = TokenClass.START_MARKER.value
            self._classes[eid] = TokenClass.END_MARKER.value
            self._marker_type[sid] = t
            self._marker_type[eid] = t
        self.ordinary_mask = self._classes == TokenClass.ORDINARY.value
        self.start_mask = self._classes == TokenClass.START_MARKER.value

    # -- lookups ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def classify(self, token_id: int) -> tuple[TokenClass, str | None]:
        """Total classification of a vocabulary id; markers carry their type."""
        cls = TokenClass(self._classes[token_id])
        return cls, self._marker_type.get(token_id)

    def start_id(self, entity_type: str) -> int:
        return self._start_ids[entity_type]

    def end_id(self, entity_type: str) -> int:
        return self._end_ids[entity_type]

    def marker_entity_type(self, token_id: int) -> str:
        return self._marker_type[token_id]

    # -- encoding --------------------------------------------------------

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.id_of(t) for t in tokens], dtype=np.int32)

    def decode(self, ids: Sequence[int], skip_special: bool = False) -> list[str]:
        out = []
        for i in ids:
            if skip_special and int(i) in (PAD, BOS, EOS):
                continue
            out.append(self.tokens[int(i)])
        return out

    def prefix_ids(self, direction: str) -> np.ndarray:
        if self.prefixes is None:
            raise CorpusError("vocabulary was built without prefixes")
        ids = self.encode(self.prefixes.for_direction(direction).tokens)
        if np.any(ids == UNK):
            raise CorpusError("prefix tokens missing from vocabulary")
        return ids
