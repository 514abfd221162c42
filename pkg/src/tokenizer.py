"""Character tokenizer mapping domain names onto a fixed 45-symbol vocabulary.

Index 0 is padding, index 1 collects every character outside the alphabet and
indices 2..44 are literal characters. Names are lower-cased, truncated on the
right (payload-bearing labels come first) and padded on the right.
"""

import string
from functools import lru_cache
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from src.errors import UsageError

PAD = "<PAD>"
OOV = "<OOV>"
PAD_IDX = 0
OOV_IDX = 1
VOCAB_SIZE = 45

LITERALS = string.ascii_lowercase + string.digits + "-._=+/~"


class Vocabulary:
    """Ordered, immutable character vocabulary."""

    def __init__(self, symbols: Sequence[str]):
        symbols = tuple(symbols)
        if len(symbols) < 3 or symbols[PAD_IDX] != PAD or symbols[OOV_IDX] != OOV:
            raise UsageError("vocabulary must start with PAD and OOV followed by literals")
        literals = symbols[2:]
        if any(len(ch) != 1 for ch in literals) or len(set(literals)) != len(literals):
            raise UsageError("vocabulary literals must be distinct single characters")
        self._symbols: Tuple[str, ...] = symbols
        self._index: Dict[str, int] = {ch: i for i, ch in enumerate(symbols) if i >= 2}

    @property
    def symbols(self) -> Tuple[str, ...]:
        return self._symbols

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and other.symbols == self.symbols

    def __hash__(self) -> int:
        return hash(self._symbols)

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    def lookup(self, ch: str) -> int:
        return self._index.get(ch, OOV_IDX)

    def symbol(self, index: int) -> str:
        return self._symbols[index]


@lru_cache(maxsize=1)
def build_vocabulary() -> Vocabulary:
    return Vocabulary((PAD, OOV) + tuple(LITERALS))


def encode_domain(name: str, l: int, vocab: Vocabulary = None) -> np.ndarray:
    if l < 1:
        raise UsageError(f"sequence length must be positive, got {l}")
    vocab = vocab or build_vocabulary()
    out = np.full(l, PAD_IDX, dtype=np.int64)
    prefix = name.lower()[:l]
    for i, ch in enumerate(prefix):
        out[i] = vocab.lookup(ch)
    return out


def encode_batch(names: Iterable[str], l: int, vocab: Vocabulary = None) -> np.ndarray:
    vocab = vocab or build_vocabulary()
    rows = [encode_domain(name, l, vocab) for name in names]
    if not rows:
        return np.zeros((0, l), dtype=np.int64)
    return np.stack(rows)


def decode_indices(indices: Sequence[int], vocab: Vocabulary = None) -> str:
    """Inverse of ``encode_domain`` up to the first PAD; OOV renders as U+FFFD."""
    vocab = vocab or build_vocabulary()
    chars = []
    for idx in indices:
        idx = int(idx)
        if idx == PAD_IDX:
            break
        chars.append("�" if idx == OOV_IDX else vocab.symbol(idx))
    return "".join(chars)
