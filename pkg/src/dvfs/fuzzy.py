"""Keyword fuzzification: Porter stemming, uni-gram vectors and p-stable LSH.

A keyword is normalized and stemmed, mapped to a 160-slot occurrence vector,
and hashed by ``k`` functions ``floor((a . v + b) / c)`` with Gaussian ``a``.
The resulting integers, joined with ``|``, form the bucket string that stands
in for the keyword everywhere else in the scheme.
"""
from __future__ import annotations

import re
from functools import lru_cache

import numpy as np
from nltk.stem.porter import PorterStemmer

from dvfs.errors import ContractViolation, KeywordError

LETTER_SLOTS = 5
DIGIT_SLOTS = 3
DIMENSIONS = 26 * LETTER_SLOTS + 10 * DIGIT_SLOTS  # 160

DEFAULT_K = 8
DEFAULT_WIDTH = 2.2

_VALID = re.compile(r"[a-z0-9]+")
_stemmer = PorterStemmer()


def normalize(word: str) -> str:
    w = word.strip().lower()
    if not w:
        raise KeywordError("empty keyword")
    if not _VALID.fullmatch(w):
        raise KeywordError(f"keyword {word!r} has characters outside [a-z0-9]")
    return w


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Lowercased Porter stem, iterated to a fixed point so that stem is idempotent."""
    w = normalize(word)
    while True:
        s = _stemmer.stem(w)
        if s == w or not s:
            return w
        w = s


def slot_index(ch: str, occurrence: int) -> int:
    """Position of the ``occurrence``-th (1-based) copy of ``ch`` in the vector."""
    if "a" <= ch <= "z":
        if not 1 <= occurrence <= LETTER_SLOTS:
            raise ContractViolation("letter occurrence out of range")
        return (ord(ch) - 97) * LETTER_SLOTS + occurrence - 1
    if "0" <= ch <= "9":
        if not 1 <= occurrence <= DIGIT_SLOTS:
            raise ContractViolation("digit occurrence out of range")
        return 26 * LETTER_SLOTS + (ord(ch) - 48) * DIGIT_SLOTS + occurrence - 1
    raise KeywordError(f"character {ch!r} outside [a-z0-9]")


def vectorize(word: str) -> np.ndarray:
    """160-dim 0/1 vector; slot (ch, j) is set iff ``ch`` occurs at least j times.

    Occurrences beyond the per-character cap (5 for letters, 3 for digits) are
    dropped, so words with equal capped character multisets share a vector.
    """
    if not word:
        raise KeywordError("empty keyword")
    v = np.zeros(DIMENSIONS, dtype=np.uint8)
    counts: dict[str, int] = {}
    for ch in word:
        if not ("a" <= ch <= "z" or "0" <= ch <= "9"):
            raise KeywordError(f"character {ch!r} outside [a-z0-9]")
        n = counts.get(ch, 0) + 1
        counts[ch] = n
        cap = LETTER_SLOTS if ch.isalpha() else DIGIT_SLOTS
        if n <= cap:
            v[slot_index(ch, n)] = 1
    return v


def parse_bucket(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split("|"))


class LshFamily:
    """``k`` p-stable (Gaussian) hash functions reproducible from a 32-byte seed."""

    def __init__(self, seed: bytes, k: int = DEFAULT_K, width: float = DEFAULT_WIDTH):
        if k < 1:
            raise ContractViolation("k must be at least 1")
        if not width > 0:
            raise ContractViolation("window width must be positive")
        if len(seed) != 32:
            raise ContractViolation("LSH seed must be 32 bytes")
        self.seed = seed
        self.k = k
        self.width = float(width)
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(seed, "big")))
        self.a = rng.standard_normal((k, DIMENSIONS))
        self.b = rng.uniform(0.0, self.width, k)
        self.a.setflags(write=False)
        self.b.setflags(write=False)
        self._cache: dict[str, str] = {}

    def __repr__(self) -> str:
        return f"LshFamily(k={self.k}, width={self.width})"

    def hash_values(self, v: np.ndarray) -> np.ndarray:
        return np.floor((self.a @ v + self.b) / self.width).astype(np.int64)

    def hash_matrix(self, vs: np.ndarray) -> np.ndarray:
        """Hash values for a batch of vectors (rows); shape (n, k)."""
        return np.floor((vs @ self.a.T + self.b) / self.width).astype(np.int64)

    def bucket(self, v: np.ndarray) -> str:
        return "|".join(str(int(x)) for x in self.hash_values(v))

    def fuzzify(self, raw_word: str) -> str:
        s = self._cache.get(raw_word)
        if s is None:
            s = self.bucket(vectorize(stem(raw_word)))
            self._cache[raw_word] = s
        return s


def lsh_bucket(fam: LshFamily, v: np.ndarray) -> str:
    return fam.bucket(v)


def fuzzify(fam: LshFamily, raw_word: str) -> str:
    return fam.fuzzify(raw_word)
