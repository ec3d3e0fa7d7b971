"""Keyword extraction and synthetic corpus generation."""
from __future__ import annotations

import random
import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

from dvfs.errors import KeywordError
from dvfs.fuzzy import stem

_TOKEN = re.compile(r"[a-z0-9]+")
MIN_TOKEN_LEN = 2


def _word_file(name: str) -> list[str]:
    text = resources.files("dvfs").joinpath("data", name).read_text(encoding="ascii")
    return [w for line in text.splitlines() if not line.startswith("#") for w in line.split()]


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return frozenset(_word_file("stopwords.txt"))


@lru_cache(maxsize=None)
def dictionary() -> tuple[str, ...]:
    """Seed words with pairwise distinct stems, in file order."""
    seen: set[str] = set()
    out = []
    for w in _word_file("wordlist.txt"):
        s = stem(w)
        if s not in seen:
            seen.add(s)
            out.append(w)
    return tuple(out)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def extract_keywords(text: str) -> list[str]:
    """Tokenize, drop stopwords and short tokens, stem, dedup (sorted)."""
    stops = stopwords()
    out = set()
    for tok in tokenize(text):
        if len(tok) < MIN_TOKEN_LEN or tok in stops:
            continue
        try:
            out.add(stem(tok))
        except KeywordError:
            continue
    return sorted(out)


_SUFFIXES = ("s", "ed", "ing")


def inflect(word: str, rng: random.Random) -> str:
    """A same-root surface form such as "walking" for "walk"."""
    suffix = rng.choice(_SUFFIXES)
    if suffix in ("ed", "ing") and word.endswith("e"):
        return word[:-1] + suffix
    if suffix == "s" and word.endswith(("s", "x", "sh", "ch")):
        return word + "es"
    return word + suffix


def zipf_weights(n: int, s: float = 1.0) -> list[float]:
    return [1.0 / (r ** s) for r in range(1, n + 1)]


def generate_documents(n_docs: int, seed: int = 0, min_keywords: int = 45,
                       max_keywords: int = 92, words: tuple[str, ...] | None = None,
                       zipf_s: float = 1.0) -> list[str]:
    """Synthetic documents whose distinct keywords follow a Zipf law over ``words``."""
    rng = random.Random(seed)
    vocab = list(words or dictionary())
    rng.shuffle(vocab)
    weights = zipf_weights(len(vocab), zipf_s)
    stops = sorted(stopwords())
    docs = []
    for _ in range(n_docs):
        want = rng.randint(min_keywords, min(max_keywords, len(vocab)))
        chosen: list[str] = []
        seen = set()
        while len(chosen) < want:
            w = rng.choices(vocab, weights)[0]
            if w not in seen:
                seen.add(w)
                chosen.append(w)
        tokens = []
        for w in chosen:
            tokens.append(inflect(w, rng) if rng.random() < 0.2 else w)
            if rng.random() < 0.5:
                tokens.append(rng.choice(stops))
        rng.shuffle(tokens)
        docs.append(" ".join(tokens) + "\n")
    return docs


def write_corpus(directory: str | Path, docs: list[str]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, text in enumerate(docs):
        p = directory / f"doc{i:05d}.txt"
        p.write_text(text, encoding="ascii")
        paths.append(p)
    return paths
