"""Shared builders for the test suite."""
from __future__ import annotations

import hashlib
import random

from dvfs.crypto import MasterKey, encrypt_doc
from dvfs.fuzzy import LshFamily
from dvfs.index import EncryptedIndex, leaf_digest, path_of
from dvfs.params import Params

FIXED_KEY = MasterKey(bytes(range(32)))
LSH_SEED = hashlib.sha256(b"dvfs-acceptance").digest()


def make_params(height: int = 8, k: int = 8, seed: bytes = LSH_SEED) -> Params:
    return Params(FIXED_KEY, LshFamily(seed, k), height)


def sha512_key(tag: bytes, path: str, token: bytes) -> bytes:
    """Index entry key computed straight from hashlib."""
    return hashlib.sha512(tag + path.encode() + b"\x1f" + token).digest()


def build_index(docs: dict[int, list[bytes]], height: int, key: MasterKey = FIXED_KEY):
    """Index plus ciphertexts for ``{doc_id: [tokens]}``."""
    index = EncryptedIndex(height)
    cts = {}
    for doc, tokens in sorted(docs.items()):
        ct = encrypt_doc(key, doc, b"document %d" % doc)
        cts[doc] = ct
        index.insert_doc(doc, tokens, leaf_digest(key, path_of(doc, height), ct.body))
    return index, cts


def distinct_words(params: Params, n: int, seed: int = 0) -> list[str]:
    """``n`` dictionary words whose buckets are pairwise distinct."""
    from dvfs.harness.corpus import dictionary

    rng = random.Random(seed)
    pool = list(dictionary())
    rng.shuffle(pool)
    out, seen = [], set()
    for w in pool:
        b = params.family.fuzzify(w)
        if b not in seen:
            seen.add(b)
            out.append(w)
            if len(out) == n:
                return out
    raise AssertionError("dictionary too small")
