"""Scheme parameters produced by setup: the PRF key, the LSH family and the tree height."""
from __future__ import annotations

import secrets
from dataclasses import dataclass

from dvfs.crypto import MasterKey
from dvfs.fuzzy import DEFAULT_K, DEFAULT_WIDTH, LshFamily
from dvfs.index import DEFAULT_HEIGHT


@dataclass(frozen=True)
class Params:
    key: MasterKey
    family: LshFamily
    height: int = DEFAULT_HEIGHT

    @classmethod
    def generate(cls, k: int = DEFAULT_K, height: int = DEFAULT_HEIGHT,
                 width: float = DEFAULT_WIDTH, lsh_seed: bytes | None = None) -> "Params":
        seed = lsh_seed if lsh_seed is not None else secrets.token_bytes(32)
        return cls(MasterKey.generate(), LshFamily(seed, k, width), height)
