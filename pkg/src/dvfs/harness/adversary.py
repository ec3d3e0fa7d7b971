"""A dishonest cloud server: corrupts what it returns, then the verifier runs."""
from __future__ import annotations

import random
from enum import Enum

from dvfs.crypto import Ciphertext, encrypt_doc
from dvfs.harness.system import DvfsSystem
from dvfs.verify import VerifyReport


class Mode(str, Enum):
    NONE = "none"
    TAMPER_DOC = "tamper-doc"
    DROP_RESULT = "drop-result"
    STALE_DOC = "stale-doc"


def corrupt(system: DvfsSystem, mode: Mode, ciphertexts: list[Ciphertext],
            rng: random.Random) -> list[Ciphertext]:
    if mode is Mode.NONE or not ciphertexts:
        return list(ciphertexts)
    out = list(ciphertexts)
    i = rng.randrange(len(out))
    victim = out[i]
    if mode is Mode.TAMPER_DOC:
        body = bytearray(victim.body)
        pos = rng.randrange(len(body))
        body[pos] ^= 1 << rng.randrange(8)
        out[i] = Ciphertext(victim.doc_id, bytes(body))
    elif mode is Mode.DROP_RESULT:
        del out[i]
    elif mode is Mode.STALE_DOC:
        # an older, well-formed upload of the same document
        plain = system.decrypt(victim)
        out[i] = encrypt_doc(system.params.key, victim.doc_id, plain)
    return out


def run(system: DvfsSystem, mode: Mode | str, words: list[str], seed: int = 0) -> VerifyReport:
    mode = Mode(mode)
    rng = random.Random(seed)
    q = system.search(words)
    served = corrupt(system, mode, q.ciphertexts, rng)
    _, report = system.verify(q.transcript, served)
    return report
