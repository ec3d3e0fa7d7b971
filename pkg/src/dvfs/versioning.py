"""Forward-private keyword updates.

The client keeps a local repository entry per bucket string: a version
number, a "queried since the last bump" flag and the last added/deleted
document ids. The ledger keeps a chain repository linking each version's
token to the previous one, so the search contract can walk back from the
current trapdoor to every older token without the client sending them.

A query sets the flag; the next addition bumps the version, so entries added
after a query are unreachable from any token issued before it.
"""
from __future__ import annotations

import os
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path

from dvfs.crypto import (
    H1_BYTES,
    MasterKey,
    TAG_TOKEN,
    hash_h2,
    hash_h3,
    join,
    prf,
    xor_bytes,
)
from dvfs.errors import ContractViolation, FormatError
from dvfs.index import EncryptedIndex, Tree, path_of
from dvfs.params import Params

_sysrand = random.SystemRandom()


def versioned_token(key: MasterKey, bucket: str, version: int) -> bytes:
    if version < 0:
        raise ContractViolation("version must be non-negative")
    return prf(key, TAG_TOKEN, join(bucket.encode("ascii"), str(version).encode("ascii")))


@dataclass
class LocalRepoEntry:
    b: bool = False
    v: int = 0
    n_add: int | None = None
    n_del: int | None = None


class LocalRepository:
    """Client-side version state keyed by bucket string."""

    def __init__(self):
        self._entries: dict[str, LocalRepoEntry] = {}

    def __contains__(self, bucket: str) -> bool:
        return bucket in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, bucket: str) -> LocalRepoEntry | None:
        return self._entries.get(bucket)

    def entry(self, bucket: str) -> LocalRepoEntry:
        e = self._entries.get(bucket)
        if e is None:
            e = self._entries[bucket] = LocalRepoEntry()
        return e

    def items(self):
        return self._entries.items()

    def dumps(self) -> str:
        def opt(x):
            return "-" if x is None else str(x)

        return "".join(
            f"LR {s} {int(e.b)} {e.v} {opt(e.n_add)} {opt(e.n_del)}\n"
            for s, e in sorted(self._entries.items())
        )

    @classmethod
    def loads(cls, text: str) -> "LocalRepository":
        repo = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split(" ")
            try:
                if len(parts) != 6 or parts[0] != "LR" or parts[2] not in ("0", "1"):
                    raise ValueError("expected 'LR <bucket> <b> <v> <n_add> <n_del>'")

                def opt(x):
                    return None if x == "-" else int(x)

                e = LocalRepoEntry(parts[2] == "1", int(parts[3]), opt(parts[4]), opt(parts[5]))
                if e.v < 0:
                    raise ValueError("negative version")
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from exc
            repo._entries[parts[1]] = e
        return repo

    def persist(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="ascii")

    @classmethod
    def load(cls, path: str | Path) -> "LocalRepository":
        return cls.loads(Path(path).read_text(encoding="ascii"))


@dataclass(frozen=True)
class ChainRecord:
    lookup_key: bytes
    payload: bytes


class ChainRepository:
    """Ledger-side map from H2(token) to H3(token) XOR previous token."""

    def __init__(self):
        self._records: dict[bytes, bytes] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChainRepository) and self._records == other._records

    def put(self, record: ChainRecord) -> None:
        with self._lock:
            known = self._records.get(record.lookup_key)
            if known is not None and known != record.payload:
                raise ContractViolation("conflicting chain record for an existing lookup key")
            self._records[record.lookup_key] = record.payload

    def get(self, lookup_key: bytes) -> bytes | None:
        return self._records.get(lookup_key)

    def records(self) -> list[ChainRecord]:
        return [ChainRecord(k, p) for k, p in self._records.items()]


def chain_record(current: bytes, previous: bytes) -> ChainRecord:
    return ChainRecord(hash_h2(current), xor_bytes(hash_h3(current), previous))


def resolve_history(br: ChainRepository, current_token: bytes) -> list[bytes]:
    """Tokens from ``current_token`` back to version 0, newest first.

    Stops at the first lookup miss, so a corrupted payload truncates the chain.
    """
    history = [current_token]
    for _ in range(len(br)):
        payload = br.get(hash_h2(history[-1]))
        if payload is None:
            break
        history.append(xor_bytes(payload, hash_h3(history[-1])))
    return history


@dataclass
class UpdateToken:
    """Index entries for one keyword addition (real entries plus nonce padding)."""

    real_entries: list[bytes]
    padding: list[bytes]
    chain_record: ChainRecord | None = None
    add_entries: list[bytes] = field(init=False)

    def __post_init__(self):
        combined = self.real_entries + self.padding
        _sysrand.shuffle(combined)
        self.add_entries = combined

    def apply(self, index: EncryptedIndex, br: ChainRepository) -> None:
        index.add_keys(self.add_entries, Tree.MAIN)
        if self.chain_record is not None:
            br.put(self.chain_record)


@dataclass
class DeletionToken:
    entries: list[bytes]

    def apply(self, index: EncryptedIndex) -> None:
        index.add_keys(self.entries, Tree.DELETE)


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def add_keyword(params: Params, lr: LocalRepository, index: EncryptedIndex, w: str,
                doc_id: int, br: ChainRepository | None = None) -> UpdateToken:
    """Build (and, when ``br`` is given, apply) the update for adding ``w`` to ``doc_id``.

    If the keyword was queried since its last bump the version is bumped and a
    chain record links the new token to the old one; the full root-to-leaf
    path is inserted under the new token. Otherwise the entries already shared
    with the previous addition's path are left out and the token is padded to
    exactly ``height`` entries with random nonces.
    """
    height = index.height
    leaf = path_of(doc_id, height)
    bucket = params.family.fuzzify(w)
    e = lr.entry(bucket)
    record = None
    if e.b:
        token = versioned_token(params.key, bucket, e.v + 1)
        record = chain_record(token, versioned_token(params.key, bucket, e.v))
        e.v += 1
        e.b = False
        real = index.path_keys(doc_id, token)
    else:
        token = versioned_token(params.key, bucket, e.v)
        keys = index.path_keys(doc_id, token)
        shared = 0
        if e.n_add is not None:
            shared = _common_prefix(leaf, path_of(e.n_add, height)) + 1
        real = keys[shared:]
    e.n_add = doc_id
    padding = [os.urandom(H1_BYTES) for _ in range(height - len(real))]
    update = UpdateToken(real, padding, record)
    if br is not None:
        update.apply(index, br)
    return update


def delete_keyword(params: Params, lr: LocalRepository, index: EncryptedIndex, w: str,
                   doc_id: int, apply: bool = True) -> DeletionToken:
    """Shadow ``w`` for ``doc_id`` in the deletion tree under every version so far.

    The keyword's flag is raised so that a later re-addition lands in a fresh
    version that this deletion does not cover.
    """
    path_of(doc_id, index.height)
    bucket = params.family.fuzzify(w)
    e = lr.entry(bucket)
    keys: list[bytes] = []
    for v in range(e.v, -1, -1):
        keys += index.path_keys(doc_id, versioned_token(params.key, bucket, v), Tree.DELETE)
    e.n_del = doc_id
    e.b = True
    token = DeletionToken(keys)
    if apply:
        token.apply(index)
    return token
