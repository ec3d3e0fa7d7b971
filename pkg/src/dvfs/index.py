"""Encrypted virtual binary tree backed by flat key sets.

A node is addressed by its path code, the 0/1 string from the root ("" is the
root, "0"/"1" its children). Document ``i`` lives at the leaf whose code is
the zero-padded binary form of ``i`` with ``height - 1`` bits. Indexing a
token for a document stores ``H1(tag || path || 0x1F || token)`` for every
node on the root-to-leaf path. Main-tree and deletion-tree entries use
different tag bytes, so they share one hash space without colliding.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from dvfs import kernels
from dvfs.crypto import H1_BYTES, PRF_BYTES, MasterKey, TAG_DIGEST, join, prf
from dvfs.errors import (
    CapacityError,
    ContractViolation,
    DuplicateDocumentError,
    FormatError,
)

DEFAULT_HEIGHT = 32
FORMAT_VERSION = 1


class Tree(Enum):
    MAIN = b"M"
    DELETE = b"B"


def path_of(doc_id: int, height: int) -> str:
    depth = height - 1
    if doc_id < 0 or doc_id >= 1 << depth:
        raise CapacityError(f"document id {doc_id} does not fit a tree of height {height}")
    return format(doc_id, f"0{depth}b") if depth else ""


def doc_id_of(leaf: str) -> int:
    return int(leaf, 2) if leaf else 0


def nodes_on_path(leaf: str, height: int) -> list[str]:
    if len(leaf) != height - 1 or leaf.strip("01"):
        raise ContractViolation(f"{leaf!r} is not a leaf of a height-{height} tree")
    return [leaf[:i] for i in range(len(leaf) + 1)]


def insert_value(node_path: str, token: bytes, tree: Tree = Tree.MAIN) -> bytes:
    if len(token) != PRF_BYTES:
        raise ContractViolation("token must be 32 bytes")
    return kernels.node_key(tree.value, node_path.encode("ascii"), token)


def leaf_digest(key: MasterKey, leaf: str, body: bytes) -> bytes:
    return prf(key, TAG_DIGEST, join(leaf.encode("ascii"), body))


@dataclass
class IndexCounters:
    hash_evals: int = 0
    probes: int = 0

    def reset(self) -> None:
        self.hash_evals = 0
        self.probes = 0


@dataclass
class EncryptedIndex:
    height: int = DEFAULT_HEIGHT
    entries: set[bytes] = field(default_factory=set)
    delete_entries: set[bytes] = field(default_factory=set)
    digests: dict[str, bytes] = field(default_factory=dict)
    counters: IndexCounters = field(default_factory=IndexCounters, compare=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.height <= 64:
            raise ContractViolation("height must be between 1 and 64")
        self._lock = threading.Lock()

    @property
    def entry_count(self) -> int:
        """M: hashtable entries across both trees."""
        return len(self.entries) + len(self.delete_entries)

    @property
    def doc_count(self) -> int:
        return len(self.digests)

    def _set(self, tree: Tree) -> set[bytes]:
        return self.entries if tree is Tree.MAIN else self.delete_entries

    def path_keys(self, doc_id: int, token: bytes, tree: Tree = Tree.MAIN) -> list[bytes]:
        """Entry keys for ``token`` on every node from the root to ``doc_id``'s leaf."""
        if len(token) != PRF_BYTES:
            raise ContractViolation("token must be 32 bytes")
        leaf = path_of(doc_id, self.height)
        keys = kernels.path_keys(tree.value, leaf.encode("ascii"), token)
        self.counters.hash_evals += len(keys)
        return keys

    def add_keys(self, keys, tree: Tree = Tree.MAIN) -> None:
        keys = list(keys)
        for k in keys:
            if len(k) != H1_BYTES:
                raise ContractViolation("entry keys must be 64 bytes")
        with self._lock:
            self._set(tree).update(keys)

    def put_digest(self, doc_id: int, digest: bytes) -> None:
        leaf = path_of(doc_id, self.height)
        if len(digest) != PRF_BYTES:
            raise ContractViolation("digest must be 32 bytes")
        with self._lock:
            if leaf in self.digests:
                raise DuplicateDocumentError(f"document {doc_id} already indexed")
            self.digests[leaf] = digest

    def insert_doc(self, doc_id: int, tokens: list[bytes], digest: bytes) -> None:
        """Index a new document under each token and store its leaf digest."""
        if not tokens:
            raise ContractViolation("a document needs at least one token")
        leaf = path_of(doc_id, self.height)
        if leaf in self.digests:
            raise DuplicateDocumentError(f"document {doc_id} already indexed")
        keys = [k for t in tokens for k in self.path_keys(doc_id, t)]
        self.add_keys(keys)
        self.put_digest(doc_id, digest)

    def contains(self, tree: Tree, node_path: str, token: bytes) -> bool:
        self.counters.probes += 1
        return insert_value(node_path, token, tree) in self._set(tree)

    def probe(self, tree: Tree, node_path: str, tokens: list[bytes], alive: list[int]) -> list[int]:
        """Subset of ``alive`` (indices into ``tokens``) present at ``node_path``."""
        self.counters.probes += len(alive)
        return kernels.surviving(self._set(tree), tree.value, node_path.encode("ascii"), tokens, alive)

    def digest_for(self, leaf: str) -> bytes | None:
        return self.digests.get(leaf)

    def snapshot(self) -> "EncryptedIndex":
        with self._lock:
            return EncryptedIndex(self.height, set(self.entries), set(self.delete_entries), dict(self.digests))

    # persistence

    def dumps(self) -> str:
        with self._lock:
            lines = [
                f"DVFS-INDEX {FORMAT_VERSION} L={self.height} M={self.entry_count} "
                f"E={len(self.entries)} B={len(self.delete_entries)} D={len(self.digests)}"
            ]
            lines += [f"E {k.hex()}" for k in sorted(self.entries)]
            lines += [f"B {k.hex()}" for k in sorted(self.delete_entries)]
            lines += [f"D {leaf} {d.hex()}" for leaf, d in sorted(self.digests.items())]
        return "\n".join(lines) + "\n"

    def persist(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(self.dumps(), encoding="ascii")
        tmp.replace(path)

    @classmethod
    def loads(cls, text: str) -> "EncryptedIndex":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        else:
            raise FormatError("missing trailing newline (truncated file?)", len(lines))
        if not lines:
            raise FormatError("empty file", 1)
        header = lines[0].split(" ")
        if len(header) != 7 or header[0] != "DVFS-INDEX":
            raise FormatError("bad header", 1)
        if header[1] != str(FORMAT_VERSION):
            raise FormatError(f"unsupported format version {header[1]}", 1)
        try:
            fields = dict(h.split("=", 1) for h in header[2:])
            height, m = int(fields["L"]), int(fields["M"])
            expect = {"E": int(fields["E"]), "B": int(fields["B"]), "D": int(fields["D"])}
        except (KeyError, ValueError) as exc:
            raise FormatError("bad header fields", 1) from exc
        idx = cls(height)
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(" ")
            kind = parts[0]
            try:
                if kind in ("E", "B") and len(parts) == 2 and len(parts[1]) == 2 * H1_BYTES:
                    key = bytes.fromhex(parts[1])
                    (idx.entries if kind == "E" else idx.delete_entries).add(key)
                elif kind == "D" and len(parts) == 3 and len(parts[2]) == 2 * PRF_BYTES:
                    leaf = parts[1]
                    if len(leaf) != height - 1 or leaf.strip("01"):
                        raise ValueError("bad leaf path")
                    idx.digests[leaf] = bytes.fromhex(parts[2])
                else:
                    raise ValueError("unrecognized record")
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from exc
        got = {"E": len(idx.entries), "B": len(idx.delete_entries), "D": len(idx.digests)}
        if got != expect or idx.entry_count != m:
            raise FormatError(f"record counts {got} do not match header {expect}", len(lines) + 1)
        return idx

    @classmethod
    def load(cls, path: str | Path) -> "EncryptedIndex":
        try:
            text = Path(path).read_text(encoding="ascii")
        except UnicodeDecodeError as exc:
            raise FormatError("non-ASCII content") from exc
        return cls.loads(text)
