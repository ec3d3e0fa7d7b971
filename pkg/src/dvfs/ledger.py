"""Append-only hash-chained ledger standing in for the blockchain.

Each record line is ``<seq> <kind> <prev_hash> <this_hash> <payload base64>``
where ``this_hash = SHA-256(seq || kind || prev_hash || payload)`` (0x1F
separated) and the genesis ``prev_hash`` is 32 zero bytes. The encrypted
index and the chain repository are materialized by replaying the
INDEX_APPEND and CHAIN_APPEND records; the search and verify contracts run
over that state and log their outputs as further records.
"""
from __future__ import annotations

import base64
import binascii
import hashlib
import json
import os
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from dvfs.crypto import MasterKey
from dvfs.errors import DvfsError, LedgerValidationError
from dvfs.index import EncryptedIndex, Tree, path_of
from dvfs.search import SearchTranscript, Trapdoor, load_transcript, search
from dvfs.verify import VerifyInput, VerifyReport, verify
from dvfs.versioning import ChainRecord, ChainRepository, DeletionToken, UpdateToken

GENESIS = bytes(32)
SEP = b"\x1f"


class Kind(str, Enum):
    INDEX_APPEND = "INDEX_APPEND"
    CHAIN_APPEND = "CHAIN_APPEND"
    SEARCH_TRANSCRIPT = "SEARCH_TRANSCRIPT"
    VERIFY_REPORT = "VERIFY_REPORT"


@dataclass(frozen=True)
class LedgerRecord:
    seq: int
    kind: Kind
    payload: bytes
    prev_hash: bytes
    this_hash: bytes

    def line(self) -> str:
        b64 = base64.b64encode(self.payload).decode("ascii")
        return f"{self.seq} {self.kind.value} {self.prev_hash.hex()} {self.this_hash.hex()} {b64}\n"


def record_hash(seq: int, kind: Kind, payload: bytes, prev_hash: bytes) -> bytes:
    return hashlib.sha256(SEP.join([str(seq).encode(), kind.value.encode(), prev_hash, payload])).digest()


def _parse_line(line: str, expect_seq: int, prev: bytes) -> LedgerRecord:
    parts = line.split(" ")
    if len(parts) != 5:
        raise LedgerValidationError("expected 5 fields", expect_seq)
    seq_s, kind_s, prev_s, this_s, b64 = parts
    if seq_s != str(expect_seq):
        raise LedgerValidationError(f"sequence gap (found {seq_s!r})", expect_seq)
    try:
        kind = Kind(kind_s)
    except ValueError:
        raise LedgerValidationError(f"unknown kind {kind_s!r}", expect_seq) from None
    try:
        prev_hash, this_hash = bytes.fromhex(prev_s), bytes.fromhex(this_s)
        payload = base64.b64decode(b64, validate=True)
    except (ValueError, binascii.Error):
        raise LedgerValidationError("undecodable field", expect_seq) from None
    # non-canonical encodings would let a byte change slip past the hash
    if (prev_hash.hex() != prev_s or this_hash.hex() != this_s or len(this_hash) != 32
            or base64.b64encode(payload).decode("ascii") != b64):
        raise LedgerValidationError("non-canonical encoding", expect_seq)
    if prev_hash != prev:
        raise LedgerValidationError("broken hash link", expect_seq)
    if record_hash(expect_seq, kind, payload, prev_hash) != this_hash:
        raise LedgerValidationError("record hash mismatch", expect_seq)
    return LedgerRecord(expect_seq, kind, payload, prev_hash, this_hash)


def read_records(path: str | Path) -> list[LedgerRecord]:
    """Parse and validate a ledger file end to end."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        seq = raw[: exc.start].count(b"\n")
        raise LedgerValidationError("non-ASCII byte", seq) from None
    if text and not text.endswith("\n"):
        raise LedgerValidationError("truncated final record", text.count("\n"))
    records: list[LedgerRecord] = []
    prev = GENESIS
    for seq, line in enumerate(text.split("\n")[:-1] if text else []):
        rec = _parse_line(line, seq, prev)
        records.append(rec)
        prev = rec.this_hash
    return records


def _json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("ascii")


class Ledger:
    """Single-writer ledger; ``path=None`` keeps it in memory only."""

    def __init__(self, height: int, path: str | Path | None = None):
        self.height = height
        self.path = Path(path) if path is not None else None
        self.records: list[LedgerRecord] = []
        self.index = EncryptedIndex(height)
        self.chain = ChainRepository()
        self._lock = threading.Lock()

    @classmethod
    def open(cls, path: str | Path, height: int) -> "Ledger":
        ledger = cls(height, path)
        if ledger.path.exists():
            ledger.records = read_records(ledger.path)
            for rec in ledger.records:
                ledger._apply(rec)
        else:
            ledger.path.touch()
        return ledger

    @property
    def head(self) -> bytes:
        return self.records[-1].this_hash if self.records else GENESIS

    def append(self, kind: Kind, payload: bytes) -> int:
        with self._lock:
            seq = len(self.records)
            prev = self.head
            rec = LedgerRecord(seq, kind, payload, prev, record_hash(seq, kind, payload, prev))
            if self.path is not None:
                self._write(rec)
            self.records.append(rec)
            return seq

    def _write(self, rec: LedgerRecord) -> None:
        size = self.path.stat().st_size if self.path.exists() else 0
        try:
            with open(self.path, "ab") as fh:
                fh.write(rec.line().encode("ascii"))
                fh.flush()
                os.fsync(fh.fileno())
        except OSError:
            try:
                with open(self.path, "ab") as fh:
                    fh.truncate(size)
            except OSError:
                pass
            raise

    def _apply(self, rec: LedgerRecord) -> None:
        if rec.kind is Kind.INDEX_APPEND:
            body = json.loads(rec.payload)
            if "digest" in body:
                self.index.put_digest(body["doc"], bytes.fromhex(body["digest"]))
            else:
                self.index.add_keys([bytes.fromhex(k) for k in body["keys"]], Tree(body["tree"].encode()))
        elif rec.kind is Kind.CHAIN_APPEND:
            body = json.loads(rec.payload)
            self.chain.put(ChainRecord(bytes.fromhex(body["k"]), bytes.fromhex(body["p"])))

    def _commit(self, kind: Kind, payload: bytes) -> int:
        seq = self.append(kind, payload)
        self._apply(self.records[seq])
        return seq

    # data owner submissions

    def register_document(self, doc_id: int, digest: bytes) -> int:
        path_of(doc_id, self.height)
        return self._commit(Kind.INDEX_APPEND, _json({"doc": doc_id, "digest": digest.hex()}))

    def submit_update(self, update: UpdateToken) -> None:
        self._commit(Kind.INDEX_APPEND, _json({"tree": "M", "keys": [k.hex() for k in update.add_entries]}))
        if update.chain_record is not None:
            r = update.chain_record
            self._commit(Kind.CHAIN_APPEND, _json({"k": r.lookup_key.hex(), "p": r.payload.hex()}))

    def submit_deletion(self, token: DeletionToken) -> None:
        self._commit(Kind.INDEX_APPEND, _json({"tree": "B", "keys": [k.hex() for k in token.entries]}))

    # contracts

    def invoke_search(self, tk: Trapdoor) -> tuple[int, SearchTranscript]:
        try:
            transcript = search(self.index, self.chain, tk)
        except DvfsError as exc:
            self.append(Kind.SEARCH_TRANSCRIPT, _json({"error": str(exc)}))
            raise
        seq = self.append(Kind.SEARCH_TRANSCRIPT, transcript.dumps().encode("ascii"))
        return seq, transcript

    def invoke_verify(self, key: MasterKey, vin: VerifyInput) -> tuple[int, VerifyReport]:
        try:
            report = verify(key, vin)
        except DvfsError as exc:
            self.append(Kind.VERIFY_REPORT, _json({"error": str(exc)}))
            raise
        seq = self.append(Kind.VERIFY_REPORT, report.line().encode("ascii"))
        return seq, report

    def transcript(self, seq: int) -> SearchTranscript:
        rec = self.records[seq]
        if rec.kind is not Kind.SEARCH_TRANSCRIPT:
            raise LedgerValidationError("not a search transcript", seq)
        return load_transcript(rec.payload.decode("ascii"))

    def replay(self) -> "Ledger":
        """Fresh state rebuilt from the records alone."""
        other = Ledger(self.height)
        for rec in self.records:
            other.records.append(rec)
            other._apply(rec)
        return other

    def validate(self) -> int:
        if self.path is None:
            prev = GENESIS
            for rec in self.records:
                _parse_line(rec.line()[:-1], rec.seq, prev)
                prev = rec.this_hash
            return len(self.records)
        return len(read_records(self.path))
