"""End-to-end wiring of data owner, ledger contracts and document store."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from dvfs.crypto import Ciphertext, decrypt_doc, encrypt_doc
from dvfs.errors import ContractViolation, DuplicateDocumentError, KeywordError
from dvfs.fuzzy import stem
from dvfs.harness.config import Config
from dvfs.harness.corpus import extract_keywords
from dvfs.harness.store import DocumentStore
from dvfs.index import leaf_digest, path_of
from dvfs.ledger import Ledger
from dvfs.params import Params
from dvfs.search import SearchTranscript, trapgen
from dvfs.verify import VerifyInput, VerifyReport
from dvfs.versioning import LocalRepository, add_keyword, delete_keyword

log = logging.getLogger(__name__)


@dataclass
class QueryResult:
    seq: int
    transcript: SearchTranscript
    ciphertexts: list[Ciphertext]

    @property
    def results(self) -> list[int]:
        return self.transcript.results


@dataclass
class Journal:
    """Plaintext record of every keyword operation, kept only in debug mode."""

    path: Path | None = None
    events: list[dict] = field(default_factory=list)

    def record(self, **event) -> None:
        self.events.append(event)
        if self.path is not None:
            with open(self.path, "a", encoding="ascii") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "Journal":
        j = cls(path)
        if path.exists():
            j.events = [json.loads(line) for line in path.read_text(encoding="ascii").splitlines() if line]
        return j

    def keywords(self) -> dict[int, set[str]]:
        """Live (doc -> stems) state from a linear scan of the events."""
        docs: dict[int, set[str]] = {}
        for ev in self.events:
            kws = docs.setdefault(ev["doc"], set())
            if ev["op"] == "add":
                kws.add(ev["kw"])
            elif ev["op"] == "del":
                kws.discard(ev["kw"])
        return docs

    def buckets(self) -> dict[int, set[str]]:
        docs: dict[int, set[str]] = {}
        for ev in self.events:
            b = docs.setdefault(ev["doc"], set())
            if ev["op"] == "add":
                b.add(ev["bucket"])
            elif ev["op"] == "del":
                b.discard(ev["bucket"])
        return docs


class DvfsSystem:
    def __init__(self, params: Params, ledger: Ledger, store: DocumentStore,
                 lr: LocalRepository | None = None, journal: Journal | None = None,
                 config: Config | None = None):
        if ledger.height != params.height:
            raise ContractViolation("ledger and parameters disagree on tree height")
        self.params = params
        self.ledger = ledger
        self.store = store
        self.lr = lr if lr is not None else LocalRepository()
        self.journal = journal
        self.config = config

    @classmethod
    def in_memory(cls, params: Params, debug: bool = True) -> "DvfsSystem":
        return cls(params, Ledger(params.height), DocumentStore(), journal=Journal() if debug else None)

    @classmethod
    def open(cls, config: Config) -> "DvfsSystem":
        params = config.params()
        ledger = Ledger.open(config.path("ledger"), params.height)
        repo_path = config.path("repo")
        lr = LocalRepository.load(repo_path) if repo_path.exists() else LocalRepository()
        journal = Journal.load(config.path("journal")) if config.debug_journal else None
        return cls(params, ledger, DocumentStore(config.path("store")), lr, journal, config)

    def save(self) -> None:
        if self.config is None:
            return
        self.lr.persist(self.config.path("repo"))
        self.ledger.index.persist(self.config.path("index"))

    @property
    def index(self):
        return self.ledger.index

    @property
    def height(self) -> int:
        return self.params.height

    def next_doc_id(self) -> int:
        ids = [int(leaf, 2) if leaf else 0 for leaf in self.index.digests]
        return max(ids) + 1 if ids else 0

    # data owner

    def add_document(self, text: str | bytes, doc_id: int | None = None,
                     keywords: list[str] | None = None) -> tuple[int, list[str]]:
        """Encrypt, register and index a document; returns its id and stems."""
        if isinstance(text, str):
            text = text.encode("utf-8")
        if keywords is None:
            keywords = extract_keywords(text.decode("utf-8", errors="replace"))
        else:
            keywords = sorted({stem(w) for w in keywords})
        if not keywords:
            raise KeywordError("document has no indexable keywords")
        if doc_id is None:
            doc_id = self.next_doc_id()
        leaf = path_of(doc_id, self.height)
        if self.index.digest_for(leaf) is not None:
            raise DuplicateDocumentError(f"document {doc_id} already indexed")
        ct = encrypt_doc(self.params.key, doc_id, text)
        self.store.put(ct)
        self.ledger.register_document(doc_id, leaf_digest(self.params.key, leaf, ct.body))
        for w in keywords:
            self._add(doc_id, w)
        return doc_id, keywords

    def _add(self, doc_id: int, w: str) -> None:
        update = add_keyword(self.params, self.lr, self.index, w, doc_id)
        self.ledger.submit_update(update)
        if self.journal is not None:
            self.journal.record(op="add", doc=doc_id, kw=stem(w), bucket=self.params.family.fuzzify(w))

    def add_keyword(self, doc_id: int, w: str) -> None:
        if self.index.digest_for(path_of(doc_id, self.height)) is None:
            raise ContractViolation(f"document {doc_id} is not registered")
        self._add(doc_id, w)

    def delete_keyword(self, doc_id: int, w: str) -> None:
        token = delete_keyword(self.params, self.lr, self.index, w, doc_id, apply=False)
        self.ledger.submit_deletion(token)
        if self.journal is not None:
            self.journal.record(op="del", doc=doc_id, kw=stem(w), bucket=self.params.family.fuzzify(w))

    # queries

    def search(self, words: list[str]) -> QueryResult:
        tk = trapgen(self.params, self.lr, list(words))
        seq, transcript = self.ledger.invoke_search(tk)
        return QueryResult(seq, transcript, self.store.fetch_many(transcript.results))

    def verify(self, transcript: SearchTranscript, ciphertexts: list[Ciphertext]) -> tuple[int, VerifyReport]:
        return self.ledger.invoke_verify(self.params.key, VerifyInput(transcript, ciphertexts))

    def decrypt(self, ct: Ciphertext) -> bytes:
        return decrypt_doc(self.params.key, ct)

    def oracle(self, words: list[str]) -> set[int]:
        """Plaintext conjunctive answer from the debug journal."""
        if self.journal is None:
            raise ContractViolation("oracle needs the debug journal")
        stems = {stem(w) for w in words}
        return {doc for doc, kws in self.journal.keywords().items() if stems <= kws}

    def collision_explains(self, doc_id: int, words: list[str]) -> bool:
        """True if every query word's bucket is live for ``doc_id`` (a permitted false positive)."""
        if self.journal is None:
            raise ContractViolation("needs the debug journal")
        live = self.journal.buckets().get(doc_id, set())
        return all(self.params.family.fuzzify(w) in live for w in words)


def ingest(system: DvfsSystem, directory: str | Path) -> tuple[int, int]:
    """Index every regular file in ``directory`` (sorted); returns (indexed, skipped)."""
    indexed = skipped = 0
    for path in sorted(p for p in Path(directory).iterdir() if p.is_file()):
        try:
            text = path.read_text(encoding="utf-8")
            system.add_document(text)
        except (OSError, UnicodeDecodeError, KeywordError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        indexed += 1
    return indexed, skipped
