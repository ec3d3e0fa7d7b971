"""The cloud server's ciphertext store: one file per document."""
from __future__ import annotations

from pathlib import Path

from dvfs.crypto import Ciphertext


class DocumentStore:
    """``path=None`` keeps documents in memory."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._mem: dict[int, bytes] = {}
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)

    def _file(self, doc_id: int) -> Path:
        return self.path / f"{doc_id}.ct"

    def put(self, ct: Ciphertext) -> None:
        if self.path is None:
            self._mem[ct.doc_id] = ct.body
        else:
            self._file(ct.doc_id).write_bytes(ct.body)

    def fetch(self, doc_id: int) -> Ciphertext:
        if self.path is None:
            return Ciphertext(doc_id, self._mem[doc_id])
        return Ciphertext(doc_id, self._file(doc_id).read_bytes())

    def fetch_many(self, doc_ids) -> list[Ciphertext]:
        return [self.fetch(i) for i in doc_ids]

    def ids(self) -> list[int]:
        if self.path is None:
            return sorted(self._mem)
        return sorted(int(p.stem) for p in self.path.glob("*.ct") if p.stem.isdigit())

    def sizes(self) -> dict[int, int]:
        if self.path is None:
            return {i: len(b) for i, b in self._mem.items()}
        return {i: self._file(i).stat().st_size for i in self.ids()}

    def next_id(self) -> int:
        ids = self.ids()
        return ids[-1] + 1 if ids else 0
