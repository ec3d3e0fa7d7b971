"""Trapdoor generation and pruned top-down search over the encrypted tree.

The main pass is conjunctive: a node is explored only while every query
keyword still has at least one history token present at it. Tokens missing
at a node are dropped for that node's subtree only; siblings get their own
copies. The deletion pass walks the deletion tree with the same histories
but disjunctively, since a document leaves the results if any one of the
query keywords was deleted from it.

For every matched leaf each pass records, per keyword, the position in the
history (0 = newest) of the newest token found there. A deletion cancels a
main match when it covers a version at least as new as the newest one under
which the keyword was added.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

from dvfs.errors import FormatError, IndexCorruptionError, QueryError
from dvfs.index import EncryptedIndex, Tree, doc_id_of
from dvfs.params import Params
from dvfs.versioning import ChainRepository, LocalRepository, resolve_history, versioned_token

TRANSCRIPT_VERSION = 1


@dataclass(frozen=True)
class Trapdoor:
    tokens: tuple[bytes, ...]

    def __post_init__(self):
        if not self.tokens:
            raise QueryError("trapdoor needs at least one token")
        for t in self.tokens:
            if len(t) != 32:
                raise QueryError("trapdoor tokens must be 32 bytes")

    @property
    def q(self) -> int:
        return len(self.tokens)


def trapgen(params: Params, lr: LocalRepository, query: list[str]) -> Trapdoor:
    """One token per query keyword under its current version; marks each keyword as queried."""
    if not query:
        raise QueryError("empty query")
    buckets = [params.family.fuzzify(w) for w in query]
    tokens = []
    for s in buckets:
        e = lr.entry(s)
        e.b = True
        tokens.append(versioned_token(params.key, s, e.v))
    return Trapdoor(tuple(tokens))


@dataclass
class PassTranscript:
    """Visited nodes with match bits, plus the newest-match rank per keyword at matched leaves."""

    ap: list[tuple[str, int]] = field(default_factory=list)
    leaves: dict[str, tuple[int | None, ...]] = field(default_factory=dict)

    @property
    def doc_ids(self) -> set[int]:
        return {doc_id_of(p) for p in self.leaves}


@dataclass
class SearchTranscript:
    height: int
    q: int
    main: PassTranscript
    digests: list[tuple[str, bytes]]
    deletion: PassTranscript
    shadowed: list[int]
    results: list[int]
    probes: int = 0

    @property
    def r_main(self) -> set[int]:
        return self.main.doc_ids

    @property
    def r_tree_b(self) -> set[int]:
        return self.deletion.doc_ids

    @property
    def ap(self) -> list[tuple[str, int]]:
        return self.main.ap

    def dumps(self) -> str:
        return dump_transcript(self)


def shadowed_docs(main: PassTranscript, deletion: PassTranscript) -> list[int]:
    out = []
    for leaf, del_ranks in deletion.leaves.items():
        main_ranks = main.leaves.get(leaf)
        if main_ranks is None:
            continue
        if any(d is not None and d <= m for m, d in zip(main_ranks, del_ranks)):
            out.append(doc_id_of(leaf))
    return sorted(out)


def _main_pass(index: EncryptedIndex, histories: list[list[bytes]]) -> PassTranscript:
    out = PassTranscript()
    leaf_depth = index.height - 1

    def descend(path: str, alive: list[list[int]]) -> None:
        kept = []
        for tokens, idx in zip(histories, alive):
            hit = index.probe(Tree.MAIN, path, tokens, idx)
            if not hit:
                out.ap.append((path, 0))
                return
            kept.append(hit)
        out.ap.append((path, 1))
        if len(path) == leaf_depth:
            out.leaves[path] = tuple(h[0] for h in kept)
            return
        descend(path + "0", kept)
        descend(path + "1", kept)

    descend("", [list(range(len(h))) for h in histories])
    return out


def _deletion_pass(index: EncryptedIndex, histories: list[list[bytes]]) -> PassTranscript:
    out = PassTranscript()
    leaf_depth = index.height - 1

    def descend(path: str, alive: list[list[int]]) -> None:
        kept = [index.probe(Tree.DELETE, path, tokens, idx) if idx else []
                for tokens, idx in zip(histories, alive)]
        if not any(kept):
            out.ap.append((path, 0))
            return
        out.ap.append((path, 1))
        if len(path) == leaf_depth:
            out.leaves[path] = tuple(h[0] if h else None for h in kept)
            return
        descend(path + "0", kept)
        descend(path + "1", kept)

    descend("", [list(range(len(h))) for h in histories])
    return out


def search_histories(index: EncryptedIndex, histories: list[list[bytes]]) -> SearchTranscript:
    """Run both passes for explicit per-keyword token histories (newest first)."""
    if not histories or any(not h for h in histories):
        raise QueryError("every keyword needs a non-empty history")
    if sys.getrecursionlimit() < index.height + 50:
        sys.setrecursionlimit(index.height + 50)
    before = index.counters.probes
    main = _main_pass(index, histories)
    digests = []
    for leaf in main.leaves:
        d = index.digest_for(leaf)
        if d is None:
            raise IndexCorruptionError(f"matched leaf {leaf} has no digest")
        digests.append((leaf, d))
    deletion = _deletion_pass(index, histories)
    shadowed = shadowed_docs(main, deletion)
    results = sorted(main.doc_ids - set(shadowed))
    return SearchTranscript(index.height, len(histories), main, digests, deletion, shadowed,
                            results, index.counters.probes - before)


def search(index: EncryptedIndex, br: ChainRepository, tk: Trapdoor) -> SearchTranscript:
    histories = [resolve_history(br, t) for t in tk.tokens]
    return search_histories(index, histories)


# line-delimited transcript format


def _enc_path(p: str) -> str:
    return "/" + p


def _dec_path(s: str, height: int) -> str:
    if not s.startswith("/"):
        raise ValueError(f"bad path {s!r}")
    p = s[1:]
    if p.strip("01") or len(p) > height - 1:
        raise ValueError(f"bad path {s!r}")
    return p


def _enc_ranks(ranks) -> str:
    return ",".join("-" if r is None else str(r) for r in ranks)


def _dec_ranks(s: str, q: int) -> tuple[int | None, ...]:
    parts = s.split(",")
    if len(parts) != q:
        raise ValueError("rank tuple has wrong arity")
    return tuple(None if x == "-" else int(x) for x in parts)


def dump_transcript(t: SearchTranscript) -> str:
    lines = [f"DVFS-TRANSCRIPT {TRANSCRIPT_VERSION} L={t.height} q={t.q} probes={t.probes}"]
    lines += [f"AP {_enc_path(p)} {b}" for p, b in t.main.ap]
    lines += [f"LEAF {_enc_path(p)} {_enc_ranks(r)}" for p, r in t.main.leaves.items()]
    lines += [f"D {_enc_path(p)} {d.hex()}" for p, d in t.digests]
    lines += [f"BAP {_enc_path(p)} {b}" for p, b in t.deletion.ap]
    lines += [f"BLEAF {_enc_path(p)} {_enc_ranks(r)}" for p, r in t.deletion.leaves.items()]
    lines += [f"S {i}" for i in t.shadowed]
    lines += [f"R {i}" for i in t.results]
    lines.append(f"END {len(lines)}")
    return "\n".join(lines) + "\n"


def load_transcript(text: str) -> SearchTranscript:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("DVFS-TRANSCRIPT "):
        raise FormatError("missing transcript header", 1)
    try:
        head = lines[0].split(" ")
        if head[1] != str(TRANSCRIPT_VERSION):
            raise ValueError("unsupported transcript version")
        fields = dict(h.split("=", 1) for h in head[2:])
        height, q, probes = int(fields["L"]), int(fields["q"]), int(fields.get("probes", 0))
    except (IndexError, KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}", 1) from exc
    main, deletion = PassTranscript(), PassTranscript()
    digests, shadowed, results = [], [], []
    ended = False
    for lineno, line in enumerate(lines[1:], start=2):
        if ended:
            raise FormatError("content after END", lineno)
        parts = line.split(" ")
        kind = parts[0]
        try:
            if kind in ("AP", "BAP") and len(parts) == 3 and parts[2] in ("0", "1"):
                (main if kind == "AP" else deletion).ap.append((_dec_path(parts[1], height), int(parts[2])))
            elif kind in ("LEAF", "BLEAF") and len(parts) == 3:
                (main if kind == "LEAF" else deletion).leaves[_dec_path(parts[1], height)] = _dec_ranks(parts[2], q)
            elif kind == "D" and len(parts) == 3 and len(parts[2]) == 64:
                digests.append((_dec_path(parts[1], height), bytes.fromhex(parts[2])))
            elif kind in ("S", "R") and len(parts) == 2:
                (shadowed if kind == "S" else results).append(int(parts[1]))
            elif kind == "END" and len(parts) == 2:
                if int(parts[1]) != lineno - 1:
                    raise ValueError("END count mismatch")
                ended = True
            else:
                raise ValueError(f"unrecognized record {kind!r}")
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from exc
    if not ended:
        raise FormatError("missing END record (truncated?)", len(lines) + 1)
    return SearchTranscript(height, q, main, digests, deletion, shadowed, results, probes)
