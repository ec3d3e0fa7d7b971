"""Correctness and completeness checks over a search transcript.

Completeness rebuilds the visited tree from the auxiliary proof list and
checks that it is a canonical pre-order walk in which every matched inner
node has both children, no unmatched node has descendants, and the matched
leaves are exactly the reported results. Correctness recomputes the keyed
digest of every returned ciphertext and compares it with the digest the
search recorded for that leaf.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from dvfs.crypto import Ciphertext, MasterKey
from dvfs.index import leaf_digest, path_of
from dvfs.search import PassTranscript, SearchTranscript, shadowed_docs


class FailureKind(str, Enum):
    NONE = "none"
    DIGEST_MISMATCH = "digest-mismatch"
    TREE_MALFORMED = "tree-malformed"
    MISSING_BRANCH = "missing-branch"
    RESULT_SET_MISMATCH = "result-set-mismatch"
    COVERAGE_GAP = "coverage-gap"


@dataclass
class VerifyInput:
    transcript: SearchTranscript
    ciphertexts: list[Ciphertext]


@dataclass
class VerifyReport:
    verdict: int
    failure_kind: FailureKind = FailureKind.NONE
    offending_item: str | None = None
    clause: str | None = None
    digest_recomputations: int = 0
    structural_checks: int = 0

    def line(self) -> str:
        return (f"verdict={self.verdict} kind={self.failure_kind.value} "
                f"item={self.offending_item if self.offending_item is not None else '-'} "
                f"clause={self.clause or '-'} digests={self.digest_recomputations} "
                f"checks={self.structural_checks}")

    @classmethod
    def from_line(cls, text: str) -> "VerifyReport":
        f = dict(part.split("=", 1) for part in text.strip().split(" "))
        item = None if f["item"] == "-" else f["item"]
        clause = None if f["clause"] == "-" else f["clause"]
        return cls(int(f["verdict"]), FailureKind(f["kind"]), item, clause,
                   int(f["digests"]), int(f["checks"]))


class _Failure(Exception):
    def __init__(self, kind: FailureKind, clause: str, item):
        self.kind, self.clause, self.item = kind, clause, item


@dataclass
class _Counter:
    checks: int = 0
    digests: int = 0


def _check_pass(p: PassTranscript, height: int, tag: str, counter: _Counter) -> None:
    leaf_depth = height - 1
    ap = p.ap
    if not ap or ap[0][0] != "":
        raise _Failure(FailureKind.TREE_MALFORMED, tag + "a", "root")
    bits: dict[str, int] = {}
    prev = None
    for path, bit in ap:
        counter.checks += 1
        if bit not in (0, 1) or len(path) > leaf_depth or path.strip("01"):
            raise _Failure(FailureKind.TREE_MALFORMED, tag + "a", path)
        # lexicographic order on prefix-closed 0/1 strings is pre-order with '0' first
        if prev is not None and path <= prev:
            raise _Failure(FailureKind.TREE_MALFORMED, tag + "a", path)
        prev = path
        if path:
            parent = bits.get(path[:-1])
            if parent is None:
                raise _Failure(FailureKind.TREE_MALFORMED, tag + "a", path)
            if parent == 0:
                raise _Failure(FailureKind.TREE_MALFORMED, tag + "c", path)
        bits[path] = bit
    for path, bit in ap:
        if bit == 1 and len(path) < leaf_depth:
            for child in (path + "0", path + "1"):
                if child not in bits:
                    raise _Failure(FailureKind.MISSING_BRANCH, tag + "b", child)
    matched = {path for path, bit in ap if bit == 1 and len(path) == leaf_depth}
    undelivered = sorted(matched - p.leaves.keys())
    if undelivered:
        raise _Failure(FailureKind.MISSING_BRANCH, tag + "d", undelivered[0])
    unbacked = sorted(p.leaves.keys() - matched)
    if unbacked:
        raise _Failure(FailureKind.COVERAGE_GAP, tag + "d", unbacked[0])


def _completeness(t: SearchTranscript, counter: _Counter) -> None:
    _check_pass(t.main, t.height, "", counter)
    leaves = sorted(t.main.leaves)
    if [leaf for leaf, _ in t.digests] != leaves:
        odd = sorted(set(leaves) ^ {leaf for leaf, _ in t.digests})
        raise _Failure(FailureKind.COVERAGE_GAP, "d", odd[0] if odd else "digest-order")
    _check_pass(t.deletion, t.height, "e", counter)
    if shadowed_docs(t.main, t.deletion) != sorted(t.shadowed):
        raise _Failure(FailureKind.RESULT_SET_MISMATCH, "e", "shadowed")
    expected = t.r_main - set(t.shadowed)
    if set(t.results) != expected or len(set(t.results)) != len(t.results):
        diff = sorted(set(t.results) ^ expected)
        raise _Failure(FailureKind.RESULT_SET_MISMATCH, "e", diff[0] if diff else "duplicate")


def _correctness(key: MasterKey, t: SearchTranscript, ciphertexts: list[Ciphertext],
                 counter: _Counter) -> None:
    by_id: dict[int, Ciphertext] = {}
    for ct in ciphertexts:
        if ct.doc_id in by_id:
            raise _Failure(FailureKind.RESULT_SET_MISMATCH, None, ct.doc_id)
        by_id[ct.doc_id] = ct
    wanted = set(t.results)
    mismatch = sorted(wanted ^ by_id.keys())
    if mismatch:
        raise _Failure(FailureKind.RESULT_SET_MISMATCH, None, mismatch[0])
    recorded = dict(t.digests)
    for doc in sorted(wanted):
        leaf = path_of(doc, t.height)
        counter.digests += 1
        if leaf_digest(key, leaf, by_id[doc].body) != recorded.get(leaf):
            raise _Failure(FailureKind.DIGEST_MISMATCH, None, doc)


def verify_completeness(t: SearchTranscript) -> VerifyReport:
    counter = _Counter()
    try:
        _completeness(t, counter)
    except _Failure as f:
        return VerifyReport(0, f.kind, _item(f.item), f.clause, 0, counter.checks)
    return VerifyReport(1, structural_checks=counter.checks)


def verify_correctness(key: MasterKey, t: SearchTranscript, ciphertexts: list[Ciphertext]) -> VerifyReport:
    counter = _Counter()
    try:
        _correctness(key, t, ciphertexts, counter)
    except _Failure as f:
        return VerifyReport(0, f.kind, _item(f.item), f.clause, counter.digests, 0)
    return VerifyReport(1, digest_recomputations=counter.digests)


def verify(key: MasterKey, vin: VerifyInput) -> VerifyReport:
    """Completeness first, then correctness; the first failure is reported."""
    counter = _Counter()
    try:
        _completeness(vin.transcript, counter)
        _correctness(key, vin.transcript, vin.ciphertexts, counter)
    except _Failure as f:
        return VerifyReport(0, f.kind, _item(f.item), f.clause, counter.digests, counter.checks)
    return VerifyReport(1, FailureKind.NONE, None, None, counter.digests, counter.checks)


def _item(x) -> str | None:
    if x is None:
        return None
    return str(x)

