"""Accuracy, LSH calibration, scaling and update-cost experiments."""
from __future__ import annotations

import math
import random
import string
import time
from dataclasses import dataclass, field

import numpy as np

from dvfs.crypto import MasterKey, encrypt_doc
from dvfs.errors import ConfigError, KeywordError
from dvfs.fuzzy import DIMENSIONS, LshFamily, stem, vectorize
from dvfs.harness.corpus import dictionary, inflect
from dvfs.index import EncryptedIndex, leaf_digest, path_of
from dvfs.params import Params
from dvfs.search import search_histories
from dvfs.verify import VerifyInput, verify
from dvfs.versioning import ChainRepository, LocalRepository, add_keyword, versioned_token

ERROR_TYPES = ("T1", "T2", "T3", "T4")
NEAR = math.sqrt(3)
FAR = 2.0


# fuzzy accuracy


def mutate(word: str, kind: str, rng: random.Random) -> str:
    """Apply one spelling error of the given type (or none for "identity")."""
    letters = string.ascii_lowercase
    if kind == "identity":
        return word
    if kind == "T1":
        i = rng.randrange(len(word))
        return word[:i] + rng.choice(letters.replace(word[i], "")) + word[i + 1:]
    if kind == "T2":
        if rng.random() < 0.5 and len(word) > 2:
            i = rng.randrange(len(word))
            return word[:i] + word[i + 1:]
        i = rng.randrange(len(word) + 1)
        return word[:i] + rng.choice(letters) + word[i:]
    if kind == "T3":
        spots = [i for i in range(len(word) - 1) if word[i] != word[i + 1]]
        if not spots:
            return word
        i = rng.choice(spots)
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    if kind == "T4":
        return inflect(word, rng)
    raise ConfigError(f"unknown error type {kind!r}")


def accuracy(family: LshFamily, sample_size: int = 100, seed: int = 0,
             error_types=ERROR_TYPES + ("identity",), words=None) -> dict[str, float]:
    """Fraction of sampled keywords whose bucket survives each error type."""
    pool = [w for w in (words or dictionary()) if len(w) >= 4]
    if len(pool) < sample_size:
        raise ConfigError(f"dictionary has {len(pool)} usable words, need {sample_size}")
    rng = random.Random(seed)
    sample = rng.sample(pool, sample_size)
    rates = {}
    for kind in error_types:
        kept = 0
        for w in sample:
            # spelling errors hit the indexed stem; same-root variants inflect the word
            base = w if kind == "T4" else stem(w)
            try:
                kept += family.fuzzify(mutate(base, kind, rng)) == family.fuzzify(w)
            except KeywordError:
                pass
        rates[kind] = kept / sample_size
    return rates


# LSH calibration


@dataclass
class Calibration:
    near_rate: float
    far_rate: float
    near_pairs: int
    far_pairs: int
    profile: dict[float, tuple[float, int]] = field(default_factory=dict)

    def passes(self, p1: float = 0.56, p2: float = 0.28, tol: float = 0.05) -> bool:
        return self.near_rate >= p1 - tol and self.far_rate <= p2 + tol


def _stem_vectors(words) -> np.ndarray:
    stems = sorted({stem(w) for w in words})
    return np.array([vectorize(s) for s in stems], dtype=np.float64)


def calibrate(family: LshFamily, n_pairs: int = 10_000, seed: int = 0, words=None) -> Calibration:
    """Per-function collision rates for near (d <= sqrt 3) and far (d >= 2) pairs.

    Near pairs perturb a dictionary vector in 1 to 3 slots. Far pairs are two
    dictionary stems at distance at least 2.
    """
    rng = np.random.default_rng(seed)
    base = _stem_vectors(words or dictionary())
    n = len(base)

    near_u = base[rng.integers(0, n, n_pairs)]
    near_v = near_u.copy()
    flips = rng.integers(1, 4, n_pairs)
    for row, f in enumerate(flips):
        slots = rng.choice(DIMENSIONS, size=f, replace=False)
        near_v[row, slots] = 1.0 - near_v[row, slots]

    far_u, far_v = [], []
    while len(far_u) < n_pairs:
        i, j = rng.integers(0, n, 2 * n_pairs).reshape(2, -1)
        d = np.linalg.norm(base[i] - base[j], axis=1)
        ok = (i != j) & (d >= FAR)
        far_u.extend(base[i[ok]])
        far_v.extend(base[j[ok]])
    far_u = np.array(far_u[:n_pairs])
    far_v = np.array(far_v[:n_pairs])

    def per_pair(u, v):
        return (family.hash_matrix(u) == family.hash_matrix(v)).mean(axis=1)

    near_hits, far_hits = per_pair(near_u, near_v), per_pair(far_u, far_v)
    profile = {}
    for u, v, hits in ((near_u, near_v, near_hits), (far_u, far_v, far_hits)):
        d = np.round(np.linalg.norm(u - v, axis=1), 3)
        for dist in np.unique(d):
            sel = d == dist
            if sel.sum() >= 20:
                profile[float(dist)] = (float(hits[sel].mean()), int(sel.sum()))
    return Calibration(float(near_hits.mean()), float(far_hits.mean()), n_pairs, n_pairs,
                       dict(sorted(profile.items())))


# scaling


@dataclass
class ScalingRow:
    n: int
    height: int
    ap: float
    probes: float
    structural_checks: float
    digest_recomputations: float
    results: float
    search_ms: float
    verify_ms: float


def _token(key: MasterKey, name: str) -> bytes:
    return versioned_token(key, name, 0)


def scaling_point(n: int, results: int = 4, decoys: int = 8, trials: int = 20,
                  seed: int = 0) -> ScalingRow:
    """Two-keyword query over ``n`` documents with exactly ``results`` matches.

    Each keyword also appears alone in ``decoys`` documents; every document
    carries a filler keyword. Placement is random per trial. The tree height
    is the smallest that fits ``n`` leaves.
    """
    height = max(2, math.ceil(math.log2(n)) + 1)
    rng = random.Random(seed * 1_000_003 + n)
    key = MasterKey(bytes(range(32)))
    w1, w2, filler = _token(key, "w1"), _token(key, "w2"), _token(key, "filler")
    sums = np.zeros(7)
    for _ in range(trials):
        chosen = rng.sample(range(n), results + 2 * decoys)
        both = set(chosen[:results])
        only1 = set(chosen[results:results + decoys])
        only2 = set(chosen[results + decoys:])
        index = EncryptedIndex(height)
        cts = {}
        for doc in range(n):
            tokens = [filler]
            if doc in both or doc in only1:
                tokens.append(w1)
            if doc in both or doc in only2:
                tokens.append(w2)
            ct = encrypt_doc(key, doc, b"doc %d" % doc)
            cts[doc] = ct
            index.insert_doc(doc, tokens, leaf_digest(key, path_of(doc, height), ct.body))
        t0 = time.perf_counter()
        tr = search_histories(index, [[w1], [w2]])
        t1 = time.perf_counter()
        report = verify(key, VerifyInput(tr, [cts[d] for d in tr.results]))
        t2 = time.perf_counter()
        if report.verdict != 1 or set(tr.results) != both:
            raise AssertionError("scaling workload produced a wrong or unverifiable answer")
        sums += [len(tr.ap), tr.probes, report.structural_checks, report.digest_recomputations,
                 len(tr.results), (t1 - t0) * 1e3, (t2 - t1) * 1e3]
    avg = sums / trials
    return ScalingRow(n, height, *map(float, avg))


def scaling(doc_counts=(125, 250, 500, 1000), **kw) -> list[ScalingRow]:
    return [scaling_point(n, **kw) for n in doc_counts]


@dataclass
class Fit:
    c1: float
    c2: float
    ss_res: float
    rel_residual: float


def fit(xs, ys) -> Fit:
    """Least squares y = c1 + c2*x; rel_residual = sqrt(SS_res / SS_tot)."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    c2, c1 = np.polyfit(x, y, 1)
    ss_res = float(((y - (c1 + c2 * x)) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    rel = math.sqrt(ss_res / ss_tot) if ss_tot > 0 else 0.0
    return Fit(float(c1), float(c2), ss_res, rel)


def log_vs_linear(ns, ys) -> tuple[Fit, Fit]:
    return fit(np.log2(ns), ys), fit(ns, ys)


# update cost


@dataclass
class UpdateCost:
    keywords: int
    height: int
    hash_evals: int
    real_entries: int
    padding: int


def update_cost(params: Params, keywords: list[str], doc_id: int, index: EncryptedIndex | None = None,
                lr=None) -> UpdateCost:
    """Counters for indexing one document's keywords via the update path."""
    index = index if index is not None else EncryptedIndex(params.height)
    lr = lr if lr is not None else LocalRepository()
    br = ChainRepository()
    before = index.counters.hash_evals
    real = pad = 0
    for w in keywords:
        u = add_keyword(params, lr, index, w, doc_id, br)
        real += len(u.real_entries)
        pad += len(u.padding)
    return UpdateCost(len(keywords), params.height, index.counters.hash_evals - before, real, pad)
