import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvfs.errors import FormatError, IndexCorruptionError, QueryError
from dvfs.index import EncryptedIndex, Tree
from dvfs.search import Trapdoor, load_transcript, search, search_histories, trapgen
from dvfs.versioning import ChainRepository, LocalRepository, add_keyword, delete_keyword, versioned_token

from _util import FIXED_KEY, build_index, distinct_words, make_params

W1, W2 = versioned_token(FIXED_KEY, "w1", 0), versioned_token(FIXED_KEY, "w2", 0)


def test_worked_example_trace():
    index, _ = build_index({0: [W1], 1: [W1, W2], 2: [W2], 4: [W1]}, height=4)
    t = search_histories(index, [[W1], [W2]])
    assert t.ap == [("", 1), ("0", 1), ("00", 1), ("000", 0), ("001", 1), ("01", 0), ("1", 0)]
    assert t.results == [1]
    assert [leaf for leaf, _ in t.digests] == ["001"]
    assert t.deletion.ap == [("", 0)]


def test_empty_index():
    t = search_histories(EncryptedIndex(6), [[W1]])
    assert t.ap == [("", 0)] and t.results == [] and t.digests == []


def test_single_match_prunes_siblings():
    index, _ = build_index({9: [W1], 3: [W2]}, height=5)
    t = search_histories(index, [[W1]])
    assert t.results == [9]
    assert len(t.ap) == 2 * 4 + 1
    assert sum(b for _, b in t.ap) == 5


def test_missing_digest_is_corruption():
    index = EncryptedIndex(4)
    index.add_keys(index.path_keys(2, W1))
    with pytest.raises(IndexCorruptionError):
        search_histories(index, [[W1]])


def test_trapdoor_validation():
    with pytest.raises(QueryError):
        Trapdoor(())
    with pytest.raises(QueryError):
        Trapdoor((b"short",))
    with pytest.raises(QueryError):
        trapgen(make_params(), LocalRepository(), [])
    with pytest.raises(QueryError):
        search_histories(EncryptedIndex(4), [[]])


def test_trapgen_marks_keywords():
    params, lr = make_params(), LocalRepository()
    tk = trapgen(params, lr, ["ledger", "cipher"])
    assert tk.q == 2
    assert all(lr.get(params.family.fuzzify(w)).b for w in ("ledger", "cipher"))


def test_transcript_roundtrip_and_damage():
    index, _ = build_index({0: [W1], 1: [W1, W2], 2: [W2], 4: [W1]}, height=4)
    index.add_keys(index.path_keys(4, W1, Tree.DELETE), Tree.DELETE)
    t = search_histories(index, [[W1], [W2]])
    text = t.dumps()
    assert load_transcript(text) == t
    lines = text.splitlines(keepends=True)
    with pytest.raises(FormatError):
        load_transcript("".join(lines[:-1]))
    with pytest.raises(FormatError):
        load_transcript(text + "R 9\n")
    with pytest.raises(FormatError) as exc:
        load_transcript(text.replace("AP /0 1", "AP /0 7"))
    assert exc.value.line == 3
    with pytest.raises(FormatError):
        load_transcript(text.replace("L=4", "L=x"))


def _random_world(rng, params, words, height):
    lr, index, br = LocalRepository(), EncryptedIndex(height), ChainRepository()
    plain: dict[int, set[str]] = {}
    docs = rng.sample(range(2 ** (height - 1)), 12)
    for d in docs:
        index.put_digest(d, bytes(32))
        plain[d] = set()
    for _ in range(60):
        d, w = rng.choice(docs), rng.choice(words)
        r = rng.random()
        if r < 0.6:
            add_keyword(params, lr, index, w, d, br)
            plain[d].add(w)
        elif r < 0.8:
            delete_keyword(params, lr, index, w, d)
            plain[d].discard(w)
        else:
            trapgen(params, lr, [w])
    return lr, index, br, plain


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_matches_plaintext_oracle(seed):
    rng = random.Random(seed)
    params = make_params(height=6)
    words = distinct_words(params, 4, seed=1)
    lr, index, br, plain = _random_world(rng, params, words, 6)
    for q in ([words[0]], words[:2], words[1:4]):
        got = search(index, br, trapgen(params, lr, q))
        want = sorted(d for d, kws in plain.items() if set(q) <= kws)
        assert got.results == want


def test_delete_then_readd():
    params = make_params(height=5)
    lr, index, br = LocalRepository(), EncryptedIndex(5), ChainRepository()
    for d in (1, 2):
        index.put_digest(d, bytes(32))
        add_keyword(params, lr, index, "ledger", d, br)
        add_keyword(params, lr, index, "cipher", d, br)
    delete_keyword(params, lr, index, "cipher", 1)
    assert search(index, br, trapgen(params, lr, ["ledger", "cipher"])).results == [2]
    assert search(index, br, trapgen(params, lr, ["ledger"])).results == [1, 2]
    add_keyword(params, lr, index, "cipher", 1, br)
    t = search(index, br, trapgen(params, lr, ["ledger", "cipher"]))
    assert t.results == [1, 2] and t.shadowed == []
