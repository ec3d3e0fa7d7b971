import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvfs.errors import ContractViolation, KeywordError
from dvfs.fuzzy import DIMENSIONS, LshFamily, fuzzify, lsh_bucket, parse_bucket, slot_index, stem, vectorize
from dvfs.harness.corpus import dictionary

from _util import LSH_SEED

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=20)


@pytest.mark.parametrize("raw, expect", [
    ("Encrypting", "encrypt"), ("encrypts", "encrypt"), ("encrypted", "encrypt"),
    ("walking", "walk"), ("walk", "walk"),
])
def test_stem_examples(raw, expect):
    assert stem(raw) == expect


@given(words)
def test_stem_idempotent(w):
    assert stem(stem(w)) == stem(w)


@pytest.mark.parametrize("bad", ["", "   ", "a-b", "naïve", "two words"])
def test_invalid_keywords(bad):
    with pytest.raises(KeywordError):
        stem(bad)


def test_dimensions():
    assert DIMENSIONS == 160
    assert slot_index("a", 1) == 0
    assert slot_index("z", 5) == 129
    assert slot_index("0", 1) == 130
    assert slot_index("9", 3) == 159
    with pytest.raises(ContractViolation):
        slot_index("a", 6)
    with pytest.raises(ContractViolation):
        slot_index("7", 4)


def test_vectorize_slots():
    v = vectorize("aab")
    assert v.shape == (160,)
    assert set(np.flatnonzero(v)) == {0, 1, 5}


def test_vectorize_caps():
    assert vectorize("aaaaaaaa").sum() == 5
    assert vectorize("1111").sum() == 3


def test_secure_secare_distance():
    d = np.abs(vectorize("secure").astype(int) - vectorize("secare").astype(int)).sum()
    assert d == 2


def test_anagrams_share_vector():
    assert np.array_equal(vectorize("listen"), vectorize("silent"))


@given(words)
def test_vector_weight_is_capped_length(w):
    counts = {c: w.count(c) for c in set(w)}
    expect = sum(min(n, 5 if c.isalpha() else 3) for c, n in counts.items())
    assert vectorize(w).sum() == expect


def test_family_regenerates_bit_identical():
    a, b = LshFamily(LSH_SEED), LshFamily(LSH_SEED)
    assert np.array_equal(a.a, b.a) and np.array_equal(a.b, b.b)
    c = LshFamily(bytes(32))
    assert not np.array_equal(a.a, c.a)


def test_family_validation():
    with pytest.raises(ContractViolation):
        LshFamily(LSH_SEED, k=0)
    with pytest.raises(ContractViolation):
        LshFamily(LSH_SEED, width=0)
    with pytest.raises(ContractViolation):
        LshFamily(b"short")


def test_offsets_within_window():
    fam = LshFamily(LSH_SEED, k=64, width=3.0)
    assert ((fam.b >= 0) & (fam.b < 3.0)).all()


def test_bucket_format_and_batch_agree():
    fam = LshFamily(LSH_SEED)
    vs = np.array([vectorize(w) for w in ("ledger", "cipher", "token")], dtype=float)
    mat = fam.hash_matrix(vs)
    for row, v in zip(mat, vs):
        s = lsh_bucket(fam, v)
        assert parse_bucket(s) == tuple(int(x) for x in row)
        assert len(s.split("|")) == fam.k


def test_fuzzify_composes_pipeline():
    fam = LshFamily(LSH_SEED)
    assert fuzzify(fam, "Encrypting") == fuzzify(fam, "encrypts")
    assert fuzzify(fam, "Encrypting") == lsh_bucket(fam, vectorize(stem("Encrypting")))


@given(st.sampled_from(dictionary()), st.data())
@settings(max_examples=100)
def test_transposed_stem_has_same_vector(w, data):
    s = stem(w)
    if len(s) < 2:
        return
    i = data.draw(st.integers(0, len(s) - 2))
    swapped = s[:i] + s[i + 1] + s[i] + s[i + 2:]
    fam = LshFamily(LSH_SEED)
    assert fam.bucket(vectorize(swapped)) == fam.bucket(vectorize(s))


def test_family_repr_hides_parameters():
    assert "a=" not in repr(LshFamily(LSH_SEED))
