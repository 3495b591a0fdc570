import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import chrf_bruteforce

from glossrag.textsim import (
    ChrfParams,
    EmptyCandidate,
    EmptyInput,
    EmptyTarget,
    TokenBag,
    aggregate_word_recall,
    chrf_score,
    word_precision,
    word_recall,
)

bag = TokenBag.from_text


def test_token_bag():
    b = bag("a b a")
    assert b.tokens == ("a", "b", "a")
    assert b.unique == {"a", "b"}


class TestWordRecall:
    def test_partial(self):
        assert word_recall(bag("the dog runs"), bag("dog runs fast")) == pytest.approx(2 / 3, abs=1e-12)

    def test_identity(self):
        assert word_recall(bag("a b b c"), bag("a b b c")) == 1.0

    def test_disjoint(self):
        assert word_recall(bag("a b"), bag("c d")) == 0.0

    def test_empty_target(self):
        with pytest.raises(EmptyTarget):
            word_recall(bag(""), bag("a"))

    def test_accepts_strings(self):
        assert word_recall("the dog runs", "dog runs fast") == pytest.approx(2 / 3)


class TestWordPrecision:
    def test_counts_repeated_tokens(self):
        assert word_precision(bag("dog runs"), bag("dog dog fast")) == pytest.approx(2 / 3, abs=1e-12)

    def test_all_inside(self):
        assert word_precision(bag("a b c"), bag("b b a")) == 1.0

    def test_disjoint(self):
        assert word_precision(bag("a b"), bag("c d")) == 0.0

    def test_empty_candidate(self):
        with pytest.raises(EmptyCandidate):
            word_precision(bag("a"), bag(" "))


class TestAggregateWordRecall:
    def test_union_covers(self):
        assert aggregate_word_recall(bag("a b c d"), [bag("a b"), bag("c d")]) == 1.0

    def test_empty_sample(self):
        assert aggregate_word_recall(bag("a b"), []) == 0.0

    def test_self_cover(self):
        assert aggregate_word_recall(bag("a b c"), [bag("a b c")]) == 1.0

    def test_empty_target(self):
        with pytest.raises(EmptyTarget):
            aggregate_word_recall(bag(""), [bag("a")])


class TestChrf:
    def test_identity(self):
        assert chrf_score("abc def", "abc def") == 1.0

    def test_hand_counted(self):
        score = chrf_score("abc", "ab", ChrfParams(char_n_max=2, word_n_max=0, beta=2))
        assert score == pytest.approx(7 / 11, abs=1e-12)

    def test_no_shared_characters(self):
        assert chrf_score("abc", "xyz") == 0.0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            chrf_score("", "a")
        with pytest.raises(EmptyInput):
            chrf_score("a", "   ")

    def test_whitespace_ignored_for_characters(self):
        p = ChrfParams(word_n_max=0)
        assert chrf_score("ab cd", "abcd", p) == 1.0

    def test_word_orders_distinguish_spacing(self):
        assert chrf_score("ab cd", "abcd", ChrfParams(word_n_max=2)) < 1.0

    def test_one_word_target_skips_word_bigrams(self):
        # the bigram order has no target grams and is left out of the averages
        p = ChrfParams(char_n_max=1, word_n_max=2)
        assert chrf_score("ab", "ab") == 1.0
        assert chrf_score("ab", "ab ab", p) == pytest.approx(chrf_bruteforce("ab", "ab ab", 1, 2, 2.0))

    @pytest.mark.parametrize("kwargs", [{"char_n_max": 0}, {"word_n_max": -1}, {"beta": 0}, {"beta": float("inf")}])
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            ChrfParams(**kwargs)

    def test_matches_bruteforce_on_random_pairs(self):
        rng = random.Random(11)
        for _ in range(200):
            a = "".join(rng.choice("ab c") for _ in range(rng.randint(1, 12)))
            b = "".join(rng.choice("abc d") for _ in range(rng.randint(1, 12)))
            if not a.strip() or not b.strip():
                continue
            n, m, beta = rng.randint(1, 4), rng.randint(0, 2), rng.choice([0.5, 1.0, 2.0, 3.0])
            expected = chrf_bruteforce(a, b, n, m, beta)
            assert chrf_score(a, b, ChrfParams(n, m, beta)) == pytest.approx(expected, abs=1e-12)


words = st.lists(st.sampled_from(list("abcdefg")), min_size=1, max_size=8)


@given(words, words)
def test_scores_bounded(t, s):
    T, S = TokenBag(t), TokenBag(s)
    for value in (word_recall(T, S), word_precision(T, S), aggregate_word_recall(T, [S])):
        assert 0.0 <= value <= 1.0
    assert 0.0 <= chrf_score(" ".join(t), " ".join(s)) <= 1.0


@given(words, words)
def test_recall_equals_aggregate_of_one(t, s):
    assert word_recall(TokenBag(t), TokenBag(s)) == aggregate_word_recall(TokenBag(t), [TokenBag(s)])


@given(words, st.lists(words, max_size=5), words)
def test_aggregate_monotone_in_sample(t, sample, extra):
    bags = [TokenBag(s) for s in sample]
    before = aggregate_word_recall(TokenBag(t), bags)
    assert aggregate_word_recall(TokenBag(t), bags + [TokenBag(extra)]) >= before


@given(words, words, st.data())
def test_adding_target_word_never_lowers_recall(t, s, data):
    word = data.draw(st.sampled_from(t))
    assert word_recall(TokenBag(t), TokenBag(s + [word])) >= word_recall(TokenBag(t), TokenBag(s))


@given(st.text(min_size=1, max_size=30).filter(lambda x: x.strip()),
       st.integers(1, 6), st.integers(0, 3), st.floats(0.1, 5))
def test_chrf_self_similarity(x, n, m, beta):
    assert chrf_score(x, x, ChrfParams(n, m, beta)) == pytest.approx(1.0, abs=1e-12)


@given(words)
def test_self_similarity_of_word_scores(t):
    assert word_recall(TokenBag(t), TokenBag(t)) == 1.0
    assert word_precision(TokenBag(t), TokenBag(t)) == 1.0
