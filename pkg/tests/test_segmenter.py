import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import analysis_cost, segmentation_cost, segmentations

from glossrag.segmenter import (
    EmptyCorpus,
    EmptyModel,
    MorfessorSegmenter,
    SegModel,
    Segmentation,
    corpus_cost,
    lexicon_cost,
    load_model,
    model_cost,
    save_model,
    train,
    viterbi_segment,
)

THREE_TYPES = {"aaaabbbb": 5, "aaaa": 5, "bbbb": 5}


class TestModelCost:
    def test_single_morph(self):
        model = SegModel({"a": 1})
        assert corpus_cost(model) == 0.0
        assert lexicon_cost(model) == pytest.approx(2.0, abs=1e-12)
        assert model_cost(model) == pytest.approx(2.0, abs=1e-12)

    def test_doubling_counts_doubles_corpus_cost(self):
        counts = {"ab": 3, "c": 1, "abc": 2}
        single = SegModel(counts)
        double = SegModel({m: 2 * c for m, c in counts.items()})
        assert corpus_cost(double) == pytest.approx(2 * corpus_cost(single), abs=1e-9)
        assert lexicon_cost(double) == lexicon_cost(single)

    def test_larger_lexicon_costs_more(self):
        small = SegModel({"ab": 2, "c": 1})
        large = SegModel({"ab": 2, "c": 1, "ba": 1})
        assert lexicon_cost(large) >= lexicon_cost(small)

    def test_matches_from_scratch_formula(self):
        counts = {"abc": 2, "ab": 1, "c": 4}
        analysis = {"abc": ("abc",), "ab": ("ab",), "c": ("c",)}
        assert model_cost(SegModel(counts)) == pytest.approx(analysis_cost(counts, analysis), abs=1e-9)

    def test_empty(self):
        with pytest.raises(EmptyModel):
            model_cost(SegModel({}))

    @pytest.mark.parametrize("counts", [{"": 1}, {"a": 0}, {"a": 1.5}])
    def test_invalid_counts(self, counts):
        with pytest.raises(ValueError):
            SegModel(counts)


class TestTrain:
    def test_shared_halves_are_split(self):
        model = train(THREE_TYPES)
        assert model.analyses["aaaabbbb"] == ("aaaa", "bbbb")
        assert model.analyses["aaaa"] == ("aaaa",)

    def test_three_types_reach_exhaustive_optimum(self):
        from oracles import all_joint_analyses

        best = min(analysis_cost(THREE_TYPES, a) for a in all_joint_analyses(THREE_TYPES))
        assert model_cost(train(THREE_TYPES)) == pytest.approx(best, abs=1e-9)

    def test_single_word_stays_whole(self):
        assert train({"hello": 1}).analyses == {"hello": ("hello",)}

    def test_history_non_increasing(self):
        rng = random.Random(3)
        counts = {"".join(rng.choice("abc") for _ in range(rng.randint(2, 9))): rng.randint(1, 5) for _ in range(40)}
        history = []
        train(counts, seed=1, history=history)
        assert len(history) >= 2
        for before, after in zip(history, history[1:]):
            assert after <= before + 1e-9

    def test_model_counts_match_analyses(self):
        counts = {"walked": 3, "walking": 2, "talked": 2, "talking": 1, "walk": 4}
        model = train(counts)
        rebuilt = {}
        for word, morphs in model.analyses.items():
            assert "".join(morphs) == word
            for m in morphs:
                rebuilt[m] = rebuilt.get(m, 0) + counts[word]
        assert rebuilt == dict(model.morph_counts)
        assert model.total_tokens == sum(rebuilt.values())

    def test_deterministic(self):
        counts = {"walked": 3, "walking": 2, "talked": 2, "talking": 1, "walk": 4, "jumped": 1}
        assert train(counts, seed=5).analyses == train(counts, seed=5).analyses

    def test_lowercases_and_merges(self):
        model = train({"Dog": 1, "dog": 2})
        assert dict(model.morph_counts) == {"dog": 3}

    def test_type_mode(self):
        model = train({"aa": 10, "b": 3}, count_mode="type")
        assert model.total_tokens == sum(len(m) for m in model.analyses.values())

    def test_default_epsilon(self):
        counts = {"ab": 2, "abab": 1}
        history = []
        model = train(counts, history=history)
        assert model.epsilon == pytest.approx(0.005 * history[0])

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            train({})


class TestViterbi:
    def test_frequent_word_unsplit(self):
        model = train(THREE_TYPES)
        assert viterbi_segment(model, "aaaa").morphs == ("aaaa",)

    def test_compound(self):
        assert viterbi_segment(train(THREE_TYPES), "aaaabbbb").morphs == ("aaaa", "bbbb")

    def test_case_insensitive_but_preserving(self):
        seg = viterbi_segment(train(THREE_TYPES), "AAAAbbbb")
        assert seg.morphs == ("AAAA", "bbbb")

    def test_unseen_characters(self):
        seg = viterbi_segment(train(THREE_TYPES), "xyz")
        assert "".join(seg.morphs) == "xyz"

    def test_ties_prefer_fewer_morphs(self):
        # each of "a", "b" costs 1 bit, "ab" costs 2 bits: equal totals
        model = SegModel({"a": 1, "b": 1, "ab": 2})
        assert viterbi_segment(model, "ab").morphs == ("ab",)

    def test_empty_word(self):
        with pytest.raises(ValueError):
            viterbi_segment(train(THREE_TYPES), "")

    def test_dp_matches_exhaustive_search(self):
        rng = random.Random(17)
        counts = {"".join(rng.choice("abcd") for _ in range(rng.randint(1, 6))): rng.randint(1, 9) for _ in range(25)}
        model = train(counts, seed=2)
        for _ in range(150):
            word = "".join(rng.choice("abcde") for _ in range(rng.randint(1, 10)))
            costs = sorted(
                (segmentation_cost(model.morph_cost, pieces), len(pieces), pieces)
                for pieces in segmentations(word)
            )
            got = viterbi_segment(model, word).morphs
            assert segmentation_cost(model.morph_cost, got) == pytest.approx(costs[0][0], abs=1e-9)
            unique_best = costs[0][0] < costs[1][0] - 1e-9 if len(costs) > 1 else True
            if unique_best:
                assert got == costs[0][2]
            if costs[0][2] == (word,) and unique_best:
                assert got == (word,)


def test_segmentation_invariant():
    with pytest.raises(ValueError):
        Segmentation("abc", ("ab",))
    with pytest.raises(ValueError):
        Segmentation("abc", ("abc", ""))


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="abcXYZ'0123-", min_size=1, max_size=15))
def test_concatenation_invariant(word):
    model = train({"abc": 3, "ab": 2, "c'": 1, "x0": 2})
    assert "".join(viterbi_segment(model, word).morphs) == word


def test_save_load_roundtrip(tmp_path):
    model = train({"walked": 3, "walking": 2, "talked": 2, "a\tb": 1})
    path = tmp_path / "model.tsv"
    save_model(model, path)
    loaded = load_model(path)
    assert dict(loaded.morph_counts) == dict(model.morph_counts)
    assert model_cost(loaded) == model_cost(model)
    lines = path.read_text(encoding="utf-8").splitlines()
    random.Random(0).shuffle(lines)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert dict(load_model(path).morph_counts) == dict(model.morph_counts)


def test_load_rejects_bad_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("abc 3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_model(path)


class TestEstimator:
    def test_fit_transform(self):
        seg = MorfessorSegmenter(seed=1)
        out = seg.fit_transform(["walked walking", "talked talking walk"])
        assert ["".join(morphs) for morphs in out] == ["walkedwalking", "talkedtalkingwalk"]
        assert seg.cost_history_[-1] <= seg.cost_history_[0]

    def test_get_params(self):
        assert MorfessorSegmenter(seed=3).get_params()["seed"] == 3

    def test_not_fitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            MorfessorSegmenter().segment_word("abc")

    def test_from_model(self):
        seg = MorfessorSegmenter.from_model(train(THREE_TYPES))
        assert seg.segment_word("aaaabbbb").morphs == ("aaaa", "bbbb")
        assert math.isfinite(model_cost(seg.model_))
