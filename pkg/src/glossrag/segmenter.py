"""Unsupervised MDL morph segmentation in the style of Morfessor Baseline.

The model cost has two parts, both in bits:

* corpus cost: ``sum over morph tokens of -log2(count(m) / total_tokens)``
* lexicon cost: every morph type is spelled out once, character by
  character plus an end marker, using character probabilities estimated
  from the lexicon spellings themselves.

Training starts from unsplit words and greedily accepts binary splits that
lower the total cost. Segmenting new words is a Viterbi search over the
trained morph probabilities.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import EmptyCorpus, tokenize_words

_logger = logging.getLogger(__name__)

END = ""  # key of the end-of-morph symbol in char_costs
NEW_TYPE_PENALTY = 1.0
_TOL = 1e-9


class EmptyModel(ValueError):
    pass


def lower_word(word: str) -> str:
    """Lowercase character by character, keeping the length unchanged."""
    out = []
    for char in word:
        low = char.lower()
        out.append(low if len(low) == 1 else char)
    return "".join(out)


def _xlogx(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


@dataclass(frozen=True)
class Segmentation:
    word: str
    morphs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "morphs", tuple(self.morphs))
        if any(not m for m in self.morphs):
            raise ValueError("morphs must be non-empty")
        if "".join(self.morphs) != self.word:
            raise ValueError(f"morphs {self.morphs} do not spell {self.word!r}")


@dataclass(frozen=True)
class SegModel:
    morph_counts: Mapping[str, int]
    epsilon: float = 0.0
    analyses: Mapping[str, tuple[str, ...]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for morph, count in self.morph_counts.items():
            if not morph:
                raise ValueError("morphs must be non-empty strings")
            if int(count) != count or count < 1:
                raise ValueError(f"count of {morph!r} must be a positive integer")

    @cached_property
    def total_tokens(self) -> int:
        return sum(self.morph_counts.values())

    @cached_property
    def _symbol_counts(self) -> Counter:
        symbols = Counter()
        for morph in self.morph_counts:
            symbols.update(morph)
            symbols[END] += 1
        return symbols

    @cached_property
    def char_costs(self) -> dict[str, float]:
        """Code length in bits of each lexicon character; ``END`` holds the end marker."""
        symbols = self._symbol_counts
        total = sum(symbols.values())
        return {s: math.log2(total) - math.log2(f) for s, f in symbols.items()}

    @property
    def end_cost(self) -> float:
        return self.char_costs[END]

    def unseen_char_cost(self) -> float:
        # an unseen character costs one bit more than a character seen once
        return math.log2(sum(self._symbol_counts.values())) + 1.0

    def spelling_cost(self, morph: str) -> float:
        costs = self.char_costs
        unseen = None
        total = costs[END]
        for char in morph:
            cost = costs.get(char)
            if cost is None:
                if unseen is None:
                    unseen = self.unseen_char_cost()
                cost = unseen
            total += cost
        return total

    def morph_cost(self, morph: str) -> float:
        """Cost in bits of one occurrence of ``morph`` during segmentation."""
        count = self.morph_counts.get(morph)
        if count:
            return math.log2(self.total_tokens) - math.log2(count)
        return self.spelling_cost(morph) + NEW_TYPE_PENALTY

    def __len__(self) -> int:
        return len(self.morph_counts)


def corpus_cost(model: SegModel) -> float:
    if not model.morph_counts:
        raise EmptyModel("model has no morphs")
    counts = model.morph_counts.values()
    return _xlogx(model.total_tokens) - sum(_xlogx(c) for c in counts)


def lexicon_cost(model: SegModel) -> float:
    if not model.morph_counts:
        raise EmptyModel("model has no morphs")
    symbols = model._symbol_counts
    return _xlogx(sum(symbols.values())) - sum(_xlogx(f) for f in symbols.values())


def model_cost(model: SegModel) -> float:
    """Total description length in bits (corpus cost plus lexicon cost)."""
    return corpus_cost(model) + lexicon_cost(model)


class _CostState:
    """Morph counts with the sums needed to read the model cost in O(1)."""

    def __init__(self):
        self.counts: Counter = Counter()
        self.symbols: Counter = Counter()
        self.n_tokens = 0
        self.n_symbols = 0
        self.s_counts = 0.0
        self.s_symbols = 0.0

    def _touch_symbol(self, symbol: str, delta: int):
        old = self.symbols[symbol]
        new = old + delta
        self.s_symbols += _xlogx(new) - _xlogx(old)
        if new:
            self.symbols[symbol] = new
        else:
            del self.symbols[symbol]
        self.n_symbols += delta

    def _touch_type(self, morph: str, delta: int):
        for char in morph:
            self._touch_symbol(char, delta)
        self._touch_symbol(END, delta)

    def add(self, morph: str, count: int):
        old = self.counts[morph]
        if old == 0:
            self._touch_type(morph, 1)
        self.counts[morph] = old + count
        self.s_counts += _xlogx(old + count) - _xlogx(old)
        self.n_tokens += count

    def remove(self, morph: str, count: int):
        old = self.counts[morph]
        if old < count:
            raise RuntimeError(f"removing {count} of {morph!r} with only {old}")
        new = old - count
        self.s_counts += _xlogx(new) - _xlogx(old)
        self.n_tokens -= count
        if new:
            self.counts[morph] = new
        else:
            del self.counts[morph]
            self._touch_type(morph, -1)

    def refresh(self):
        self.s_counts = sum(_xlogx(c) for c in self.counts.values())
        self.s_symbols = sum(_xlogx(f) for f in self.symbols.values())

    def cost(self) -> float:
        return _xlogx(self.n_tokens) - self.s_counts + _xlogx(self.n_symbols) - self.s_symbols


class _Trainer:
    def __init__(self, word_counts: Mapping[str, int]):
        self.word_counts = dict(word_counts)
        self.state = _CostState()
        self.analyses: dict[str, tuple[str, ...]] = {}
        for word, count in self.word_counts.items():
            self.state.add(word, count)
            self.analyses[word] = (word,)
        self.accepted_splits = 0

    def _tol(self, cost: float) -> float:
        return _TOL * max(1.0, abs(cost))

    def _resplit(self, segment: str, count: int) -> list[str]:
        # ``segment`` is absent from the state on entry and present (maybe split) on exit
        state = self.state
        state.add(segment, count)
        best_cost = state.cost()
        tol = self._tol(best_cost)
        best_index = None
        for i in range(1, len(segment)):
            state.remove(segment, count)
            state.add(segment[:i], count)
            state.add(segment[i:], count)
            cost = state.cost()
            if cost < best_cost - tol:
                best_cost, best_index = cost, i
            state.remove(segment[:i], count)
            state.remove(segment[i:], count)
            state.add(segment, count)
        if best_index is None:
            return [segment]
        self.accepted_splits += 1
        left, right = segment[:best_index], segment[best_index:]
        state.remove(segment, count)
        state.add(left, count)
        state.add(right, count)
        morphs = []
        for part in (left, right):
            state.remove(part, count)
            morphs += self._resplit(part, count)
        return morphs

    def reanalyse(self, word: str):
        state = self.state
        count = self.word_counts[word]
        old = self.analyses[word]
        before = state.cost()
        for morph in old:
            state.remove(morph, count)
        new = tuple(self._resplit(word, count))
        if new != old and state.cost() > before + self._tol(before):
            for morph in new:
                state.remove(morph, count)
            for morph in old:
                state.add(morph, count)
            new = old
        self.analyses[word] = new

    def snapshot(self, epsilon: float) -> SegModel:
        return SegModel(dict(self.state.counts), epsilon=epsilon, analyses=dict(self.analyses))


def _prepare_counts(word_counts: Mapping[str, int], count_mode: str) -> dict[str, int]:
    if count_mode not in ("token", "type"):
        raise ValueError("count_mode must be 'token' or 'type'")
    merged: Counter = Counter()
    for word, count in word_counts.items():
        if count <= 0 or not word:
            continue
        merged[lower_word(word)] += int(count)
    if count_mode == "type":
        merged = Counter(dict.fromkeys(merged, 1))
    return dict(merged)


def train(
    word_counts: Mapping[str, int],
    epsilon: Optional[float] = None,
    seed: int = 0,
    count_mode: str = "token",
    epsilon_ratio: float = 0.005,
    max_epochs: int = 100,
    history: Optional[list] = None,
) -> SegModel:
    """Train a segmentation model on a word frequency table.

    Each epoch visits the word types in a seeded random order and
    re-analyses them by recursive binary splitting. Training stops when an
    epoch lowers the cost by less than ``epsilon`` bits (by default
    ``epsilon_ratio`` times the cost of the unsplit model). When ``history``
    is a list, the cost after initialisation and after each epoch is
    appended to it.
    """
    counts = _prepare_counts(word_counts, count_mode)
    if not counts:
        raise EmptyCorpus("no words to train on")
    trainer = _Trainer(counts)
    cost = trainer.state.cost()
    if epsilon is None:
        epsilon = epsilon_ratio * cost
    costs = [cost]
    rng = random.Random(seed)
    order = sorted(counts)
    for epoch in range(max_epochs):
        rng.shuffle(order)
        for word in order:
            trainer.reanalyse(word)
        trainer.state.refresh()
        costs.append(trainer.state.cost())
        _logger.debug("epoch %d cost %.3f", epoch + 1, costs[-1])
        if costs[-2] - costs[-1] < epsilon:
            break
    if history is not None:
        history.extend(costs)
    return trainer.snapshot(epsilon)


def viterbi_segment(model: SegModel, word: str) -> Segmentation:
    """Most probable segmentation of ``word`` under ``model``.

    Matching is case-insensitive but the returned morphs are slices of the
    original word. Ties go to the analysis with fewer morphs.
    """
    if not word:
        raise ValueError("cannot segment an empty word")
    if not model.morph_counts:
        raise EmptyModel("model has no morphs")
    key = lower_word(word)
    n = len(key)
    best = [(0.0, 0, 0)] + [(math.inf, 0, 0)] * n  # (cost, n_morphs, start)
    for end in range(1, n + 1):
        for start in range(end):
            prev_cost, prev_n, _ = best[start]
            cost = prev_cost + model.morph_cost(key[start:end])
            cur_cost, cur_n, _ = best[end]
            tol = _TOL * max(1.0, abs(cur_cost)) if cur_cost != math.inf else 0.0
            if cost < cur_cost - tol or (abs(cost - cur_cost) <= tol and prev_n + 1 < cur_n):
                best[end] = (cost, prev_n + 1, start)
    bounds = []
    end = n
    while end > 0:
        start = best[end][2]
        bounds.append((start, end))
        end = start
    return Segmentation(word, tuple(word[s:e] for s, e in reversed(bounds)))


def save_model(model: SegModel, path) -> None:
    lines = [f"{morph}\t{count}\n" for morph, count in sorted(model.morph_counts.items())]
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_model(path) -> SegModel:
    counts = {}
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            morph, sep, count = line.rpartition("\t")
            if not sep:
                raise ValueError(f"{path}:{number}: expected 'morph<TAB>count'")
            counts[morph] = counts.get(morph, 0) + int(count)
    return SegModel(counts)


def count_words(sentences: Iterable[str]) -> Counter:
    counts = Counter()
    for sentence in sentences:
        counts.update(tokenize_words(sentence))
    return counts


class MorfessorSegmenter(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` on sentences, ``transform`` sentences to morph lists.

    Parameters
    ----------
    epsilon : float, optional
        Convergence threshold in bits. Defaults to ``epsilon_ratio`` times
        the initial model cost.
    epsilon_ratio : float
    seed : int
        Seed for the order in which word types are visited.
    count_mode : {"token", "type"}
        Train on token frequencies or on each word type once.
    max_epochs : int
    """

    def __init__(self, epsilon=None, epsilon_ratio=0.005, seed=0, count_mode="token", max_epochs=100):
        self.epsilon = epsilon
        self.epsilon_ratio = epsilon_ratio
        self.seed = seed
        self.count_mode = count_mode
        self.max_epochs = max_epochs

    def fit(self, X, y=None):
        history: list = []
        self.model_ = train(
            count_words(X),
            epsilon=self.epsilon,
            seed=self.seed,
            count_mode=self.count_mode,
            epsilon_ratio=self.epsilon_ratio,
            max_epochs=self.max_epochs,
            history=history,
        )
        self.cost_history_ = history
        return self

    @classmethod
    def from_model(cls, model: SegModel) -> "MorfessorSegmenter":
        segmenter = cls()
        segmenter.model_ = model
        segmenter.cost_history_ = []
        return segmenter

    def segment_word(self, word: str) -> Segmentation:
        check_is_fitted(self, "model_")
        return viterbi_segment(self.model_, word)

    def segment_sentence(self, sentence: str) -> list[str]:
        return [m for word in tokenize_words(sentence) for m in self.segment_word(word).morphs]

    def transform(self, X):
        return [self.segment_sentence(sentence) for sentence in X]
