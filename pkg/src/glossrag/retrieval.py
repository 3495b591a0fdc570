"""In-context example selection for a target sentence."""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import EmptyCorpus, IgtExample, tokenize_words
from .segmenter import MorfessorSegmenter, SegModel, lower_word, viterbi_segment
from .textsim import CHRF_PLUS_PLUS, ChrfParams, TokenBag, chrf_score, word_precision, word_recall

_logger = logging.getLogger(__name__)


class MissingSegModel(ValueError):
    pass


class Strategy(str, Enum):
    RANDOM = "random"
    WORD_RECALL = "word_recall"
    WORD_PRECISION = "word_precision"
    MAX_WORD_COVERAGE = "max_word_coverage"
    CHRF = "chrf"
    MORPHEME_RECALL = "morpheme_recall"


@dataclass(frozen=True)
class SelectionStrategy:
    kind: Strategy
    chrf_params: ChrfParams = CHRF_PLUS_PLUS
    seg_model: Optional[SegModel] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Strategy(self.kind))


@dataclass(frozen=True)
class RankedSelection:
    examples: tuple[IgtExample, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "scores", tuple(self.scores))
        if len(self.examples) != len(self.scores):
            raise ValueError("examples and scores differ in length")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]


def target_rng(seed: int, target: str) -> random.Random:
    """Random generator derived from the run seed and the target sentence."""
    digest = hashlib.sha256(f"{seed}\x00{target}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def greedy_max_coverage(target: frozenset, candidates: Sequence[frozenset], n: int, order: Sequence[int]):
    """Greedy maximum coverage over ``candidates`` in visiting ``order``.

    Returns ``(picks, gains)`` where ``gains[k]`` is the number of new
    target elements covered by pick ``k``. Ties go to the earliest
    candidate in ``order``; once no candidate adds coverage, the rest of
    the slots are filled in ``order``.
    """
    covered: set = set()
    remaining = list(order)
    picks, gains = [], []
    while len(picks) < n:
        best, best_gain = None, 0
        for i in remaining:
            gain = len((candidates[i] & target) - covered)
            if gain > best_gain:
                best, best_gain = i, gain
        if best is None:
            break
        picks.append(best)
        gains.append(best_gain)
        covered |= candidates[best] & target
        remaining.remove(best)
    for i in remaining[: n - len(picks)]:
        picks.append(i)
        gains.append(0)
    return picks, gains


class CandidatePool:
    """Training examples with their cached token and morph bags."""

    def __init__(self, examples: Sequence[IgtExample]):
        self.examples = list(examples)
        if not self.examples:
            raise EmptyCorpus("no candidate examples")
        self.bags = [TokenBag.from_text(ex.transcription) for ex in self.examples]
        self._morph_bags: dict[int, list[TokenBag]] = {}
        self._seg_cache: dict[int, dict[str, tuple[str, ...]]] = {}

    def __len__(self) -> int:
        return len(self.examples)

    def morph_bag(self, text: str, model: SegModel) -> TokenBag:
        cache = self._seg_cache.setdefault(id(model), {})
        morphs = []
        for word in tokenize_words(text):
            seg = cache.get(word)
            if seg is None:
                seg = tuple(lower_word(m) for m in viterbi_segment(model, word).morphs)
                cache[word] = seg
            morphs.extend(seg)
        return TokenBag(morphs)

    def morph_bags(self, model: SegModel) -> list[TokenBag]:
        bags = self._morph_bags.get(id(model))
        if bags is None:
            bags = [self.morph_bag(ex.transcription, model) for ex in self.examples]
            self._morph_bags[id(model)] = bags
        return bags

    def _scores(self, target: str, strategy: SelectionStrategy) -> list[float]:
        kind = strategy.kind
        if kind is Strategy.WORD_RECALL:
            bag = TokenBag.from_text(target)
            return [word_recall(bag, c) for c in self.bags]
        if kind is Strategy.WORD_PRECISION:
            bag = TokenBag.from_text(target)
            return [word_precision(bag, c) for c in self.bags]
        if kind is Strategy.CHRF:
            return [chrf_score(target, ex.transcription, strategy.chrf_params) for ex in self.examples]
        if kind is Strategy.MORPHEME_RECALL:
            bag = self.morph_bag(target, strategy.seg_model)
            return [word_recall(bag, c) for c in self.morph_bags(strategy.seg_model)]
        raise ValueError(f"{kind} is not a per-candidate scoring strategy")

    def select(self, target: str, strategy: SelectionStrategy, n: int) -> RankedSelection:
        if n < 1:
            raise ValueError("n must be at least 1")
        if strategy.kind is Strategy.MORPHEME_RECALL and strategy.seg_model is None:
            raise MissingSegModel("morpheme recall needs a trained segmentation model")
        if n > len(self):
            _logger.warning("requested %d examples but only %d are available", n, len(self))
            n = len(self)

        rng = target_rng(strategy.seed, target)
        order = list(range(len(self)))
        rng.shuffle(order)

        if strategy.kind in (Strategy.RANDOM, Strategy.MAX_WORD_COVERAGE):
            target_types = TokenBag.from_text(target).unique
            sets = [bag.unique for bag in self.bags]
            if strategy.kind is Strategy.RANDOM:
                picks = order[:n]
                gains, covered = [], set()
                for i in picks:
                    gains.append(len((sets[i] & target_types) - covered))
                    covered |= sets[i] & target_types
            else:
                picks, gains = greedy_max_coverage(target_types, sets, n, order)
            denom = len(target_types) or 1
            return RankedSelection([self.examples[i] for i in picks], [g / denom for g in gains])

        scores = self._scores(target, strategy)
        ranked = sorted(order, key=lambda i: -scores[i])[:n]
        return RankedSelection([self.examples[i] for i in ranked], [scores[i] for i in ranked])


def select_examples(
    train: Sequence[IgtExample], target_transcription: str, strategy: SelectionStrategy, n: int
) -> RankedSelection:
    """Pick ``n`` training examples for ``target_transcription``, best first."""
    return CandidatePool(train).select(target_transcription, strategy, n)


class ExampleRetriever(BaseEstimator):
    """Estimator form of :func:`select_examples`.

    ``fit`` caches the candidate pool (and trains a segmenter for
    ``morpheme_recall`` when none is given); ``transform`` maps targets to
    :class:`RankedSelection` objects.

    Parameters
    ----------
    strategy : str
        One of ``random``, ``word_recall``, ``word_precision``,
        ``max_word_coverage``, ``chrf``, ``morpheme_recall``.
    n_examples : int
    seed : int
    char_n_max, word_n_max, beta
        chrF settings; ``word_n_max=0`` gives plain chrF, 2 gives chrF++.
    segmenter : MorfessorSegmenter or SegModel, optional
    """

    def __init__(self, strategy="random", n_examples=5, seed=0, char_n_max=6, word_n_max=2, beta=2.0,
                 segmenter=None):
        self.strategy = strategy
        self.n_examples = n_examples
        self.seed = seed
        self.char_n_max = char_n_max
        self.word_n_max = word_n_max
        self.beta = beta
        self.segmenter = segmenter

    def _seg_model(self, examples) -> Optional[SegModel]:
        if Strategy(self.strategy) is not Strategy.MORPHEME_RECALL:
            return None
        seg = self.segmenter
        if seg is None:
            seg = MorfessorSegmenter(seed=self.seed).fit([ex.transcription for ex in examples])
        if isinstance(seg, MorfessorSegmenter):
            check_is_fitted(seg, "model_")
            return seg.model_
        return seg

    def fit(self, X, y=None):
        examples = list(X)
        self.pool_ = CandidatePool(examples)
        self.strategy_ = SelectionStrategy(
            Strategy(self.strategy),
            chrf_params=ChrfParams(self.char_n_max, self.word_n_max, self.beta),
            seg_model=self._seg_model(examples),
            seed=self.seed,
        )
        return self

    def select(self, target: Union[str, IgtExample], n: Optional[int] = None) -> RankedSelection:
        check_is_fitted(self, "pool_")
        text = target.transcription if isinstance(target, IgtExample) else target
        return self.pool_.select(text, self.strategy_, self.n_examples if n is None else n)

    def transform(self, X):
        return [self.select(target) for target in X]
