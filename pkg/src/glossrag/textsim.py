"""Lexical similarity between a target sentence and candidate sentences."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Union

from .corpus import tokenize_words


class EmptyTarget(ValueError):
    pass


class EmptyCandidate(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class TokenBag:
    tokens: tuple[str, ...]
    unique: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "unique", frozenset(self.tokens))

    @classmethod
    def from_text(cls, text: str) -> "TokenBag":
        return cls(tokenize_words(text))

    def __len__(self) -> int:
        return len(self.tokens)


BagLike = Union[TokenBag, str]


def as_bag(value: BagLike) -> TokenBag:
    if isinstance(value, TokenBag):
        return value
    if isinstance(value, str):
        return TokenBag.from_text(value)
    return TokenBag(value)


@dataclass(frozen=True)
class ChrfParams:
    char_n_max: int = 6
    word_n_max: int = 2
    beta: float = 2.0

    def __post_init__(self):
        if self.char_n_max < 1:
            raise ValueError("char_n_max must be >= 1")
        if self.word_n_max < 0:
            raise ValueError("word_n_max must be >= 0")
        if not (self.beta > 0 and self.beta != float("inf")):
            raise ValueError("beta must be positive and finite")


CHRF = ChrfParams(word_n_max=0)
CHRF_PLUS_PLUS = ChrfParams()


def word_recall(target: BagLike, candidate: BagLike) -> float:
    """Fraction of the target's word types that occur in the candidate."""
    target, candidate = as_bag(target), as_bag(candidate)
    if not target.unique:
        raise EmptyTarget("target has no tokens")
    return len(candidate.unique & target.unique) / len(target.unique)


def word_precision(target: BagLike, candidate: BagLike) -> float:
    """Fraction of candidate tokens (counted with repetition) found in the target."""
    target, candidate = as_bag(target), as_bag(candidate)
    if not candidate.tokens:
        raise EmptyCandidate("candidate has no tokens")
    hits = sum(1 for token in candidate.tokens if token in target.unique)
    return hits / len(candidate.tokens)


def aggregate_word_recall(target: BagLike, sample: Iterable[BagLike]) -> float:
    """Word recall of the union of a whole sample of candidates."""
    target = as_bag(target)
    if not target.unique:
        raise EmptyTarget("target has no tokens")
    covered: set = set()
    for candidate in sample:
        covered |= as_bag(candidate).unique & target.unique
    return len(covered) / len(target.unique)


def _ngrams(items, n: int) -> Counter:
    return Counter(tuple(items[i:i + n]) for i in range(len(items) - n + 1))


def _order_stats(target_items, candidate_items, n_max: int):
    for n in range(1, n_max + 1):
        ref = _ngrams(target_items, n)
        if not ref:
            continue
        hyp = _ngrams(candidate_items, n)
        matches = sum((ref & hyp).values())
        n_hyp = sum(hyp.values())
        precision = matches / n_hyp if n_hyp else 0.0
        recall = matches / sum(ref.values())
        yield precision, recall


def chrf_score(target: str, candidate: str, params: ChrfParams = CHRF_PLUS_PLUS) -> float:
    """Character (and optionally word) n-gram F-beta score of candidate against target.

    Whitespace is dropped from the character stream. Precision and recall
    are averaged over the n-gram orders for which the target has at least
    one gram, then combined into F-beta.
    """
    target_chars = [c for c in target if not c.isspace()]
    candidate_chars = [c for c in candidate if not c.isspace()]
    if not target_chars or not candidate_chars:
        raise EmptyInput("chrF needs two non-empty strings")

    stats = list(_order_stats(target_chars, candidate_chars, params.char_n_max))
    if params.word_n_max:
        stats += _order_stats(tokenize_words(target), tokenize_words(candidate), params.word_n_max)

    precision = sum(p for p, _ in stats) / len(stats)
    recall = sum(r for _, r in stats) / len(stats)
    if precision == 0.0 and recall == 0.0:
        return 0.0
    beta2 = params.beta ** 2
    return (1 + beta2) * precision * recall / (beta2 * precision + recall)
