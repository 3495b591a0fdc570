"""Morpheme accuracy, gloss-list adherence and log-shot curve fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .corpus import MORPHEME_SEPARATORS, GlossList, is_functional_gloss, line_morpheme_glosses
from .llm_client import GlossPrediction


class EmptyGold(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class NoFunctionalGlosses(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class AccuracyCount:
    correct: int = 0
    total: int = 0

    def __post_init__(self):
        if not 0 <= self.correct <= self.total:
            raise ValueError("need 0 <= correct <= total")

    def __add__(self, other: "AccuracyCount") -> "AccuracyCount":
        return AccuracyCount(self.correct + other.correct, self.total + other.total)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


def morpheme_accuracy(predicted: Optional[str], gold: str, mode: str = "word",
                      separators: str = MORPHEME_SEPARATORS) -> AccuracyCount:
    """Count gold morpheme glosses matched by the prediction at the same position.

    ``mode="word"`` aligns words by position and then morphemes inside each
    word; ``mode="flat"`` aligns the two flattened morpheme sequences.
    Predicted material past the end of the gold line is ignored and missing
    predictions count as wrong. A ``None`` prediction scores zero.
    """
    gold_words = line_morpheme_glosses(gold, separators)
    if not gold_words:
        raise EmptyGold("gold gloss line is empty")
    pred_words = line_morpheme_glosses(predicted, separators) if predicted else []
    total = sum(len(word) for word in gold_words)

    if mode == "word":
        correct = 0
        for gold_word, pred_word in zip(gold_words, pred_words):
            correct += sum(g == p for g, p in zip(gold_word, pred_word))
    elif mode == "flat":
        gold_flat = [g for word in gold_words for g in word]
        pred_flat = [p for word in pred_words for p in word]
        correct = sum(g == p for g, p in zip(gold_flat, pred_flat))
    else:
        raise ValueError("mode must be 'word' or 'flat'")
    return AccuracyCount(correct, total)


PredictionLike = Union[GlossPrediction, str, None]


def _gloss_of(prediction: PredictionLike) -> Optional[str]:
    if isinstance(prediction, GlossPrediction):
        return prediction.gloss_line
    return prediction


def corpus_counts(predictions: Sequence[PredictionLike], golds: Sequence[str], mode: str = "word") -> AccuracyCount:
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(golds)} gold lines")
    pooled = AccuracyCount()
    for prediction, gold in zip(predictions, golds):
        pooled += morpheme_accuracy(_gloss_of(prediction), gold, mode=mode)
    return pooled


def corpus_accuracy(predictions: Sequence[PredictionLike], golds: Sequence[str], mode: str = "word") -> float:
    """Pooled morpheme accuracy; refusals and unparseable answers score zero."""
    return corpus_counts(predictions, golds, mode).accuracy


def predicted_functional_glosses(predictions: Iterable[PredictionLike],
                                 separators: str = MORPHEME_SEPARATORS) -> list[str]:
    found = []
    for prediction in predictions:
        gloss = _gloss_of(prediction)
        if not gloss:
            continue
        for word in line_morpheme_glosses(gloss, separators):
            found.extend(g for g in word if is_functional_gloss(g))
    return found


def adherence_percentage(predictions: Iterable[PredictionLike], glosslist: GlossList) -> float:
    """Share of predicted functional glosses that appear in ``glosslist``."""
    functional = predicted_functional_glosses(predictions)
    if not functional:
        raise NoFunctionalGlosses("predictions contain no functional glosses")
    return sum(g in glosslist for g in functional) / len(functional)


@dataclass(frozen=True)
class CurveFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, shots) -> np.ndarray:
        return self.slope * np.log(np.asarray(shots, dtype=float) + 1) + self.intercept


def fit_log_curve(points: Sequence[tuple[int, float]]) -> CurveFit:
    """Least-squares line of accuracy on ``ln(shots + 1)``."""
    if len(points) < 2:
        raise DegenerateInput("need at least two points")
    shots = np.array([s for s, _ in points], dtype=float)
    if np.any(shots < 0):
        raise ValueError("shot counts must be non-negative")
    y = np.array([a for _, a in points], dtype=float)
    x = np.log(shots + 1)
    x_centered = x - x.mean()
    sxx = float(x_centered @ x_centered)
    if sxx == 0.0:
        raise DegenerateInput("all shot counts are equal")
    slope = float(x_centered @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (slope * x + intercept)
    ss_res = float(residuals @ residuals)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return CurveFit(slope, intercept, min(1.0, max(0.0, r_squared)))


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)
