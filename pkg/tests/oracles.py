"""Brute-force reference implementations used to check the library.

Nothing here imports from glossrag; each function recomputes its quantity
from first principles with the slowest obvious method.
"""

import itertools
import math
from fractions import Fraction


def chrf_bruteforce(target, candidate, char_n_max, word_n_max, beta):
    def grams(seq, n):
        return [tuple(seq[i:i + n]) for i in range(0, len(seq) - n + 1)]

    t_chars = [c for c in target if c not in " \t\n\r\f\v"]
    c_chars = [c for c in candidate if c not in " \t\n\r\f\v"]
    t_words, c_words = target.split(), candidate.split()

    precisions, recalls = [], []
    orders = [(t_chars, c_chars, n) for n in range(1, char_n_max + 1)]
    orders += [(t_words, c_words, n) for n in range(1, word_n_max + 1)]
    for t_seq, c_seq, n in orders:
        t_grams, c_grams = grams(t_seq, n), grams(c_seq, n)
        if not t_grams:
            continue
        matches = 0
        for g in set(t_grams):
            matches += min(t_grams.count(g), c_grams.count(g))
        precisions.append(Fraction(matches, len(c_grams)) if c_grams else Fraction(0))
        recalls.append(Fraction(matches, len(t_grams)))
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    if p == 0 and r == 0:
        return 0.0
    b2 = Fraction(beta) ** 2
    return float((1 + b2) * p * r / (b2 * p + r))


def best_coverage(target_words, candidate_sets, n):
    """Largest number of target words covered by any n candidates."""
    target = set(target_words)
    best = 0
    k = min(n, len(candidate_sets))
    for combo in itertools.combinations(range(len(candidate_sets)), k):
        covered = set()
        for i in combo:
            covered |= set(candidate_sets[i]) & target
        best = max(best, len(covered))
    return best


def positional_accuracy(predicted, gold, flat=False):
    """(correct, total) by walking gold positions and looking up the prediction."""
    gold_words = [w.split("-") for w in gold.split()]
    pred_words = [w.split("-") for w in (predicted or "").split()]
    if flat:
        gold_words = [[m for w in gold_words for m in w]]
        pred_words = [[m for w in pred_words for m in w]]
    correct = total = 0
    for wi in range(len(gold_words)):
        for mi in range(len(gold_words[wi])):
            total += 1
            try:
                if pred_words[wi][mi] == gold_words[wi][mi]:
                    correct += 1
            except IndexError:
                pass
    return correct, total


def segmentations(word):
    """Every way to cut ``word`` into non-empty pieces."""
    for mask in range(2 ** (len(word) - 1)):
        pieces, start = [], 0
        for i in range(1, len(word)):
            if mask >> (i - 1) & 1:
                pieces.append(word[start:i])
                start = i
        pieces.append(word[start:])
        yield tuple(pieces)


def analysis_cost(word_counts, analysis):
    """Description length of a joint analysis {word: morph tuple}, computed from scratch."""
    morph_tokens = {}
    for word, count in word_counts.items():
        for morph in analysis[word]:
            morph_tokens[morph] = morph_tokens.get(morph, 0) + count
    total = sum(morph_tokens.values())
    corpus = sum(c * -math.log2(c / total) for c in morph_tokens.values())
    letters = {}
    for morph in morph_tokens:
        for ch in morph:
            letters[ch] = letters.get(ch, 0) + 1
        letters[None] = letters.get(None, 0) + 1
    n_letters = sum(letters.values())
    lexicon = 0.0
    for morph in morph_tokens:
        lexicon += sum(-math.log2(letters[ch] / n_letters) for ch in morph)
        lexicon += -math.log2(letters[None] / n_letters)
    return corpus + lexicon


def all_joint_analyses(word_counts):
    words = sorted(word_counts)
    for combo in itertools.product(*(list(segmentations(w)) for w in words)):
        yield dict(zip(words, combo))


def segmentation_cost(morph_cost, pieces):
    return sum(morph_cost(p) for p in pieces)
