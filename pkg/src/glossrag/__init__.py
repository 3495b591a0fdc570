"""Retrieval-augmented in-context glossing of interlinear text."""

from .corpus import Corpus, GlossList, IgtExample, extract_gloss_list, parse_corpus, read_corpus
from .evaluation import adherence_percentage, corpus_accuracy, fit_log_curve, morpheme_accuracy
from .glosser import InContextGlosser
from .llm_client import ChatClient, CompletionRequest, GlossPrediction, ProviderConfig, parse_gloss_line
from .prompt import PromptConfig, render_prompt
from .retrieval import ExampleRetriever, SelectionStrategy, Strategy, select_examples
from .segmenter import MorfessorSegmenter, train, viterbi_segment
from .textsim import ChrfParams, aggregate_word_recall, chrf_score, word_precision, word_recall

__version__ = "0.1.0"

__all__ = [
    "ChatClient",
    "ChrfParams",
    "CompletionRequest",
    "Corpus",
    "ExampleRetriever",
    "GlossList",
    "GlossPrediction",
    "IgtExample",
    "InContextGlosser",
    "MorfessorSegmenter",
    "PromptConfig",
    "ProviderConfig",
    "SelectionStrategy",
    "Strategy",
    "adherence_percentage",
    "aggregate_word_recall",
    "chrf_score",
    "corpus_accuracy",
    "extract_gloss_list",
    "fit_log_curve",
    "morpheme_accuracy",
    "parse_corpus",
    "parse_gloss_line",
    "read_corpus",
    "render_prompt",
    "select_examples",
    "train",
    "viterbi_segment",
    "word_precision",
    "word_recall",
]
