"""End-to-end in-context glosser with a scikit-learn style interface."""

from __future__ import annotations

import logging
import math
from typing import Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, EmptyCorpus, IgtExample, extract_gloss_list
from .evaluation import corpus_accuracy
from .llm_client import ChatClient, CompletionRequest, EchoMock, GlossPrediction, parse_gloss_line
from .prompt import PromptConfig, RenderedPrompt, render_prompt
from .retrieval import ExampleRetriever, RankedSelection

_logger = logging.getLogger(__name__)


def estimate_tokens(text: str) -> int:
    """Rough token count (four characters per token)."""
    return math.ceil(len(text) / 4)


def check_examples(X, name: str = "X") -> list[IgtExample]:
    """Coerce a corpus or iterable of examples to a list, rejecting anything else."""
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be a Corpus or a sequence of IgtExample, not a string")
    examples = list(X)
    for ex in examples:
        if not isinstance(ex, IgtExample):
            raise TypeError(f"{name} must contain IgtExample objects, got {type(ex).__name__}")
    return examples


class InContextGlosser(BaseEstimator):
    """Gloss sentences by prompting a chat model with retrieved examples.

    ``fit`` stores the training corpus, its gloss list and an
    :class:`ExampleRetriever`; ``predict`` returns one
    :class:`GlossPrediction` per target; ``score`` is pooled morpheme
    accuracy against the targets' own gloss lines.

    Parameters
    ----------
    language, metalang : str
        Names used in the prompt; ``language`` falls back to the training
        corpus tag.
    strategy : str
        Retrieval strategy, see :class:`ExampleRetriever`.
    n_examples : int
        Shots per prompt; 0 gives zero-shot prompts.
    seed : int
        Used for retrieval tie-breaking and as the request seed.
    include_glosslist, include_translation : bool
    model_id : str
    temperature : float
    max_tokens : int
    char_n_max, word_n_max, beta
        chrF settings.
    segmenter : MorfessorSegmenter or SegModel, optional
    client : ChatClient, optional
        Defaults to an offline echo mock.
    system_template, user_template : str, optional
        Template overrides.
    parse_retries : int
        Fresh completions requested after an answer without a gloss line.
    """

    def __init__(self, language="", metalang="English", strategy="random", n_examples=5, seed=0,
                 include_glosslist=False, include_translation=True, model_id="mock", temperature=0.0,
                 max_tokens=1024, char_n_max=6, word_n_max=2, beta=2.0, segmenter=None, client=None,
                 system_template=None, user_template=None, parse_retries=1):
        self.language = language
        self.metalang = metalang
        self.strategy = strategy
        self.n_examples = n_examples
        self.seed = seed
        self.include_glosslist = include_glosslist
        self.include_translation = include_translation
        self.model_id = model_id
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.char_n_max = char_n_max
        self.word_n_max = word_n_max
        self.beta = beta
        self.segmenter = segmenter
        self.client = client
        self.system_template = system_template
        self.user_template = user_template
        self.parse_retries = parse_retries

    def fit(self, X, y=None):
        examples = check_examples(X)
        if not examples:
            raise EmptyCorpus("cannot fit on an empty corpus")
        if self.n_examples < 0:
            raise ValueError("n_examples must be >= 0")
        language = self.language or (X.language if isinstance(X, Corpus) else "")
        self.prompt_config_ = PromptConfig(
            language=language or "the target language",
            metalang=self.metalang,
            include_glosslist=self.include_glosslist,
            include_translation=self.include_translation,
            system_template=self.system_template,
            user_template=self.user_template,
        )
        self.glosslist_ = extract_gloss_list(examples)
        self.retriever_ = None
        if self.n_examples > 0:
            self.retriever_ = ExampleRetriever(
                strategy=self.strategy, n_examples=self.n_examples, seed=self.seed,
                char_n_max=self.char_n_max, word_n_max=self.word_n_max, beta=self.beta,
                segmenter=self.segmenter,
            ).fit(examples)
        self.client_ = self.client if self.client is not None else ChatClient(backend=EchoMock())
        self.n_retries_ = 0
        return self

    def build_prompt(self, target: IgtExample) -> tuple[RankedSelection, RenderedPrompt]:
        check_is_fitted(self, "prompt_config_")
        if self.retriever_ is None:
            selection = RankedSelection((), ())
        else:
            selection = self.retriever_.select(target)
        glosslist = self.glosslist_ if self.include_glosslist else None
        return selection, render_prompt(selection, target, self.prompt_config_, glosslist)

    def make_request(self, prompt: RenderedPrompt, attempt: int = 0) -> CompletionRequest:
        return CompletionRequest(
            system=prompt.system, user=prompt.user, model_id=self.model_id,
            temperature=self.temperature, seed=self.seed, max_tokens=self.max_tokens, attempt=attempt,
        )

    def predict_prompts(self, prompts: Sequence[RenderedPrompt]) -> list[GlossPrediction]:
        check_is_fitted(self, "client_")
        predictions = [None] * len(prompts)
        pending = list(range(len(prompts)))
        for attempt in range(self.parse_retries + 1):
            if not pending:
                break
            if attempt:
                self.n_retries_ += len(pending)
                _logger.info("retrying %d unparseable answers (attempt %d)", len(pending), attempt + 1)
            raws = self.client_.complete_many([self.make_request(prompts[i], attempt) for i in pending])
            for i, raw in zip(pending, raws):
                predictions[i] = parse_gloss_line(raw)
            pending = [i for i in pending if predictions[i].format_error]
        return predictions

    def predict(self, X) -> list[GlossPrediction]:
        targets = check_examples(X)
        return self.predict_prompts([self.build_prompt(t)[1] for t in targets])

    def score(self, X, y=None) -> float:
        targets = check_examples(X)
        golds = y if y is not None else [t.glosses for t in targets]
        return corpus_accuracy(self.predict(targets), golds)
