"""Grid runs over strategies, shot counts and seeds, plus result export.

Config files are plain ``key = value`` lines (``#`` starts a comment);
list values are comma separated. Relative paths resolve against the
config file's directory. See ``configs/`` for the replication grids.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Corpus, extract_gloss_list, read_corpus
from .evaluation import NoFunctionalGlosses, adherence_percentage, corpus_accuracy, fit_log_curve, mean_std
from .glosser import InContextGlosser, estimate_tokens
from .llm_client import (
    ChatClient,
    EchoMock,
    GlossPrediction,
    LabelMock,
    ProviderConfig,
    ResponseCache,
    parse_gloss_line,
)
from .retrieval import Strategy
from .segmenter import MorfessorSegmenter

_logger = logging.getLogger(__name__)

PAPER_SHOTS = (0, 1, 2, 3, 5, 10, 30, 50, 100)
GLOSSLIST_SUFFIX = "+glosslist"


class ConfigError(ValueError):
    pass


def parse_strategy_label(label: str) -> tuple[Strategy, bool]:
    """``"chrf+glosslist"`` -> ``(Strategy.CHRF, True)``."""
    glosslist = label.endswith(GLOSSLIST_SUFFIX)
    name = label[: -len(GLOSSLIST_SUFFIX)] if glosslist else label
    try:
        return Strategy(name), glosslist
    except ValueError:
        raise ConfigError(f"unknown strategy {name!r}") from None


def _as_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _as_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _as_optional(convert):
    def inner(value: str):
        return None if value.strip().lower() in ("", "none") else convert(value)
    return inner


@dataclass
class ExperimentConfig:
    train: Optional[str] = None
    eval: Optional[str] = None
    language: str = ""
    metalang: str = "English"
    eval_split: str = "dev"
    strategies: list = field(default_factory=lambda: ["random"])
    shots: list = field(default_factory=lambda: list(PAPER_SHOTS))
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    temperature: float = 0.0
    model: str = "mock"
    max_tokens: int = 1024
    include_translation: bool = True
    char_n_max: int = 6
    word_n_max: int = 2
    beta: float = 2.0
    eval_limit: Optional[int] = None
    # provider
    provider: str = "openai"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    max_concurrency: int = 4
    requests_per_second: Optional[float] = None
    max_attempts: int = 3
    mock: Optional[str] = None
    # files
    cache_dir: Optional[str] = None
    output_dir: Optional[str] = None
    system_template: Optional[str] = None
    user_template: Optional[str] = None

    def __post_init__(self):
        for label in self.strategies:
            parse_strategy_label(label)
        if any(s < 0 for s in self.shots):
            raise ConfigError("shot counts must be >= 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.mock not in (None, "echo", "labels", "glosslist"):
            raise ConfigError(f"unknown mock backend {self.mock!r}")

    def provider_config(self) -> ProviderConfig:
        return ProviderConfig(
            base_url=self.base_url, api_key_env=self.api_key_env, name=self.provider,
            max_attempts=self.max_attempts, max_concurrency=self.max_concurrency,
            requests_per_second=self.requests_per_second,
        )


_CONVERTERS = {
    "strategies": _as_list,
    "shots": lambda v: [int(x) for x in _as_list(v)],
    "seeds": lambda v: [int(x) for x in _as_list(v)],
    "temperature": float,
    "max_tokens": int,
    "include_translation": _as_bool,
    "char_n_max": int,
    "word_n_max": int,
    "beta": float,
    "eval_limit": _as_optional(int),
    "max_concurrency": int,
    "requests_per_second": _as_optional(float),
    "max_attempts": int,
    "mock": _as_optional(str),
    "train": _as_optional(str),
    "eval": _as_optional(str),
    "cache_dir": _as_optional(str),
    "output_dir": _as_optional(str),
    "system_template": _as_optional(str),
    "user_template": _as_optional(str),
}
_PATH_KEYS = ("train", "eval", "cache_dir", "output_dir", "system_template", "user_template")
_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"line {number}: expected 'key = value'")
        if key not in _FIELDS:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def build_config(values: dict[str, str], base_dir=None) -> ExperimentConfig:
    kwargs = {}
    for key, value in values.items():
        if value is None:
            continue
        kwargs[key] = _CONVERTERS.get(key, str)(value) if isinstance(value, str) else value
        if key in _PATH_KEYS and kwargs[key] is not None and base_dir is not None:
            path = Path(kwargs[key])
            kwargs[key] = str(path if path.is_absolute() else Path(base_dir) / path)
    return ExperimentConfig(**kwargs)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a key-value config file; ``overrides`` (raw strings) take precedence."""
    path = Path(path)
    values = parse_config_text(path.read_text(encoding="utf-8"))
    config = build_config(values, base_dir=path.parent)
    if overrides:
        extra = build_config({k: v for k, v in overrides.items() if v is not None})
        explicit = {k for k, v in overrides.items() if v is not None}
        config = dataclasses.replace(config, **{k: getattr(extra, k) for k in explicit})
    return config


@dataclass(frozen=True)
class ResultRow:
    strategy: str
    shots: int
    seed: int
    accuracy: float
    adherence: Optional[float]
    refusal_count: int
    format_error_count: int
    token_estimate: int


@dataclass(frozen=True)
class Aggregate:
    strategy: str
    shots: int
    mean: float
    std: float
    n_seeds: int


@dataclass
class ResultsTable:
    rows: list = field(default_factory=list)

    @property
    def aggregates(self) -> list[Aggregate]:
        groups: "OrderedDict[tuple, list]" = OrderedDict()
        for row in self.rows:
            groups.setdefault((row.strategy, row.shots), []).append(row.accuracy)
        out = []
        for (strategy, shots), values in groups.items():
            mean, std = mean_std(values)
            out.append(Aggregate(strategy, shots, mean, std, len(values)))
        return out

    def curve_fits(self) -> dict:
        fits = {}
        by_strategy: "OrderedDict[str, list]" = OrderedDict()
        for agg in self.aggregates:
            by_strategy.setdefault(agg.strategy, []).append((agg.shots, agg.mean))
        for strategy, points in by_strategy.items():
            if len({s for s, _ in points}) >= 2:
                fits[strategy] = fit_log_curve(points)
        return fits


def make_client(config: ExperimentConfig, glosslist=None) -> ChatClient:
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None
    provider = config.provider_config()
    if config.mock == "echo":
        return ChatClient(provider, cache=cache, backend=EchoMock())
    if config.mock == "labels":
        return ChatClient(provider, cache=cache, backend=LabelMock())
    if config.mock == "glosslist":
        return ChatClient(provider, cache=cache, backend=LabelMock(glosslist))
    return ChatClient(provider, cache=cache)


def prediction_record(example_id: str, prediction: GlossPrediction, **extra) -> dict:
    record = dict(extra)
    record.update(
        id=example_id,
        raw=prediction.raw,
        gloss_line=prediction.gloss_line,
        refusal=prediction.refusal,
        format_error=prediction.format_error,
    )
    return record


def read_predictions(path) -> list[dict]:
    """Predictions as JSON-lines records, or plain text with one gloss line per example."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    records = []
    for i, line in enumerate(text.splitlines()):
        gloss = line.strip()
        prediction = parse_gloss_line(gloss if gloss.lower().startswith("glosses:") else f"Glosses: {gloss}")
        records.append(prediction_record(str(i), prediction))
    return records


def record_to_prediction(record: dict) -> GlossPrediction:
    return GlossPrediction(record.get("gloss_line"), record.get("raw", ""), bool(record.get("refusal")),
                           bool(record.get("format_error")))


def run_experiment(config: ExperimentConfig, client: Optional[ChatClient] = None,
                   train: Optional[Corpus] = None, eval_corpus: Optional[Corpus] = None) -> ResultsTable:
    """Run every (strategy, shots, seed) cell and score it on the eval corpus."""
    if train is None:
        if not config.train:
            raise ConfigError("no training corpus configured")
        train = read_corpus(config.train, config.language, config.metalang, "train")
    if eval_corpus is None:
        if not config.eval:
            raise ConfigError("no evaluation corpus configured")
        eval_corpus = read_corpus(config.eval, config.language, config.metalang, config.eval_split)
    targets = list(eval_corpus)[: config.eval_limit] if config.eval_limit else list(eval_corpus)
    golds = [t.glosses for t in targets]

    template = lambda p: Path(p).read_text(encoding="utf-8") if p else None  # noqa: E731
    system_template, user_template = template(config.system_template), template(config.user_template)

    segmenter = None
    labels = [parse_strategy_label(label) for label in config.strategies]
    if any(kind is Strategy.MORPHEME_RECALL for kind, _ in labels):
        segmenter = MorfessorSegmenter().fit(train.transcriptions)

    predictions_dir = None
    if config.output_dir:
        predictions_dir = Path(config.output_dir) / "predictions"
        predictions_dir.mkdir(parents=True, exist_ok=True)

    if client is None:
        client = make_client(config, extract_gloss_list(train))

    table = ResultsTable()
    for label, (kind, with_glosslist) in zip(config.strategies, labels):
        for shots in config.shots:
            n = min(shots, len(train))
            if n < shots:
                _logger.warning("%d shots requested, training corpus has %d examples", shots, len(train))
            for seed in config.seeds:
                glosser = InContextGlosser(
                    language=config.language, metalang=config.metalang, strategy=kind.value, n_examples=n,
                    seed=seed, include_glosslist=with_glosslist, include_translation=config.include_translation,
                    model_id=config.model, temperature=config.temperature, max_tokens=config.max_tokens,
                    char_n_max=config.char_n_max, word_n_max=config.word_n_max, beta=config.beta,
                    segmenter=segmenter, client=client, system_template=system_template,
                    user_template=user_template,
                ).fit(train)
                prompts = [glosser.build_prompt(t)[1] for t in targets]
                predictions = glosser.predict_prompts(prompts)
                if predictions_dir is not None:
                    path = predictions_dir / f"{label}_{shots}_{seed}.jsonl"
                    with path.open("w", encoding="utf-8") as handle:
                        for target, prediction in zip(targets, predictions):
                            record = prediction_record(target.id, prediction, strategy=label, shots=shots, seed=seed)
                            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
                try:
                    adherence = adherence_percentage(predictions, glosser.glosslist_)
                except NoFunctionalGlosses:
                    adherence = None
                table.rows.append(ResultRow(
                    strategy=label, shots=shots, seed=seed,
                    accuracy=corpus_accuracy(predictions, golds),
                    adherence=adherence,
                    refusal_count=sum(p.refusal for p in predictions),
                    format_error_count=sum(p.format_error for p in predictions),
                    token_estimate=sum(estimate_tokens(p.system) + estimate_tokens(p.user) for p in prompts),
                ))
                _logger.info("%s shots=%d seed=%d accuracy=%.4f", label, shots, seed, table.rows[-1].accuracy)
    return table


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def export(table: ResultsTable, out_dir, formats: Sequence[str] = ("csv", "json", "plot")) -> list[Path]:
    """Write result files to ``out_dir`` and return their paths.

    ``csv`` writes rows.csv and aggregates.csv; ``json`` writes the same
    as JSON lines; ``plot`` writes plot_shots.csv (shots, mean, std),
    plot_logshots.csv (ln(shots+1), mean) and curve_fits.csv.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    row_fields = [f.name for f in dataclasses.fields(ResultRow)]
    agg_fields = [f.name for f in dataclasses.fields(Aggregate)]
    rows = [[getattr(r, f) for f in row_fields] for r in table.rows]
    aggs = table.aggregates

    def write(name: str, text: str):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if "csv" in formats:
        write("rows.csv", _csv_text(row_fields, rows))
        write("aggregates.csv", _csv_text(agg_fields, [[getattr(a, f) for f in agg_fields] for a in aggs]))
    if "json" in formats:
        dump = lambda obj: json.dumps(dataclasses.asdict(obj), sort_keys=True)  # noqa: E731
        write("rows.jsonl", "".join(dump(r) + "\n" for r in table.rows))
        write("aggregates.jsonl", "".join(dump(a) + "\n" for a in aggs))
    if "plot" in formats:
        write("plot_shots.csv", _csv_text(
            ["strategy", "shots", "mean", "std"], [[a.strategy, a.shots, a.mean, a.std] for a in aggs]))
        write("plot_logshots.csv", _csv_text(
            ["strategy", "shots", "log_shots", "mean"],
            [[a.strategy, a.shots, math.log(a.shots + 1), a.mean] for a in aggs]))
        fits = table.curve_fits()
        write("curve_fits.csv", _csv_text(
            ["strategy", "slope", "intercept", "r_squared"],
            [[s, f.slope, f.intercept, f.r_squared] for s, f in fits.items()]))
    return written
