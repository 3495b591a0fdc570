"""Command line interface: ``glossrag <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import OrderedDict
from pathlib import Path

from .corpus import IgtExample, extract_gloss_list, read_corpus
from .evaluation import NoFunctionalGlosses, adherence_percentage, corpus_counts, fit_log_curve
from .experiment import (
    _FIELDS,
    build_config,
    export,
    load_config,
    make_client,
    read_predictions,
    record_to_prediction,
    run_experiment,
)
from .glosser import InContextGlosser
from .retrieval import Strategy
from .segmenter import MorfessorSegmenter, count_words, load_model, save_model, train, viterbi_segment


def _add_provider_args(parser):
    group = parser.add_argument_group("model provider")
    group.add_argument("--model", help="model id sent to the endpoint")
    group.add_argument("--base-url", help="OpenAI-compatible base URL (…/v1)")
    group.add_argument("--api-key-env", help="environment variable holding the API key")
    group.add_argument("--temperature", type=float)
    group.add_argument("--mock", choices=["echo", "labels", "glosslist"], help="offline backend instead of HTTP")
    group.add_argument("--cache-dir", help="response cache directory")


def _provider_overrides(args) -> dict:
    return {
        "model": args.model,
        "base_url": args.base_url,
        "api_key_env": args.api_key_env,
        "temperature": None if args.temperature is None else str(args.temperature),
        "mock": args.mock,
        "cache_dir": args.cache_dir,
    }


def cmd_gloss(args) -> int:
    train_corpus = read_corpus(args.train, args.language, args.metalang, "train")
    config = build_config({k: v for k, v in _provider_overrides(args).items() if v is not None})
    glosser = InContextGlosser(
        language=args.language, metalang=args.metalang, strategy=args.strategy, n_examples=args.shots,
        seed=args.seed, include_glosslist=args.glosslist, include_translation=not args.no_translation,
        model_id=config.model, temperature=config.temperature,
    )
    glosser.set_params(client=make_client(config, extract_gloss_list(train_corpus))).fit(train_corpus)
    target = IgtExample(transcription=args.transcription, glosses="?", translation=args.translation, id="target")
    _, prompt = glosser.build_prompt(target)
    prediction = glosser.predict_prompts([prompt])[0]
    print("=== system ===")
    print(prompt.system)
    print("=== user ===")
    print(prompt.user)
    print("=== response ===")
    print(prediction.raw)
    print("=== gloss ===")
    if prediction.gloss_line is not None:
        print(prediction.gloss_line)
    else:
        print("(refusal)" if prediction.refusal else "(no gloss line in response)")
        return 1
    return 0


def cmd_experiment(args) -> int:
    overrides = _provider_overrides(args)
    overrides["output_dir"] = args.output_dir
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or key.strip().replace("-", "_") not in _FIELDS:
            raise SystemExit(f"--set expects key=value with a known key, got {item!r}")
        overrides[key.strip().replace("-", "_")] = value.strip()
    config = load_config(args.config, overrides)
    table = run_experiment(config)
    if config.output_dir:
        for path in export(table, config.output_dir):
            print(f"wrote {path}", file=sys.stderr)
    print(f"{'strategy':<28} {'shots':>5} {'mean':>8} {'std':>8}")
    for agg in table.aggregates:
        print(f"{agg.strategy:<28} {agg.shots:>5} {agg.mean:>8.4f} {agg.std:>8.4f}")
    for strategy, fit in table.curve_fits().items():
        print(f"fit {strategy}: slope={fit.slope:.4f} intercept={fit.intercept:.4f} r2={fit.r_squared:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    gold = read_corpus(args.gold, split="test")
    by_id = gold.by_id()
    records = read_predictions(args.predictions)
    glosslist = extract_gloss_list(read_corpus(args.glosslist_from)) if args.glosslist_from else None
    cells: "OrderedDict[tuple, list]" = OrderedDict()
    for record in records:
        cell = (record.get("strategy", ""), record.get("shots", ""), record.get("seed", ""))
        cells.setdefault(cell, []).append(record)
    for (strategy, shots, seed), cell_records in cells.items():
        missing = [r["id"] for r in cell_records if r["id"] not in by_id]
        if missing:
            raise SystemExit(f"prediction ids not in gold corpus: {missing[:5]}")
        predictions = [record_to_prediction(r) for r in cell_records]
        counts = corpus_counts(predictions, [by_id[r["id"]].glosses for r in cell_records], mode=args.mode)
        label = " ".join(str(x) for x in (strategy, shots, seed) if x != "") or "predictions"
        line = f"{label}: morpheme accuracy {counts.accuracy:.4f} ({counts.correct}/{counts.total})"
        if glosslist is not None:
            try:
                line += f", adherence {adherence_percentage(predictions, glosslist):.4f}"
            except NoFunctionalGlosses:
                line += ", adherence n/a"
        print(line)
    return 0


def _read_sentences(path, plain: bool) -> list[str]:
    if plain:
        return [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    return read_corpus(path).transcriptions


def cmd_segment_train(args) -> int:
    history: list = []
    model = train(
        count_words(_read_sentences(args.input, args.plain)),
        epsilon=args.epsilon, seed=args.seed, count_mode=args.count_mode, history=history,
    )
    save_model(model, args.output)
    print(f"{len(model)} morph types, cost {history[0]:.1f} -> {history[-1]:.1f} bits "
          f"in {len(history) - 1} epochs", file=sys.stderr)
    return 0


def cmd_segment(args) -> int:
    segmenter = MorfessorSegmenter.from_model(load_model(args.model))
    words = args.words or [w for line in sys.stdin for w in line.split()]
    for word in words:
        print(args.separator.join(viterbi_segment(segmenter.model_, word).morphs))
    return 0


def cmd_extract_glosslist(args) -> int:
    glosslist = extract_gloss_list(read_corpus(args.corpus))
    print("\n".join(glosslist.entries) if args.one_per_line else glosslist.to_text())
    return 0


def cmd_fit_curve(args) -> int:
    points = []
    for line in Path(args.points).read_text(encoding="utf-8").splitlines():
        fields = line.replace(",", " ").split()
        if not fields or fields[0].startswith("#"):
            continue
        try:
            points.append((int(fields[0]), float(fields[1])))
        except (ValueError, IndexError):
            continue  # header line
    fit = fit_log_curve(points)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glossrag", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gloss", help="gloss one sentence and show the prompt")
    p.add_argument("--train", required=True, help="training corpus in \\t/\\g/\\l block format")
    p.add_argument("--transcription", required=True)
    p.add_argument("--translation")
    p.add_argument("--language", required=True)
    p.add_argument("--metalang", default="English")
    p.add_argument("--strategy", default="chrf", choices=[s.value for s in Strategy])
    p.add_argument("--shots", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--glosslist", action="store_true", help="append the training gloss list to the system prompt")
    p.add_argument("--no-translation", action="store_true", help="leave translation lines out of the prompts")
    _add_provider_args(p)
    p.set_defaults(func=cmd_gloss)

    p = sub.add_parser("experiment", help="run a strategy x shots x seeds grid from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    _add_provider_args(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("evaluate", help="score a predictions file against a gold corpus")
    p.add_argument("--predictions", required=True, help="JSON-lines records or one gloss line per example")
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", choices=["word", "flat"], default="word")
    p.add_argument("--glosslist-from", help="training corpus; also report gloss-list adherence")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("segment-train", help="train a segmentation model")
    p.add_argument("--input", required=True, help="IGT corpus (or plain text with --plain)")
    p.add_argument("--plain", action="store_true")
    p.add_argument("--output", required=True, help="model file, one morph<TAB>count per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--count-mode", choices=["token", "type"], default="token")
    p.set_defaults(func=cmd_segment_train)

    p = sub.add_parser("segment", help="segment words with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--separator", default=" ")
    p.add_argument("words", nargs="*", help="words to segment (default: read stdin)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("extract-glosslist", help="list the functional glosses of a corpus")
    p.add_argument("corpus")
    p.add_argument("--one-per-line", action="store_true")
    p.set_defaults(func=cmd_extract_glosslist)

    p = sub.add_parser("fit-curve", help="fit accuracy against ln(shots+1)")
    p.add_argument("points", help="file of 'shots accuracy' lines")
    p.set_defaults(func=cmd_fit_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
