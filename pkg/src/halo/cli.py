"""
The ``halo`` command line.

Exit codes: 0 on success, 1 on a usage error, 2 on a runtime error.
"""

import argparse
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
import csv
import logging
from pathlib import Path
import re
import sys

from pydantic import BaseModel
from rich.console import Console
from rich.logging import RichHandler

from common.errors import ConfigError, HaloError, UsageError
from common.files import load_jsonl, read_items, write_json, write_jsonl
from common.labels import ConceptSource, RetrievalMode
from evaluation.analysis import evaluate_predictions, predictions_from_report
from evaluation.model import AnnotationRecord, CurvePoint, PredictionRecord
from gateway.backend import CompletionBackend
from gateway.http import HttpBackend
from gateway.scripted import ScriptedBackend
from halo.config import BackendKind, HaloConfig, load_config
from halo.manifest import MANIFEST_NAME, RunManifest
from halo.offline import DumpRecord, score_record
from pipeline.article import run_article
from pipeline.model import Runtime
from retrieval.corpus import LocalCorpus
from retrieval.retrieve import KnowledgeSources
from retrieval.web import WebSearchClient
from tasks.multihop import run_multihop
from tasks.premise import FalsePremiseRun, run_false_premise

logger = logging.getLogger(__name__)

type Task = Callable[[str], BaseModel]

FIXTURE_SCRIPT = "script.json"
FIXTURE_CONFIG = "run.cfg"
FIXTURE_CORPUS = "corpus.jsonl"
FIXTURE_TOPICS = "topics.txt"
FIXTURE_MULTIHOP = "multihop.txt"
FIXTURE_FALSE_PREMISE = "false_premise.txt"
PREDICTIONS_NAME = "predictions.jsonl"


class HaloArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting on bad arguments."""

    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.casefold()).strip("-")[:60] or "item"


def output_name(index: int, item: str) -> str:
    return f"{index:03d}-{slug(item)}.json"


# runtime wiring


def build_backend(config: HaloConfig) -> CompletionBackend:
    match config.backend.kind:
        case BackendKind.HTTP:
            return HttpBackend.from_env(config.backend.base_url, config.backend.model, config.backend.timeout)
        case BackendKind.SCRIPTED:
            if config.backend.script is None:
                raise ConfigError("backend.kind = scripted requires backend.script")
            return ScriptedBackend.from_file(config.backend.script)
        case _:
            raise ConfigError(f"Unknown backend kind: {config.backend.kind}")


def build_runtime(config: HaloConfig, backend: CompletionBackend | None = None) -> Runtime:
    """
    Create the backend and retrieval clients a configuration asks for.

    :raises ConfigError: If a required file or setting is missing.
    """
    if config.pipeline.concept_method is ConceptSource.EXTERNAL_TOOL:
        raise ConfigError("pipeline.concept_method = external_tool is only available through the library API")

    web = corpus = None
    if config.retrieval.mode is RetrievalMode.WEB_SEARCH:
        web = WebSearchClient.from_env(config.search)
    if config.retrieval.corpus is not None:
        corpus = LocalCorpus.from_path(config.retrieval.corpus)
    elif config.retrieval.mode is RetrievalMode.LOCAL_CORPUS:
        raise ConfigError("retrieval.mode = local_corpus requires retrieval.corpus")

    return Runtime(backend or build_backend(config), KnowledgeSources(web, corpus))


def run_items(items: Sequence[str], task: Task, out_dir: Path, jobs: int) -> list[Path]:
    """
    Run a task over every item and write one JSON file per item.

    Items run concurrently when ``jobs`` > 1; every item is still processed
    sequentially and the files do not depend on the scheduling.

    :return: The written files, in item order.
    :raises HaloError: The first error; the partial output of the failing item
        is written as ``<name>.partial.json``.
    """
    if not items:
        raise ConfigError("No items to run")

    def run_one(index: int, item: str) -> Path:
        name = output_name(index, item)
        try:
            result = task(item)
        except HaloError as err:
            if isinstance(err.partial_report, BaseModel):
                write_json(out_dir / name.replace(".json", ".partial.json"), err.partial_report)
            raise
        return write_json(out_dir / name, result)

    with ThreadPoolExecutor(max_workers=max(jobs, 1)) as pool:
        futures = [pool.submit(run_one, index, item) for index, item in enumerate(items)]
        return [future.result() for future in futures]


def write_manifest(command: str, config: HaloConfig, out_dir: Path, outputs: Sequence[Path]) -> Path:
    relative = [path.relative_to(out_dir) if path.is_relative_to(out_dir) else path for path in outputs]
    return RunManifest.create(command, config.digest(), relative).write(out_dir)


def generate_articles(
    topics: Sequence[str], config: HaloConfig, runtime: Runtime, out_dir: Path, jobs: int
) -> list[Path]:
    pipeline_config = config.pipeline_config()
    reports = []

    def task(topic: str):
        report = run_article(topic, pipeline_config, runtime)
        reports.append(report)
        return report

    outputs = run_items(topics, task, out_dir, jobs)
    by_topic = {report.topic: report for report in reports}
    predictions = [p for topic in topics for p in predictions_from_report(by_topic[topic.strip()])]
    outputs.append(write_jsonl(out_dir / PREDICTIONS_NAME, predictions))
    return outputs


def answer_multihop(
    questions: Sequence[str], config: HaloConfig, runtime: Runtime, out_dir: Path, jobs: int
) -> list[Path]:
    pipeline_config = config.pipeline_config(multihop=True)
    return run_items(questions, lambda q: run_multihop(q, pipeline_config, runtime), out_dir, jobs)


def answer_false_premise(
    questions: Sequence[str], config: HaloConfig, runtime: Runtime, out_dir: Path, jobs: int
) -> list[Path]:
    pipeline_config = config.pipeline_config()

    def task(question: str) -> FalsePremiseRun:
        report, answer = run_false_premise(question, pipeline_config, runtime)
        return FalsePremiseRun(report=report, answer=answer)

    return run_items(questions, task, out_dir, jobs)


# subcommands


def cmd_generate(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    outputs = generate_articles(read_items(args.topics), config, build_runtime(config), args.out, args.jobs)
    write_manifest("generate", config, args.out, outputs)


def cmd_multihop(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    outputs = answer_multihop(read_items(args.questions), config, build_runtime(config), args.out, args.jobs)
    write_manifest("multihop", config, args.out, outputs)


def cmd_false_premise(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    questions = read_items(args.questions)
    outputs = answer_false_premise(questions, config, build_runtime(config), args.out, args.jobs)
    write_manifest("false-premise", config, args.out, outputs)


def write_curve_csv(path: Path, curve: Sequence[CurvePoint]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CurvePoint._fields)
        writer.writerows(curve)
    return path


def cmd_evaluate(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    summary = evaluate_predictions(
        load_jsonl(args.annotations, AnnotationRecord),
        load_jsonl(args.predictions, PredictionRecord),
        bins=args.bins,
    )
    print(summary.model_dump_json(indent=2))

    outputs = []
    if args.curve_csv is not None:
        outputs.append(write_curve_csv(args.curve_csv, summary.curve))
    if args.out is not None:
        outputs.append(write_json(args.out / "metrics.json", summary))
        write_manifest("evaluate", config, args.out, outputs)
    elif outputs:
        write_manifest("evaluate", config, args.curve_csv.parent, outputs)


def cmd_score(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    scored = [score_record(record) for record in load_jsonl(args.dump, DumpRecord)]
    if args.out is None:
        for record in scored:
            print(record.model_dump_json())
        return
    outputs = [write_jsonl(args.out / "scores.jsonl", scored)]
    write_manifest("score", config, args.out, outputs)


def cmd_replay(args: argparse.Namespace) -> None:
    """Re-run every item list of a fixture against its scripted backend."""
    fixture: Path = args.fixture
    script = fixture / FIXTURE_SCRIPT
    if not script.is_file():
        raise ConfigError(f"Fixture {fixture} has no {FIXTURE_SCRIPT}")

    config_path = fixture / FIXTURE_CONFIG
    config = load_config(config_path if config_path.is_file() else None)
    backend_config = config.backend.model_copy(update={"kind": BackendKind.SCRIPTED, "script": script})
    config = config.model_copy(update={"backend": backend_config})
    if config.retrieval.corpus is None and (fixture / FIXTURE_CORPUS).is_file():
        config = config.model_copy(
            update={"retrieval": config.retrieval.model_copy(update={"corpus": fixture / FIXTURE_CORPUS})}
        )

    backend = ScriptedBackend.from_file(script)
    runtime = build_runtime(config, backend)
    outputs: list[Path] = []
    runs = (
        (FIXTURE_TOPICS, "articles", generate_articles),
        (FIXTURE_MULTIHOP, "multihop", answer_multihop),
        (FIXTURE_FALSE_PREMISE, "false_premise", answer_false_premise),
    )
    for file_name, sub_dir, run in runs:
        if (fixture / file_name).is_file():
            outputs += run(read_items(fixture / file_name), config, runtime, args.out / sub_dir, args.jobs)
    if not outputs:
        raise ConfigError(f"Fixture {fixture} lists no topics or questions")

    if backend.remaining():
        logger.warning("%d scripted completions were never requested", backend.remaining())
    write_manifest("replay", config, args.out, outputs)


def get_arg_parser() -> HaloArgumentParser:
    parser = HaloArgumentParser(
        prog="halo",
        description="Generate text with active hallucination detection and mitigation, and evaluate it.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log every backend call.")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_run_options(sub: argparse.ArgumentParser, out_required: bool = True) -> None:
        sub.add_argument("--config", type=Path, help="Path to the run configuration file.")
        sub.add_argument("--out", type=Path, required=out_required, help="Output directory.")

    def add_jobs(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--jobs", type=int, default=1, help="Number of items run concurrently.")

    generate = commands.add_parser("generate", help="Write an article per topic.")
    generate.add_argument("--topics", type=Path, required=True, help="One topic per line.")
    add_run_options(generate)
    add_jobs(generate)
    generate.set_defaults(handler=cmd_generate)

    multihop = commands.add_parser("multihop", help="Answer multi-hop questions step by step.")
    multihop.add_argument("--questions", type=Path, required=True, help="One question per line.")
    add_run_options(multihop)
    add_jobs(multihop)
    multihop.set_defaults(handler=cmd_multihop)

    premise = commands.add_parser("false-premise", help="Check, rectify and answer questions.")
    premise.add_argument("--questions", type=Path, required=True, help="One question per line.")
    add_run_options(premise)
    add_jobs(premise)
    premise.set_defaults(handler=cmd_false_premise)

    evaluate = commands.add_parser("evaluate", help="Score predictions against gold annotations.")
    evaluate.add_argument("--annotations", type=Path, required=True, help="Annotation JSONL file.")
    evaluate.add_argument("--predictions", type=Path, required=True, help="Prediction JSONL file.")
    evaluate.add_argument("--bins", type=int, default=10, help="Number of probability bins.")
    evaluate.add_argument("--curve-csv", type=Path, help="Write the PR curve as CSV.")
    add_run_options(evaluate, out_required=False)
    evaluate.set_defaults(handler=cmd_evaluate)

    score = commands.add_parser("score", help="Score concepts of a token log-probability dump.")
    score.add_argument("--dump", type=Path, required=True, help="Dump JSONL file.")
    add_run_options(score, out_required=False)
    score.set_defaults(handler=cmd_score)

    replay = commands.add_parser("replay", help="Re-run a scripted-backend fixture.")
    replay.add_argument("--fixture", type=Path, required=True, help="Fixture directory.")
    replay.add_argument("--out", type=Path, required=True, help="Output directory.")
    add_jobs(replay)
    replay.set_defaults(handler=cmd_replay)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    """
    Run one command.

    :param argv: The arguments, without the program name.
    :return: The exit code.
    """
    try:
        args = get_arg_parser().parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as err:
        # --help
        return 0 if err.code in (None, 0) else 1

    if getattr(args, "jobs", 1) < 1:
        print("halo: error: --jobs must be at least 1", file=sys.stderr)
        return 1

    configure_logging(args.verbose)
    try:
        args.handler(args)
    except (HaloError, OSError, ValueError) as err:
        logger.error("%s: %s", type(err).__name__, err)
        return 2
    return 0
