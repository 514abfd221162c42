"""Command-line entry point: generate-data, train, grid-search, evaluate, classify.

Exit codes: 0 success, 2 usage, 3 I/O, 4 data or model format.
"""

import argparse
import hashlib
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from importlib_metadata import PackageNotFoundError, version
from pydantic import BaseModel, Field, ValidationError

from src import config
from src.config import logger
from src.datagen import build_corpus, load_corpus_spec, load_normal, read_corpus, split_train_test, write_corpus
from src.dnslog_parser import LogFormat, LogRecord, filter_apex, parse_line, read_lines
from src.domain import Label, Origin
from src.errors import DataFormatError, UsageError
from src.evaluation import compute_metrics, export_scatter, predict_proba, predict_samples, render_table
from src.model_store import load, save
from src.neuralnet import DEFAULT_HYPERPARAMS, Hyperparams
from src.tokenizer import build_vocabulary
from src.training import TrainConfig, default_grid, fit, grid_search, load_grid, parse_grid_line

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4

PACKAGE_NAME = "dns_tunneling_cnn"

# records scored per forward pass when classifying a file; stdin is scored line by line
CLASSIFY_CHUNK = 256

ORIGIN_ALIASES = {
    "alexa": Origin.ALEXA, "alexa-like": Origin.ALEXA,
    "bambenek": Origin.BAMBENEK, "bambenek-like": Origin.BAMBENEK,
    "cz": Origin.CZ, "cz-like": Origin.CZ,
}


class RunManifest(BaseModel):
    tool_version: str
    subcommand: str
    flags: Dict[str, Any] = Field(description="Flags as given on the command line")
    resolved: Dict[str, Any] = Field(default_factory=dict, description="Effective settings after environment defaults")
    seeds: Dict[str, int] = Field(default_factory=dict)
    inputs: Dict[str, str] = Field(default_factory=dict, description="SHA-256 of each input file")
    outputs: Dict[str, str] = Field(default_factory=dict, description="SHA-256 of each output file")
    results: Dict[str, Any] = Field(default_factory=dict)


def _package_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0.0.0+local"


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(args: argparse.Namespace, primary_output: str, inputs: Sequence[str],
                   outputs: Sequence[str], results: Dict[str, Any],
                   seeds: Optional[Dict[str, int]] = None,
                   resolved: Optional[Dict[str, Any]] = None) -> str:
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = RunManifest(
        tool_version=_package_version(),
        subcommand=args.command,
        flags=flags,
        resolved=resolved or {},
        seeds=seeds or {},
        inputs={p: file_sha256(p) for p in inputs},
        outputs={p: file_sha256(p) for p in outputs},
        results=results,
    )
    path = f"{primary_output}.manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        f.write(manifest.model_dump_json(indent=2))
        f.write("\n")
    logger.info(f"Wrote run manifest {path}")
    return path


def _parse_hp(text: Optional[str]) -> Hyperparams:
    if not text:
        return DEFAULT_HYPERPARAMS
    try:
        hp = parse_grid_line(text)
    except DataFormatError as ex:
        raise UsageError(f"--hp: {ex}") from ex
    if hp is None:
        raise UsageError("--hp given without any key=value entries")
    return hp


def _parse_feeds(entries: Sequence[str]) -> Dict[Origin, str]:
    feeds = {}
    for entry in entries:
        key, sep, path = entry.partition("=")
        if not sep or key not in ORIGIN_ALIASES or not path:
            raise UsageError(f"--normal-feed expects origin=path with origin in alexa|bambenek|cz, got {entry!r}")
        feeds[ORIGIN_ALIASES[key]] = path
    return feeds


def _train_config(args: argparse.Namespace) -> TrainConfig:
    try:
        return TrainConfig.from_env(epochs=args.epochs, batch_size=args.batch, seed=args.seed, lr=args.lr)
    except ValidationError as ex:
        raise UsageError(f"invalid training setting: {ex}") from ex


def _jobs(args: argparse.Namespace) -> int:
    jobs = args.jobs if args.jobs is not None else config.get_jobs()
    if jobs == 0:
        raise UsageError("--jobs must be a positive count, or -1 for every core")
    return jobs


def cmd_generate_data(args: argparse.Namespace) -> int:
    if args.seed is not None and args.seed < 0:
        raise UsageError(f"--seed must be non-negative, got {args.seed}")
    spec = load_corpus_spec(args.spec, seed=args.seed, apexes=args.apex)
    feeds = _parse_feeds(args.normal_feed)
    pools = {}
    skipped = {}
    for origin, path in feeds.items():
        pools[origin], skipped[origin.value] = load_normal(path, origin)
    corpus = build_corpus(spec, pools)
    write_corpus(corpus, args.out)
    outputs = [args.out]

    results: Dict[str, Any] = {
        "samples": len(corpus),
        "tunneling": sum(1 for s in corpus if s.label is Label.TUNNELING),
        "normal": sum(1 for s in corpus if s.label is Label.NORMAL),
        "skipped_feed_lines": skipped,
    }
    if args.train_out or args.test_out:
        train_part, test_part = split_train_test(corpus, args.train_fraction, spec.seed)
        for path, part in ((args.train_out, train_part), (args.test_out, test_part)):
            if path:
                write_corpus(part, path)
                outputs.append(path)
        results.update({"train": len(train_part), "test": len(test_part)})
    resolved = {
        "seed": spec.seed,
        "apexes": list(spec.apexes),
        "tunneling": {tool.value: count for tool, count in spec.tunneling.items()},
        "normal": {origin.value: count for origin, count in spec.normal.items()},
        "train_fraction": args.train_fraction,
    }
    write_manifest(args, args.out, list(feeds.values()), outputs, results, {"corpus": spec.seed}, resolved)
    print(json.dumps(results, sort_keys=True))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    hp = _parse_hp(args.hp)
    cfg = _train_config(args)
    corpus = read_corpus(args.corpus)
    vocab = build_vocabulary()
    run = fit(corpus, hp, cfg, vocab)
    save(run.params, hp, vocab, args.out)
    results = {"hyperparams": hp.model_dump(), "epoch_losses": run.epoch_losses,
               "parameters": run.params.size()}
    write_manifest(args, args.out, [args.corpus], [args.out], results, {"train": cfg.seed},
                   {"hyperparams": hp.model_dump(), **cfg.model_dump()})
    print(f"trained {hp.as_line()} on {len(corpus)} samples; final loss {run.epoch_losses[-1]:.6f}")
    return EXIT_OK


def cmd_grid_search(args: argparse.Namespace) -> int:
    grid = load_grid(args.grid) if args.grid else default_grid()
    cfg = _train_config(args)
    jobs = _jobs(args)
    corpus = read_corpus(args.corpus)
    results = grid_search(corpus, grid, cfg, k=args.folds, n_jobs=jobs)

    print(f"{'avg. F1':>9}{'sd':>10}  {'hyperparameters':<40}{'parameters':>12}")
    for r in results:
        print(f"{r.mean_f1:>9.6f}{r.sd_f1:>10.6f}  {r.hp.as_line():<40}{r.parameter_count:>12,}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump([r.model_dump() for r in results], f, indent=2)
            f.write("\n")
        inputs = [args.corpus] + ([args.grid] if args.grid else [])
        write_manifest(args, args.report, inputs, [args.report],
                       {"best": results[0].model_dump()}, {"train": cfg.seed},
                       {"folds": args.folds, "jobs": jobs, "points": len(grid), **cfg.model_dump()})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    params, _, vocab = load(args.model)
    corpus = read_corpus(args.corpus)
    threshold = args.threshold if args.threshold is not None else config.get_threshold()
    predictions = predict_samples(params, corpus, threshold, vocab)
    report = compute_metrics(predictions, threshold)
    print(render_table(report))

    outputs = []
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(report.model_dump_json(indent=2))
            f.write("\n")
        outputs.append(args.report)
    if args.scatter:
        export_scatter(predictions, args.scatter)
        outputs.append(args.scatter)
    if outputs:
        write_manifest(args, outputs[0], [args.model, args.corpus], outputs, report.model_dump(),
                       resolved={"threshold": threshold})
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    params, _, vocab = load(args.model)
    threshold = args.threshold if args.threshold is not None else config.get_threshold()
    if not 0.0 < threshold < 1.0:
        raise UsageError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    fmt = LogFormat(args.format)
    apexes = args.apex or []
    chunk_size = 1 if args.input == "-" else CLASSIFY_CHUNK

    def emit(batch: List[LogRecord]) -> int:
        records = filter_apex(batch, apexes)
        if not records:
            return 0
        probs = predict_proba(params, [r.qname for r in records], vocab)
        for record, prob in zip(records, probs):
            verdict = Label.TUNNELING if prob >= threshold else Label.NORMAL
            print(f"{record.qname}\t{prob:.6f}\t{verdict.value}")
        sys.stdout.flush()
        return len(records)

    pending: List[LogRecord] = []
    scored = skipped = 0
    for lineno, line in enumerate(read_lines(args.input), start=1):
        record = parse_line(fmt, line, lineno)
        if record is None:
            skipped += 1
            continue
        pending.append(record)
        if len(pending) >= chunk_size:
            scored += emit(pending)
            pending = []
    if pending:
        scored += emit(pending)
    logger.info(f"classified {scored} names ({skipped} lines skipped)")
    return EXIT_OK


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, help="training epochs (default 10)")
    parser.add_argument("--batch", type=int, help="minibatch size (default 128)")
    parser.add_argument("--lr", type=float, help="Adam learning rate (default 0.001)")
    parser.add_argument("--seed", type=int, help="training seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnstunnel", description="Lexical DNS tunneling detection with a character CNN")
    parser.add_argument("--log-level", default=None, help="override DNSTUNNEL_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate-data", help="write a labelled synthetic corpus CSV")
    gen.add_argument("--spec", default="desk", help="desk, full or a JSON corpus spec file")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--apex", action="append", help="tunneling apex domain (repeatable)")
    gen.add_argument("--normal-feed", action="append", default=[], help="origin=path, origin in alexa|bambenek|cz")
    gen.add_argument("--train-out", help="also write the training split here")
    gen.add_argument("--test-out", help="also write the test split here")
    gen.add_argument("--train-fraction", type=float, default=0.8)
    gen.set_defaults(func=cmd_generate_data)

    train = sub.add_parser("train", help="train a model on a corpus CSV")
    train.add_argument("--corpus", required=True)
    train.add_argument("--hp", help='e.g. "nf=1024 ks=4 sl=1 d=100 l=45 hn=256" (default)')
    train.add_argument("--out", required=True, help="model file to write")
    _add_training_flags(train)
    train.set_defaults(func=cmd_train)

    grid = sub.add_parser("grid-search", help="k-fold grid search over hyperparameters")
    grid.add_argument("--corpus", required=True)
    grid.add_argument("--grid", help="grid file, one key=value combination per line")
    grid.add_argument("--folds", type=int, default=5)
    grid.add_argument("--report", help="JSON report path")
    grid.add_argument("--jobs", type=int, help="parallel grid points (default DNSTUNNEL_JOBS or 1)")
    _add_training_flags(grid)
    grid.set_defaults(func=cmd_grid_search)

    evaluate = sub.add_parser("evaluate", help="score a labelled corpus and report metrics")
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--corpus", required=True)
    evaluate.add_argument("--threshold", type=float)
    evaluate.add_argument("--report", help="JSON metrics report path")
    evaluate.add_argument("--scatter", help="probability scatter CSV path")
    evaluate.set_defaults(func=cmd_evaluate)

    classify = sub.add_parser("classify", help="score query names from a file or stdin")
    classify.add_argument("--model", required=True)
    classify.add_argument("--input", default="-", help="file path or - for stdin")
    classify.add_argument("--format", default=LogFormat.PLAIN.value, choices=[f.value for f in LogFormat])
    classify.add_argument("--threshold", type=float)
    classify.add_argument("--apex", action="append", help="only score names under this apex (repeatable)")
    classify.set_defaults(func=cmd_classify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())
    try:
        return args.func(args)
    except UsageError as ex:
        logger.error(f"usage error: {ex}")
        return EXIT_USAGE
    except (DataFormatError, ValidationError) as ex:
        logger.error(f"data error: {ex}")
        return EXIT_DATA
    except OSError as ex:
        logger.error(f"I/O error: {ex}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
