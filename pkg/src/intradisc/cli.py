"""``intradisc`` command line: dataset, train, eval, crossval, parse, fixture."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_config, write_echo
from .corpus import (
    CorpusError,
    corpus_stats,
    format_stats,
    generate_d1,
    generate_d2,
    generate_fixture,
    kfold,
    load_corpus,
    save_corpus,
    save_d1,
    save_d2,
    split_random,
)
from .encoder import EncoderConfigError, load_contextual_vectors
from .evaluation import (
    EvalError,
    EvalReport,
    argument_report,
    confusion_csv,
    crossval_aggregate,
    format_report,
    format_slices,
    sense_report,
    slice_eval,
)
from .pipeline import evaluate_pipeline, parse_batch
from .sense import SenseModel, train_sense
from .tagger import TaggerModel, train_tagger
from .training import TrainConfigError, TrainingError

log = logging.getLogger("intradisc")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
VALIDATION_ERRORS = (ConfigError, CorpusError, EncoderConfigError, TrainConfigError, EvalError, CheckpointError)


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _write_jsonl(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


# ---------------------------------------------------------------- data access


def _contextual(cfg: RunConfig, corpus=None):
    if cfg.encoder.mode != "contextual":
        return None
    return load_contextual_vectors(cfg.encoder.contextual_path, corpus)


def _splits(cfg: RunConfig, need=("train", "dev", "test")):
    """(train, dev, test) sentence lists, from explicit files or a seeded 60/20/20 split."""
    explicit = {"train": cfg.train_path, "dev": cfg.dev_path, "test": cfg.test_path}
    if any(explicit[n] for n in need):
        missing = [n for n in need if not explicit[n]]
        if missing:
            raise ConfigError(f"explicit split files given but {missing} missing")
        return tuple(load_corpus(explicit[n]) if explicit[n] and n in need else [] for n in ("train", "dev", "test"))
    if not cfg.corpus:
        raise ConfigError("config needs either 'corpus' or explicit train/dev/test paths")
    return split_random(load_corpus(cfg.corpus), seed=cfg.seed, unit=cfg.split_unit)


def _train(cfg: RunConfig, task: str, train, dev, on_epoch=None):
    contextual = _contextual(cfg, list(train) + list(dev))
    tcfg = cfg.train_config(task)
    if task == "tagger":
        return train_tagger(
            generate_d1(train, cfg.dataset),
            generate_d1(dev, cfg.dataset),
            cfg.encoder,
            tcfg,
            contextual,
            cfg.constrained_training,
            on_epoch,
        )
    return train_sense(
        generate_d2(train, cfg.dataset),
        generate_d2(dev, cfg.dataset),
        cfg.encoder,
        tcfg,
        contextual,
        cfg.class_weighted,
        on_epoch,
    )


def _evaluate(cfg: RunConfig, models: Dict[str, object], test, self_test: bool = False):
    """Reports for whatever models are available; gold-as-prediction when ``self_test``."""
    out: Dict[str, object] = {}
    d1 = generate_d1(test, cfg.dataset)
    d2 = generate_d2(test, cfg.dataset)
    tagger, sense = models.get("tagger"), models.get("sense")
    if tagger is not None or self_test:
        pred = [ex.tags for ex in d1] if self_test else tagger.predict([ex.sentence for ex in d1])
        out["arguments"] = argument_report(d1, pred)
        if cfg.slices:
            out["slices"] = slice_eval(d1, pred, cfg.slices, cfg.sense_threshold)
    if sense is not None or self_test:
        pred = [ex.sense for ex in d2] if self_test else sense.predict(d2)
        out["senses"] = EvalReport("senses", len(d2), senses=sense_report([ex.sense for ex in d2], pred))
    if tagger is not None and sense is not None:
        out["pipeline"] = evaluate_pipeline(tagger, sense, test, cfg.strategy, cfg.dataset)
    return out


def _report_dict(reports: Dict[str, object]) -> dict:
    d = {}
    for k, v in reports.items():
        d[k] = [r.to_dict() for r in v] if isinstance(v, list) else v.to_dict()
    return d


def _report_text(reports: Dict[str, object]) -> str:
    parts = []
    for k, v in reports.items():
        if k == "slices":
            parts.append(format_slices(v))
        elif k == "pipeline":
            parts.append(format_report(v.gold_arguments))
            parts.append(format_report(v.predicted_arguments))
            parts.append(f"dropped relations: {len(v.dropped)}")
        else:
            parts.append(format_report(v))
    return "\n\n".join(parts) + "\n"


def _plot_losses(records, path: Path) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path)
        return
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r.epoch for r in records], [r.train_loss for r in records], label="train")
    ax.plot([r.epoch for r in records], [r.dev_loss for r in records], label="dev")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_confusion(report, path: Path) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path)
        return
    from .corpus.types import SENSES

    fig, ax = plt.subplots(figsize=(9, 8))
    im = ax.imshow(report.confusion, cmap="Blues")
    names = [s.value for s in SENSES]
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
    ax.set_yticks(range(len(names)), names, fontsize=6)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    fig.colorbar(im)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------- commands


def cmd_fixture(cfg: RunConfig, out: Path) -> int:
    fx = generate_fixture(cfg.seed, cfg.fixture.params())
    save_corpus(out / "corpus.jsonl", fx.sentences)
    _dump(out / "ledger.json", dataclasses.asdict(fx.ledger) | {"eligible": fx.ledger.eligible, "d1_examples": fx.ledger.d1_examples})
    print(f"wrote {len(fx.sentences)} sentences to {out / 'corpus.jsonl'}")
    return EXIT_OK


def cmd_dataset(cfg: RunConfig, out: Path) -> int:
    if not cfg.corpus:
        raise ConfigError("dataset needs 'corpus'")
    corpus = load_corpus(cfg.corpus)
    d1 = generate_d1(corpus, cfg.dataset)
    d2 = generate_d2(corpus, cfg.dataset)
    save_d1(out / "d1.jsonl", d1)
    save_d2(out / "d2.jsonl", d2)
    stats = corpus_stats(corpus)
    text = format_stats(stats)
    (out / "stats.txt").write_text(text + "\n")
    _dump(
        out / "stats.json",
        {
            "sentences": stats.total_sentences,
            "relations": stats.total_relations,
            "by_relation_count": {str(k): c for k, (c, _) in stats.sentences_by_relation_count.items()},
            "senses": {s.value: c for s, (c, _) in stats.sense_histogram.items()},
            "d1_examples": len(d1),
            "d2_examples": len(d2),
        },
    )
    print(text)
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path) -> int:
    train, dev, _ = _splits(cfg, need=("train", "dev"))
    if not train or not dev:
        raise ConfigError("train and dev splits must be non-empty")
    records = []
    log_path = out / f"{cfg.task}_log.jsonl"
    out.mkdir(parents=True, exist_ok=True)
    with log_path.open("w") as fh:

        def on_epoch(rec):
            records.append(rec)
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            fh.flush()

        model, _ = _train(cfg, cfg.task, train, dev, on_epoch)
    digest = save_checkpoint(out / f"{cfg.task}.ckpt", model)
    if cfg.plots:
        _plot_losses(records, out / f"{cfg.task}_loss.png")
    print(f"{cfg.task} checkpoint {out / f'{cfg.task}.ckpt'} sha256 {digest}")
    return EXIT_OK


def _load_models(paths: Sequence[str], contextual=None) -> Dict[str, object]:
    models: Dict[str, object] = {}
    for p in paths:
        m = load_checkpoint(p, contextual)
        if m.kind in models:
            raise ConfigError(f"two {m.kind} checkpoints given")
        models[m.kind] = m
    return models


def cmd_eval(cfg: RunConfig, out: Path, checkpoints: Sequence[str], self_test: bool) -> int:
    if not checkpoints and not self_test:
        raise ConfigError("eval needs --checkpoint (or --self-test)")
    _, _, test = _splits(cfg, need=("test",))
    models = _load_models(checkpoints, _contextual(cfg, test))
    reports = _evaluate(cfg, models, test, self_test)
    _dump(out / "report.json", _report_dict(reports))
    (out / "report.txt").write_text(_report_text(reports))
    if "senses" in reports:
        (out / "confusion.csv").write_text(confusion_csv(reports["senses"].senses))
        if cfg.plots:
            _plot_confusion(reports["senses"].senses, out / "confusion.png")
    print(_report_text(reports), end="")
    return EXIT_OK


def cmd_crossval(cfg: RunConfig, out: Path) -> int:
    if not cfg.corpus:
        raise ConfigError("crossval needs 'corpus'")
    corpus = load_corpus(cfg.corpus)
    fold_reports: List[EvalReport] = []
    for i, (train, dev, test) in enumerate(kfold(corpus, cfg.folds, cfg.seed)):
        model, _ = _train(cfg, cfg.task, train, dev)
        reports = _evaluate(cfg, {cfg.task: model}, test)
        report = reports["arguments" if cfg.task == "tagger" else "senses"]
        _dump(out / f"fold{i}" / "report.json", report.to_dict())
        fold_reports.append(report)
        log.info("fold %d done", i)
    summary = crossval_aggregate(fold_reports, k=cfg.folds)
    _dump(out / "aggregate.json", summary.to_dict())
    text = summary.format("arguments/" if cfg.task == "tagger" else "senses/")
    (out / "aggregate.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_parse(cfg: RunConfig, out: Path, checkpoints: Sequence[str]) -> int:
    source = cfg.input_path or cfg.test_path or cfg.corpus
    if not source:
        raise ConfigError("parse needs 'input_path' (or 'test_path' / 'corpus')")
    sentences = load_corpus(source)
    models = _load_models(checkpoints, _contextual(cfg, sentences))
    if set(models) != {"tagger", "sense"}:
        raise ConfigError("parse needs one tagger and one sense checkpoint")
    parsed = parse_batch(models["tagger"], models["sense"], sentences, cfg.strategy)
    _write_jsonl(out / "parsed.jsonl", (p.to_dict() for p in parsed))
    found = sum(p.relation is not None for p in parsed)
    print(f"parsed {len(parsed)} sentences, {found} with a relation -> {out / 'parsed.jsonl'}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intradisc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("dataset", "train", "eval", "crossval", "parse", "fixture"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="overrides config seed (data split and model init)")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--checkpoint", action="append", default=[], help="model checkpoint; repeatable")
        p.add_argument("--slices", help="comma-separated slice kinds: multi,left,right,sense")
        p.add_argument("--task", choices=("tagger", "sense"))
        p.add_argument("--self-test", action="store_true", help="eval: score gold annotations against themselves")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.training = dataclasses.replace(cfg.training, seed=args.seed)
        if cfg.sense_training is not None:
            cfg.sense_training = dataclasses.replace(cfg.sense_training, seed=args.seed)
    if args.out:
        cfg.out_dir = args.out
    if args.task:
        cfg.task = args.task
    if args.slices is not None:
        cfg.slices = [s for s in args.slices.split(",") if s]
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _resolve(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_echo(cfg, out)
        if args.command == "fixture":
            return cmd_fixture(cfg, out)
        if args.command == "dataset":
            return cmd_dataset(cfg, out)
        if args.command == "train":
            return cmd_train(cfg, out)
        if args.command == "eval":
            return cmd_eval(cfg, out, args.checkpoint, args.self_test)
        if args.command == "crossval":
            return cmd_crossval(cfg, out)
        return cmd_parse(cfg, out, args.checkpoint)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
