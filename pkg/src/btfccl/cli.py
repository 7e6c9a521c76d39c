"""Command-line entry points: ``train``, ``eval``, ``predict`` and ``inspect``.

Exit codes: 0 success, 1 configuration or checkpoint error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .data import (
    REFERENCE_STATS,
    build_vocab,
    encode_examples,
    load_split,
    read_examples,
    stats_table,
    write_examples,
)
from .errors import CheckpointError, ConfigError, DataError, LengthError, NonFiniteError
from .training import EpochRecord, evaluate, model_from_checkpoint, train

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

EPOCH_HEADER = f"{'epoch':>5}  {'L_CL':>8}  {'L_S':>8}  {'L_E':>8}  {'L_SP':>8}  {'total':>8}  {'P':>6}  {'R':>6}  {'F1':>6}"


def format_epoch(rec: EpochRecord) -> str:
    v = rec.valid
    return (f"{rec.epoch:>5}  {rec.l_cl:>8.4f}  {rec.l_s:>8.4f}  {rec.l_e:>8.4f}  {rec.l_sp:>8.4f}  "
            f"{rec.total:>8.4f}  {v.precision:>6.3f}  {v.recall:>6.3f}  {v.f1:>6.3f}")


def _require_file(cfg: RunConfig, key: str) -> Path:
    value = getattr(cfg, key)
    if not value:
        raise DataError(f"config key {key!r} is not set")
    path = Path(value)
    if not path.is_file():
        raise DataError(f"config key {key!r}: file not found: {path}")
    return path


def write_predictions(path, examples, preds) -> None:
    write_examples(path, [(ex.sentence.tokens, pred) for ex, pred in zip(examples, preds)])


def cmd_train(args) -> int:
    cfg = RunConfig.from_file(args.config)
    if not cfg.checkpoint:
        raise ConfigError("config key 'checkpoint' is not set")
    train_path = _require_file(cfg, "train")
    valid_path = _require_file(cfg, "valid")
    raw_train = read_examples(train_path, max_len=cfg.max_len)
    raw_valid = read_examples(valid_path, max_len=cfg.max_len)
    if not raw_train or not raw_valid:
        raise DataError("training and validation files must contain at least one sentence")
    vocab = build_vocab([ex.sentence for ex in raw_train], cfg.min_freq)
    train_set = encode_examples(raw_train, vocab)
    valid_set = encode_examples(raw_valid, vocab)
    print(f"train {len(train_set)} sentences, valid {len(valid_set)} sentences, vocab {len(vocab)}")
    print(EPOCH_HEADER)
    result = train(cfg, train_set, valid_set, vocab,
                   on_epoch=lambda rec: print(format_epoch(rec), flush=True))
    save_checkpoint(cfg.checkpoint, result.checkpoint)
    if cfg.test:
        test_set, _ = load_split(_require_file(cfg, "test"), vocab, cfg.max_len)
        report, preds = evaluate(result.model, test_set)
        print(f"test  {report.format()}")
        if cfg.output:
            write_predictions(cfg.output, test_set, preds)
    ck = result.checkpoint
    print(f"best epoch {ck.best_epoch} valid f1 {ck.best_valid_f1:.4f} -> {cfg.checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model, vocab = model_from_checkpoint(ckpt)
    examples, _ = load_split(args.data, vocab, ckpt.config.max_len)
    report, preds = evaluate(model, examples)
    print(report.format())
    if args.output:
        write_predictions(args.output, examples, preds)
    return EXIT_OK


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model, vocab = model_from_checkpoint(ckpt)
    tokens = args.text.split()
    if not tokens:
        raise DataError("empty sentence")
    if len(tokens) > ckpt.config.max_len:
        raise LengthError(f"sentence has {len(tokens)} tokens, limit is {ckpt.config.max_len}")
    triplets = model.predict(vocab.encode(tokens))
    if not triplets:
        print("(no triplets)")
    for t in triplets:
        aspect, opinion, _ = t.words(tokens)
        print(f"({aspect}, {opinion}, {t.sentiment.name})")
    return EXIT_OK


def _reference_key(path: Path):
    """Guess (dataset, split) from the ASTE-Data-V2 layout ``<name>/<split>_triplets.txt``."""
    split = path.name.split("_")[0]
    key = (path.parent.name.lower(), split)
    return key if key in REFERENCE_STATS else None


def cmd_inspect(args) -> int:
    if not args.checkpoint and not args.data:
        raise ConfigError("inspect needs --checkpoint and/or --data")
    if args.checkpoint:
        ckpt = load_checkpoint(args.checkpoint)
        print(f"format version {ckpt.version}; best epoch {ckpt.best_epoch}; "
              f"best valid f1 {ckpt.best_valid_f1:.4f}; vocab {len(ckpt.vocab) + 3}")
        print(ckpt.config.to_text(), end="")
        width = max(len(p) for p in ckpt.params)
        total = 0
        for path in sorted(ckpt.params):
            arr = ckpt.params[path]
            total += arr.size
            print(f"{path.ljust(width)}  {'x'.join(map(str, arr.shape)) or 'scalar'}")
        print(f"{'total'.ljust(width)}  {total}")
    mismatched = False
    if args.data:
        rows = []
        for name in args.data:
            path = Path(name)
            _, stats = load_split(path)
            rows.append((str(path), stats))
        print(stats_table(rows))
        for path_name, stats in rows:
            key = _reference_key(Path(path_name))
            if key is None:
                continue
            expected = REFERENCE_STATS[key]
            status = "ok" if stats.as_tuple() == expected else "MISMATCH"
            mismatched |= status != "ok"
            print(f"{key[0]}/{key[1]}: reference {expected} -> {status}")
    return EXIT_DATA if mismatched else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btfccl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a triplet file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output", help="write per-sentence predictions in the dataset format")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="extract triplets from one sentence")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="show checkpoint contents or corpus statistics")
    p.add_argument("--checkpoint")
    p.add_argument("--data", nargs="+")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
