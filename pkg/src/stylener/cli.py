"""Command line front end.

Exit codes:
  0  success
  2  configuration or usage problem
  3  a required artifact is missing (run the earlier stage first)
  4  input data failed to parse
  5  training diverged
  1  anything unexpected
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import CorpusError
from .checkpoint import CheckpointError
from .pipeline import (
    SELECTORS,
    ConfigError,
    MissingInputError,
    PipelineConfig,
    cmd_baseline_ada,
    cmd_evaluate,
    cmd_generate,
    cmd_prepare,
    cmd_pseudo_label,
    cmd_synth,
    cmd_train_ner,
    cmd_train_transfer,
    load_config,
)
from .train import TrainingDiverged

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_DATA = 4
EXIT_DIVERGED = 5


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=Path, default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylener",
        description="Style-transfer data augmentation for low-resource NER.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the built-in synthetic two-style corpus")
    _add_common(p)

    p = sub.add_parser("prepare", help="length-filter corpora and write linearized views")
    _add_common(p)

    p = sub.add_parser("pseudo-label", help="tag the parallel pairs with a source tagger")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=None, help="confidence cutoff")

    p = sub.add_parser("train-transfer", help="train the style-transfer generator")
    _add_common(p)

    p = sub.add_parser("generate", help="transfer, score and select synthetic target data")
    _add_common(p)
    p.add_argument("--k", type=int, default=None, help="candidates per source sentence")

    p = sub.add_parser("train-ner", help="train the downstream tagger")
    _add_common(p)
    p.add_argument(
        "--selector",
        choices=SELECTORS,
        default="p_plus_t",
        help="which training data mix to use",
    )

    p = sub.add_parser("evaluate", help="score tagger checkpoints on the target test set")
    _add_common(p)
    p.add_argument(
        "--tagger",
        action="append",
        type=Path,
        default=None,
        help="tagger checkpoint to evaluate (repeatable)",
    )
    p.add_argument("--test", type=Path, default=None, help="override the test corpus path")

    p = sub.add_parser("baseline-ada", help="entity-replacement augmentation baseline")
    _add_common(p)
    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if getattr(args, "threshold", None) is not None:
        overrides["pseudo_threshold"] = args.threshold
    if getattr(args, "k", None) is not None:
        overrides["generate_k"] = args.k
    if getattr(args, "test", None) is not None:
        overrides["target_test_path"] = str(args.test)
    source = args.config if args.config is not None else {}
    return load_config(source, overrides)


def _default_taggers(config: PipelineConfig) -> list[Path]:
    found = []
    for selector in SELECTORS:
        candidate = Path(config.out_dir) / f"ner_{selector}" / "tagger.ckpt"
        if candidate.exists():
            found.append(candidate)
    return found


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors already; keep 0 for --help
        return int(exc.code or 0)
    try:
        config = _config_from_args(args)
        if args.command == "synth":
            summary = cmd_synth(config)
        elif args.command == "prepare":
            summary = cmd_prepare(config)
        elif args.command == "pseudo-label":
            summary = cmd_pseudo_label(config)
        elif args.command == "train-transfer":
            summary = cmd_train_transfer(config)
        elif args.command == "generate":
            summary = cmd_generate(config)
        elif args.command == "train-ner":
            summary = cmd_train_ner(config, args.selector)
        elif args.command == "evaluate":
            taggers = args.tagger or _default_taggers(config)
            if not taggers:
                raise MissingInputError(
                    "no tagger checkpoints found; pass --tagger or run train-ner"
                )
            summary = cmd_evaluate(config, taggers)
        elif args.command == "baseline-ada":
            summary = cmd_baseline_ada(config)
        else:  # unreachable with required=True
            parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (CorpusError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
