"""End-to-end pipeline commands and run manifests.

Each command reads its inputs, writes its artifacts under a subdirectory of
``out_dir`` and finishes with a ``manifest.json`` recording the command name,
a digest of the effective config, the seed and sha256 digests of every input
and output file. All artifact bytes are pure functions of (config, seed,
inputs), so rerunning a command reproduces identical digests; wall-clock
measurements go to a separate ``timing.json`` that the manifest ignores.

The flow mirrors the augmentation recipe: synth (or bring your own data) ->
prepare -> train-ner[source_only] -> pseudo-label -> train-transfer ->
generate -> train-ner[p_plus_t] -> evaluate; baseline-ada is the
entity-replacement baseline.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Sequence, Union

from .corpus import (
    CorpusError,
    NerCorpus,
    TypeRegistry,
    augment_entity_replacement,
    filter_by_linearized_length,
    read_conll,
    read_pairs_jsonl,
    sample_few_shot,
    sample_low_resource,
    write_conll,
    write_pairs_jsonl,
    FewShotSpec,
)
from .linearize import PrefixScheme, linearize, render
from .model import (
    ModelConfig,
    SamplerConfig,
    load_transfer_model,
    save_discriminator,
    save_transfer_model,
)
from .seeding import derive_rng
from .select import (
    BigramLm,
    SelectionWeights,
    StyleClassifierConfig,
    augment_corpus,
    default_scorers,
    train_style_classifier,
)
from .synth import SynthConfig, make_synthetic_style_corpus
from .tagger import TaggerConfig, load_tagger, micro_f1, pseudo_label, save_tagger, train_tagger
from .train import LossWeights, TrainConfig, run_training
from .vocab import Vocabulary

__all__ = [
    "ConfigError",
    "MissingInputError",
    "DataRegime",
    "PipelineConfig",
    "load_config",
    "cmd_synth",
    "cmd_prepare",
    "cmd_pseudo_label",
    "cmd_train_transfer",
    "cmd_generate",
    "cmd_train_ner",
    "cmd_evaluate",
    "cmd_baseline_ada",
    "SELECTORS",
]

SELECTORS = ("source_only", "target_only", "s_plus_t", "s_then_t", "p_plus_t")


class ConfigError(ValueError):
    pass


class MissingInputError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class DataRegime:
    """How much target data the NER trainer may see."""

    mode: str = "full_set"  # full_set | few_shot | low_resource
    few_shot_k: int = 10
    low_resource_n: int = 1024

    def __post_init__(self):
        if self.mode not in ("full_set", "few_shot", "low_resource"):
            raise ConfigError(f"unknown data regime {self.mode!r}")
        if self.few_shot_k < 1 or self.low_resource_n < 1:
            raise ConfigError("regime sizes must be >= 1")

    def apply(self, corpus: NerCorpus, seed: int) -> NerCorpus:
        if self.mode == "few_shot":
            return sample_few_shot(corpus, FewShotSpec(self.few_shot_k, seed))
        if self.mode == "low_resource":
            n = min(self.low_resource_n, len(corpus.sentences))
            return sample_low_resource(corpus, n, seed)
        return corpus


@dataclass
class PipelineConfig:
    seed: int = 0
    out_dir: Path = Path("runs/default")
    max_len: int = 64
    # data inputs (synth fills the first four when used)
    pairs_path: Path | None = None
    source_path: Path | None = None
    target_path: Path | None = None
    target_test_path: Path | None = None
    pseudo_pairs_path: Path | None = None  # pseudo-labeled pairs for train-transfer
    pseudo_corpus_path: Path | None = None  # generated corpus for p_plus_t
    tagger_checkpoint: Path | None = None  # source tagger for pseudo-label
    transfer_checkpoint: Path | None = None  # generator for generate
    entity_types: tuple[str, ...] | None = None  # None: types come from the data
    n_target_test: int = 400  # tail of the synth target corpus held out as test
    generate_k: int = 10
    pseudo_threshold: float = 0.9
    dev_fraction: float = 0.1
    fluency_c: float = 0.1
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    selection: SelectionWeights = field(default_factory=SelectionWeights)
    tagger: TaggerConfig = field(default_factory=TaggerConfig)
    style: StyleClassifierConfig = field(default_factory=StyleClassifierConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    regime: DataRegime = field(default_factory=DataRegime)

    def canonical_dict(self) -> dict:
        def convert(value):
            if dataclasses.is_dataclass(value) and not isinstance(value, type):
                return {k: convert(v) for k, v in dataclasses.asdict(value).items()}
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, tuple):
                return [convert(v) for v in value]
            if isinstance(value, dict):
                return {k: convert(v) for k, v in value.items()}
            return value

        return {
            f.name: convert(getattr(self, f.name)) for f in dataclasses.fields(self)
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


_SECTION_TYPES = {
    "model": ModelConfig,
    "train": TrainConfig,
    "weights": LossWeights,
    "sampler": SamplerConfig,
    "selection": SelectionWeights,
    "tagger": TaggerConfig,
    "style": StyleClassifierConfig,
    "synth": SynthConfig,
    "regime": DataRegime,
}
_PATH_FIELDS = {
    "out_dir",
    "pairs_path",
    "source_path",
    "target_path",
    "target_test_path",
    "pseudo_pairs_path",
    "pseudo_corpus_path",
    "tagger_checkpoint",
    "transfer_checkpoint",
}


def _hydrate_section(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    coerced = dict(data)
    for f in dataclasses.fields(cls):
        if f.name in coerced and isinstance(coerced[f.name], list):
            coerced[f.name] = _tuplify(coerced[f.name])
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad section {name!r}: {exc}") from exc


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def load_config(source: Union[str, Path, dict], overrides: dict | None = None) -> PipelineConfig:
    """Build a PipelineConfig from a JSON file or dict; overrides win.

    Unknown keys are rejected so typos fail loudly.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise MissingInputError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    data = dict(data)
    data.pop("version", None)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, dict):
            data.setdefault(key, {})
            if not isinstance(data[key], dict):
                raise ConfigError(f"cannot override scalar {key!r} with a section")
            data[key].update(value)
        else:
            data[key] = value
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _hydrate_section(_SECTION_TYPES[key], value, key)
        elif key in _PATH_FIELDS:
            kwargs[key] = Path(value) if value is not None else None
        elif key == "entity_types":
            kwargs[key] = tuple(value) if value is not None else None
        else:
            kwargs[key] = value
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# -- manifest helpers ---------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    config: PipelineConfig,
    inputs: dict[str, Path],
    outputs: dict[str, Path],
) -> Path:
    manifest = {
        "command": command,
        "config_digest": config.digest(),
        "seed": config.seed,
        "inputs": {name: _sha256(Path(p)) for name, p in sorted(inputs.items())},
        "outputs": {name: _sha256(Path(p)) for name, p in sorted(outputs.items())},
    }
    path = out_dir / "manifest.json"
    _write_json(path, manifest)
    return path


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _require(path: Path | None, what: str, hint: str) -> Path:
    if path is None:
        raise MissingInputError(f"{what} not configured ({hint})")
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"{what} not found at {path} ({hint})")
    return path


def _subdir(config: PipelineConfig, name: str) -> Path:
    d = Path(config.out_dir) / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def _registry(config: PipelineConfig) -> TypeRegistry | None:
    return TypeRegistry(config.entity_types) if config.entity_types else None


def _default_path(config: PipelineConfig, explicit: Path | None, *fallbacks: str) -> Path | None:
    if explicit is not None:
        return explicit
    for rel in fallbacks:
        candidate = Path(config.out_dir) / rel
        if candidate.exists():
            return candidate
    return None


# -- commands -------------------------------------------------------------------


def cmd_synth(config: PipelineConfig) -> dict:
    """Generate the built-in two-style corpus; the target tail becomes test."""
    out = _subdir(config, "synth")
    synth_cfg = config.synth
    if config.n_target_test > 0:
        synth_cfg = dataclasses.replace(
            synth_cfg, n_target=synth_cfg.n_target + config.n_target_test
        )
    pairs, source, target = make_synthetic_style_corpus(synth_cfg, config.seed)
    n_test = config.n_target_test
    test = target.replaced(target.sentences[len(target.sentences) - n_test :]) if n_test else None
    pool = target.replaced(target.sentences[: len(target.sentences) - n_test])
    outputs = {
        "pairs": out / "pairs.jsonl",
        "source": out / "source.conll",
        "target": out / "target.conll",
    }
    write_pairs_jsonl(pairs, outputs["pairs"])
    write_conll(source, outputs["source"])
    write_conll(pool, outputs["target"])
    if test is not None:
        outputs["target_test"] = out / "target_test.conll"
        write_conll(test, outputs["target_test"])
    _write_manifest(out, "synth", config, {}, outputs)
    return {
        "pairs": len(pairs),
        "source_sentences": len(source),
        "target_sentences": len(pool),
        "target_test_sentences": len(test) if test is not None else 0,
        "out_dir": str(out),
    }


def _input_pairs(config: PipelineConfig, types: TypeRegistry | None):
    path = _default_path(config, config.pairs_path, "synth/pairs.jsonl")
    path = _require(path, "parallel pairs", "run synth or set pairs_path")
    return read_pairs_jsonl(path, types), path


def _input_corpus(config: PipelineConfig, which: str, style: str):
    attr = {"source": "source_path", "target": "target_path", "target_test": "target_test_path"}[which]
    fallbacks = (f"prepared/{which}.conll", f"synth/{which}.conll")
    path = _default_path(config, getattr(config, attr), *fallbacks)
    path = _require(path, f"{which} corpus", f"run synth/prepare or set {attr}")
    return read_conll(path, _registry(config), style=style, strict_types=config.entity_types is not None), path


def cmd_prepare(config: PipelineConfig) -> dict:
    """Filter every dataset to max_len (marker rendering) and write the
    linearized previews the transfer model will consume."""
    out = _subdir(config, "prepared")
    types = _registry(config)
    pairs, pairs_path = _input_pairs(config, types)
    source, source_path = _input_corpus(config, "source", "source")
    target, target_path = _input_corpus(config, "target", "target")

    kept_pairs = filter_by_linearized_length(pairs, config.max_len)
    kept_source = filter_by_linearized_length(source, config.max_len)
    kept_target = filter_by_linearized_length(target, config.max_len)

    prefixes = PrefixScheme.default()
    outputs = {
        "pairs": out / "pairs.jsonl",
        "source": out / "source.conll",
        "target": out / "target.conll",
        "source_linearized": out / "source_linearized.txt",
        "target_linearized": out / "target_linearized.txt",
        "counts": out / "counts.json",
    }
    write_pairs_jsonl(kept_pairs, outputs["pairs"])
    write_conll(kept_source, outputs["source"])
    write_conll(kept_target, outputs["target"])
    outputs["source_linearized"].write_text(
        "".join(
            render(linearize(s, prefixes.source_to_target)) + "\n" for s in kept_source
        ),
        encoding="utf-8",
    )
    outputs["target_linearized"].write_text(
        "".join(
            render(linearize(s, prefixes.target_to_source)) + "\n" for s in kept_target
        ),
        encoding="utf-8",
    )
    counts = {
        "pairs": {"kept": len(kept_pairs), "dropped": len(pairs) - len(kept_pairs)},
        "source": {"kept": len(kept_source), "dropped": len(source) - len(kept_source)},
        "target": {"kept": len(kept_target), "dropped": len(target) - len(kept_target)},
        "max_len": config.max_len,
    }
    _write_json(outputs["counts"], counts)
    _write_manifest(
        out,
        "prepare",
        config,
        {"pairs": pairs_path, "source": source_path, "target": target_path},
        outputs,
    )
    return counts


def cmd_pseudo_label(config: PipelineConfig) -> dict:
    """Tag both sides of each pair with a source-trained tagger; keep tags
    only where every entity token clears the confidence threshold."""
    out = _subdir(config, "pseudo")
    tagger_path = _default_path(
        config, config.tagger_checkpoint, "ner_source_only/tagger.ckpt"
    )
    tagger_path = _require(
        tagger_path, "source tagger checkpoint", "run train-ner --selector source_only first"
    )
    model = load_tagger(tagger_path)
    pairs, pairs_path = _input_pairs(config, None)
    labeled = pseudo_label(model, pairs, config.pseudo_threshold)
    n_labeled = sum(1 for p in labeled if p.has_ner)
    outputs = {"pairs": out / "pairs.jsonl", "stats": out / "stats.json"}
    write_pairs_jsonl(labeled, outputs["pairs"])
    stats = {
        "threshold": config.pseudo_threshold,
        "pairs": len(labeled),
        "labeled": n_labeled,
        "labeled_fraction": n_labeled / len(labeled) if labeled else 0.0,
    }
    _write_json(outputs["stats"], stats)
    _write_manifest(
        out, "pseudo-label", config, {"pairs": pairs_path, "tagger": tagger_path}, outputs
    )
    return stats


def cmd_train_transfer(config: PipelineConfig) -> dict:
    """Train the style-transfer generator and its discriminator."""
    out = _subdir(config, "transfer")
    types = _registry(config)
    pairs_path = _default_path(
        config, config.pseudo_pairs_path, "pseudo/pairs.jsonl", "prepared/pairs.jsonl",
        "synth/pairs.jsonl",
    )
    pairs_path = _require(pairs_path, "training pairs", "run prepare/pseudo-label or set pseudo_pairs_path")
    pairs = read_pairs_jsonl(pairs_path, types)
    source, source_path = _input_corpus(config, "source", "source")
    target, target_path = _input_corpus(config, "target", "target")

    pairs = filter_by_linearized_length(pairs, config.max_len)
    source = filter_by_linearized_length(source, config.max_len)
    target = filter_by_linearized_length(target, config.max_len)
    if not pairs:
        raise CorpusError("no training pairs survive the length filter")

    if types is None:
        names = list(source.types.names)
        names.extend(n for n in target.types.names if n not in source.types)
        registry = TypeRegistry(names)
    else:
        registry = types
    prefixes = PrefixScheme.default()
    surface = set()
    for pair in pairs:
        surface.update(pair.source_side.tokens)
        surface.update(pair.target_side.tokens)
    for corpus in (source, target):
        for sent in corpus.sentences:
            surface.update(sent.tokens)
    vocab = Vocabulary(registry, surface, prefixes)

    model_config = dataclasses.replace(config.model, max_len=config.max_len)
    train_config = dataclasses.replace(config.train, seed=config.seed)
    started = perf_counter()
    result = run_training(
        pairs, source, target, vocab, model_config, train_config, config.weights
    )
    elapsed = perf_counter() - started
    outputs = {
        "generator": out / "transfer.ckpt",
        "discriminator": out / "discriminator.ckpt",
        "report": out / "report.jsonl",
    }
    save_transfer_model(outputs["generator"], result.model)
    save_discriminator(outputs["discriminator"], result.discriminator, model_config)
    result.report.checkpoint_path = str(outputs["generator"])
    with open(outputs["report"], "w", encoding="utf-8") as handle:
        for record in result.report.epoch_records():
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    _write_json(out / "timing.json", {"wall_time_seconds": elapsed})  # not digested
    _write_manifest(
        out,
        "train-transfer",
        config,
        {"pairs": pairs_path, "source": source_path, "target": target_path},
        outputs,
    )
    return {
        "epochs": config.train.epochs,
        "stage2_start": result.report.stage2_start_epoch,
        "final_pg": result.report.pg_trace[-1] if result.report.pg_trace else None,
        "vocab_size": len(vocab),
        "out_dir": str(out),
    }


def cmd_generate(config: PipelineConfig) -> dict:
    """Transfer each source sentence k times, score, select, and write the
    pseudo target corpus plus a full candidate audit dump."""
    out = _subdir(config, "generated")
    ckpt_path = _default_path(config, config.transfer_checkpoint, "transfer/transfer.ckpt")
    ckpt_path = _require(ckpt_path, "transfer checkpoint", "run train-transfer first")
    model = load_transfer_model(ckpt_path)
    source, source_path = _input_corpus(config, "source", "source")
    target, target_path = _input_corpus(config, "target", "target")
    source = filter_by_linearized_length(source, model.config.max_len)

    style_config = dataclasses.replace(config.style, seed=config.seed)
    classifier = train_style_classifier(
        [list(s.tokens) for s in source.sentences],
        [list(s.tokens) for s in target.sentences],
        style_config,
    )
    lm = BigramLm.fit([list(s.tokens) for s in target.sentences])
    scorers = default_scorers(classifier, lm, config.fluency_c)
    result = augment_corpus(
        model,
        source,
        scorers,
        config.selection,
        k=config.generate_k,
        sampler=config.sampler,
        seed=config.seed,
    )
    outputs = {"pseudo": out / "pseudo.conll", "candidates": out / "candidates.jsonl"}
    write_conll(result.corpus, outputs["pseudo"])
    with open(outputs["candidates"], "w", encoding="utf-8") as handle:
        for i, cands in enumerate(result.candidates):
            for j, cand in enumerate(cands):
                record = {
                    "origin_index": cand.origin_index,
                    "rendered_text": render(cand.text),
                    **{k: cand.scores[k] for k in sorted(cand.scores)},
                    "total": cand.total,
                    "selected": j == result.chosen[i],
                }
                handle.write(json.dumps(record, sort_keys=True) + "\n")
    _write_manifest(
        out,
        "generate",
        config,
        {"checkpoint": ckpt_path, "source": source_path, "target": target_path},
        outputs,
    )
    return {
        "sentences": len(result.corpus),
        "candidates": sum(len(c) for c in result.candidates),
        "k": config.generate_k,
        "out_dir": str(out),
    }


def _dev_split(corpus: NerCorpus, fraction: float, seed: int) -> tuple[NerCorpus, NerCorpus]:
    """Deterministic train/dev split; dev may be empty at small sizes."""
    n = len(corpus.sentences)
    n_dev = int(n * fraction)
    if n_dev == 0 or n_dev >= n:
        return corpus, corpus.replaced(())
    order = derive_rng(seed, "dev_split").permutation(n)
    dev_idx = set(order[:n_dev].tolist())
    train = corpus.replaced(s for i, s in enumerate(corpus.sentences) if i not in dev_idx)
    dev = corpus.replaced(s for i, s in enumerate(corpus.sentences) if i in dev_idx)
    return train, dev


def _concat(a: NerCorpus, b: NerCorpus, style: str) -> NerCorpus:
    return NerCorpus(a.sentences + b.sentences, style, a.types)


def cmd_train_ner(config: PipelineConfig, selector: str) -> dict:
    """Train the downstream tagger on the training set the selector names."""
    if selector not in SELECTORS:
        raise ConfigError(f"unknown selector {selector!r}; choose from {SELECTORS}")
    out = _subdir(config, f"ner_{selector}")
    tagger_cfg = dataclasses.replace(config.tagger, seed=config.seed)
    inputs: dict[str, Path] = {}

    def load_source():
        corpus, path = _input_corpus(config, "source", "source")
        inputs["source"] = path
        return corpus

    def load_target():
        corpus, path = _input_corpus(config, "target", "target")
        inputs["target"] = path
        return corpus.replaced(
            config.regime.apply(corpus, config.seed).sentences
        )

    def load_pseudo():
        path = _default_path(config, config.pseudo_corpus_path, "generated/pseudo.conll")
        path = _require(path, "pseudo corpus", "run generate or set pseudo_corpus_path")
        inputs["pseudo"] = path
        return read_conll(path, _registry(config), style="target",
                          strict_types=config.entity_types is not None)

    phases: list[tuple[str, NerCorpus]] = []
    if selector == "source_only":
        phases.append(("source", load_source()))
    elif selector == "target_only":
        phases.append(("target", load_target()))
    elif selector == "s_plus_t":
        src, tgt = load_source(), load_target()
        phases.append(("source+target", _concat(src, tgt, "target")))
    elif selector == "s_then_t":
        phases.append(("source", load_source()))
        phases.append(("target", load_target()))
    else:  # p_plus_t
        pseudo, tgt = load_pseudo(), load_target()
        phases.append(("pseudo+target", _concat(pseudo, tgt, "target")))

    model = None
    phase_reports = []
    for name, corpus in phases:
        if len(corpus.sentences) == 0:
            raise CorpusError(f"selector {selector!r}: phase {name!r} has no sentences")
        train_c, dev_c = _dev_split(corpus, config.dev_fraction, config.seed)
        model = train_tagger(train_c, dev_c if len(dev_c) else None, tagger_cfg, init=model)
        phase_reports.append(
            {
                "phase": name,
                "train_sentences": len(train_c),
                "dev_sentences": len(dev_c),
                "train_loss": model.report.train_loss_trace,
                "dev_f1": model.report.dev_f1_trace,
                "best_epoch": model.report.best_epoch,
            }
        )
    outputs = {"tagger": out / "tagger.ckpt", "report": out / "report.json"}
    save_tagger(outputs["tagger"], model)
    _write_json(outputs["report"], {"selector": selector, "phases": phase_reports})
    _write_manifest(out, f"train-ner:{selector}", config, inputs, outputs)
    return {
        "selector": selector,
        "phases": [p["phase"] for p in phase_reports],
        "out_dir": str(out),
    }


def cmd_evaluate(config: PipelineConfig, tagger_paths: Sequence[Union[str, Path]]) -> dict:
    """Span micro-F1 of each tagger checkpoint on the held-out target test set."""
    out = _subdir(config, "eval")
    test, test_path = _input_corpus(config, "target_test", "target")
    if not tagger_paths:
        raise ConfigError("no tagger checkpoints given")
    inputs: dict[str, Path] = {"test": test_path}
    rows = {}
    from .tagger import _predict_corpus  # evaluation-side prediction

    for raw in tagger_paths:
        path = _require(Path(raw), "tagger checkpoint", "train-ner writes tagger.ckpt")
        label = path.parent.name or path.stem
        inputs[f"tagger:{label}"] = path
        model = load_tagger(path)
        result = micro_f1(test, _predict_corpus(model, test))
        rows[label] = {
            "tp": result.tp,
            "fp": result.fp,
            "fn": result.fn,
            "precision": result.precision,
            "recall": result.recall,
            "micro_f1": result.micro_f1,
        }
    outputs = {"eval": out / "eval.json", "table": out / "table.txt"}
    _write_json(outputs["eval"], rows)
    width = max(len(label) for label in rows)
    lines = [f"{'method'.ljust(width)}  micro-F1"]
    for label in sorted(rows):
        lines.append(f"{label.ljust(width)}  {100 * rows[label]['micro_f1']:.2f}")
    outputs["table"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "evaluate", config, inputs, outputs)
    return rows


def cmd_baseline_ada(config: PipelineConfig) -> dict:
    """Entity-replacement augmentation baseline (no style transfer)."""
    out = _subdir(config, "ada")
    source, source_path = _input_corpus(config, "source", "source")
    target, target_path = _input_corpus(config, "target", "target")
    augmented = augment_entity_replacement(source, target, config.seed)
    outputs = {"pseudo": out / "ada.conll"}
    write_conll(augmented, outputs["pseudo"])
    _write_manifest(
        out, "baseline-ada", config, {"source": source_path, "target": target_path}, outputs
    )
    return {"sentences": len(augmented), "out_dir": str(out)}
