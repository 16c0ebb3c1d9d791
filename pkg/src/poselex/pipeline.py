"""
End-to-end pipeline: skeletons -> key frames -> codebook -> parallel corpus
-> translation table -> classification, plus cross-subject evaluation and
artifact serialization.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codebook import VisualCodebook, VisualSentence, fit_kmeans, quantize_sequence
from .config import PipelineConfig
from .decoder import ClassificationResult, InstructionSet, check_symbols, classify_zero_shot
from .errors import ConfigError, ParseError, SplitError
from .keyframes import EigenProfile, KeyFrameSet, extract_keyframes
from .lexicon import (
    ParallelCorpus,
    PoseLexicon,
    SentencePair,
    TranslationTable,
    extract_lexicon,
    symbol_sort_key,
    train,
)
from .skeleton import MOVING_POSE, SkeletonSequence, feature_matrix, normalize

CODEBOOK_FILE = "codebook.json"
TABLE_FILE = "translation_table.json"
LEXICON_FILE = "lexicon.csv"
TRACE_FILE = "loglik_trace.csv"


# ------------------------------------------------------------------ file IO


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def parse_instructions(text: str, source: str = "<instructions>") -> InstructionSet:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: invalid JSON ({exc.msg})") from None
    classes = obj.get("classes") if isinstance(obj, dict) else None
    if not isinstance(classes, dict):
        raise ParseError(f"{source}: expected an object with a 'classes' mapping")
    for label, poses in classes.items():
        if not isinstance(poses, list) or not all(isinstance(p, str) for p in poses):
            raise ParseError(f"{source}: class {label!r} must map to a list of symbols")
    return InstructionSet.from_poses(classes)


def load_instructions(path: str | Path) -> InstructionSet:
    path = Path(path)
    return parse_instructions(path.read_text(encoding="utf8"), str(path))


def instructions_json(instructions: InstructionSet) -> str:
    return json.dumps({"classes": {k: list(v.poses) for k, v in instructions.entries.items()}}, indent=1)


# ------------------------------------------------------------- preprocessing


@dataclass(frozen=True, eq=False)
class PreparedSequence:
    sequence: SkeletonSequence
    features: np.ndarray
    profile: EigenProfile
    keyframes: KeyFrameSet

    @property
    def keyframe_features(self) -> np.ndarray:
        return self.features[list(self.keyframes.indices)]


def prepare(seq: SkeletonSequence, config: PipelineConfig) -> PreparedSequence:
    norm = normalize(seq, config.root_joint, tuple(config.scale_pair))
    feats = feature_matrix(norm, config.feature_mode, (config.alpha, config.beta))
    profile, keyframes = extract_keyframes(norm, config.smooth_window, config.smooth_sigma)
    return PreparedSequence(seq, feats, profile, keyframes)


def prepare_all(sequences: Iterable[SkeletonSequence], config: PipelineConfig) -> list[PreparedSequence]:
    return [prepare(s, config) for s in sequences]


# ------------------------------------------------------------------ training


@dataclass(frozen=True, eq=False)
class TrainedModel:
    codebook: VisualCodebook
    table: TranslationTable
    lexicon: PoseLexicon
    trace: tuple = ()


def symbol_alphabet(instructions: InstructionSet) -> tuple[str, ...]:
    return tuple(sorted(instructions.symbols(), key=symbol_sort_key))


def check_coverage(prepared: Sequence[PreparedSequence], instructions: InstructionSet) -> None:
    for p in prepared:
        label = p.sequence.class_label
        if label is None:
            raise ConfigError(f"instance {p.sequence.instance_id!r} has no class label")
        if label not in instructions:
            raise ConfigError(f"no instruction for class {label!r}")


def train_model(
    prepared: Sequence[PreparedSequence], instructions: InstructionSet, config: PipelineConfig
) -> TrainedModel:
    """Fit codebook and translation table on labelled, prepared instances."""
    if not prepared:
        raise ConfigError("no training instances")
    check_coverage(prepared, instructions)
    alphabet = symbol_alphabet(instructions)
    k = config.resolve_k(len(alphabet))
    points = np.vstack([p.keyframe_features for p in prepared])
    codebook = fit_kmeans(points, k, config.kmeans_seed, config.kmeans_iters, config.feature_mode)
    pairs = [
        SentencePair(
            quantize_sequence(p.features, p.keyframes, codebook),
            instructions[p.sequence.class_label],
            p.sequence.instance_id,
        )
        for p in prepared
    ]
    corpus = ParallelCorpus.build(pairs, k, alphabet)
    table, trace = train(corpus, config.em_max_iters, config.em_tol, config.use_null)
    return TrainedModel(codebook, table, extract_lexicon(table), tuple(trace))


def visual_sentence(p: PreparedSequence, codebook: VisualCodebook) -> VisualSentence:
    return quantize_sequence(p.features, p.keyframes, codebook)


def classify_prepared(
    p: PreparedSequence,
    model: TrainedModel,
    trained: InstructionSet,
    novel: InstructionSet | None,
    config: PipelineConfig,
) -> ClassificationResult:
    return classify_zero_shot(
        visual_sentence(p, model.codebook),
        trained,
        novel if novel is not None else InstructionSet(),
        model.table,
        config.decode_null,
        config.length_factor,
    )


def classification_record(p: PreparedSequence, result: ClassificationResult) -> dict:
    return {
        "instance": p.sequence.instance_id,
        "predicted": result.label,
        "true": p.sequence.class_label,
        "log_scores": result.per_class_scores,
        "alignment": list(result.best_alignment),
    }


# ---------------------------------------------------------------- artifacts


def write_artifacts(out_dir: str | Path, model: TrainedModel) -> None:
    out = Path(out_dir)
    atomic_write_text(out / CODEBOOK_FILE, model.codebook.to_json())
    atomic_write_text(out / TABLE_FILE, model.table.to_json())
    atomic_write_text(out / LEXICON_FILE, model.lexicon.to_csv())
    atomic_write_text(
        out / TRACE_FILE,
        _csv_text(["iteration", "log_likelihood"], [(i, repr(v)) for i, v in enumerate(model.trace)]),
    )


def load_artifacts(art_dir: str | Path) -> TrainedModel:
    art = Path(art_dir)
    try:
        codebook = VisualCodebook.from_json((art / CODEBOOK_FILE).read_text(encoding="utf8"))
        table = TranslationTable.from_json((art / TABLE_FILE).read_text(encoding="utf8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"missing artifact: {exc.filename}") from None
    if table.k != codebook.k:
        raise ConfigError("codebook and translation table disagree on k")
    trace = ()
    if (art / TRACE_FILE).exists():
        rows = list(csv.DictReader(io.StringIO((art / TRACE_FILE).read_text(encoding="utf8"))))
        trace = tuple(float(r["log_likelihood"]) for r in rows)
    return TrainedModel(codebook, table, extract_lexicon(table), trace)


# ---------------------------------------------------------------- evaluation


def split_subjects(subjects: Iterable[str], spec: str = "odd_even") -> tuple[list[str], list[str]]:
    """Cross-subject split.

    ``odd_even`` puts the 1st, 3rd, ... subject (natural sort order) in the
    training set and the rest in the test set.  ``train=s01,s02`` lists the
    training subjects explicitly.
    """
    subs = sorted(set(subjects), key=symbol_sort_key)
    if len(subs) < 2:
        raise SplitError(f"cross-subject evaluation needs at least two subjects, got {len(subs)}")
    if spec == "odd_even":
        return subs[0::2], subs[1::2]
    if spec.startswith("train="):
        chosen = {s.strip() for s in spec[len("train="):].replace(";", ",").split(",") if s.strip()}
        unknown = chosen - set(subs)
        if unknown:
            raise SplitError(f"unknown subjects in split: {sorted(unknown)}")
        train_s = [s for s in subs if s in chosen]
        test_s = [s for s in subs if s not in chosen]
        if not train_s or not test_s:
            raise SplitError("split must leave at least one training and one test subject")
        return train_s, test_s
    raise SplitError(f"unknown split spec {spec!r}")


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: dict
    labels: list
    confusion: list
    n_test: int
    k: int
    seeds: dict
    lexicon_recovery: float | None = None
    train_subjects: list = field(default_factory=list)
    test_subjects: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1)

    def confusion_csv(self) -> str:
        rows = [[label, *row] for label, row in zip(self.labels, self.confusion)]
        return _csv_text(["true\\predicted", *self.labels], rows)


def planted_features(ground_truth: dict, config: PipelineConfig) -> tuple[list[str], np.ndarray]:
    """Feature vector of every planted canonical pose, in the codebook's space."""
    symbols = sorted(ground_truth["poses"], key=symbol_sort_key)
    rows = []
    for sym in symbols:
        pose = SkeletonSequence(np.asarray(ground_truth["poses"][sym], dtype=np.float64)[None], "planted")
        flat = feature_matrix(normalize(pose, config.root_joint, tuple(config.scale_pair)))[0]
        if config.feature_mode == MOVING_POSE:
            flat = np.concatenate([flat, np.zeros(2 * flat.size)])
        rows.append(flat)
    return symbols, np.array(rows)


def lexicon_recovery(model: TrainedModel, ground_truth: dict, config: PipelineConfig) -> float:
    """Fraction of semantic poses whose lexicon entry lies nearest their planted pose."""
    symbols, planted = planted_features(ground_truth, config)
    hits = 0
    for sym, (vid, _) in model.lexicon.mapping.items():
        center = model.codebook.centers[vid]
        nearest = symbols[int(np.argmin(((planted - center) ** 2).sum(axis=1)))]
        hits += nearest == sym
    return hits / len(model.lexicon.mapping)


def evaluate(
    prepared: Sequence[PreparedSequence],
    instructions: InstructionSet,
    config: PipelineConfig,
    ground_truth: dict | None = None,
    novel: InstructionSet | None = None,
) -> tuple[EvalReport, TrainedModel, list[dict]]:
    """Train on the training subjects, classify every test-subject instance.

    Instances of classes that only appear in ``novel`` are never trained on;
    at test time they compete against the trained classes (zero-shot).
    """
    novel = novel if novel is not None else InstructionSet()
    candidates = instructions.union(novel) if len(novel) else instructions
    check_coverage(prepared, candidates)
    train_s, test_s = split_subjects((p.sequence.subject_id for p in prepared), config.split)
    train_set, test_set = set(train_s), set(test_s)
    train_p = [p for p in prepared if p.sequence.subject_id in train_set and p.sequence.class_label in instructions]
    test_p = [p for p in prepared if p.sequence.subject_id in test_set]
    model = train_model(train_p, instructions, config)
    check_symbols(novel, model.table)

    labels = candidates.labels
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    records = []
    for p in test_p:
        result = classify_prepared(p, model, instructions, novel, config)
        confusion[index[p.sequence.class_label], index[result.label]] += 1
        records.append(classification_record(p, result))
    n_test = int(confusion.sum())
    per_class = {
        label: float(confusion[i, i] / confusion[i].sum())
        for i, label in enumerate(labels)
        if confusion[i].sum()
    }
    report = EvalReport(
        accuracy=float(np.trace(confusion) / n_test) if n_test else 0.0,
        per_class_accuracy=per_class,
        labels=labels,
        confusion=confusion.tolist(),
        n_test=n_test,
        k=model.codebook.k,
        seeds={"kmeans_seed": config.kmeans_seed},
        lexicon_recovery=lexicon_recovery(model, ground_truth, config) if ground_truth else None,
        train_subjects=train_s,
        test_subjects=test_s,
    )
    return report, model, records


def sweep_k(
    prepared: Sequence[PreparedSequence],
    instructions: InstructionSet,
    config: PipelineConfig,
    multipliers: Sequence[int] | None = None,
    novel: InstructionSet | None = None,
) -> list[tuple[int, float, int]]:
    """(k, accuracy, seed) for k = m * |T| over the multipliers."""
    multipliers = tuple(multipliers or config.sweep_multipliers)
    if any(m < 1 for m in multipliers):
        raise ConfigError("k multipliers must be >= 1")
    n_symbols = len(symbol_alphabet(instructions))
    rows = []
    for m in multipliers:
        report, _, _ = evaluate(prepared, instructions, config.replace(k=m * n_symbols), novel=novel)
        rows.append((report.k, report.accuracy, config.kmeans_seed))
    return rows


def sweep_csv(rows) -> str:
    return _csv_text(["k", "accuracy", "seed"], [(k, repr(acc), seed) for k, acc, seed in rows])
