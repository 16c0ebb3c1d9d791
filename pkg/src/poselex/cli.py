"""Command-line entry point: ``poselex synth|train|eval|sweep-k|classify``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fixtures
from .config import PipelineConfig, load_config
from .decoder import InstructionSet, check_symbols, compose_instruction
from .errors import ConfigError, PoselexError
from .pipeline import (
    atomic_write_text,
    classification_record,
    classify_prepared,
    evaluate,
    instructions_json,
    load_artifacts,
    load_instructions,
    prepare_all,
    sweep_csv,
    sweep_k,
    train_model,
    write_artifacts,
)
from .skeleton import dump_sequences, load_sequences
from .synth import SyntheticSpec, generate

log = logging.getLogger("poselex")

MANIFEST_FILE = "manifest.jsonl"
INSTRUCTIONS_FILE = "instructions.json"
NOVEL_FILE = "novel_instructions.json"
GROUND_TRUTH_FILE = "ground_truth.json"
SCHEMA_FILE = "skeleton_schema.json"


def _require(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise ConfigError(f"--{name} is required for '{args.command}'")
    return Path(value)


def synthetic_spec(config: PipelineConfig) -> tuple[SyntheticSpec, dict, dict]:
    """Spec plus the trained and novel class sentences requested by ``config``."""
    base = dict(fixtures.CLASSES)
    if config.synth_classes:
        unknown = set(config.synth_classes) - set(base)
        if unknown:
            raise ConfigError(f"unknown synthetic classes {sorted(unknown)}")
        base = {k: base[k] for k in config.synth_classes}
    unknown = set(config.synth_heldout) - set(base)
    if unknown:
        raise ConfigError(f"held-out classes not generated: {sorted(unknown)}")
    base_set = InstructionSet.from_poses(base)
    composites = {}
    for item in config.synth_composites:
        a, b = item.split("+")
        if a not in base or b not in base:
            raise ConfigError(f"composite {item!r} refers to unknown classes")
        label = fixtures.composite_label(a, b)
        composites[label] = compose_instruction(base_set[a], base_set[b], label).poses
    trained = {k: v for k, v in base.items() if k not in config.synth_heldout}
    novel = {**{k: base[k] for k in config.synth_heldout}, **composites}
    spec = SyntheticSpec(
        classes={**base, **composites},
        n_subjects=config.synth_subjects,
        instances_per_class=config.synth_instances,
        noise=config.synth_noise,
        interp_frames=config.synth_interp_frames,
        hold_frames=config.synth_hold_frames,
        seed=config.synth_seed,
        scale_pair=tuple(config.scale_pair),
    )
    return spec, trained, novel


def cmd_synth(args, config: PipelineConfig) -> None:
    out = _require(args, "out")
    spec, trained, novel = synthetic_spec(config)
    sequences, truth = generate(spec)
    atomic_write_text(out / MANIFEST_FILE, dump_sequences(sequences, decimals=6))
    atomic_write_text(out / INSTRUCTIONS_FILE, instructions_json(InstructionSet.from_poses(trained)))
    if novel:
        atomic_write_text(out / NOVEL_FILE, instructions_json(InstructionSet.from_poses(novel)))
    atomic_write_text(out / GROUND_TRUTH_FILE, json.dumps(truth))
    schema = {
        "joints": list(fixtures.JOINT_NAMES),
        "root_joint": fixtures.ROOT_JOINT,
        "scale_pair": list(fixtures.SCALE_PAIR),
        "axes": "x: subject's right, y: up, z: forward; meters",
    }
    atomic_write_text(out / SCHEMA_FILE, json.dumps(schema, indent=1))
    log.info("wrote %d sequences to %s", len(sequences), out)


def _ground_truth(config: PipelineConfig, manifest: Path):
    path = Path(config.ground_truth) if config.ground_truth else manifest.parent / GROUND_TRUTH_FILE
    if path.exists():
        return json.loads(path.read_text(encoding="utf8"))
    if config.ground_truth:
        raise ConfigError(f"ground truth file {path} not found")
    return None


def _novel(args):
    return load_instructions(args.novel) if args.novel else None


def cmd_train(args, config: PipelineConfig) -> None:
    manifest, out = _require(args, "manifest"), _require(args, "out")
    instructions = load_instructions(_require(args, "instructions"))
    prepared = prepare_all(load_sequences(manifest), config)
    model = train_model(prepared, instructions, config)
    write_artifacts(out, model)


def cmd_eval(args, config: PipelineConfig) -> None:
    manifest, out = _require(args, "manifest"), _require(args, "out")
    instructions = load_instructions(_require(args, "instructions"))
    prepared = prepare_all(load_sequences(manifest), config)
    report, model, records = evaluate(
        prepared, instructions, config, _ground_truth(config, manifest), _novel(args)
    )
    write_artifacts(out, model)
    atomic_write_text(out / "eval_report.json", report.to_json())
    atomic_write_text(out / "confusion.csv", report.confusion_csv())
    atomic_write_text(out / "eval_predictions.jsonl", "".join(json.dumps(r) + "\n" for r in records))
    print(f"accuracy {report.accuracy:.4f} on {report.n_test} test instances (k={report.k})")


def cmd_sweep_k(args, config: PipelineConfig) -> None:
    manifest, out = _require(args, "manifest"), _require(args, "out")
    instructions = load_instructions(_require(args, "instructions"))
    prepared = prepare_all(load_sequences(manifest), config)
    rows = sweep_k(prepared, instructions, config, novel=_novel(args))
    atomic_write_text(out / "sweep_k.csv", sweep_csv(rows))
    for k, acc, _ in rows:
        print(f"k={k:4d}  accuracy={acc:.4f}")


def cmd_classify(args, config: PipelineConfig) -> None:
    out = _require(args, "out")
    manifest = _require(args, "manifest")
    model = load_artifacts(args.artifacts or out)
    trained = load_instructions(_require(args, "instructions"))
    check_symbols(trained, model.table)
    novel = _novel(args)
    if novel is not None:
        check_symbols(novel, model.table)
    prepared = prepare_all(load_sequences(manifest), config)
    lines = []
    for p in prepared:
        result = classify_prepared(p, model, trained, novel, config)
        lines.append(json.dumps(classification_record(p, result)) + "\n")
    atomic_write_text(out / "classification_report.jsonl", "".join(lines))


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-k": cmd_sweep_k,
    "classify": cmd_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poselex", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--manifest", help="skeleton manifest (JSON lines)")
    parser.add_argument("--instructions", help="instruction file of trained classes")
    parser.add_argument("--novel", help="instruction file of never-trained classes")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--artifacts", help="directory holding a trained model (default: --out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config)
        COMMANDS[args.command](args, config)
    except (PoselexError, OSError, ValueError) as exc:
        print(f"poselex {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
