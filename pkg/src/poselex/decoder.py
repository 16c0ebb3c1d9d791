"""Action classification by best-alignment translation score."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .codebook import VisualSentence
from .errors import ConfigError, UnknownSymbolError
from .lexicon import EPS, NULL, SemanticInstruction, TranslationTable

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InstructionSet:
    """Candidate instructions keyed by class label, iterated in sorted label order."""

    entries: Mapping[str, SemanticInstruction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", {k: self.entries[k] for k in sorted(self.entries)})

    @classmethod
    def from_poses(cls, classes: Mapping[str, list[str] | tuple[str, ...]]) -> InstructionSet:
        return cls({label: SemanticInstruction(label, tuple(poses)) for label, poses in classes.items()})

    @property
    def labels(self) -> list[str]:
        return list(self.entries)

    def symbols(self) -> set[str]:
        return {p for ins in self.entries.values() for p in ins.poses}

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, label: str) -> SemanticInstruction:
        return self.entries[label]

    def __contains__(self, label) -> bool:
        return label in self.entries

    def union(self, other: InstructionSet) -> InstructionSet:
        clash = set(self.entries) & set(other.entries)
        if clash:
            raise ConfigError(f"labels defined twice: {sorted(clash)}")
        return InstructionSet({**self.entries, **other.entries})


@dataclass(frozen=True)
class ClassificationResult:
    label: str
    log_score: float
    best_alignment: tuple[int, ...]
    per_class_scores: dict


def best_alignment_score(
    s: VisualSentence,
    t: SemanticInstruction,
    table: TranslationTable,
    include_null: bool = True,
    length_factor: bool = True,
) -> tuple[float, tuple[int, ...]]:
    """Score of the single best alignment of ``s`` to ``t``, in log space.

    Each visual element picks its most probable target position independently
    (position 0 is NULL), so the maximization factorizes over elements.  With
    ``length_factor`` the uniform alignment prior 1/(l+1) per element is
    included, which is what keeps long instructions from winning by default.
    Ties pick the smallest position.
    """
    rows = [table.row(sym) for sym in t.poses]
    positions = list(range(1, len(rows) + 1))
    if table.null_row and include_null:
        rows = [table.null_index] + rows
        positions = [0] + positions
    logp = np.log(table.probs[np.ix_(rows, s.ids)] + EPS)
    best = logp.argmax(axis=0)
    score = float(logp[best, np.arange(len(s))].sum())
    if length_factor:
        n_prior = len(t) + 1 if table.null_row else len(t)
        score -= len(s) * math.log(n_prior)
    return score, tuple(positions[b] for b in best)


def classify(
    s: VisualSentence,
    instructions: InstructionSet,
    table: TranslationTable,
    include_null: bool = True,
    length_factor: bool = True,
) -> ClassificationResult:
    if not len(instructions):
        raise ConfigError("cannot classify against an empty instruction set")
    scores = {}
    best_label, best_score, best_alignment = None, -math.inf, ()
    for label, ins in instructions.entries.items():
        score, alignment = best_alignment_score(s, ins, table, include_null, length_factor)
        scores[label] = score
        # labels come sorted, strict comparison keeps the smallest on ties
        if best_label is None or score > best_score:
            best_label, best_score, best_alignment = label, score, alignment
    if best_alignment and all(a == 0 for a in best_alignment):
        log.warning("NULL won every position for %r; the label was decided by tie-breaking", best_label)
    return ClassificationResult(best_label, best_score, best_alignment, scores)


def compose_instruction(a: SemanticInstruction, b: SemanticInstruction, label: str) -> SemanticInstruction:
    """Instruction for performing ``a`` then ``b``."""
    return SemanticInstruction(label, a.poses + b.poses, a.elementary_count + b.elementary_count)


def check_symbols(instructions: InstructionSet, table: TranslationTable) -> None:
    known = set(table.semantic)
    for label, ins in instructions.entries.items():
        unknown = [p for p in ins.poses if p not in known or p == NULL]
        if unknown:
            raise UnknownSymbolError(f"instruction {label!r} uses symbols {unknown} absent from the model")


def classify_zero_shot(
    s: VisualSentence,
    trained: InstructionSet,
    novel: InstructionSet,
    table: TranslationTable,
    include_null: bool = True,
    length_factor: bool = True,
) -> ClassificationResult:
    """Classify against trained and never-trained instructions together.

    Novel instructions may only reuse semantic poses the model has a row for.
    """
    check_symbols(novel, table)
    candidates = trained.union(novel) if len(novel) else trained
    return classify(s, candidates, table, include_null, length_factor)
