"""
Visual-to-semantic pose translation model and lexicon extraction.

Visual sentences (codebook ids) are the source language and semantic pose
sentences the target.  Each visual element aligns to one semantic position
or to NULL, with a uniform alignment prior, so the sentence likelihood
factorizes as::

    P(s | t) = prod_j  1/(L+1) * sum_{i=0..L} P(s_j | t_i)

and the translation table P(S_p | T_q) is fitted by EM.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .codebook import VisualSentence
from .errors import (
    EnumerationTooLargeError,
    ParseError,
    SchemaError,
    UnknownSymbolError,
)

NULL = "NULL"
EPS = 1e-12


def symbol_sort_key(symbol: str):
    """Natural order so that T2 sorts before T10."""
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", symbol)]


@dataclass(frozen=True)
class SemanticInstruction:
    class_label: str
    poses: tuple[str, ...]
    elementary_count: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise SchemaError(f"instruction {self.class_label!r} has no semantic poses")
        if any(not isinstance(p, str) or not p for p in self.poses):
            raise SchemaError(f"instruction {self.class_label!r} has an invalid symbol")
        if self.elementary_count is None:
            object.__setattr__(self, "elementary_count", max(1, len(self.poses) - 1))

    def __len__(self):
        return len(self.poses)


@dataclass(frozen=True)
class SentencePair:
    source: VisualSentence
    target: SemanticInstruction
    instance_id: str = ""


@dataclass(frozen=True, eq=False)
class ParallelCorpus:
    pairs: tuple[SentencePair, ...]
    visual_alphabet_size: int
    semantic_alphabet: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "semantic_alphabet", tuple(self.semantic_alphabet))
        if not self.pairs:
            raise SchemaError("a parallel corpus needs at least one sentence pair")
        if len(set(self.semantic_alphabet)) != len(self.semantic_alphabet):
            raise SchemaError("duplicate symbols in semantic alphabet")
        known = set(self.semantic_alphabet)
        for pair in self.pairs:
            if max(pair.source.ids) >= self.visual_alphabet_size:
                raise SchemaError(
                    f"pair {pair.instance_id!r}: visual id outside [0, {self.visual_alphabet_size})"
                )
            missing = set(pair.target.poses) - known
            if missing:
                raise UnknownSymbolError(
                    f"pair {pair.instance_id!r}: symbols {sorted(missing)} not in alphabet"
                )

    @classmethod
    def build(cls, pairs: Sequence[SentencePair], k: int, alphabet: Iterable[str] | None = None):
        if alphabet is None:
            alphabet = {p for pair in pairs for p in pair.target.poses}
        return cls(tuple(pairs), k, tuple(sorted(set(alphabet), key=symbol_sort_key)))

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class TranslationTable:
    """P(visual id | semantic symbol); one row per symbol, NULL row last."""

    probs: np.ndarray
    semantic: tuple[str, ...]
    null_row: bool = True

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        object.__setattr__(self, "semantic", tuple(self.semantic))
        rows = len(self.semantic) + int(self.null_row)
        if p.ndim != 2 or p.shape[0] != rows or p.shape[1] < 1:
            raise SchemaError(f"probs must be ({rows}, k), got shape {p.shape}")
        if NULL in self.semantic:
            raise SchemaError(f"{NULL!r} is reserved")
        if not np.isfinite(p).all() or (p < 0).any():
            raise SchemaError("probabilities must be finite and non-negative")
        if np.abs(p.sum(axis=1) - 1.0).max() > 1e-9:
            raise SchemaError("every row must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def k(self) -> int:
        return self.probs.shape[1]

    @cached_property
    def _index(self) -> dict[str, int]:
        idx = {s: i for i, s in enumerate(self.semantic)}
        if self.null_row:
            idx[NULL] = len(self.semantic)
        return idx

    def row(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbolError(f"semantic symbol {symbol!r} not in translation table") from None

    @property
    def null_index(self) -> int | None:
        return len(self.semantic) if self.null_row else None

    def prob(self, visual_id: int, symbol: str) -> float:
        return float(self.probs[self.row(symbol), visual_id])

    def to_json(self) -> str:
        return json.dumps(
            {
                "semantic": list(self.semantic),
                "null_row": self.null_row,
                "k": self.k,
                "probs": self.probs.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> TranslationTable:
        try:
            obj = json.loads(text)
            table = cls(np.asarray(obj["probs"], dtype=np.float64), obj["semantic"], bool(obj["null_row"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad translation table file: {exc}") from None
        if table.k != obj["k"]:
            raise SchemaError("translation table header disagrees with probs")
        return table


def init_uniform(visual_k: int, alphabet: Iterable[str], null_row: bool = True) -> TranslationTable:
    if visual_k < 1:
        raise SchemaError(f"visual_k must be >= 1, got {visual_k}")
    alphabet = tuple(alphabet)
    rows = len(alphabet) + int(null_row)
    return TranslationTable(np.full((rows, visual_k), 1.0 / visual_k), alphabet, null_row)


def init_random(visual_k: int, alphabet: Iterable[str], seed: int, null_row: bool = True) -> TranslationTable:
    """Dirichlet(1) rows; used to probe sensitivity to the starting point."""
    alphabet = tuple(alphabet)
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(visual_k), size=len(alphabet) + int(null_row))
    return TranslationTable(probs, alphabet, null_row)


def _target_rows(target: SemanticInstruction, table: TranslationTable) -> np.ndarray:
    rows = [table.row(sym) for sym in target.poses]
    if table.null_row:
        rows = [table.null_index] + rows
    return np.asarray(rows, dtype=np.intp)


def pair_posteriors(pair: SentencePair, table: TranslationTable) -> np.ndarray:
    """Alignment posteriors gamma[j, i] for one pair.

    Column 0 is NULL when the table has a NULL row, followed by the target
    positions 1..L.  Lookups are floored by ``EPS`` so a row never has a zero
    denominator.
    """
    rows = _target_rows(pair.target, table)
    vals = table.probs[np.ix_(rows, pair.source.ids)].T + EPS
    return vals / vals.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class _FlatCorpus:
    """Every (pair, source position, target position) triple, flattened."""

    token: np.ndarray  # global source-position index per entry
    src: np.ndarray  # visual id per entry
    tgt: np.ndarray  # table row per entry
    n_positions: np.ndarray  # alignment positions per token
    n_tokens: int


def _flatten(corpus: ParallelCorpus, table: TranslationTable) -> _FlatCorpus:
    tokens, srcs, tgts, npos = [], [], [], []
    offset = 0
    for pair in corpus.pairs:
        rows = _target_rows(pair.target, table)
        ids = np.asarray(pair.source.ids, dtype=np.intp)
        m, n = len(ids), len(rows)
        tokens.append(np.repeat(np.arange(offset, offset + m), n))
        srcs.append(np.repeat(ids, n))
        tgts.append(np.tile(rows, m))
        npos.append(np.full(m, n))
        offset += m
    return _FlatCorpus(
        np.concatenate(tokens),
        np.concatenate(srcs),
        np.concatenate(tgts),
        np.concatenate(npos).astype(np.float64),
        offset,
    )


def _log_likelihood(flat: _FlatCorpus, table: TranslationTable) -> float:
    per_token = np.bincount(flat.token, table.probs[flat.tgt, flat.src], minlength=flat.n_tokens)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(per_token) - np.log(flat.n_positions)))


def _expected_counts(flat: _FlatCorpus, table: TranslationTable) -> np.ndarray:
    vals = table.probs[flat.tgt, flat.src] + EPS
    denom = np.bincount(flat.token, vals, minlength=flat.n_tokens)
    gamma = vals / denom[flat.token]
    rows, k = table.probs.shape
    # bincount accumulates in entry order, so the reduction order is fixed
    return np.bincount(flat.tgt * k + flat.src, gamma, minlength=rows * k).reshape(rows, k)


def _m_step(counts: np.ndarray, table: TranslationTable) -> TranslationTable:
    totals = counts.sum(axis=1, keepdims=True)
    k = counts.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(totals > 0, counts / totals, 1.0 / k)
    return TranslationTable(probs, table.semantic, table.null_row)


def expected_counts(corpus: ParallelCorpus, table: TranslationTable) -> np.ndarray:
    return _expected_counts(_flatten(corpus, table), table)


def em_iteration(corpus: ParallelCorpus, table: TranslationTable) -> TranslationTable:
    """One E-step plus M-step.  Symbols with no expected count get a uniform row."""
    return _m_step(expected_counts(corpus, table), table)


def corpus_log_likelihood(corpus: ParallelCorpus, table: TranslationTable) -> float:
    return _log_likelihood(_flatten(corpus, table), table)


def train(
    corpus: ParallelCorpus,
    max_iters: int = 100,
    tol: float = 1e-6,
    null_row: bool = True,
    init: TranslationTable | None = None,
) -> tuple[TranslationTable, list[float]]:
    """Fit the translation table by EM, starting from a uniform table.

    Returns the table and the corpus log-likelihood before the first and
    after every iteration.  Training stops when the relative improvement
    drops below ``tol`` or after ``max_iters`` iterations.
    """
    table = init if init is not None else init_uniform(
        corpus.visual_alphabet_size, corpus.semantic_alphabet, null_row
    )
    flat = _flatten(corpus, table)
    trace = [_log_likelihood(flat, table)]
    for _ in range(max_iters):
        table = _m_step(_expected_counts(flat, table), table)
        trace.append(_log_likelihood(flat, table))
        prev, cur = trace[-2], trace[-1]
        if not math.isfinite(prev) or not math.isfinite(cur):
            continue
        if prev == 0.0 or (cur - prev) / abs(prev) < tol:
            break
    return table, trace


def likelihood_factored(pair: SentencePair, table: TranslationTable) -> float:
    rows = _target_rows(pair.target, table)
    per_position = table.probs[np.ix_(rows, pair.source.ids)].sum(axis=0) / len(rows)
    return float(np.prod(per_position))


def log_likelihood_factored(pair: SentencePair, table: TranslationTable) -> float:
    rows = _target_rows(pair.target, table)
    per_position = table.probs[np.ix_(rows, pair.source.ids)].sum(axis=0)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(per_position)) - len(pair.source) * math.log(len(rows)))


def likelihood_enumerated(pair: SentencePair, table: TranslationTable, cap: int = 10**6) -> float:
    """Sum of P(s, a | t) over every alignment vector ``a`` explicitly.

    Exponential in the source length; kept as a cross-check for the
    factored form.
    """
    rows = _target_rows(pair.target, table)
    n, m = len(rows), len(pair.source)
    if n**m > cap:
        raise EnumerationTooLargeError(f"{n}^{m} alignments exceed the cap of {cap}")
    probs = table.probs
    ids = pair.source.ids
    total = 0.0
    for alignment in itertools.product(range(n), repeat=m):
        term = 1.0
        for j, i in enumerate(alignment):
            term *= probs[rows[i], ids[j]] / n
        total += term
    return total


@dataclass(frozen=True)
class PoseLexicon:
    """Best visual candidate for each semantic pose, with its probability."""

    mapping: dict

    def __getitem__(self, symbol: str) -> tuple[int, float]:
        return self.mapping[symbol]

    def visual_ids(self) -> dict[str, int]:
        return {sym: vid for sym, (vid, _) in self.mapping.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["semantic_pose", "visual_pose_id", "probability"])
        for sym, (vid, p) in self.mapping.items():
            writer.writerow([sym, vid, repr(p)])
        return buf.getvalue()


def extract_lexicon(table: TranslationTable) -> PoseLexicon:
    mapping = {}
    for sym in table.semantic:
        row = table.probs[table.row(sym)]
        best = int(np.argmax(row))  # first maximum wins ties
        mapping[sym] = (best, float(row[best]))
    return PoseLexicon(mapping)
