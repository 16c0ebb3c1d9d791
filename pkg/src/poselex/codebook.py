"""Visual pose candidates: a k-means codebook over key-frame features."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptyStreamError, InfeasibleKError, ParseError, SchemaError
from .keyframes import KeyFrameSet
from .skeleton import POSITIONS, FrameFeature


@dataclass(frozen=True, eq=False)
class VisualCodebook:
    centers: np.ndarray
    seed: int = 0
    feature_mode: str = POSITIONS
    inertia_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise SchemaError(f"centers must be a non-empty (k, D) array, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise SchemaError("codebook centers must be finite")
        if len(np.unique(c, axis=0)) != len(c):
            raise SchemaError("codebook centers must be pairwise distinct")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "dim": self.dim,
                "seed": self.seed,
                "feature_mode": self.feature_mode,
                "centers": self.centers.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> VisualCodebook:
        try:
            obj = json.loads(text)
            cb = cls(np.asarray(obj["centers"], dtype=np.float64), int(obj["seed"]), obj["feature_mode"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad codebook file: {exc}") from None
        if cb.k != obj["k"] or cb.dim != obj["dim"]:
            raise SchemaError("codebook header disagrees with centers")
        return cb


@dataclass(frozen=True)
class VisualSentence:
    ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if not self.ids:
            raise EmptyStreamError("a visual sentence needs at least one element")
        if min(self.ids) < 0:
            raise SchemaError("visual pose ids must be non-negative")

    def __len__(self):
        return len(self.ids)


def _as_matrix(points) -> np.ndarray:
    if len(points) and isinstance(points[0], FrameFeature):
        points = [p.vector for p in points]
    return np.atleast_2d(np.asarray(points, dtype=np.float64))


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        idx = rng.choice(len(x), p=d2 / d2.sum())
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _update_centers(x, labels, centers, dist):
    new = centers.copy()
    own = dist[np.arange(len(x)), labels]
    for c in range(len(centers)):
        members = labels == c
        if members.any():
            new[c] = x[members].mean(axis=0)
        else:
            # empty cluster: take over the worst-fitted point
            far = int(np.argmax(own))
            new[c] = x[far]
            own[far] = 0.0
    return new


def fit_kmeans(points, k: int, seed: int = 0, max_iters: int = 100, feature_mode: str = POSITIONS) -> VisualCodebook:
    """Lloyd's algorithm from k-means++ seeds.

    Stops once the assignment stops changing or after ``max_iters``
    assignment steps.  The inertia after every assignment step is kept in
    ``inertia_trace``; it never increases.
    """
    x = _as_matrix(points)
    if k < 1:
        raise InfeasibleKError(f"k must be >= 1, got {k}")
    n_distinct = len(np.unique(x, axis=0))
    if n_distinct < k:
        raise InfeasibleKError(f"only {n_distinct} distinct points for k={k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    trace = []
    prev = None
    for _ in range(max(1, max_iters)):
        dist = cdist(x, centers, "sqeuclidean")
        labels = dist.argmin(axis=1)
        trace.append(float(dist[np.arange(len(x)), labels].sum()))
        if prev is not None and np.array_equal(labels, prev):
            break
        prev = labels
        centers = _update_centers(x, labels, centers, dist)
    return VisualCodebook(centers, seed, feature_mode, tuple(trace))


def inertia(points, cb: VisualCodebook) -> float:
    x = _as_matrix(points)
    return float(cdist(x, cb.centers, "sqeuclidean").min(axis=1).sum())


def quantize_many(features: np.ndarray, cb: VisualCodebook) -> np.ndarray:
    x = _as_matrix(features)
    if x.shape[1] != cb.dim:
        raise SchemaError(f"feature dimension {x.shape[1]} does not match codebook dimension {cb.dim}")
    # argmin returns the first minimum, i.e. the smallest index on ties
    return cdist(x, cb.centers, "sqeuclidean").argmin(axis=1)


def quantize(feature: FrameFeature | np.ndarray, cb: VisualCodebook) -> int:
    vec = feature.vector if isinstance(feature, FrameFeature) else feature
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1:
        raise SchemaError("quantize expects a single feature vector")
    return int(quantize_many(vec[None], cb)[0])


def quantize_sequence(
    features: Sequence[FrameFeature] | np.ndarray, keyframes: KeyFrameSet, cb: VisualCodebook
) -> VisualSentence:
    """Quantize the key frames of one sequence, in frame order.

    ``features`` holds one vector per frame of the sequence the key frames
    were extracted from.
    """
    if not len(keyframes):
        raise EmptyStreamError("no key frames to quantize")
    x = _as_matrix(features)
    return VisualSentence(tuple(quantize_many(x[list(keyframes.indices)], cb)))
