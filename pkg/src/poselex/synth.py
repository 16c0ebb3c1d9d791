"""
Synthetic action instances with a planted lexicon.

Each instance walks through its class sentence: it holds the rest pose,
linearly interpolates to the next canonical configuration, holds it for a
few frames, and so on back to rest.  Subjects differ by a fixed body scale,
placement and tempo (hold and transition lengths); every joint of every
repetition gets i.i.d. Gaussian noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import fixtures
from .errors import ConfigError
from .skeleton import SkeletonSequence


@dataclass
class SyntheticSpec:
    poses: Mapping[str, np.ndarray] = field(default_factory=fixtures.canonical_poses)
    classes: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(fixtures.CLASSES))
    n_subjects: int = 10
    instances_per_class: int = 10
    noise: float = 0.02  # joint noise std, as a fraction of the reference bone length
    interp_frames: int = 12
    hold_frames: int = 5
    seed: int = 0
    rest_symbol: str = fixtures.REST
    scale_range: tuple[float, float] = (0.85, 1.15)
    frame_rate: float = 30.0
    scale_pair: tuple[int, int] = fixtures.SCALE_PAIR

    def validate(self) -> None:
        if self.n_subjects < 1 or self.instances_per_class < 1:
            raise ConfigError("need at least one subject and one instance per class")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")
        if self.interp_frames < 2 or self.hold_frames < 1:
            raise ConfigError("interp_frames must be >= 2 and hold_frames >= 1")
        shapes = {np.shape(p) for p in self.poses.values()}
        if len(shapes) != 1:
            raise ConfigError("all canonical poses must have the same joint count")
        for label, sentence in self.classes.items():
            if not sentence or sentence[0] != self.rest_symbol or sentence[-1] != self.rest_symbol:
                raise ConfigError(f"class {label!r} must start and end with {self.rest_symbol!r}")
            missing = [s for s in sentence if s not in self.poses]
            if missing:
                raise ConfigError(f"class {label!r} uses undefined poses {missing}")

    @property
    def reference_length(self) -> float:
        a, b = self.scale_pair
        rest = np.asarray(self.poses[self.rest_symbol])
        return float(np.linalg.norm(rest[a] - rest[b]))


def subject_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"s{i + 1:0{width}d}" for i in range(n)]


def motion_path(sentence, poses, interp_frames, hold_frames, rng) -> np.ndarray:
    """Noise-free (F, J, 3) trajectory through the poses of ``sentence``."""
    def hold_len():
        return max(1, hold_frames + int(rng.integers(-2, 3)))

    first = np.asarray(poses[sentence[0]], dtype=np.float64)
    frames = [first] * hold_len()
    for a, b in zip(sentence, sentence[1:]):
        pa = np.asarray(poses[a], dtype=np.float64)
        pb = np.asarray(poses[b], dtype=np.float64)
        if a != b:
            n = max(2, interp_frames + int(rng.integers(-3, 4)))
            for u in np.arange(1, n + 1) / n:
                frames.append((1 - u) * pa + u * pb)
        frames.extend([pb] * hold_len())
    return np.stack(frames)


def generate(spec: SyntheticSpec, classes: Mapping[str, tuple[str, ...]] | None = None):
    """Generate every (subject, class, repetition) instance.

    Returns ``(sequences, ground_truth)`` where the ground truth records the
    canonical pose of every symbol and the semantic sentence of each
    instance.  Output is a deterministic function of ``spec``.
    """
    spec.validate()
    classes = dict(spec.classes if classes is None else classes)
    rng = np.random.default_rng(spec.seed)
    sigma = spec.noise * spec.reference_length
    lo, hi = spec.scale_range
    sequences, sentences = [], {}
    for subject in subject_ids(spec.n_subjects):
        scale = rng.uniform(lo, hi)
        offset = np.array([rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.1), rng.uniform(2.0, 3.0)])
        for label, sentence in classes.items():
            # tempo is a per-subject habit, repetitions differ only by noise
            path = motion_path(sentence, spec.poses, spec.interp_frames, spec.hold_frames, rng)
            for rep in range(spec.instances_per_class):
                noise = rng.normal(0.0, sigma * scale, size=path.shape) if sigma > 0 else 0.0
                positions = scale * path + offset + noise
                iid = f"{subject}-{label.replace(' ', '_')}-{rep:02d}"
                sequences.append(
                    SkeletonSequence(positions, subject, label, spec.frame_rate, instance_id=iid)
                )
                sentences[iid] = list(sentence)
    ground_truth = {
        "rest_symbol": spec.rest_symbol,
        "poses": {sym: np.asarray(p).tolist() for sym, p in spec.poses.items()},
        "classes": {label: list(s) for label, s in classes.items()},
        "instances": sentences,
    }
    return sequences, ground_truth
