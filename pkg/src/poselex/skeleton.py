"""
Skeleton sequences: containers, manifest ingestion, normalization and
per-frame feature vectors.

A manifest is line-delimited JSON, one action instance per line::

    {"subject": "s01", "class": "duck", "fps": 30, "joints": [[[x, y, z], ...], ...]}

``joints`` is indexed ``[frame][joint][axis]``.  An optional ``"id"`` key
names the instance; otherwise the 1-based line number is used.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSkeletonError,
    InsufficientFramesError,
    ParseError,
    SchemaError,
)

POSITIONS = "positions"
MOVING_POSE = "positions+velocity+acceleration"
FEATURE_MODES = (POSITIONS, MOVING_POSE)

DEFAULT_WEIGHTS = (0.75, 0.6)


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Joint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise SchemaError(f"non-finite joint coordinate {(self.x, self.y, self.z)}")


@dataclass(frozen=True, eq=False)
class Frame:
    """One skeleton: a (J, 3) array of joint positions."""

    joints: np.ndarray
    timestamp_index: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.joints)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise SchemaError(f"frame must be (J, 3), got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise SchemaError("a frame needs at least two joints")
        if not np.isfinite(arr).all():
            raise SchemaError("non-finite joint coordinate in frame")
        if self.timestamp_index < 0:
            raise SchemaError("timestamp_index must be non-negative")
        object.__setattr__(self, "joints", arr)

    @property
    def n_joints(self) -> int:
        return self.joints.shape[0]

    def joint(self, i: int) -> Joint:
        return Joint(*map(float, self.joints[i]))


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    """An action instance stored as an (F, J, 3) position array.

    The array is made read-only on construction so a sequence can be shared
    freely between pipeline stages.
    """

    positions: np.ndarray
    subject_id: str
    class_label: str | None = None
    frame_rate: float = 30.0
    instance_id: str = ""
    timestamps: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pos = _frozen_array(self.positions)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise SchemaError(f"positions must be (F, J, 3), got shape {pos.shape}")
        if pos.shape[0] < 1:
            raise SchemaError("a sequence needs at least one frame")
        if pos.shape[1] < 2:
            raise SchemaError("a frame needs at least two joints")
        if not np.isfinite(pos).all():
            raise SchemaError(f"non-finite joint coordinate in sequence {self.instance_id!r}")
        if self.timestamps is None:
            ts = np.arange(pos.shape[0])
        else:
            ts = np.asarray(self.timestamps, dtype=np.int64)
            if ts.shape != (pos.shape[0],) or ts[0] < 0 or np.any(np.diff(ts) <= 0):
                raise SchemaError("timestamps must be non-negative and strictly increasing")
        ts = _frozen_array(ts, dtype=np.int64)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "timestamps", ts)

    @classmethod
    def from_frames(cls, frames: Sequence[Frame], subject_id: str, **kwargs) -> SkeletonSequence:
        if not frames:
            raise SchemaError("a sequence needs at least one frame")
        n_joints = frames[0].n_joints
        for f in frames:
            if f.n_joints != n_joints:
                raise SchemaError(
                    f"inconsistent joint count: {f.n_joints} != {n_joints} "
                    f"at timestamp {f.timestamp_index}"
                )
        return cls(
            np.stack([f.joints for f in frames]),
            subject_id,
            timestamps=[f.timestamp_index for f in frames],
            **kwargs,
        )

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def n_joints(self) -> int:
        return self.positions.shape[1]

    @property
    def frames(self) -> tuple[Frame, ...]:
        return tuple(Frame(p, int(t)) for p, t in zip(self.positions, self.timestamps))

    def with_positions(self, positions: np.ndarray) -> SkeletonSequence:
        return replace(self, positions=positions)


@dataclass(frozen=True, eq=False)
class FrameFeature:
    vector: np.ndarray
    source_frame: int


# ---------------------------------------------------------------- manifest IO


def _parse_record(obj, where: str, n_joints: int | None):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: record must be a JSON object")
    for key in ("subject", "fps", "joints"):
        if key not in obj:
            raise ParseError(f"{where}: missing key {key!r}")
    label = obj.get("class")
    if label is not None and not isinstance(label, str):
        raise ParseError(f"{where}: 'class' must be a string or null")
    try:
        fps = float(obj["fps"])
    except (TypeError, ValueError):
        raise ParseError(f"{where}: 'fps' must be a number") from None
    frames = obj["joints"]
    if not isinstance(frames, list) or not frames:
        raise ParseError(f"{where}: 'joints' must be a non-empty list of frames")
    for fi, frame in enumerate(frames):
        if not isinstance(frame, list):
            raise ParseError(f"{where}: frame {fi} is not a list of joints")
        if n_joints is None:
            n_joints = len(frame)
        elif len(frame) != n_joints:
            raise SchemaError(f"{where}: frame {fi} has {len(frame)} joints, expected {n_joints}")
        for joint in frame:
            if not isinstance(joint, list) or len(joint) != 3:
                raise ParseError(f"{where}: frame {fi} has a joint that is not [x, y, z]")
    try:
        positions = np.asarray(frames, dtype=np.float64)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: joint coordinates must be numbers") from None
    try:
        seq = SkeletonSequence(
            positions,
            subject_id=str(obj["subject"]),
            class_label=label,
            frame_rate=fps,
            instance_id=str(obj.get("id", where.rsplit(":", 1)[-1])),
        )
    except SchemaError as exc:
        raise SchemaError(f"{where}: {exc}") from None
    return seq


def load_sequences(manifest_path: str | Path) -> list[SkeletonSequence]:
    """Read every sequence from a manifest, preserving file order.

    Raises ParseError for malformed lines and SchemaError when the joint count
    changes within a sequence or between sequences.
    """
    path = Path(manifest_path)
    sequences = []
    n_joints = None
    with path.open(encoding="utf8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc.msg})") from None
            seq = _parse_record(obj, where, n_joints)
            n_joints = seq.n_joints
            sequences.append(seq)
    return sequences


def sequence_record(seq: SkeletonSequence, decimals: int | None = None) -> dict:
    pos = seq.positions if decimals is None else np.round(seq.positions, decimals)
    record = {
        "subject": seq.subject_id,
        "class": seq.class_label,
        "fps": seq.frame_rate,
        "joints": pos.tolist(),
    }
    if seq.instance_id:
        record["id"] = seq.instance_id
    return record


def dump_sequences(sequences: Iterable[SkeletonSequence], decimals: int | None = None) -> str:
    return "".join(
        json.dumps(sequence_record(s, decimals), separators=(",", ":")) + "\n" for s in sequences
    )


# ------------------------------------------------------------ normalization


def normalize(
    seq: SkeletonSequence, root_joint: int = 0, scale_pair: tuple[int, int] = (0, 1)
) -> SkeletonSequence:
    """Root-center every frame and rescale so the ``scale_pair`` bone has length 1."""
    n_joints = seq.n_joints
    a, b = scale_pair
    for idx in (root_joint, a, b):
        if not 0 <= idx < n_joints:
            raise ConfigError(f"joint index {idx} out of range for J={n_joints}")
    pos = seq.positions
    centered = pos - pos[:, root_joint : root_joint + 1, :]
    scale = np.linalg.norm(pos[:, a, :] - pos[:, b, :], axis=1)
    if np.any(scale <= 1e-12):
        bad = int(np.argmax(scale <= 1e-12))
        raise DegenerateSkeletonError(
            f"zero distance between joints {a} and {b} in frame {bad} of {seq.instance_id!r}"
        )
    return seq.with_positions(centered / scale[:, None, None])


# ---------------------------------------------------------------- features


def feature_matrix(
    seq: SkeletonSequence,
    mode: str = POSITIONS,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
) -> np.ndarray:
    """(F, D) feature array; see :func:`frame_features`."""
    if mode not in FEATURE_MODES:
        raise ConfigError(f"unknown feature mode {mode!r}; expected one of {FEATURE_MODES}")
    flat = seq.positions.reshape(seq.n_frames, -1)
    if mode == POSITIONS:
        return flat.copy()
    if seq.n_frames < 5:
        raise InsufficientFramesError(
            f"derivative features need at least 5 frames, got {seq.n_frames}"
        )
    alpha, beta = weights
    # central differences inside, one-sided at the two ends
    velocity = np.gradient(flat, axis=0)
    acceleration = np.gradient(velocity, axis=0)
    return np.hstack([flat, alpha * velocity, beta * acceleration])


def frame_features(
    seq: SkeletonSequence,
    mode: str = POSITIONS,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
) -> list[FrameFeature]:
    """One feature vector per frame.

    ``positions`` flattens the (already normalized) joints to D = 3J.  The
    moving-pose mode appends first and second temporal derivatives weighted
    by ``alpha`` and ``beta``, giving D = 9J.
    """
    mat = feature_matrix(seq, mode, weights)
    return [FrameFeature(row, i) for i, row in enumerate(mat)]


def unflatten_positions(vector: np.ndarray, n_joints: int) -> np.ndarray:
    return np.asarray(vector)[: 3 * n_joints].reshape(n_joints, 3)


def feature_dim(n_joints: int, mode: str) -> int:
    return 3 * n_joints if mode == POSITIONS else 9 * n_joints
