"""
Key-frame extraction from the spatial spread of the skeleton.

Each frame's joints are treated as J observations in 3-D; the largest
eigenvalue of their covariance measures how stretched the body is.  The
resulting per-frame profile is Gaussian-smoothed and frames that are strict
local maxima or minima of the smoothed profile become key frames.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, SchemaError
from .skeleton import Frame, SkeletonSequence

MAX = "max"
MIN = "min"


def frame_covariance(frame: Frame | np.ndarray) -> np.ndarray:
    """Population covariance (divide by J) of the joint positions, a 3x3 matrix."""
    joints = frame.joints if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    return covariance_series(joints[None])[0]


def covariance_series(positions: np.ndarray) -> np.ndarray:
    """Per-frame covariances for an (F, J, 3) array, shape (F, 3, 3)."""
    pos = np.asarray(positions, dtype=np.float64)
    centered = pos - pos.mean(axis=1, keepdims=True)
    cov = np.einsum("fji,fjk->fik", centered, centered) / pos.shape[1]
    # exact symmetry; einsum can differ in the last bit
    return 0.5 * (cov + np.swapaxes(cov, 1, 2))


def largest_eigenvalue(c: np.ndarray) -> float:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (3, 3):
        raise SchemaError(f"expected a 3x3 matrix, got shape {c.shape}")
    return float(largest_eigenvalues(c[None])[0])


def largest_eigenvalues(covs: np.ndarray) -> np.ndarray:
    covs = np.asarray(covs, dtype=np.float64)
    if not np.isfinite(covs).all():
        raise NumericError("covariance matrix has non-finite entries")
    top = np.linalg.eigvalsh(covs)[..., -1]
    return np.maximum(top, 0.0)


def gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"smoothing window must be odd and >= 1, got {window}")
    if not sigma > 0:
        raise ConfigError(f"smoothing sigma must be positive, got {sigma}")
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-0.5 * (offsets / sigma) ** 2)
    return w / w.sum()


def gaussian_smooth(raw, window: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Moving Gaussian filter with the kernel renormalized over in-range taps.

    Near the ends the taps that fall outside the sequence are dropped and the
    remaining weights rescaled to sum to one, so a constant input stays
    constant and the output has the input's length.
    """
    x = np.asarray(raw, dtype=np.float64)
    w = gaussian_kernel(window, sigma)
    if x.size == 0:
        return x.copy()
    half = window // 2
    padded = np.pad(x, half)
    mask = np.pad(np.ones_like(x), half)
    num = np.correlate(padded, w, mode="valid")
    den = np.correlate(mask, w, mode="valid")
    return num / den


@dataclass(frozen=True, eq=False)
class EigenProfile:
    raw: np.ndarray
    smoothed: np.ndarray
    window: int = 5
    sigma: float = 1.0

    def __post_init__(self):
        if len(self.raw) != len(self.smoothed):
            raise SchemaError("raw and smoothed profiles differ in length")

    def __len__(self):
        return len(self.raw)


@dataclass(frozen=True)
class KeyFrameSet:
    indices: tuple[int, ...] = ()
    kinds: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if len(self.indices) != len(self.kinds):
            raise SchemaError("indices and kinds must have equal length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise SchemaError("key-frame indices must be strictly increasing")
        if any(k not in (MAX, MIN) for k in self.kinds):
            raise SchemaError(f"kinds must be {MAX!r} or {MIN!r}")

    def __len__(self):
        return len(self.indices)


def eigen_profile(seq: SkeletonSequence, window: int = 5, sigma: float = 1.0) -> EigenProfile:
    raw = largest_eigenvalues(covariance_series(seq.positions))
    return EigenProfile(raw, gaussian_smooth(raw, window, sigma), window, sigma)


def detect_keyframes(profile: EigenProfile | np.ndarray) -> KeyFrameSet:
    """Interior frames that are strict local extrema of the smoothed profile.

    Plateaus never qualify and neither do the first and last frames, which
    lack one of the two neighbours.
    """
    lam = profile.smoothed if isinstance(profile, EigenProfile) else np.asarray(profile, float)
    if lam.size < 3:
        return KeyFrameSet()
    mid, prev, nxt = lam[1:-1], lam[:-2], lam[2:]
    is_max = (mid > nxt) & (mid > prev)
    is_min = (mid < nxt) & (mid < prev)
    idx = np.flatnonzero(is_max | is_min)
    kinds = tuple(MAX if is_max[i] else MIN for i in idx)
    return KeyFrameSet(tuple(idx + 1), kinds)


def keyframes_with_fallback(profile: EigenProfile) -> KeyFrameSet:
    """Like :func:`detect_keyframes` but never empty.

    A profile without strict interior extrema yields its global argmax and
    argmin instead (one frame if they coincide); these may be boundary frames.
    """
    kf = detect_keyframes(profile)
    if len(kf) or len(profile) == 0:
        return kf
    lam = profile.smoothed
    hi, lo = int(np.argmax(lam)), int(np.argmin(lam))
    if hi == lo:
        return KeyFrameSet((hi,), (MAX,))
    pairs = sorted([(hi, MAX), (lo, MIN)])
    return KeyFrameSet(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def extract_keyframes(
    seq: SkeletonSequence, window: int = 5, sigma: float = 1.0
) -> tuple[EigenProfile, KeyFrameSet]:
    profile = eigen_profile(seq, window, sigma)
    return profile, keyframes_with_fallback(profile)


def keyframe_debug_csv(profile: EigenProfile, keyframes: KeyFrameSet) -> str:
    kinds = dict(zip(keyframes.indices, keyframes.kinds))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "raw_lambda", "smoothed_lambda", "is_keyframe", "kind"])
    for f, (r, s) in enumerate(zip(profile.raw, profile.smoothed)):
        writer.writerow([f, repr(float(r)), repr(float(s)), int(f in kinds), kinds.get(f, "")])
    return buf.getvalue()
