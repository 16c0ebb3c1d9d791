"""
Pipeline configuration.

Config files are flat ``key = value`` text; ``#`` starts a comment.  Keys
match the field names of :class:`PipelineConfig`; tuples are written
comma-separated and booleans as true/false.  Example::

    # 5x as many visual candidates as semantic poses
    k_multiplier = 5
    kmeans_seed = 7
    use_null = true
    scale_pair = 0, 1
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import fixtures
from .errors import ConfigError
from .skeleton import FEATURE_MODES, POSITIONS


@dataclass(frozen=True)
class PipelineConfig:
    # skeleton features
    feature_mode: str = POSITIONS
    alpha: float = 0.75
    beta: float = 0.6
    root_joint: int = fixtures.ROOT_JOINT
    scale_pair: tuple = fixtures.SCALE_PAIR
    # key frames
    smooth_window: int = 5
    smooth_sigma: float = 1.0
    # codebook; k wins over k_multiplier when set
    k: Optional[int] = None
    k_multiplier: int = 5
    kmeans_seed: int = 0
    kmeans_iters: int = 100
    # translation model
    em_tol: float = 1e-6
    em_max_iters: int = 100
    use_null: bool = True
    # decoding
    length_factor: bool = True
    decode_null: bool = True
    # evaluation
    split: str = "odd_even"
    sweep_multipliers: tuple = (1, 2, 3, 4, 5, 6, 7)
    ground_truth: Optional[str] = None
    # synthetic data
    synth_subjects: int = 10
    synth_instances: int = 10
    synth_noise: float = 0.02
    synth_interp_frames: int = 12
    synth_hold_frames: int = 5
    synth_seed: int = 0
    synth_classes: tuple = ()
    synth_heldout: tuple = ()
    synth_composites: tuple = ()

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(f"feature_mode must be one of {FEATURE_MODES}")
        if len(self.scale_pair) != 2:
            raise ConfigError("scale_pair needs exactly two joint indices")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ConfigError("smooth_window must be odd and >= 1")
        if not self.smooth_sigma > 0:
            raise ConfigError("smooth_sigma must be positive")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.k_multiplier < 1 or any(m < 1 for m in self.sweep_multipliers):
            raise ConfigError("k multipliers must be >= 1")
        if self.kmeans_iters < 1 or self.em_max_iters < 0 or self.em_tol < 0:
            raise ConfigError("iteration counts and tolerances must be non-negative")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("descriptor weights must be non-negative")
        if self.synth_noise < 0:
            raise ConfigError("synth_noise must be non-negative")
        for c in self.synth_composites:
            parts = c.split("+")
            if len(parts) != 2 or not all(parts):
                raise ConfigError(f"composites are written 'classA+classB', got {c!r}")

    def resolve_k(self, n_symbols: int) -> int:
        k = self.k if self.k is not None else self.k_multiplier * n_symbols
        if k < n_symbols:
            raise ConfigError(f"k={k} is smaller than the number of semantic poses ({n_symbols})")
        return k

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _convert(name: str, default, raw: str):
    if name == "k" or name == "ground_truth":
        if raw.lower() in ("", "none", "null"):
            return None
        return int(raw) if name == "k" else raw
    if isinstance(default, bool):
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ValueError(f"expected true/false, got {raw!r}") from None
    if isinstance(default, tuple):
        items = [p.strip() for p in raw.replace(";", ",").split(",") if p.strip()]
        if name in ("scale_pair", "sweep_multipliers"):
            return tuple(int(p) for p in items)
        return tuple(items)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>") -> PipelineConfig:
    defaults = PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, getattr(defaults, key), raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return PipelineConfig(**values)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))
