"""Synthesis hyperparameters and resource-budget plumbing."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from enum import Enum

from .scene import Canvas
from .semantics import COUNT_MAX


class AblationMode(Enum):
    """Switches that disable one guidance component each, for comparison runs."""

    NONE = "None"
    NO_CLUSTER = "NoCluster"
    NO_RANK = "NoRank"
    EXTRACT_RANDOM = "ExtractRandom"
    REPAIR_RANDOM = "RepairRandom"

    @classmethod
    def from_name(cls, name: str) -> "AblationMode":
        for mode in cls:
            if mode.value.lower() == name.lower():
                return mode
        raise ValueError(f"unknown ablation mode {name!r}; expected one of {[m.value for m in cls]}")


class ResourceBudgetError(RuntimeError):
    """Raised when a run exceeds its time or memory budget."""

    def __init__(self, kind: str, detail: str = ""):
        assert kind in ("timeout", "memory")
        super().__init__(f"{kind} budget exceeded{': ' + detail if detail else ''}")
        self.kind = kind


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthesis run.

    ``beam_width`` and ``finals`` accept None for "unlimited"; ``finals``
    defaults to the beam width so there is a single width knob. ``epsilon``
    may be 0, which reduces clustering to exact deduplication.
    """

    canvas: Canvas = Canvas(32, 32)
    epsilon: float = 0.2
    beam_width: int | None = 200
    c_max: int = 8
    repair_steps: int = 500
    finals: int | None = None
    tabu_capacity: int = 1000
    extract_samples: int = 10
    repair_attempts: int = 5
    transition_sample_rate: float = 0.5
    rewrite_sample_rate: float = 0.8
    seed: int = 0
    count_max: int = COUNT_MAX
    time_budget: float = 600.0
    memory_budget: int = 2 * 1024**3
    ablation: AblationMode = AblationMode.NONE

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.beam_width is not None and self.beam_width < 1:
            raise ValueError("beam width must be >= 1")
        if self.finals is not None and self.finals < 1:
            raise ValueError("finals must be >= 1")
        for name in ("c_max", "repair_steps", "tabu_capacity", "extract_samples", "repair_attempts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("transition_sample_rate", "rewrite_sample_rate"):
            rate = getattr(self, name)
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {rate}")
        if self.count_max < 2:
            raise ValueError("count_max must be >= 2")

    @property
    def k(self) -> int | None:
        """Number of final states; defaults to the beam width."""
        return self.finals if self.finals is not None else self.beam_width

    def with_(self, **changes) -> "SynthConfig":
        return replace(self, **changes)


def derive_seed(seed: int, *parts) -> int:
    """Stable 64-bit seed derived from a base seed and context labels."""
    h = hashlib.sha256(repr((seed, parts)).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


def derive_rng(seed: int, *parts) -> random.Random:
    return random.Random(derive_seed(seed, *parts))
