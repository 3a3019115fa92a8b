"""Evaluation configuration and seed derivation.

Every tolerance/window default lives here so reports can echo the exact
configuration they were produced with.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class EvalConfig:
    """Knobs shared across the evaluation pipeline."""

    seed: int = 0
    bin_width: float = 0.01            # normalized distance/depth bin step
    smoothing_window: int = 5          # rolling-mean window (odd, in bins)
    f_min: float = 0.05                # N; below this |Fz| a sample is excluded from sensitivity
    sensitivity_bins_per_radius: int = 10
    min_occupancy: int = 3             # samples needed for a bin to enter mu/sigma
    knn_k: int = 3
    sr_threshold_max: float = 1.0      # mm; curve evaluated on the 0.05 lattice up to here
    normalized_metrics: bool = True
    depth_step_mm: float = 0.1

    def sr_thresholds(self) -> list[float]:
        n = int(round(self.sr_threshold_max / 0.05))
        return [round(0.05 * i, 10) for i in range(1, n + 1)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "EvalConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def derive_seed(base_seed: int, stage: str) -> int:
    """Fan a single user-facing seed out to per-stage RNG streams.

    Uses sha256 of ``"{base_seed}:{stage}"`` so the derivation is stable
    across platforms and Python processes (``hash()`` is not).
    """
    digest = hashlib.sha256(f"{base_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
