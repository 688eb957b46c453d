"""Synthetic moving-disk videos with known saliency, fixations and planted errors.

Positions are in voxel-index coordinates of the saliency grid: voxel
``(m, n)`` has its center at ``(m, n)``. Fixations are emitted at the
source resolution so the full block-sum path gets exercised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InvalidScenario
from .estimators import Padding, box_mean
from .groundtruth import FixationEvent, FixationEventLog, TrueUncertainty
from .volume import SOURCE_SHAPE, Kind, Volume

__all__ = ["SynthScenario", "SynthResult", "generate_scenario", "preset", "PRESETS", "circular_path", "static_path"]

Trajectory = Callable[[int], tuple[float, float]]


def circular_path(height: int, width: int, frames: int, turns: float = 1.0) -> Trajectory:
    """Disk circles the frame center at 30% of the frame size."""
    cy, cx = (height - 1) / 2, (width - 1) / 2
    ry, rx = 0.3 * height, 0.3 * width

    def path(k: int) -> tuple[float, float]:
        phase = 2 * math.pi * turns * k / frames
        return cy + ry * math.sin(phase), cx + rx * math.cos(phase)

    return path


def static_path(row: float, col: float) -> Trajectory:
    return lambda k: (row, col)


@dataclass
class SynthScenario:
    height: int = 24
    width: int = 32
    frames: int = 300
    trajectory: Trajectory | None = None
    disk_radius: float = 1.0
    blur: int = 3
    subjects: int = 8
    fixation_jitter: float = 0.0
    corrupt_frame_fraction: float = 0.0
    corrupt_voxel_fraction: float = 0.1
    source: tuple[int, int] = SOURCE_SHAPE
    seed: int = 0

    def __post_init__(self):
        if self.subjects < 1:
            raise InvalidScenario("need at least one subject")
        if min(self.height, self.width, self.frames) < 1:
            raise InvalidScenario("scenario geometry must be positive")
        if self.source[0] < self.height or self.source[1] < self.width:
            raise InvalidScenario("source frame smaller than the saliency grid")
        if not 0 <= self.corrupt_frame_fraction <= 1 or not 0 <= self.corrupt_voxel_fraction <= 1:
            raise InvalidScenario("corruption fractions must lie in [0, 1]")
        if self.trajectory is None:
            self.trajectory = circular_path(self.height, self.width, self.frames)


@dataclass
class SynthResult:
    saliency: Volume
    oracle_saliency: Volume
    log: FixationEventLog
    corruption_mask: np.ndarray
    scenario: SynthScenario = field(repr=False)

    def planted_truth(self) -> TrueUncertainty:
        """Binary truth marking exactly the corrupted voxels."""
        mask = self.corruption_mask
        return TrueUncertainty(
            Volume(mask.astype(np.float32), Kind.TRUE_UNCERTAINTY), t1=0.5, binary=mask.copy()
        )


def _centers(s: SynthScenario) -> np.ndarray:
    centers = np.array([s.trajectory(k) for k in range(s.frames)], dtype=np.float64)
    bad = (
        (centers[:, 0] < 0) | (centers[:, 0] > s.height - 1) | (centers[:, 1] < 0) | (centers[:, 1] > s.width - 1)
    )
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InvalidScenario(f"trajectory leaves the {s.height}x{s.width} frame at frame {k}: {tuple(centers[k])}")
    return centers


def generate_scenario(s: SynthScenario) -> SynthResult:
    rng = np.random.default_rng(s.seed)
    centers = _centers(s)
    rows = np.arange(s.height, dtype=np.float64)[:, None, None]
    cols = np.arange(s.width, dtype=np.float64)[None, :, None]
    d2 = (rows - centers[None, None, :, 0]) ** 2 + (cols - centers[None, None, :, 1]) ** 2
    disk = (d2 <= s.disk_radius**2).astype(np.float64)
    if s.blur > 1:
        disk = box_mean(disk, (s.blur, s.blur, 1), Padding.ZERO)
    peak = disk.max()
    oracle = disk / peak if peak > 0 else disk

    mask = np.zeros(oracle.shape, dtype=bool)
    n_bad = int(round(s.corrupt_frame_fraction * s.frames))
    if n_bad:
        bad_frames = np.sort(rng.choice(s.frames, size=n_bad, replace=False))
        per_frame = rng.random((s.height, s.width, n_bad)) < s.corrupt_voxel_fraction
        mask[:, :, bad_frames] = per_frame
    saliency = oracle.copy()
    saliency[mask] = rng.random(int(mask.sum()))

    bh = s.source[0] / s.height
    bw = s.source[1] / s.width
    subjects = [f"s{i + 1}" for i in range(s.subjects)]
    events = []
    for k in range(s.frames):
        r, c = centers[k]
        if s.fixation_jitter > 0:
            jr = rng.normal(0.0, s.fixation_jitter, size=s.subjects)
            jc = rng.normal(0.0, s.fixation_jitter, size=s.subjects)
        else:
            jr = jc = np.zeros(s.subjects)
        for subject, dr, dc in zip(subjects, jr, jc):
            i = min(max(int(math.floor((r + dr + 0.5) * bh)), 0), s.source[0] - 1)
            j = min(max(int(math.floor((c + dc + 0.5) * bw)), 0), s.source[1] - 1)
            events.append(FixationEvent(subject, k, i, j))
    log = FixationEventLog(s.source[0], s.source[1], s.frames, events)
    return SynthResult(
        Volume(saliency.astype(np.float32), Kind.SALIENCY),
        Volume(oracle.astype(np.float32), Kind.SALIENCY),
        log,
        mask,
        s,
    )


PRESETS = {
    "saccadetest": dict(corrupt_frame_fraction=0.1),
    "saccadetest-clean": dict(),
    "static": dict(),
}


def preset(name: str, seed: int = 0, **overrides) -> SynthScenario:
    """Named scenarios: ``saccadetest`` (10% of frames corrupted), ``saccadetest-clean``, ``static``."""
    if name not in PRESETS:
        raise InvalidScenario(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name], seed=seed)
    params.update(overrides)
    scenario = SynthScenario(**params)
    if name == "static":
        scenario = replace(scenario, trajectory=static_path((scenario.height - 1) / 2, (scenario.width - 1) / 2))
    return scenario
