"""True uncertainty from eye-fixation logs.

Fixations from all subjects are pooled into a count volume at source
resolution, block-summed to the saliency scale, normalized, and compared
voxel-wise with the normalized saliency volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidEvent, InvalidGeometry
from .volume import Kind, ScaleSpec, Volume, block_bounds, block_resize, normalize

__all__ = [
    "FixationEvent",
    "FixationEventLog",
    "TrueUncertainty",
    "aggregate_fixations",
    "resize_fixations",
    "fixation_map",
    "true_uncertainty",
    "binarize_truth",
]


@dataclass(frozen=True)
class FixationEvent:
    subject: str
    frame: int
    row: int
    col: int


@dataclass
class FixationEventLog:
    source_height: int
    source_width: int
    frame_count: int
    events: list[FixationEvent] = field(default_factory=list)

    @property
    def subjects(self) -> set[str]:
        return {e.subject for e in self.events}

    def __len__(self):
        return len(self.events)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.events:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        rows = np.fromiter((e.row for e in self.events), dtype=np.int64, count=len(self.events))
        cols = np.fromiter((e.col for e in self.events), dtype=np.int64, count=len(self.events))
        frames = np.fromiter((e.frame for e in self.events), dtype=np.int64, count=len(self.events))
        return rows, cols, frames


@dataclass(frozen=True)
class TrueUncertainty:
    utr: Volume
    t1: float | None = None
    binary: np.ndarray | None = None
    empty_frames: tuple[int, ...] = ()

    def __post_init__(self):
        if self.binary is not None:
            if self.binary.shape != self.utr.shape:
                raise InvalidGeometry("binary truth must match the continuous truth geometry")
            self.binary.flags.writeable = False


def aggregate_fixations(log: FixationEventLog) -> Volume:
    """Add one count per event at its source pixel; the result sums to ``len(log)``."""
    shape = (log.source_height, log.source_width, log.frame_count)
    rows, cols, frames = _checked_arrays(log)
    # float32 counts stay exact up to 2**24 fixations per voxel
    counts = np.zeros(shape, dtype=np.float32)
    np.add.at(counts, (rows, cols, frames), 1.0)
    return Volume(counts, Kind.FIXATION)


def _checked_arrays(log: FixationEventLog):
    shape = (log.source_height, log.source_width, log.frame_count)
    rows, cols, frames = log.as_arrays()
    bad = (
        (rows < 0) | (rows >= shape[0]) | (cols < 0) | (cols >= shape[1]) | (frames < 0) | (frames >= shape[2])
    )
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        e = log.events[idx]
        raise InvalidEvent(
            f"event {idx} ({e.subject}, frame {e.frame}, row {e.row}, col {e.col}) "
            f"outside {shape[0]}x{shape[1]}x{shape[2]}",
            index=idx,
        )
    return rows, cols, frames


def resize_fixations(counts: Volume, target: ScaleSpec | tuple[int, int]) -> Volume:
    """Block-sum counts onto the saliency grid so isolated fixations survive."""
    return block_resize(counts, target, "sum")


def fixation_map(log: FixationEventLog, target: ScaleSpec | tuple[int, int]) -> Volume:
    """Bin events straight onto the saliency grid.

    Same result as ``resize_fixations(aggregate_fixations(log), target)``
    without materializing the source-resolution volume.
    """
    th, tw = (target.height, target.width) if isinstance(target, ScaleSpec) else target
    if th > log.source_height or tw > log.source_width:
        raise InvalidGeometry(
            f"cannot map {log.source_height}x{log.source_width} fixations onto {th}x{tw}"
        )
    rows, cols, frames = _checked_arrays(log)
    m = np.searchsorted(block_bounds(log.source_height, th), rows, side="right") - 1
    n = np.searchsorted(block_bounds(log.source_width, tw), cols, side="right") - 1
    counts = np.zeros((th, tw, log.frame_count), dtype=np.float64)
    np.add.at(counts, (m, n, frames), 1.0)
    return Volume(counts.astype(np.float32), Kind.FIXATION)


def _normalize_per_frame(v: Volume) -> np.ndarray:
    x = v.data.astype(np.float64)
    peak = x.max(axis=(0, 1), keepdims=True)
    return np.divide(x, peak, out=np.zeros_like(x), where=peak > 0)


def true_uncertainty(s: Volume, fix_resized: Volume, per_frame: bool = False) -> TrueUncertainty:
    """``|normalize(S) - normalize(F)|`` voxel-wise.

    With ``per_frame`` the fixation map is scaled to unit peak frame by
    frame instead of over the whole volume. Frames without fixations are
    listed in ``empty_frames``; their truth is just the saliency.
    """
    if s.shape != fix_resized.shape:
        raise InvalidGeometry(f"saliency {s.shape} and fixation map {fix_resized.shape} differ")
    sal = normalize(s).data.astype(np.float64)
    if per_frame:
        fix = _normalize_per_frame(fix_resized)
    else:
        fix = normalize(Volume(fix_resized.data, Kind.FIXATION)).data.astype(np.float64)
    utr = np.abs(sal - fix)
    empty = tuple(int(k) for k in np.flatnonzero(fix_resized.data.sum(axis=(0, 1)) == 0))
    return TrueUncertainty(Volume(utr.astype(np.float32), Kind.TRUE_UNCERTAINTY), empty_frames=empty)


def binarize_truth(t: TrueUncertainty, t1: float) -> TrueUncertainty:
    """Mark voxels with ``utr >= t1`` as truly uncertain."""
    binary = t.utr.data >= np.float32(t1)
    return replace(t, t1=float(t1), binary=binary)
