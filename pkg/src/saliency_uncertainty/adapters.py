"""Converters from dataset-native files to SUV1 volumes and fixation CSV.

Datasets are not shipped; these only reshape what a user already has.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import FormatError, ParseError
from .groundtruth import FixationEvent, FixationEventLog
from .volume import Kind, ScaleSpec, Volume, block_resize

__all__ = ["import_frames", "convert_gaze_samples"]


def import_frames(paths, max_frames: int | None = None, scale: ScaleSpec | None = None) -> Volume:
    """Stack grayscale image files (sorted by name) into a saliency volume.

    8-bit images are divided by 255, anything wider by its own type range.
    With ``scale`` every frame is block-averaged onto that grid.
    """
    from PIL import Image

    paths = sorted(Path(p) for p in paths)
    if max_frames is not None:
        paths = paths[:max_frames]
    if not paths:
        raise FormatError("no frames to import")
    frames = []
    for p in paths:
        with Image.open(p) as im:
            arr = np.asarray(im if im.mode in ("L", "I;16", "I", "F") else im.convert("L"))
        if arr.ndim != 2:
            raise FormatError(f"{p}: expected a single-channel image, got shape {arr.shape}")
        if arr.dtype == np.uint8:
            arr = arr / 255.0
        elif arr.dtype.kind in "ui":
            arr = arr / float(np.iinfo(np.uint16).max if arr.max() > 255 else 255)
        arr = np.clip(arr.astype(np.float64), 0.0, 1.0)
        if frames and arr.shape != frames[0].shape:
            raise FormatError(f"{p}: frame size {arr.shape} differs from {frames[0].shape}")
        frames.append(arr)
    vol = Volume(np.stack(frames, axis=2).astype(np.float32), Kind.SALIENCY)
    if scale is not None:
        vol = block_resize(vol, scale, "mean")
    return vol


def convert_gaze_samples(
    sample_files: dict[str, str],
    source: tuple[int, int],
    sample_rate: float,
    fps: float,
    frames: int | None = None,
    status_column: int | None = 3,
    fixation_codes: tuple[int, ...] = (0,),
) -> tuple[FixationEventLog, int]:
    """Turn raw gaze-sample traces into one fixation event per (subject, frame, sample).

    Each file holds whitespace-separated rows ``x y [extra...]`` sampled at
    ``sample_rate`` Hz, ``x`` the column and ``y`` the row in source
    pixels. When ``status_column`` (1-based) is set, only rows whose status
    is in ``fixation_codes`` count as fixations. Samples outside the frame
    (tracker loss) are dropped; their number is returned alongside the log.
    """
    height, width = source
    events = []
    dropped = 0
    for subject, path in sorted(sample_files.items()):
        with open(path, encoding="utf-8") as fh:
            sample = -1
            for idx, line in enumerate(fh):
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                sample += 1
                try:
                    x, y = float(parts[0]), float(parts[1])
                    status = int(float(parts[status_column - 1])) if status_column else None
                except (ValueError, IndexError):
                    raise ParseError(f"{path}: cannot parse gaze sample {line.strip()!r}", line=idx + 1) from None
                if status is not None and status not in fixation_codes:
                    continue
                if not (math.isfinite(x) and math.isfinite(y)):
                    dropped += 1
                    continue
                row, col = int(math.floor(y)), int(math.floor(x))
                frame = int(math.floor(sample * fps / sample_rate))
                if not (0 <= row < height and 0 <= col < width) or (frames is not None and frame >= frames):
                    dropped += 1
                    continue
                events.append(FixationEvent(subject, frame, row, col))
    if frames is None:
        frames = max((e.frame for e in events), default=0) + 1
    return FixationEventLog(height, width, frames, events), dropped
