"""Volume container, scale geometry and voxel-wise primitives.

A volume is indexed ``[m, n, k]``: row, column, frame. Voxels are stored
as float32; sums over blocks are accumulated in float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometry

__all__ = [
    "Kind",
    "Volume",
    "ScaleSpec",
    "ScalingMode",
    "ScalingConfig",
    "SOURCE_SHAPE",
    "normalize",
    "block_resize",
    "block_bounds",
    "voxel_add",
    "voxel_abs_diff",
]

SOURCE_SHAPE = (480, 640)


class Kind(enum.IntEnum):
    SALIENCY = 0
    UNCERTAINTY = 1
    FIXATION = 2
    TRUE_UNCERTAINTY = 3


_UNIT_RANGE_KINDS = (Kind.SALIENCY, Kind.UNCERTAINTY, Kind.TRUE_UNCERTAINTY)


@dataclass(frozen=True, eq=False)
class Volume:
    """Immutable 3-D scalar field of shape (height, width, frames)."""

    data: np.ndarray
    kind: Kind = Kind.SALIENCY

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, copy=True)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.size == 0:
            raise InvalidGeometry(f"volume must be a non-empty 3-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite voxels")
        kind = Kind(self.kind)
        if kind in _UNIT_RANGE_KINDS:
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError(
                    f"{kind.name} volume must lie in [0, 1], got [{arr.min()}, {arr.max()}]"
                )
        elif arr.min() < 0.0:
            raise ValueError("fixation volume must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", kind)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> int:
        return self.data.shape[2]

    def with_data(self, data, kind: Kind | None = None) -> Volume:
        return Volume(data, self.kind if kind is None else kind)

    def __eq__(self, other):
        if not isinstance(other, Volume):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.data, other.data)

    def __repr__(self):
        m, n, k = self.shape
        return f"Volume({m}x{n}x{k}, kind={self.kind.name})"


@dataclass(frozen=True)
class ScaleSpec:
    """Target frame size of a saliency scale and its support region in the source frame.

    ``block_h``/``block_w`` are exact only when the source size divides
    evenly; otherwise block boundaries follow :func:`block_bounds`.
    """

    height: int
    width: int
    label: int = 0
    source_height: int = SOURCE_SHAPE[0]
    source_width: int = SOURCE_SHAPE[1]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidGeometry(f"scale must be at least 1x1, got {self.height}x{self.width}")
        if self.height > self.source_height or self.width > self.source_width:
            raise InvalidGeometry(
                f"scale {self.height}x{self.width} exceeds source "
                f"{self.source_height}x{self.source_width}"
            )

    @property
    def block_h(self) -> float:
        return self.source_height / self.height

    @property
    def block_w(self) -> float:
        return self.source_width / self.width

    @classmethod
    def preset(cls, label: int, source: tuple[int, int] = SOURCE_SHAPE) -> ScaleSpec:
        """Scale ``label`` 1, 2, 3 is 12x16, 24x32, 48x64 (40, 20, 10 px support at 480x640)."""
        if label not in (1, 2, 3):
            raise InvalidGeometry(f"unknown scale preset {label!r}")
        factor = 2 ** (label - 1)
        return cls(12 * factor, 16 * factor, label, source[0], source[1])

    @classmethod
    def parse(cls, text: str, source: tuple[int, int] = SOURCE_SHAPE) -> ScaleSpec:
        """Accept ``"1"``/``"2"``/``"3"`` or ``"HxW"``."""
        text = str(text).strip().lower()
        if text.isdigit():
            return cls.preset(int(text), source)
        try:
            h, w = (int(p) for p in text.split("x"))
        except ValueError:
            raise InvalidGeometry(f"cannot parse scale {text!r}; expected 1, 2, 3 or HxW") from None
        label = 0
        for d in (1, 2, 3):
            p = cls.preset(d, source)
            if (p.height, p.width) == (h, w):
                label = d
        return cls(h, w, label, source[0], source[1])


class ScalingMode(str, enum.Enum):
    FIXED_UNIT = "fixed"
    PER_VOLUME_MAX = "maxnorm"


@dataclass(frozen=True)
class ScalingConfig:
    """Input scaling ``alpha`` and output scaling ``gamma``.

    ``None`` means derived from the data: ``alpha = 1/max(S)``, and
    ``gamma = 1`` (``FIXED_UNIT``) or ``1/max|response|`` (``PER_VOLUME_MAX``).
    """

    alpha: float | None = None
    gamma: float | None = None
    mode: ScalingMode = ScalingMode.FIXED_UNIT

    def __post_init__(self):
        object.__setattr__(self, "mode", ScalingMode(self.mode))
        for name in ("alpha", "gamma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    def resolve_alpha(self, s_max: float) -> float:
        if self.alpha is not None:
            if self.mode is ScalingMode.PER_VOLUME_MAX and self.alpha * s_max > 1.0 + 1e-6:
                raise ValueError(f"alpha * max(S) = {self.alpha * s_max} exceeds 1")
            return float(self.alpha)
        return 1.0 / s_max if s_max > 0 else 1.0


def normalize(v: Volume) -> Volume:
    """Divide by the maximum voxel; an all-zero volume is returned unchanged."""
    peak = float(v.data.max())
    if peak <= 0.0 or peak == 1.0:
        return v
    out = v.data / np.float32(peak)
    # float32 division by the max can land one ulp off 1.0
    out[v.data == np.float32(peak)] = 1.0
    return Volume(np.minimum(out, 1.0), v.kind)


def block_bounds(src: int, dst: int) -> np.ndarray:
    """Start offsets ``floor(i * src / dst)`` for ``i = 0..dst``; the last entry is ``src``."""
    return (np.arange(dst + 1, dtype=np.int64) * src) // dst


def block_resize(src: Volume, target: ScaleSpec | tuple[int, int], reducer: str = "sum") -> Volume:
    """Reduce each frame onto a coarser grid by summing or averaging whole blocks.

    Block ``[m, n]`` covers source rows ``bounds_h[m]:bounds_h[m+1]`` and
    columns ``bounds_w[n]:bounds_w[n+1]``, so blocks tile the frame and
    ``sum`` conserves total mass.
    """
    if isinstance(target, ScaleSpec):
        th, tw = target.height, target.width
    else:
        th, tw = target
    m, n, _ = src.shape
    if th > m or tw > n or th < 1 or tw < 1:
        raise InvalidGeometry(f"cannot block-resize {m}x{n} to {th}x{tw}")
    if reducer not in ("sum", "mean"):
        raise ValueError(f"unknown reducer {reducer!r}")
    rows = block_bounds(m, th)
    cols = block_bounds(n, tw)
    acc = np.add.reduceat(src.data.astype(np.float64), rows[:-1], axis=0)
    acc = np.add.reduceat(acc, cols[:-1], axis=1)
    if reducer == "mean":
        area = np.diff(rows)[:, None] * np.diff(cols)[None, :]
        acc /= area[:, :, None]
    return Volume(acc.astype(np.float32), src.kind)


def _check_same_geometry(a: Volume, b: Volume):
    if a.shape != b.shape:
        raise InvalidGeometry(f"geometry mismatch: {a.shape} vs {b.shape}")


def voxel_add(a: Volume, b: Volume, policy: str = "clip") -> Volume:
    """Element-wise sum.

    ``policy`` decides what happens above 1: ``"clip"`` clamps,
    ``"normalize"`` divides by the peak of the sum, ``"none"`` keeps raw
    values (only valid for fixation counts).
    """
    _check_same_geometry(a, b)
    total = a.data.astype(np.float64) + b.data
    if policy == "normalize":
        peak = total.max()
        if peak > 0:
            total /= peak
    elif policy == "clip":
        if a.kind is not Kind.FIXATION:
            np.clip(total, 0.0, 1.0, out=total)
    elif policy != "none":
        raise ValueError(f"unknown add policy {policy!r}")
    return Volume(total.astype(np.float32), a.kind)


def voxel_abs_diff(a: Volume, b: Volume, kind: Kind | None = None) -> Volume:
    _check_same_geometry(a, b)
    diff = np.abs(a.data.astype(np.float64) - b.data)
    return Volume(diff.astype(np.float32), a.kind if kind is None else kind)
