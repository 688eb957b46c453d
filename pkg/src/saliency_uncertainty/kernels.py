"""Zero-sum averaging kernels.

A kernel of extents ``L1 x L2 x L3`` (rows, columns, frames) holds
``(R-1)/R`` at its center and ``-1/R`` elsewhere, with ``R = L1*L2*L3``.
Convolving with it gives the difference between a voxel and the mean of
its neighborhood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidKernel
from .volume import ScaleSpec

__all__ = ["KernelSpec", "make_kernel", "scale_matched_extents", "parse_extents"]


@dataclass(frozen=True)
class KernelSpec:
    l1: int
    l2: int
    l3: int

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InvalidKernel(f"{name} must be an integer, got {value!r}")
            if value < 1 or value % 2 == 0:
                raise InvalidKernel(f"{name} must be odd and positive, got {value}")
            object.__setattr__(self, name, int(value))
        if self.size == 1:
            raise InvalidKernel("a 1x1x1 kernel is degenerate")

    @property
    def extents(self) -> tuple[int, int, int]:
        return (self.l1, self.l2, self.l3)

    @property
    def size(self) -> int:
        return self.l1 * self.l2 * self.l3

    @property
    def center(self) -> tuple[int, int, int]:
        return ((self.l1 - 1) // 2, (self.l2 - 1) // 2, (self.l3 - 1) // 2)

    @property
    def coefficients(self) -> np.ndarray:
        r = self.size
        w = np.full(self.extents, -1.0 / r)
        w[self.center] = (r - 1) / r
        return w

    @property
    def is_temporal(self) -> bool:
        return self.l1 == 1 and self.l2 == 1

    @property
    def is_spatial(self) -> bool:
        return self.l3 == 1

    def __str__(self):
        return f"{self.l1}x{self.l2}x{self.l3}"


def make_kernel(l1: int, l2: int, l3: int) -> KernelSpec:
    return KernelSpec(l1, l2, l3)


def parse_extents(text: str) -> KernelSpec:
    """Parse ``"5x5x5"``; a single number ``"5"`` means a cube."""
    parts = str(text).lower().replace("×", "x").split("x")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise InvalidKernel(f"cannot parse kernel extents {text!r}") from None
    if len(values) == 1:
        values *= 3
    if len(values) != 3:
        raise InvalidKernel(f"kernel needs three extents, got {text!r}")
    return KernelSpec(*values)


def _round_odd(x: float) -> int:
    # nearest odd integer, ties upward
    return 2 * math.floor((x - 1) / 2 + 0.5) + 1


def scale_matched_extents(
    base: tuple[int, int, int] | KernelSpec, base_scale: ScaleSpec, target: ScaleSpec
) -> tuple[int, int, int]:
    """Spatial extents that cover the same source-frame support at ``target``.

    The temporal extent is left unchanged. With a 5x5x5 kernel at scale 1
    this yields 11x11x5 at scale 2 and 21x21x5 at scale 3.
    """
    l1, l2, l3 = base.extents if isinstance(base, KernelSpec) else base
    for value in (l1, l2, l3):
        if value < 1 or value % 2 == 0:
            raise InvalidKernel(f"base extents must be odd, got {(l1, l2, l3)}")
    rh = target.height / base_scale.height
    rw = target.width / base_scale.width
    return (_round_odd(rh * l1), _round_odd(rw * l2), l3)
