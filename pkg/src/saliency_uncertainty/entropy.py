"""Predictability of fixation-map voxels from their neighborhood.

Compares the entropy of quantized fixation voxels ``H(X)`` with the
entropy conditioned on the quantized neighborhood mean ``H(X|Z)`` and on
an independent uniform variable ``H(X|n)``. Entropies are in bits.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidGeometry
from .volume import Kind, Volume, normalize

__all__ = [
    "EntropyReport",
    "quantize",
    "entropy_bits",
    "conditional_entropy",
    "conditional_entropy_oracle",
    "neighborhood_mean",
    "entropy_analysis",
    "write_entropy_csv",
]


@dataclass(frozen=True)
class EntropyReport:
    video_tag: str
    h_x: float
    h_x_given_z: float
    h_x_given_noise: float
    quant_levels: int
    samples: int

    @property
    def reduction_ratio(self) -> float:
        if self.h_x <= 0:
            return 0.0
        return 1.0 - self.h_x_given_z / self.h_x

    def to_row(self) -> dict:
        row = asdict(self)
        row["reduction_ratio"] = self.reduction_ratio
        return row


def quantize(x: np.ndarray, levels: int) -> np.ndarray:
    """Map [0, 1] onto ``levels`` uniform bins, 1.0 landing in the top bin."""
    q = np.floor(np.asarray(x, dtype=np.float64) * levels).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def entropy_bits(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    counts = counts[counts > 0]
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(-np.sum(p * np.log2(p)))


def conditional_entropy(x: np.ndarray, z: np.ndarray, levels_x: int, levels_z: int) -> tuple[float, float]:
    """Return ``(H(X), H(X|Z))`` from the empirical joint distribution of integer symbols."""
    x = np.asarray(x, dtype=np.int64).ravel()
    z = np.asarray(z, dtype=np.int64).ravel()
    joint = np.bincount(z * levels_x + x, minlength=levels_x * levels_z)
    h_x = entropy_bits(np.bincount(x, minlength=levels_x))
    h_z = entropy_bits(np.bincount(z, minlength=levels_z))
    h_xz = entropy_bits(joint)
    return h_x, max(h_xz - h_z, 0.0)


def conditional_entropy_oracle(samples_x, samples_z) -> float:
    """``H(X|Z) = sum_z p(z) H(X | Z=z)`` from an explicit frequency table."""
    pairs = Counter(zip(samples_x, samples_z))
    z_counts = Counter(samples_z)
    n = len(samples_x)
    h = 0.0
    for (_, zv), c in pairs.items():
        h -= (c / n) * math.log2(c / z_counts[zv])
    return h


def neighborhood_mean(x: np.ndarray, extents=(3, 3, 3), include_center: bool = False) -> np.ndarray:
    """Mean over the window around each interior voxel ("valid" region only)."""
    l1, l2, l3 = extents
    m, n, k = x.shape
    om, on, ok = m - l1 + 1, n - l2 + 1, k - l3 + 1
    total = np.zeros((om, on, ok), dtype=np.float64)
    for a in range(l1):
        for b in range(l2):
            for c in range(l3):
                total += x[a : a + om, b : b + on, c : c + ok]
    count = l1 * l2 * l3
    if not include_center:
        h1, h2, h3 = l1 // 2, l2 // 2, l3 // 2
        total -= x[h1 : h1 + om, h2 : h2 + on, h3 : h3 + ok]
        count -= 1
    return total / count


def entropy_analysis(
    fix: Volume,
    quant_levels: int = 256,
    extents: tuple[int, int, int] = (3, 3, 3),
    seed: int = 0,
    noise_draws: int = 10,
    include_center: bool = False,
    video_tag: str = "",
) -> EntropyReport:
    """Entropy of quantized fixation voxels, alone and given their neighborhood mean.

    Only voxels whose whole window lies inside the volume are sampled.
    ``H(X|n)`` is the mean over ``noise_draws`` seeded draws of an
    independent uniform symbol per voxel.
    """
    if quant_levels < 2:
        raise ValueError("quant_levels must be >= 2")
    for l in extents:
        if l < 1 or l % 2 == 0:
            raise InvalidGeometry(f"neighborhood extents must be odd, got {extents}")
    if any(l > d for l, d in zip(extents, fix.shape)):
        raise InvalidGeometry(f"volume {fix.shape} smaller than neighborhood {extents}")
    if include_center is False and extents == (1, 1, 1):
        raise InvalidGeometry("a 1x1x1 neighborhood without its center is empty")
    x_full = normalize(Volume(fix.data, Kind.FIXATION)).data.astype(np.float64)
    h1, h2, h3 = (l // 2 for l in extents)
    m, n, k = x_full.shape
    centre = x_full[h1 : m - h1, h2 : n - h2, h3 : k - h3]
    z_val = neighborhood_mean(x_full, extents, include_center)
    x = quantize(centre, quant_levels).ravel()
    z = quantize(z_val, quant_levels).ravel()
    h_x, h_x_given_z = conditional_entropy(x, z, quant_levels, quant_levels)
    rng = np.random.default_rng(seed)
    noisy = [
        conditional_entropy(x, rng.integers(0, quant_levels, size=x.size), quant_levels, quant_levels)[1]
        for _ in range(noise_draws)
    ]
    return EntropyReport(video_tag, h_x, h_x_given_z, float(np.mean(noisy)), quant_levels, int(x.size))


def write_entropy_csv(reports, fh):
    writer = csv.writer(fh)
    writer.writerow(["tag", "h_x", "h_x_given_z", "h_x_given_noise", "reduction_ratio"])
    for r in sorted(reports, key=lambda r: r.video_tag):
        writer.writerow([r.video_tag, repr(r.h_x), repr(r.h_x_given_z), repr(r.h_x_given_noise), repr(r.reduction_ratio)])
