"""Uncertainty estimators for saliency volumes.

The divergence estimators (STU, TU, SU) all reduce to

    U = gamma * | alpha * S * W |

with ``W`` a zero-sum averaging kernel. Since ``S * W = S - mean_W(S)`` the
convolution is evaluated as a voxel minus its separable box mean, which
costs ``L1 + L2 + L3`` passes instead of ``L1 * L2 * L3``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometry, InvalidKernel
from .kernels import KernelSpec
from .volume import Kind, ScalingConfig, ScalingMode, Volume

__all__ = [
    "Method",
    "Padding",
    "EstimatorConfig",
    "EuDensityModel",
    "box_mean",
    "estimate",
    "estimate_stu",
    "estimate_tu",
    "estimate_su",
    "estimate_fusion",
    "estimate_baseline_variance",
    "estimate_eu",
    "connectedness",
    "binary_entropy",
]


class Method(str, enum.Enum):
    STU = "stu"
    TU = "tu"
    SU = "su"
    FUSION = "fusion"
    BASELINE = "baseline"
    EU = "eu"


class Padding(str, enum.Enum):
    REPLICATE = "replicate"
    ZERO = "zero"


def _check_fits(shape, kernel: KernelSpec):
    for axis, (dim, ext) in enumerate(zip(shape, kernel.extents)):
        if ext > dim:
            raise InvalidGeometry(
                f"kernel {kernel} exceeds volume {shape[0]}x{shape[1]}x{shape[2]} along axis {axis}"
            )


def box_mean(x: np.ndarray, extents: tuple[int, int, int], padding: Padding = Padding.REPLICATE) -> np.ndarray:
    """Centered moving average over an odd ``L1 x L2 x L3`` window, in float64.

    Boundary voxels see a window padded by edge replication or zeros.
    """
    padding = Padding(padding)
    out = np.asarray(x, dtype=np.float64)
    for axis, length in enumerate(extents):
        if length == 1:
            continue
        half = length // 2
        n = out.shape[axis]
        widths = [(0, 0)] * out.ndim
        widths[axis] = (half, half)
        if padding is Padding.REPLICATE:
            padded = np.pad(out, widths, mode="edge")
        else:
            padded = np.pad(out, widths, mode="constant")
        index = [slice(None)] * out.ndim
        index[axis] = slice(0, n)
        acc = padded[tuple(index)].copy()
        for shift in range(1, length):
            index[axis] = slice(shift, shift + n)
            acc += padded[tuple(index)]
        out = acc
    size = extents[0] * extents[1] * extents[2]
    return out / size


def _scaled(response: np.ndarray, s_max: float, scaling: ScalingConfig) -> np.ndarray:
    # alpha is applied after the convolution (linearity) so constant inputs cancel exactly
    response = response * scaling.resolve_alpha(s_max)
    if scaling.gamma is not None:
        gamma = scaling.gamma
    elif scaling.mode is ScalingMode.PER_VOLUME_MAX:
        peak = response.max()
        gamma = 1.0 / peak if peak > 0 else 1.0
    else:
        gamma = 1.0
    if gamma != 1.0:
        response = response * gamma
    return np.clip(response, 0.0, 1.0)


def estimate_stu(
    s: Volume,
    kernel: KernelSpec,
    scaling: ScalingConfig = ScalingConfig(),
    padding: Padding = Padding.REPLICATE,
) -> Volume:
    """Spatiotemporal uncertainty: divergence of each voxel from its neighborhood mean."""
    _check_fits(s.shape, kernel)
    x = s.data.astype(np.float64)
    response = np.abs(x - box_mean(x, kernel.extents, padding))
    out = _scaled(response, float(s.data.max()), scaling)
    return Volume(out.astype(np.float32), Kind.UNCERTAINTY)


def estimate_tu(
    s: Volume,
    lt: int,
    scaling: ScalingConfig = ScalingConfig(),
    padding: Padding = Padding.REPLICATE,
) -> Volume:
    """Temporal uncertainty: each pixel trace against a centered window of ``lt`` frames."""
    return estimate_stu(s, KernelSpec(1, 1, lt), scaling, padding)


def estimate_su(
    s: Volume,
    ls1: int,
    ls2: int,
    scaling: ScalingConfig = ScalingConfig(),
    padding: Padding = Padding.REPLICATE,
) -> Volume:
    """Spatial uncertainty: every frame on its own against an ``ls1 x ls2`` window."""
    return estimate_stu(s, KernelSpec(ls1, ls2, 1), scaling, padding)


def estimate_fusion(
    s: Volume,
    lt: int,
    ls1: int,
    ls2: int,
    scaling: ScalingConfig = ScalingConfig(),
    padding: Padding = Padding.REPLICATE,
) -> Volume:
    """SU+TU: voxel-wise sum of the two maps, divided by its peak."""
    tu = estimate_tu(s, lt, scaling, padding)
    su = estimate_su(s, ls1, ls2, scaling, padding)
    total = tu.data.astype(np.float64) + su.data
    peak = total.max()
    if peak > 0:
        total /= peak
    return Volume(total.astype(np.float32), Kind.UNCERTAINTY)


def estimate_baseline_variance(
    s: Volume, kernel: KernelSpec, padding: Padding = Padding.REPLICATE
) -> Volume:
    """Population variance over the kernel window, divided by its peak."""
    _check_fits(s.shape, kernel)
    x = s.data.astype(np.float64)
    x = x - x.mean()
    mean = box_mean(x, kernel.extents, padding)
    var = box_mean(x * x, kernel.extents, padding) - mean * mean
    np.maximum(var, 0.0, out=var)
    peak = var.max()
    if peak > 0:
        var /= peak
    return Volume(var.astype(np.float32), Kind.UNCERTAINTY)


def binary_entropy(p) -> np.ndarray:
    """``H_b(p)`` in bits, with ``H_b(0) = H_b(1) = 0``."""
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return h


def connectedness(salient: np.ndarray) -> np.ndarray:
    """Number of salient voxels among the 26 neighbors; outside the volume counts as not salient."""
    ind = np.asarray(salient, dtype=np.int64)
    padded = np.pad(ind, 1, mode="constant")
    m, n, k = ind.shape
    count = np.zeros_like(ind)
    for di in range(3):
        for dj in range(3):
            for dk in range(3):
                count += padded[di : di + m, dj : dj + n, dk : dk + k]
    return count - ind


@dataclass
class EuDensityModel:
    """Lookup tables for the entropy-based competitor.

    ``p_distance`` is tabulated on ``distance_grid`` (voxels) and linearly
    interpolated; ``p_connectedness[c]`` covers ``c = 0..26``. When
    ``center`` is ``None`` the center of mass is taken per frame from the
    saliency volume.
    """

    distance_grid: np.ndarray
    p_distance: np.ndarray
    p_connectedness: np.ndarray
    salient_threshold: float = 0.5
    center: tuple[float, float] | None = None

    def __post_init__(self):
        self.distance_grid = np.asarray(self.distance_grid, dtype=np.float64)
        self.p_distance = np.asarray(self.p_distance, dtype=np.float64)
        self.p_connectedness = np.asarray(self.p_connectedness, dtype=np.float64)
        if self.distance_grid.shape != self.p_distance.shape or self.distance_grid.size < 2:
            raise ValueError("distance table needs matching grid/probability arrays of length >= 2")
        if np.any(np.diff(self.distance_grid) <= 0):
            raise ValueError("distance grid must be strictly increasing")
        if np.any(np.diff(self.p_distance) > 0):
            raise ValueError("p(s|d) must be non-increasing in d")
        if self.p_connectedness.shape != (27,):
            raise ValueError("p(s|c) needs 27 entries (c = 0..26)")
        for table in (self.p_distance, self.p_connectedness):
            if table.min() < 0 or table.max() > 1:
                raise ValueError("probabilities must lie in [0, 1]")
        if not 0 < self.salient_threshold < 1:
            raise ValueError("salient threshold must lie in (0, 1)")

    @classmethod
    def default(cls, height: int, width: int, samples: int = 256) -> EuDensityModel:
        """``p(s|d) = exp(-d / sigma)`` with sigma a quarter of the frame diagonal; ``p(s|c) = c / 26``."""
        diagonal = float(np.hypot(height, width))
        sigma = diagonal / 4.0
        grid = np.linspace(0.0, diagonal, samples)
        return cls(grid, np.exp(-grid / sigma), np.arange(27) / 26.0)

    def to_dict(self) -> dict:
        return {
            "distance_grid": self.distance_grid.tolist(),
            "p_distance": self.p_distance.tolist(),
            "p_connectedness": self.p_connectedness.tolist(),
            "salient_threshold": self.salient_threshold,
            "center": None if self.center is None else list(self.center),
        }

    @classmethod
    def from_dict(cls, d: dict) -> EuDensityModel:
        center = d.get("center")
        return cls(
            d["distance_grid"],
            d["p_distance"],
            d["p_connectedness"],
            d.get("salient_threshold", 0.5),
            None if center is None else tuple(center),
        )

    @classmethod
    def load(cls, path) -> EuDensityModel:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _frame_centers(x: np.ndarray) -> np.ndarray:
    m, n, k = x.shape
    rows = np.arange(m, dtype=np.float64)
    cols = np.arange(n, dtype=np.float64)
    mass = x.sum(axis=(0, 1))
    safe = np.where(mass > 0, mass, 1.0)
    rc = np.einsum("mnk,m->k", x, rows) / safe
    cc = np.einsum("mnk,n->k", x, cols) / safe
    # empty frames fall back to the geometric center
    rc = np.where(mass > 0, rc, (m - 1) / 2)
    cc = np.where(mass > 0, cc, (n - 1) / 2)
    return np.stack([rc, cc], axis=1)


def estimate_eu(s: Volume, model: EuDensityModel | None = None) -> Volume:
    """Mean of the binary entropies of ``p(s|d)`` and ``p(s|c)`` per voxel.

    Saliency is scaled to unit peak before thresholding for connectedness.
    """
    m, n, k = s.shape
    if model is None:
        model = EuDensityModel.default(m, n)
    x = s.data.astype(np.float64)
    peak = x.max()
    if peak > 0:
        x = x / peak
    if model.center is not None:
        centers = np.tile(np.asarray(model.center, dtype=np.float64), (k, 1))
    else:
        centers = _frame_centers(x)
    rows = np.arange(m, dtype=np.float64)[:, None, None]
    cols = np.arange(n, dtype=np.float64)[None, :, None]
    dist = np.hypot(rows - centers[None, None, :, 0], cols - centers[None, None, :, 1])
    p_d = np.interp(dist, model.distance_grid, model.p_distance)
    c = connectedness(x >= model.salient_threshold)
    p_c = model.p_connectedness[c]
    u = 0.5 * (binary_entropy(p_d) + binary_entropy(p_c))
    return Volume(np.clip(u, 0.0, 1.0).astype(np.float32), Kind.UNCERTAINTY)


@dataclass(frozen=True)
class EstimatorConfig:
    method: Method = Method.STU
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(5, 5, 5))
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    padding: Padding = Padding.REPLICATE
    eu_model: EuDensityModel | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "padding", Padding(self.padding))
        if self.method is Method.TU and not self.kernel.is_temporal:
            raise InvalidKernel(f"TU needs a 1x1xLt kernel, got {self.kernel}")
        if self.method is Method.SU and not self.kernel.is_spatial:
            raise InvalidKernel(f"SU needs an Ls1xLs2x1 kernel, got {self.kernel}")
        if self.method is Method.FUSION and (self.kernel.is_temporal or self.kernel.is_spatial):
            raise InvalidKernel(
                f"SU+TU takes the spatial extents and the temporal extent from one kernel, got {self.kernel}"
            )

    @property
    def tag(self) -> str:
        if self.method is Method.EU:
            return "eu"
        return f"{self.method.value}-{self.kernel}"


def estimate(s: Volume, cfg: EstimatorConfig) -> Volume:
    """Run the estimator selected by ``cfg.method``."""
    method = cfg.method
    if method in (Method.STU, Method.TU, Method.SU):
        return estimate_stu(s, cfg.kernel, cfg.scaling, cfg.padding)
    if method is Method.FUSION:
        k = cfg.kernel
        return estimate_fusion(s, k.l3, k.l1, k.l2, cfg.scaling, cfg.padding)
    if method is Method.BASELINE:
        return estimate_baseline_variance(s, cfg.kernel, cfg.padding)
    return estimate_eu(s, cfg.eu_model)
