"""Unsupervised uncertainty maps for video saliency volumes.

Estimators measure how far each saliency voxel diverges from the mean of
its spatiotemporal neighborhood. Ground truth comes from pooled eye
fixations, and estimates are scored by ROC/AUC and histogram distances.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateTruth,
    FormatError,
    InvalidEvent,
    InvalidGeometry,
    InvalidKernel,
    InvalidScenario,
    ParseError,
    SaliencyUncertaintyError,
)
from .estimators import (
    EstimatorConfig,
    EuDensityModel,
    Method,
    Padding,
    estimate,
    estimate_baseline_variance,
    estimate_eu,
    estimate_fusion,
    estimate_stu,
    estimate_su,
    estimate_tu,
)
from .evaluation import auc_pair_count_oracle, category_report, histogram_distances, roc_sweep
from .groundtruth import (
    FixationEvent,
    FixationEventLog,
    TrueUncertainty,
    aggregate_fixations,
    binarize_truth,
    fixation_map,
    resize_fixations,
    true_uncertainty,
)
from .kernels import KernelSpec, make_kernel, scale_matched_extents
from .volume import Kind, ScaleSpec, ScalingConfig, ScalingMode, Volume, block_resize, normalize, voxel_abs_diff, voxel_add
