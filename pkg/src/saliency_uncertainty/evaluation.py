"""ROC/AUC scoring of uncertainty maps and histogram distances."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateTruth, InvalidGeometry
from .groundtruth import TrueUncertainty
from .volume import Volume

__all__ = [
    "RocPoint",
    "RocReport",
    "HistogramDistanceReport",
    "CategoryRow",
    "roc_sweep",
    "auc_pair_count_oracle",
    "histogram_distances",
    "category_report",
    "DEFAULT_STEPS",
    "DEFAULT_BINS",
    "DEFAULT_EPS",
]

DEFAULT_STEPS = 1024
DEFAULT_BINS = 64
DEFAULT_EPS = 1e-10


@dataclass(frozen=True)
class RocPoint:
    t2: float
    tdr: float
    fpr: float


@dataclass
class RocReport:
    t1: float
    sweep: list[RocPoint]
    auc: float
    estimator_tag: str = ""
    positives: int = 0
    negatives: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        # the sentinel threshold above every score is +inf, which JSON cannot hold
        d["sweep"] = [
            {"t2": p.t2 if math.isfinite(p.t2) else None, "tdr": p.tdr, "fpr": p.fpr} for p in self.sweep
        ]
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> RocReport:
        sweep = [RocPoint(math.inf if p["t2"] is None else p["t2"], p["tdr"], p["fpr"]) for p in d["sweep"]]
        return cls(d["t1"], sweep, d["auc"], d.get("estimator_tag", ""), d.get("positives", 0), d.get("negatives", 0))

    def write_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["t2", "fpr", "tdr"])
        for p in self.sweep:
            writer.writerow([repr(p.t2) if math.isfinite(p.t2) else "inf", repr(p.fpr), repr(p.tdr)])


def _labels(u: Volume, truth: TrueUncertainty) -> tuple[np.ndarray, np.ndarray]:
    if truth.binary is None:
        raise ValueError("truth must be binarized (binarize_truth) before scoring")
    if u.shape != truth.binary.shape:
        raise InvalidGeometry(f"estimate {u.shape} and truth {truth.binary.shape} differ")
    labels = truth.binary.ravel()
    pos = int(labels.sum())
    if pos == 0 or pos == labels.size:
        raise DegenerateTruth(
            f"binarized truth at t1={truth.t1} has {pos} positives out of {labels.size} voxels"
        )
    return u.data.ravel().astype(np.float64), labels


def roc_sweep(u: Volume, truth: TrueUncertainty, steps: int = DEFAULT_STEPS, tag: str = "") -> RocReport:
    """Sweep ``t2`` over ``steps`` uniform thresholds on [0, 1], predicting ``u >= t2``.

    A final sentinel at ``t2 = inf`` closes the curve at (0, 0). Counts come
    from one histogram of scores per class, so the cost is O(n + steps).
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    scores, labels = _labels(u, truth)
    grid = np.linspace(0.0, 1.0, steps)
    # idx = number of thresholds <= score, i.e. score >= grid[i] iff i < idx
    idx = np.searchsorted(grid, scores, side="right")
    pos_hist = np.bincount(idx[labels], minlength=steps + 1).astype(np.int64)
    neg_hist = np.bincount(idx[~labels], minlength=steps + 1).astype(np.int64)
    # tp[i] = #positives with idx > i
    tp = np.cumsum(pos_hist[::-1])[::-1][1:]
    fp = np.cumsum(neg_hist[::-1])[::-1][1:]
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    tdr = np.append(tp / n_pos, 0.0)
    fpr = np.append(fp / n_neg, 0.0)
    t2 = np.append(grid, math.inf)
    # trapezoid over FPR, which decreases along the sweep
    auc = float(np.sum((fpr[:-1] - fpr[1:]) * (tdr[:-1] + tdr[1:]) / 2.0))
    sweep = [RocPoint(float(a), float(b), float(c)) for a, b, c in zip(t2, tdr, fpr)]
    return RocReport(float(truth.t1), sweep, auc, tag, n_pos, n_neg)


def auc_pair_count_oracle(u: Volume, truth: TrueUncertainty) -> float:
    """Exhaustive Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly, ties 1/2.

    O(n_pos * n_neg) memory and time; meant for small test instances.
    """
    scores, labels = _labels(u, truth)
    pos = scores[labels]
    neg = scores[~labels]
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (pos.size * neg.size))


@dataclass(frozen=True)
class HistogramDistanceReport:
    bins: int
    js: float
    jd: float
    hi: float
    l2: float
    eps: float = DEFAULT_EPS
    log_base: str = "e"

    def to_dict(self) -> dict:
        return asdict(self)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def distances_from_histograms(p, q, eps: float = DEFAULT_EPS) -> HistogramDistanceReport:
    """JS, JD, HI and L2 between two histograms (normalized here to sum 1).

    JS uses the mixture ``m = (p + q) / 2`` and needs no smoothing; JD is
    the symmetrized KL divergence after adding ``eps`` to every bin.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("histograms must be 1-D of equal length")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)
    js = 0.5 * _kl(p, m) + 0.5 * _kl(q, m)
    ps = (p + eps) / (1.0 + eps * p.size)
    qs = (q + eps) / (1.0 + eps * q.size)
    jd = float(np.sum((ps - qs) * np.log(ps / qs)))
    hi = 1.0 - float(np.minimum(p, q).sum())
    l2 = float(np.sqrt(np.sum((p - q) ** 2)))
    return HistogramDistanceReport(p.size, max(js, 0.0), max(jd, 0.0), max(hi, 0.0), l2, eps)


def histogram_distances(u: Volume, utr: Volume, bins: int = DEFAULT_BINS, eps: float = DEFAULT_EPS) -> HistogramDistanceReport:
    """Compare value distributions of an estimate and the true uncertainty over [0, 1]."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if u.data.size == 0 or utr.data.size == 0:
        raise InvalidGeometry("cannot histogram an empty volume")
    edges = np.linspace(0.0, 1.0, bins + 1)
    p, _ = np.histogram(u.data.astype(np.float64), bins=edges)
    q, _ = np.histogram(utr.data.astype(np.float64), bins=edges)
    return distances_from_histograms(p, q, eps)


@dataclass
class CategoryRow:
    estimator: str
    category: str
    mean_auc: float
    videos: int
    best: bool = False
    worst: bool = False


def category_report(entries) -> list[CategoryRow]:
    """Mean AUC per (estimator, category) with per-category best/worst flags.

    ``entries`` holds ``(category, report)`` pairs, the estimator taken from
    ``report.estimator_tag``. Rows are sorted by category, then estimator.
    """
    acc: dict[tuple[str, str], list[float]] = defaultdict(list)
    for category, report in entries:
        acc[(report.estimator_tag, category)].append(report.auc)
    rows = [
        CategoryRow(est, cat, float(np.mean(aucs)), len(aucs)) for (est, cat), aucs in acc.items()
    ]
    rows.sort(key=lambda r: (r.category, r.estimator))
    by_category: dict[str, list[CategoryRow]] = defaultdict(list)
    for row in rows:
        by_category[row.category].append(row)
    for group in by_category.values():
        if len(group) < 2:
            continue
        hi = max(r.mean_auc for r in group)
        lo = min(r.mean_auc for r in group)
        for r in group:
            r.best = r.mean_auc == hi
            r.worst = r.mean_auc == lo
    return rows
