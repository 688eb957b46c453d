"""Batch evaluation: videos x estimators x T1 values, run in worker processes."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .estimators import EstimatorConfig, EuDensityModel, Method, estimate
from .evaluation import DEFAULT_STEPS, RocReport, category_report, roc_sweep
from .groundtruth import binarize_truth, fixation_map, true_uncertainty, TrueUncertainty
from .io import atomic_write, load_toml, read_fixation_csv, read_volume, write_json
from .kernels import KernelSpec
from .volume import Kind, ScaleSpec, ScalingConfig

log = logging.getLogger(__name__)

__all__ = ["VideoSpec", "EstimatorSpec", "SweepConfig", "SweepResult", "run_sweep", "evaluate_video"]


@dataclass(frozen=True)
class VideoSpec:
    tag: str
    category: str
    saliency: str
    fixations: str = ""
    truth: str = ""


@dataclass(frozen=True)
class EstimatorSpec:
    method: str
    kernel: tuple[int, int, int] = (5, 5, 5)
    eu_model: str = ""

    def build(self, scaling: ScalingConfig, padding: str) -> EstimatorConfig:
        model = EuDensityModel.load(self.eu_model) if self.eu_model else None
        return EstimatorConfig(Method(self.method), KernelSpec(*self.kernel), scaling, padding, model)


@dataclass
class SweepConfig:
    videos: list[VideoSpec]
    estimators: list[EstimatorSpec]
    t1: list[float] = field(default_factory=lambda: [0.55])
    steps: int = DEFAULT_STEPS
    scale: str = "1"
    source: tuple[int, int] = (480, 640)
    padding: str = "replicate"
    scaling: str = "fixed"
    per_frame_truth: bool = False
    workers: int = 1
    report: str = ""
    category_csv: str = ""

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> SweepConfig:
        base = Path(base) if base is not None else Path(".")

        def resolve(p: str) -> str:
            return str(base / p) if p and not Path(p).is_absolute() else p

        try:
            videos = [
                VideoSpec(
                    str(v["tag"]),
                    str(v.get("category", "all")),
                    resolve(v["saliency"]),
                    resolve(v.get("fixations", "")),
                    resolve(v.get("truth", "")),
                )
                for v in d.get("videos", [])
            ]
            estimators = [
                EstimatorSpec(e["method"], tuple(e.get("kernel", (5, 5, 5))), resolve(e.get("eu_model", "")))
                for e in d.get("estimators", [])
            ]
        except KeyError as exc:
            raise ConfigError(f"missing key {exc}") from None
        if not videos or not estimators:
            raise ConfigError("sweep needs at least one [[videos]] and one [[estimators]] entry")
        for v in videos:
            if not (v.fixations or v.truth):
                raise ConfigError(f"video {v.tag!r} needs 'fixations' or 'truth'")
        t1 = d.get("t1", [0.55])
        if isinstance(t1, (int, float)):
            t1 = [t1]
        return cls(
            videos,
            estimators,
            [float(x) for x in t1],
            int(d.get("steps", DEFAULT_STEPS)),
            str(d.get("scale", "1")),
            tuple(d.get("source", (480, 640))),
            d.get("padding", "replicate"),
            d.get("scaling", "fixed"),
            bool(d.get("per_frame_truth", False)),
            int(d.get("workers", 1)),
            resolve(d.get("report", "")),
            resolve(d.get("category_csv", "")),
        )

    @classmethod
    def load(cls, path) -> SweepConfig:
        return cls.from_dict(load_toml(path), Path(path).parent)


def _continuous_truth(video: VideoSpec, cfg: SweepConfig):
    sal = read_volume(video.saliency)
    if video.truth:
        utr = read_volume(video.truth)
        return sal, TrueUncertainty(utr.with_data(utr.data, Kind.TRUE_UNCERTAINTY))
    scale = ScaleSpec.parse(cfg.scale, cfg.source)
    fix_log = read_fixation_csv(video.fixations, cfg.source, sal.depth)
    fix = fixation_map(fix_log, scale)
    return sal, true_uncertainty(sal, fix, per_frame=cfg.per_frame_truth)


def evaluate_video(video: VideoSpec, cfg: SweepConfig) -> list[tuple[str, str, RocReport]]:
    """All (estimator, t1) ROC reports for one video as ``(tag, category, report)``."""
    sal, truth = _continuous_truth(video, cfg)
    scaling = ScalingConfig(mode=cfg.scaling)
    out = []
    for spec in cfg.estimators:
        est_cfg = spec.build(scaling, cfg.padding)
        u = estimate(sal, est_cfg)
        for t1 in cfg.t1:
            report = roc_sweep(u, binarize_truth(truth, t1), cfg.steps, est_cfg.tag)
            out.append((video.tag, video.category, report))
    return out


def _worker(args):
    video, cfg = args
    return evaluate_video(video, cfg)


@dataclass
class SweepResult:
    reports: list[tuple[str, str, RocReport]]

    def category_rows(self):
        rows = []
        for t1 in sorted({r.t1 for _, _, r in self.reports}):
            for row in category_report([(cat, r) for _, cat, r in self.reports if r.t1 == t1]):
                rows.append((t1, row))
        return rows

    def to_dict(self) -> dict:
        return {
            "videos": [
                {"tag": tag, "category": cat, "estimator": r.estimator_tag, "t1": r.t1, "auc": r.auc}
                for tag, cat, r in self.reports
            ],
            "categories": [
                {
                    "t1": t1,
                    "estimator": row.estimator,
                    "category": row.category,
                    "mean_auc": row.mean_auc,
                    "videos": row.videos,
                    "best": row.best,
                    "worst": row.worst,
                }
                for t1, row in self.category_rows()
            ],
        }

    def write_category_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["t1", "category", "estimator", "mean_auc", "videos", "best", "worst"])
        for t1, row in self.category_rows():
            writer.writerow([t1, row.category, row.estimator, repr(row.mean_auc), row.videos, int(row.best), int(row.worst)])


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> SweepResult:
    """Evaluate every video, in parallel when ``workers > 1``; results sorted by video tag."""
    workers = cfg.workers if workers is None else workers
    jobs = [(v, cfg) for v in cfg.videos]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_worker, jobs))
    else:
        chunks = [_worker(j) for j in jobs]
    reports = [item for chunk in chunks for item in chunk]
    reports.sort(key=lambda item: (item[0], item[2].estimator_tag, item[2].t1))
    result = SweepResult(reports)
    if cfg.report:
        write_json(result.to_dict(), cfg.report)
    if cfg.category_csv:
        with atomic_write(cfg.category_csv, "w") as fh:
            result.write_category_csv(fh)
    return result
