"""Command-line entry point: ``saliency-uncertainty <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import InvalidGeometry, SaliencyUncertaintyError
from .estimators import EstimatorConfig, EuDensityModel, Method, Padding, estimate
from .evaluation import histogram_distances, roc_sweep
from .groundtruth import TrueUncertainty, binarize_truth, fixation_map, true_uncertainty
from .io import (
    atomic_write,
    decode_volume,
    read_fixation_csv,
    read_header,
    read_volume,
    write_fixation_csv,
    write_json,
    write_volume,
)
from .kernels import KernelSpec, parse_extents
from .volume import Kind, ScaleSpec, ScalingConfig

log = logging.getLogger("saliency_uncertainty")


def _pair(text: str) -> tuple[int, int]:
    try:
        h, w = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    return h, w


def _kernel_for(method: Method, text: str) -> KernelSpec:
    parts = text.lower().split("x")
    if len(parts) == 1:
        length = int(parts[0])
        if method is Method.TU:
            return KernelSpec(1, 1, length)
        if method is Method.SU:
            return KernelSpec(length, length, 1)
    elif len(parts) == 2 and method is Method.SU:
        return KernelSpec(int(parts[0]), int(parts[1]), 1)
    return parse_extents(text)


def _read_with_label(path):
    blob = Path(path).read_bytes()
    return decode_volume(blob)


def cmd_estimate(args):
    sal, label = _read_with_label(args.input)
    method = Method(args.method)
    kernel = _kernel_for(method, args.kernel)
    model = EuDensityModel.load(args.eu_model) if args.eu_model else None
    cfg = EstimatorConfig(method, kernel, ScalingConfig(mode=args.scaling), Padding(args.padding), model)
    u = estimate(sal, cfg)
    write_volume(u, args.out, label)
    log.info("%s: %s -> %s (max %.4g)", cfg.tag, args.input, args.out, float(u.data.max()))


def cmd_truth(args):
    sal, _ = _read_with_label(args.saliency)
    scale = ScaleSpec.parse(args.scale, args.source)
    if (scale.height, scale.width) != (sal.height, sal.width):
        raise InvalidGeometry(
            f"saliency is {sal.height}x{sal.width} but scale {args.scale} is {scale.height}x{scale.width}"
        )
    fix_log = read_fixation_csv(args.fixations, args.source, sal.depth)
    fix = fixation_map(fix_log, scale)
    truth = true_uncertainty(sal, fix, per_frame=args.per_frame)
    write_volume(truth.utr, args.out, scale.label)
    if truth.empty_frames:
        log.warning("%d frame(s) without fixations; their truth is the saliency alone", len(truth.empty_frames))
    if args.report:
        write_json(
            {
                "events": len(fix_log),
                "subjects": len(fix_log.subjects),
                "frames": sal.depth,
                "empty_frames": list(truth.empty_frames),
                "mean_utr": float(truth.utr.data.mean()),
            },
            args.report,
        )


def _truth_from_file(path) -> TrueUncertainty:
    utr = read_volume(path)
    return TrueUncertainty(utr.with_data(utr.data, Kind.TRUE_UNCERTAINTY))


def cmd_evaluate(args):
    u = read_volume(args.estimate)
    truth = binarize_truth(_truth_from_file(args.truth), args.t1)
    report = roc_sweep(u, truth, args.steps, args.tag or Path(args.estimate).stem)
    write_json(report.to_dict(), args.report)
    if args.roc_csv:
        with atomic_write(args.roc_csv, "w") as fh:
            report.write_csv(fh)
    print(f"AUC {report.auc:.6f} (t1={report.t1}, {report.positives} positive / {report.negatives} negative voxels)")


def cmd_distances(args):
    u = read_volume(args.estimate)
    utr = read_volume(args.truth)
    if u.shape != utr.shape:
        raise InvalidGeometry(f"estimate {u.shape} and truth {utr.shape} differ")
    report = histogram_distances(u, utr, args.bins)
    write_json(report.to_dict(), args.report)
    print(f"JS {report.js:.6g}  JD {report.jd:.6g}  HI {report.hi:.6g}  L2 {report.l2:.6g}")


def cmd_entropy(args):
    from .entropy import entropy_analysis, write_entropy_csv

    scale = ScaleSpec.parse(args.scale, args.source)
    reports = []
    for path in args.fixations:
        fix_log = read_fixation_csv(path, args.source, args.frames)
        fix = fixation_map(fix_log, scale)
        reports.append(
            entropy_analysis(
                fix,
                args.levels,
                tuple(parse_extents(args.neighborhood).extents),
                seed=args.seed,
                include_center=args.include_center,
                video_tag=Path(path).stem,
            )
        )
    with atomic_write(args.report, "w") as fh:
        write_entropy_csv(reports, fh)
    for r in reports:
        print(f"{r.video_tag}: H(X)={r.h_x:.4f} H(X|Z)={r.h_x_given_z:.4f} H(X|n)={r.h_x_given_noise:.4f} bits")


def cmd_synth(args):
    from .synth import generate_scenario, preset

    overrides = {}
    if args.frames:
        overrides["frames"] = args.frames
    if args.jitter is not None:
        overrides["fixation_jitter"] = args.jitter
    scenario = preset(args.preset, seed=args.seed, **overrides)
    result = generate_scenario(scenario)
    out = Path(args.out_dir)
    scale = ScaleSpec.parse(f"{scenario.height}x{scenario.width}", scenario.source)
    write_volume(result.saliency, out / "saliency.suv", scale.label)
    write_volume(result.oracle_saliency, out / "oracle.suv", scale.label)
    write_volume(result.planted_truth().utr, out / "planted_truth.suv", scale.label)
    write_fixation_csv(result.log, out / "fixations.csv")
    write_json(
        {
            "preset": args.preset,
            "seed": args.seed,
            "geometry": [scenario.height, scenario.width, scenario.frames],
            "source": list(scenario.source),
            "scale": f"{scenario.height}x{scenario.width}",
            "subjects": scenario.subjects,
            "fixation_jitter": scenario.fixation_jitter,
            "corrupted_voxels": int(result.corruption_mask.sum()),
        },
        out / "scenario.json",
    )
    print(f"wrote {args.preset} scenario to {out}")


def cmd_sweep(args):
    from .sweep import SweepConfig, run_sweep

    cfg = SweepConfig.load(args.config)
    result = run_sweep(cfg, args.workers)
    for t1, row in result.category_rows():
        flag = " best" if row.best else (" worst" if row.worst else "")
        print(f"t1={t1} {row.category:>16} {row.estimator:>16} {row.mean_auc:.4f}{flag}")


def cmd_import_frames(args):
    from .adapters import import_frames

    scale = ScaleSpec.parse(args.scale, _image_size(args.frames[0])) if args.scale else None
    vol = import_frames(args.frames, args.max_frames, scale)
    write_volume(vol, args.out, scale.label if scale else 0)
    print(f"imported {vol.depth} frames of {vol.height}x{vol.width}")


def _image_size(path) -> tuple[int, int]:
    from PIL import Image

    with Image.open(path) as im:
        return im.height, im.width


def cmd_convert_gaze(args):
    from .adapters import convert_gaze_samples

    files = {}
    for item in args.samples:
        subject, _, path = item.partition("=")
        if not path:
            subject, path = Path(item).stem, item
        files[subject] = path
    fix_log, dropped = convert_gaze_samples(
        files, args.source, args.sample_rate, args.fps, args.frames, args.status_column or None, tuple(args.fixation_code)
    )
    write_fixation_csv(fix_log, args.out)
    print(f"{len(fix_log)} fixation events from {len(files)} subject(s); {dropped} samples dropped")


def cmd_info(args):
    kind, (m, n, k), label = read_header(args.volume)
    v = read_volume(args.volume)
    print(json.dumps({"kind": kind.name, "shape": [m, n, k], "scale_label": label,
                      "min": float(v.data.min()), "max": float(v.data.max()), "mean": float(v.data.mean())}))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saliency-uncertainty", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="uncertainty volume from a saliency volume")
    e.add_argument("--method", choices=[m.value for m in Method], default="stu")
    e.add_argument("--kernel", default="5x5x5", help="L1xL2xL3; a single L means 1x1xL for tu, LxLx1 for su")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--padding", choices=["replicate", "zero"], default="replicate")
    e.add_argument("--scaling", choices=["fixed", "maxnorm"], default="fixed")
    e.add_argument("--eu-model", help="JSON density tables for --method eu")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("truth", help="true uncertainty from saliency and fixations")
    t.add_argument("--saliency", required=True)
    t.add_argument("--fixations", required=True)
    t.add_argument("--scale", default="1", help="1, 2, 3 or HxW")
    t.add_argument("--source", type=_pair, default=(480, 640), help="source frame HxW of the fixation log")
    t.add_argument("--per-frame", action="store_true", help="normalize fixation maps frame by frame")
    t.add_argument("--out", required=True)
    t.add_argument("--report", help="optional JSON summary (flags frames without fixations)")
    t.set_defaults(func=cmd_truth)

    ev = sub.add_parser("evaluate", help="ROC/AUC of an estimate against true uncertainty")
    ev.add_argument("--estimate", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--t1", type=float, default=0.55)
    ev.add_argument("--steps", type=int, default=1024)
    ev.add_argument("--report", required=True)
    ev.add_argument("--roc-csv")
    ev.add_argument("--tag", default="")
    ev.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("distances", help="histogram distances JS/JD/HI/L2")
    d.add_argument("--estimate", required=True)
    d.add_argument("--truth", required=True)
    d.add_argument("--bins", type=int, default=64)
    d.add_argument("--report", required=True)
    d.set_defaults(func=cmd_distances)

    en = sub.add_parser("entropy", help="H(X), H(X|Z), H(X|n) of fixation maps")
    en.add_argument("--fixations", nargs="+", required=True)
    en.add_argument("--scale", default="1")
    en.add_argument("--source", type=_pair, default=(480, 640))
    en.add_argument("--frames", type=int)
    en.add_argument("--levels", type=int, default=256)
    en.add_argument("--neighborhood", default="3x3x3")
    en.add_argument("--include-center", action="store_true")
    en.add_argument("--seed", type=int, default=0)
    en.add_argument("--report", required=True)
    en.set_defaults(func=cmd_entropy)

    s = sub.add_parser("synth", help="synthetic moving-disk scenario")
    s.add_argument("--preset", default="saccadetest")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--frames", type=int)
    s.add_argument("--jitter", type=float)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    sw = sub.add_parser("sweep", help="batch run from a TOML config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--workers", type=int)
    sw.set_defaults(func=cmd_sweep)

    im = sub.add_parser("import-frames", help="grayscale image sequence to SUV1")
    im.add_argument("frames", nargs="+")
    im.add_argument("--max-frames", type=int)
    im.add_argument("--scale", help="block-average to 1, 2, 3 or HxW")
    im.add_argument("--out", required=True)
    im.set_defaults(func=cmd_import_frames)

    cg = sub.add_parser("convert-gaze", help="raw gaze-sample traces to fixation CSV")
    cg.add_argument("samples", nargs="+", help="[subject=]path per subject")
    cg.add_argument("--source", type=_pair, default=(480, 640))
    cg.add_argument("--sample-rate", type=float, required=True)
    cg.add_argument("--fps", type=float, required=True)
    cg.add_argument("--frames", type=int)
    cg.add_argument("--status-column", type=int, default=3, help="1-based; 0 disables status filtering")
    cg.add_argument("--fixation-code", type=int, action="append", default=None)
    cg.add_argument("--out", required=True)
    cg.set_defaults(func=cmd_convert_gaze)

    i = sub.add_parser("info", help="print SUV1 header and value range")
    i.add_argument("volume")
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "fixation_code", "unset") is None:
        args.fixation_code = [0]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except SaliencyUncertaintyError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except OSError as exc:
        print(f"error[E_IO]: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error[E_VALUE]: {exc}", file=sys.stderr)
        return 11
    return 0


if __name__ == "__main__":
    sys.exit(main())
