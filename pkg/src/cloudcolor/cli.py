"""Batch command-line front end.

Subcommands: `correct` (run one method on a pair, write corrected PLY +
JSON report), `compare` (table of CMD/CPSNR per method), `synth` (write
a seeded synthetic pair plus truth.json), and `metrics` (score an
already-corrected pair).  Reports are schema-stable: every report
carries the same top-level keys and concepts that do not apply to a
method are null.

Outputs are deterministic: identical inputs, flags, and seeds produce
byte-identical files.  Wall-clock timing is therefore only recorded
when --timing is passed; the runtime_ms key stays null otherwise.  The
CLOUDCOLOR_WORKERS environment variable sets the query thread count and
never changes results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .baselines import agl_correct, hm_correct, knn_correct, nn_correct
from .cloud import ColorPointCloud
from .correction import PipelineConfig, run_pipeline
from .errors import CloudColorError
from .metrics import cpsnr as metric_cpsnr
from .metrics import cmd as metric_cmd
from .ply_io import read_ply, write_ply
from .spatial import SpatialIndex
from .synth import SynthSpec, generate_pair

METHODS = ("ours", "nn", "knn", "hm", "agl")

_TRUTH_JSON_KEYS = (
    "points", "overlap", "bias", "gain", "noise", "seed", "spacing", "jitter", "texture",
    "source_count", "target_count", "overlap_count", "extension_count",
)


def _workers_from_env() -> int:
    raw = os.environ.get("CLOUDCOLOR_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise CloudColorError(f"CLOUDCOLOR_WORKERS must be an integer, got {raw!r}")
    if workers < 1:
        raise CloudColorError("CLOUDCOLOR_WORKERS must be >= 1")
    return workers


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def _thresholds_to_json(thresholds) -> dict | None:
    if thresholds is None:
        return None
    if thresholds.kind == "two_level":
        return {"kind": "two_level", "t_b": thresholds.t_b}
    return {"kind": "three_level", "t1": thresholds.t1, "t2": thresholds.t2}


def _config_from_args(args, workers: int) -> PipelineConfig:
    force = "bi" if args.force_bi else ("tri" if args.force_tri else None)
    sigma_d = args.sigma_d if args.sigma_d == "auto" else float(args.sigma_d)
    return PipelineConfig(
        k=args.k,
        sigma_d=sigma_d,
        sigma_c=args.sigma_c,
        delta_e_max=args.delta_e_max,
        t_r=args.t_r,
        t_d=args.t_d,
        bins=args.bins,
        force_partition=force,
        even_weights=args.even_weights,
        kbi_only=args.kbi_only,
        jkhe_only=args.jkhe_only,
        sequential_groups=args.sequential_groups,
        squared_distances=args.squared_distances,
        pooled_cpsnr=args.pooled_cpsnr,
        workers=workers,
    )


def _run_method(method: str, source: ColorPointCloud, target: ColorPointCloud,
                args, workers: int) -> tuple[ColorPointCloud, dict]:
    """Correct with one method and build its schema-stable report dict."""
    start = time.perf_counter()
    if method == "ours":
        config = _config_from_args(args, workers)
        corrected, rep = run_pipeline(source, target, config)
        c, m, d = rep.group_sizes
        report = {
            "method": method,
            "params": rep.params,
            "overlap_rate": rep.overlap_rate,
            "partition": rep.partition,
            "thresholds": _thresholds_to_json(rep.thresholds),
            "group_sizes": {"close": c, "moderate": m, "distant": d},
            "cmd": rep.metrics["cmd"],
            "cpsnr": rep.metrics["cpsnr"],
            "runtime_ms": None,
        }
    else:
        if method == "nn":
            corrected = nn_correct(source, target, workers=workers)
            params = {}
        elif method == "knn":
            corrected = knn_correct(source, target, args.k, workers=workers)
            params = {"k": args.k}
        elif method == "hm":
            corrected = hm_correct(source, target)
            params = {}
        elif method == "agl":
            corrected = agl_correct(source, target)
            params = {"stage": "global"}  # no reproducible local stage exists
        else:
            raise CloudColorError(f"unknown method {method!r}")
        params["pooled_cpsnr"] = args.pooled_cpsnr
        index = SpatialIndex(source)
        report = {
            "method": method,
            "params": params,
            "overlap_rate": None,
            "partition": None,
            "thresholds": None,
            "group_sizes": None,
            "cmd": metric_cmd(corrected, source),
            "cpsnr": metric_cpsnr(corrected, source, index,
                                  pooled=args.pooled_cpsnr, workers=workers),
            "runtime_ms": None,
        }
    if args.timing:
        report["runtime_ms"] = int(round((time.perf_counter() - start) * 1000.0))
    return corrected, report


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=8, help="neighbor count (default 8)")
    p.add_argument("--sigma-d", default="auto",
                   help="distance deviation in meters, or 'auto' (default)")
    p.add_argument("--sigma-c", type=float, default=25.0,
                   help="color difference deviation (default 25)")
    p.add_argument("--delta-e-max", type=float, default=20.0,
                   help="CIE76 validity threshold (default 20)")
    p.add_argument("--t-r", type=float, default=0.45,
                   help="overlap rate threshold selecting bi vs tri (default 0.45)")
    p.add_argument("--t-d", type=float, default=0.003,
                   help="vote distance in meters (default 0.003)")
    p.add_argument("--bins", type=int, default=1024,
                   help="histogram bins for distance thresholding (default 1024)")
    force = p.add_mutually_exclusive_group()
    force.add_argument("--force-bi", action="store_true",
                       help="skip the overlap vote and partition into two groups")
    force.add_argument("--force-tri", action="store_true",
                       help="skip the overlap vote and partition into three groups")
    only = p.add_mutually_exclusive_group()
    only.add_argument("--kbi-only", action="store_true",
                      help="ablation: correct Close and Moderate groups with KBI")
    only.add_argument("--jkhe-only", action="store_true",
                      help="ablation: correct Close and Moderate groups with JKHE")
    p.add_argument("--even-weights", action="store_true",
                   help="ablation: fixed w1 = w2 = 0.5 in JKHE")
    p.add_argument("--sequential-groups", action="store_true",
                   help="later groups see colors already corrected by earlier groups")
    p.add_argument("--squared-distances", action="store_true",
                   help="threshold squared distances instead of Euclidean")
    p.add_argument("--pooled-cpsnr", action="store_true",
                   help="report 10*log10(peak^2 / mean CMSE) instead of mean per-point PSNR")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime_ms in reports (breaks byte-identical reruns)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudcolor",
        description="Color consistency correction for aligned color point clouds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="correct one pair with one method")
    p.add_argument("source", help="aligned source PLY (color reference)")
    p.add_argument("target", help="target PLY to correct")
    p.add_argument("--method", choices=METHODS, default="ours")
    p.add_argument("--output", required=True, help="corrected PLY path")
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--output-format", choices=("ascii", "binary_little_endian"),
                   default="binary_little_endian")
    _add_pipeline_flags(p)

    p = sub.add_parser("compare", help="run several methods and tabulate CMD/CPSNR")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--methods", default=",".join(METHODS),
                   help="comma-separated method list (default: all)")
    p.add_argument("--report", required=True, help="JSON table path")
    _add_pipeline_flags(p)

    p = sub.add_parser("synth", help="generate a seeded synthetic pair")
    p.add_argument("--points", type=int, default=5000)
    p.add_argument("--overlap", type=float, default=0.7)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", type=float, default=SynthSpec.spacing)
    p.add_argument("--jitter", type=float, default=SynthSpec.jitter)
    p.add_argument("--texture", type=float, default=SynthSpec.texture)
    p.add_argument("--source", required=True, help="output source PLY path")
    p.add_argument("--target", required=True, help="output target PLY path")
    p.add_argument("--truth", required=True, help="output truth JSON path")

    p = sub.add_parser("metrics", help="score a corrected pair")
    p.add_argument("corrected", help="corrected target PLY")
    p.add_argument("source", help="aligned source PLY (color reference)")
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--pooled-cpsnr", action="store_true")
    return parser


def _cmd_correct(args, workers: int, outputs: list) -> int:
    source = read_ply(args.source)
    target = read_ply(args.target)
    corrected, report = _run_method(args.method, source, target, args, workers)
    outputs.append(args.output)
    write_ply(corrected, args.output, args.output_format)
    outputs.append(args.report)
    _dump_json(report, args.report)
    print(f"{args.method}: cmd={report['cmd']:.4f} cpsnr={report['cpsnr']:.4f} "
          f"partition={report['partition']}")
    return 0


def _cmd_compare(args, workers: int, outputs: list) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise CloudColorError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    source = read_ply(args.source)
    target = read_ply(args.target)
    rows = []
    for m in methods:
        _, report = _run_method(m, source, target, args, workers)
        rows.append(report)
    outputs.append(args.report)
    _dump_json({"methods": rows}, args.report)
    header = f"{'method':<8} {'cmd':>12} {'cpsnr':>12}"
    print(header)
    print("-" * len(header))
    for row in rows:
        print(f"{row['method']:<8} {row['cmd']:>12.4f} {row['cpsnr']:>12.4f}")
    return 0


def _cmd_synth(args, outputs: list) -> int:
    spec = SynthSpec(points=args.points, overlap=args.overlap, bias=args.bias,
                     gain=args.gain, noise=args.noise, seed=args.seed,
                     spacing=args.spacing, jitter=args.jitter, texture=args.texture)
    source, target, truth = generate_pair(spec)
    outputs.append(args.source)
    write_ply(source, args.source)
    outputs.append(args.target)
    write_ply(target, args.target)
    outputs.append(args.truth)
    _dump_json({k: truth[k] for k in _TRUTH_JSON_KEYS}, args.truth)
    print(f"synth: wrote {len(source)} source and {len(target)} target points "
          f"(overlap {args.overlap}, seed {args.seed})")
    return 0


def _cmd_metrics(args, workers: int, outputs: list) -> int:
    corrected = read_ply(args.corrected)
    source = read_ply(args.source)
    index = SpatialIndex(source)
    report = {
        "cmd": metric_cmd(corrected, source),
        "cpsnr": metric_cpsnr(corrected, source, index,
                              pooled=args.pooled_cpsnr, workers=workers),
        "pooled_cpsnr": args.pooled_cpsnr,
        "count": len(corrected),
    }
    outputs.append(args.report)
    _dump_json(report, args.report)
    print(f"cmd={report['cmd']:.4f} cpsnr={report['cpsnr']:.4f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    outputs: list = []  # paths created by this run, removed on failure
    try:
        workers = _workers_from_env()
        if args.command == "correct":
            return _cmd_correct(args, workers, outputs)
        if args.command == "compare":
            return _cmd_compare(args, workers, outputs)
        if args.command == "synth":
            return _cmd_synth(args, outputs)
        if args.command == "metrics":
            return _cmd_metrics(args, workers, outputs)
        raise CloudColorError(f"unknown command {args.command!r}")
    except (CloudColorError, OSError) as e:
        for path in outputs:
            try:
                if os.path.exists(path):
                    os.remove(path)
            except OSError:
                pass
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
