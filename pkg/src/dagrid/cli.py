"""Command-line driver: demos, property suites, and benchmarks.

Every subcommand prints its results as a single JSON line on stdout and
keeps diagnostics on stderr.  Exit codes: 0 success, 2 usage error
(unknown flags or invalid flag values), 1 runtime failure (missing files,
parse errors, failed suites, checksum mismatches).

With --report-dir the command additionally renders matplotlib figures and
CSV tables into the given directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as dio
from .accumulate import GridSet, SamplingGrid, accumulate, slice_grid
from .checks import GRAD_OPS, adjoint_trials, run_grad_trials
from .circular import CircularConfig, circular_accumulate, detect_circle_center, sobel_gradient_field
from .kernels import KernelKind
from .parallel import set_num_threads
from .polar import (
    PolarConfig,
    polar_accumulate,
    polar_roundtrip_filter,
    polar_sample,
    sector_variance,
)
from .tensor import box_filter, gaussian_filter

__all__ = ["run", "main", "UsageError"]


class UsageError(ValueError):
    """Invalid flag values or combinations; maps to exit code 2."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0.0:
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = _nonneg_float(text)
    if value == 0.0:
        raise argparse.ArgumentTypeError(f"expected a number > 0, got {text}")
    return value


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'row,col', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'row,col', got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagrid",
        description="Directed accumulator grids: polar/circular demos, checks, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: env DAGRID_THREADS or 1)")
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (PCG64)")
    common.add_argument("--report-dir", default=None,
                        help="directory for matplotlib figures and CSV tables")
    common.add_argument("--metrics-out", default=None,
                        help="also write the JSON metrics line to this file")

    polar = argparse.ArgumentParser(add_help=False)
    polar.add_argument("--hr", type=_positive_int, default=64, help="radial bins H_r")
    polar.add_argument("--wpsi", type=_positive_int, default=64, help="angular bins W_psi")
    polar.add_argument("--kernel", choices=["nearest", "bilinear"], default="bilinear")
    polar.add_argument("--center", type=_float_pair, default=None, help="pole as 'row,col'")
    polar.add_argument("--sr", type=_positive_float, default=None, help="override radial scale")
    polar.add_argument("--stheta", type=_positive_float, default=None, help="override angular scale")
    polar.add_argument("--wrap", type=_bool, default=True, help="wrap angular bins (true/false)")
    polar.add_argument("--cover-corners", type=_bool, default=False,
                       help="stretch radial range to the image diagonal")

    p = sub.add_parser("polar-roundtrip", parents=[common, polar],
                       help="accumulate to polar space, optionally filter, slice back")
    p.add_argument("--in", dest="input", required=True, help="input image (.pgm or .dgt)")
    p.add_argument("--filter", choices=["none", "box", "gaussian"], default="none")
    p.add_argument("--radius", type=_positive_int, default=1, help="box filter radius")
    p.add_argument("--sigma", type=_positive_float, default=1.0, help="gaussian filter sigma")
    p.add_argument("--out", default=None, help="output image (.pgm or .dgt)")
    p.add_argument("--normalize", type=_bool, default=False, help="normalize PGM output range")
    p.add_argument("--sweep", type=_int_list, default=None,
                   help="also report MSE per square grid size, e.g. 32,64,128,224")

    p = sub.add_parser("polar-filter", parents=[common, polar],
                       help="compare grid-space filtering against image-space filtering")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--filter", choices=["box", "gaussian"], required=True)
    p.add_argument("--radius", type=_positive_int, default=1)
    p.add_argument("--sigma", type=_positive_float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--normalize", type=_bool, default=False)

    p = sub.add_parser("polar-sample", parents=[common, polar],
                       help="classical grid sampling of an image at the polar lattice")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--normalize", type=_bool, default=True)

    p = sub.add_parser("circle-detect", parents=[common],
                       help="circular accumulation and center detection")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--in", dest="input", default=None, help="input image (.pgm or .dgt)")
    src.add_argument("--ring", type=_positive_float, default=None, help="ring phantom radius")
    src.add_argument("--disk", type=_positive_float, default=None, help="disk phantom radius")
    p.add_argument("--size", type=_positive_int, default=64, help="phantom image size")
    p.add_argument("--thickness", type=_positive_float, default=2.0, help="ring thickness")
    p.add_argument("--noise", type=_nonneg_float, default=0.0, help="phantom noise sigma")
    p.add_argument("--center", type=_float_pair, default=None, help="phantom center 'row,col'")
    p.add_argument("--radii", type=_int_list, default=None,
                   help="radius bands, e.g. '8' or '15,10,5' (default: max(H,W))")
    p.add_argument("--symmetric", type=_bool, default=True)
    p.add_argument("--epsilon", type=_positive_float, default=1e-8)
    p.add_argument("--kernel", choices=["nearest", "bilinear"], default="bilinear")
    p.add_argument("--band", type=int, default=0, help="band index for detection")
    p.add_argument("--out", default=None, help="write the detected band's v_s (.pgm or .dgt)")

    p = sub.add_parser("gradcheck", parents=[common],
                       help="finite-difference verification of the backward passes")
    p.add_argument("--op", choices=sorted(GRAD_OPS) + ["all"], default="all")
    p.add_argument("--kernel", choices=["nearest", "bilinear"], default="bilinear")
    p.add_argument("--trials", type=_positive_int, default=20)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--step", type=_positive_float, default=1e-5)

    p = sub.add_parser("adjoint-suite", parents=[common],
                       help="inner-product adjoint identity over random instances")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--max-size", type=_positive_int, default=64)

    p = sub.add_parser("bench", parents=[common],
                       help="wall time and output checksums across worker counts")
    p.add_argument("--sizes", type=_int_list, default=[64, 224, 512])
    p.add_argument("--workers", type=_int_list, default=[1, 2, 4])
    p.add_argument("--repeats", type=_positive_int, default=3)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic phantom")
    p.add_argument("--kind", choices=["disk", "ring", "checker", "smooth-blob"], required=True)
    p.add_argument("--size", type=_positive_int, default=None, help="square size shorthand")
    p.add_argument("--height", type=_positive_int, default=None)
    p.add_argument("--width", type=_positive_int, default=None)
    p.add_argument("--radius", type=_nonneg_float, default=None)
    p.add_argument("--thickness", type=_positive_float, default=2.0)
    p.add_argument("--cell", type=_positive_int, default=8)
    p.add_argument("--sigmas", type=_int_list, default=None, help="blob sigmas, e.g. 5,9,16")
    p.add_argument("--center", type=_float_pair, default=None)
    p.add_argument("--noise", type=_nonneg_float, default=0.0)
    p.add_argument("--out", required=True, help="output path (.pgm or .dgt)")
    p.add_argument("--normalize", type=_bool, default=False)

    return parser


def _threads_from_env() -> int:
    raw = os.environ.get("DAGRID_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"DAGRID_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"DAGRID_THREADS must be >= 1, got {value}")
    return value


def _load_image(path) -> np.ndarray:
    if path is None:
        raise UsageError("an input image is required (--in)")
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return dio.read_pgm(path)
    if suffix == ".dgt":
        t = dio.read_dgt(path)
        return t[None] if t.ndim == 2 else t
    raise UsageError(f"unsupported input format {suffix!r}, use .pgm or .dgt")


def _save_image(t: np.ndarray, path, normalize: bool) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        dio.write_pgm(t, path, normalize=normalize)
    elif suffix == ".dgt":
        dio.write_dgt(t, path)
    else:
        raise UsageError(f"unsupported output format {suffix!r}, use .pgm or .dgt")


def _polar_cfg(args, h: int, w: int, bins: int | None = None) -> PolarConfig:
    try:
        cfg = PolarConfig.for_image(
            h,
            w,
            h_r=bins if bins is not None else args.hr,
            w_psi=bins if bins is not None else args.wpsi,
            center=args.center,
            cover_corners=args.cover_corners,
            angular_wrap=args.wrap,
        )
        overrides = {}
        if args.sr is not None:
            overrides["s_r"] = args.sr
        if args.stheta is not None:
            overrides["s_theta"] = args.stheta
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _filter_spec(args):
    if args.filter == "none":
        return None
    if args.filter == "box":
        return ("box", args.radius)
    return ("gaussian", args.sigma)


def _psnr(mse: float):
    if mse <= 0.0:
        return None
    return -10.0 * math.log10(mse)


def _native(value):
    if isinstance(value, dict):
        return {k: _native(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_native(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _cmd_polar_roundtrip(args):
    u = _load_image(args.input)
    h, w = u.shape[1:]
    cfg = _polar_cfg(args, h, w)
    spec = _filter_spec(args)
    out = polar_roundtrip_filter(u, cfg, args.kernel, spec)
    mse = float(np.mean((out - u) ** 2))
    metrics = {
        "grid": [cfg.h_r, cfg.w_psi],
        "filter": args.filter,
        "mse": mse,
        "psnr": _psnr(mse),
    }
    if args.sweep:
        rows = []
        for size in args.sweep:
            cfg_s = _polar_cfg(args, h, w, bins=size)
            out_s = polar_roundtrip_filter(u, cfg_s, args.kernel, spec)
            mse_s = float(np.mean((out_s - u) ** 2))
            rows.append({"grid": size, "mse": mse_s, "psnr": _psnr(mse_s)})
        metrics["sweep"] = rows
    if args.out:
        _save_image(out, args.out, args.normalize)
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_heatmap(rd / "input.png", u[0], "input")
        acc = polar_accumulate(u, cfg, args.kernel)
        report.save_heatmap(rd / "polar_grid.png", acc.values[0], "normalized polar grid")
        report.save_heatmap(rd / "roundtrip.png", out[0], "round trip")
        rows = [[args.filter, cfg.h_r, cfg.w_psi, mse, _psnr(mse)]]
        report.save_csv(rd / "metrics.csv", ["filter", "h_r", "w_psi", "mse", "psnr"], rows)
        if args.sweep:
            xs = [row["grid"] for row in metrics["sweep"]]
            ys = [row["mse"] for row in metrics["sweep"]]
            report.save_curve(rd / "sweep.png", xs, ys, "grid size", "MSE",
                              "round-trip error vs grid size", logy=True)
            report.save_csv(rd / "sweep.csv", ["grid", "mse", "psnr"],
                            [[r["grid"], r["mse"], r["psnr"]] for r in metrics["sweep"]])
    return metrics, 0


def _cmd_polar_filter(args):
    u = _load_image(args.input)
    h, w = u.shape[1:]
    cfg = _polar_cfg(args, h, w)
    spec = _filter_spec(args)
    polar_out = polar_roundtrip_filter(u, cfg, args.kernel, spec)
    if spec[0] == "box":
        image_out = box_filter(u, args.radius)
    else:
        image_out = gaussian_filter(u, args.sigma)
    sv_polar = sector_variance(polar_out, cfg)
    sv_image = sector_variance(image_out, cfg)
    metrics = {
        "filter": args.filter,
        "sector_variance_polar": sv_polar,
        "sector_variance_image": sv_image,
        "ratio": None if sv_image == 0 else sv_polar / sv_image,
    }
    if args.out:
        _save_image(polar_out, args.out, args.normalize)
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_heatmap(rd / "input.png", u[0], "input")
        report.save_heatmap(rd / "polar_filtered.png", polar_out[0], "grid-space filter")
        report.save_heatmap(rd / "image_filtered.png", image_out[0], "image-space filter")
        report.save_csv(
            rd / "metrics.csv",
            ["filter", "sector_variance_polar", "sector_variance_image", "ratio"],
            [[args.filter, sv_polar, sv_image, metrics["ratio"]]],
        )
    return metrics, 0


def _cmd_polar_sample(args):
    u = _load_image(args.input)
    h, w = u.shape[1:]
    cfg = _polar_cfg(args, h, w)
    sampled = polar_sample(u, cfg, args.kernel)
    metrics = {
        "shape": list(sampled.shape),
        "min": float(sampled.min()),
        "max": float(sampled.max()),
    }
    if args.out:
        _save_image(sampled, args.out, args.normalize)
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_heatmap(rd / "input.png", u[0], "input")
        report.save_heatmap(rd / "polar_sampled.png", sampled[0], "polar sampling")
        report.save_csv(rd / "metrics.csv", ["h_r", "w_psi", "min", "max"],
                        [[cfg.h_r, cfg.w_psi, metrics["min"], metrics["max"]]])
    return metrics, 0


def _cmd_circle_detect(args):
    phantom_center = None
    if args.input is not None:
        u = _load_image(args.input)
    else:
        size = args.size
        phantom_center = args.center if args.center is not None else (size // 2, size // 2)
        if args.ring is not None:
            u = dio.synth("ring", size, size, center=phantom_center, noise_sigma=args.noise,
                          seed=args.seed, radius=args.ring, thickness=args.thickness)
        elif args.disk is not None:
            u = dio.synth("disk", size, size, center=phantom_center, noise_sigma=args.noise,
                          seed=args.seed, radius=args.disk)
        else:
            raise UsageError("need --in, --ring, or --disk")
    h, w = u.shape[1:]
    radii = args.radii if args.radii is not None else [max(h, w)]
    try:
        cfg = CircularConfig(radii, symmetric=args.symmetric, epsilon=args.epsilon,
                             kernel=args.kernel)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    field = sobel_gradient_field(u, args.epsilon)
    acc = circular_accumulate(u, field, cfg)
    if not 0 <= args.band < len(acc.per_band):
        raise UsageError(f"--band {args.band} out of range [0, {len(acc.per_band)})")
    row, col, score = detect_circle_center(acc, args.band)
    metrics = {
        "center": [row, col],
        "score": score,
        "band": args.band,
        "radii": list(cfg.radii),
        "size": [h, w],
    }
    if phantom_center is not None:
        metrics["phantom_center"] = [float(phantom_center[0]), float(phantom_center[1])]
    if args.out:
        _save_image(acc.per_band[args.band][0], args.out, normalize=True)
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_heatmap(rd / "input.png", u[0], "input")
        report.save_heatmap(rd / "band_vs.png", acc.per_band[args.band][0][0],
                            f"v_s band {args.band}", marker=(row, col))
        rows = []
        for idx, ks in enumerate(cfg.bands()):
            b_row, b_col, b_score = detect_circle_center(acc, idx)
            rows.append([idx, ks.start, ks.stop - 1, b_row, b_col, b_score])
        report.save_csv(rd / "bands.csv",
                        ["band", "k_lo", "k_hi", "peak_row", "peak_col", "peak_score"], rows)
    return metrics, 0


def _cmd_gradcheck(args):
    ops = sorted(GRAD_OPS) if args.op == "all" else [args.op]
    value_ops = {"accumulate", "slice", "grid-sample"}
    per_op = {}
    all_passed = True
    for op in ops:
        kernel = args.kernel if op in value_ops else "bilinear"
        reports = run_grad_trials(op, trials=args.trials, seed=args.seed,
                                  kernel=kernel, h=args.step, tol=args.tol)
        worst = max(reports, key=lambda rep: rep.max_rel_err)
        passed = all(rep.passed for rep in reports)
        all_passed &= passed
        per_op[op] = {
            "trials": args.trials,
            "kernel": kernel,
            "max_rel_err": worst.max_rel_err,
            "passed": passed,
        }
    metrics = {"ops": per_op, "tol": args.tol, "step": args.step, "passed": all_passed}
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        labels = list(per_op)
        report.save_bars(rd / "gradcheck.png", labels,
                         [per_op[op]["max_rel_err"] for op in labels],
                         "max relative error", "finite-difference agreement")
        report.save_csv(rd / "gradcheck.csv", ["op", "kernel", "trials", "max_rel_err", "passed"],
                        [[op, per_op[op]["kernel"], args.trials, per_op[op]["max_rel_err"],
                          per_op[op]["passed"]] for op in labels])
    return metrics, 0 if all_passed else 1


def _cmd_adjoint_suite(args):
    rng = np.random.default_rng(args.seed)
    result = adjoint_trials(rng, instances=args.trials, max_size=args.max_size)
    passed = result["max_rel_err"] < args.tol
    metrics = {**result, "tol": args.tol, "passed": passed}
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_csv(rd / "adjoint.csv", ["instances", "max_rel_err", "tol", "passed"],
                        [[result["instances"], result["max_rel_err"], args.tol, passed]])
    return metrics, 0 if passed else 1


def _cmd_bench(args):
    threads_after = args.threads if args.threads is not None else _threads_from_env()
    results = []
    match = True
    for size in args.sizes:
        rng = np.random.default_rng(args.seed + size)
        u = rng.standard_normal((1, size, size))
        v = rng.standard_normal((1, size, size))
        grids = GridSet(SamplingGrid(rng.uniform(0, size - 1, (size, size)),
                                     rng.uniform(0, size - 1, (size, size))))
        for op_name in ("accumulate", "slice"):
            digests = set()
            for workers in args.workers:
                set_num_threads(workers)
                if op_name == "accumulate":
                    fn = lambda: accumulate(u, grids, KernelKind.BILINEAR, (size, size))
                else:
                    fn = lambda: slice_grid(v, grids, KernelKind.BILINEAR, (size, size))
                fn()
                best = math.inf
                for _ in range(args.repeats):
                    start = time.perf_counter()
                    out = fn()
                    best = min(best, time.perf_counter() - start)
                digest = hashlib.sha256(out.tobytes()).hexdigest()
                digests.add(digest)
                results.append({"op": op_name, "size": size, "workers": workers,
                                "seconds": best, "sha256": digest})
            if len(digests) != 1:
                match = False
    set_num_threads(threads_after)
    metrics = {"results": results, "checksums_match": match}
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        labels = [f"{r['op']}/{r['size']}/w{r['workers']}" for r in results]
        report.save_bars(rd / "bench.png", labels, [r["seconds"] for r in results],
                         "seconds (best of repeats)", "accumulate/slice wall time")
        report.save_csv(rd / "bench.csv", ["op", "size", "workers", "seconds", "sha256"],
                        [[r["op"], r["size"], r["workers"], r["seconds"], r["sha256"]]
                         for r in results])
    return metrics, 0 if match else 1


def _cmd_synth(args):
    if args.size is not None:
        h, w = args.size, args.size
    elif args.height is not None and args.width is not None:
        h, w = args.height, args.width
    else:
        raise UsageError("need --size or both --height and --width")
    kind = args.kind.replace("-", "_")
    try:
        u = dio.synth(kind, h, w, center=args.center, noise_sigma=args.noise,
                      seed=args.seed, radius=args.radius, thickness=args.thickness,
                      cell=args.cell, sigmas=args.sigmas)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _save_image(u, args.out, args.normalize)
    metrics = {"path": str(args.out), "kind": args.kind, "shape": list(u.shape),
               "min": float(u.min()), "max": float(u.max())}
    if args.report_dir:
        from . import report

        rd = report.ensure_dir(args.report_dir)
        report.save_heatmap(rd / "phantom.png", u[0], args.kind)
        report.save_csv(rd / "metrics.csv", ["kind", "h", "w", "min", "max"],
                        [[args.kind, h, w, metrics["min"], metrics["max"]]])
    return metrics, 0


_HANDLERS = {
    "polar-roundtrip": _cmd_polar_roundtrip,
    "polar-filter": _cmd_polar_filter,
    "polar-sample": _cmd_polar_sample,
    "circle-detect": _cmd_circle_detect,
    "gradcheck": _cmd_gradcheck,
    "adjoint-suite": _cmd_adjoint_suite,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
}


def run(argv=None) -> int:
    """Parse argv, dispatch, print one JSON line; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        set_num_threads(args.threads if args.threads is not None else _threads_from_env())
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        metrics, code = _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    line = json.dumps(_native(metrics), sort_keys=True)
    print(line)
    if args.metrics_out:
        Path(args.metrics_out).write_text(line + "\n")
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))
