"""Command-line front end.

Exit codes: 0 success, 1 usage/config/format errors, 2 I/O errors,
3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .generate import PATTERNS, pattern_image, random_image
from .oracle import same_partition, sequential_ccl
from .pipeline import aggregate_metrics, default_workers, label_image
from .types import BlockConfig, ConfigError, LabelMap, Variant

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_MISMATCH = 3

DEFAULT_SIZES = (32, 64, 128, 256, 512, 1024, 2048, 4096)
DEFAULT_DENSITIES = tuple(round(0.1 * i, 1) for i in range(1, 10))

BENCH_FIELDS = (
    "size",
    "density",
    "variant",
    "block",
    "workers",
    "runs",
    "min_ms",
    "max_ms",
    "mean_ms",
    "std_ms",
    "mean_iterations",
    "mean_atomics",
    "components",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _block(text):
    try:
        return BlockConfig.parse(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _variant(text):
    try:
        return Variant.parse(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _dims(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}, expected WxH") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def parse_sizes(text: str) -> list[int]:
    """``"32,64,128"`` or a doubling range ``"32..4096"``."""
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        out = []
        s = lo
        while s <= hi:
            out.append(s)
            s *= 2
        return out
    return [int(v) for v in text.split(",") if v]


def parse_densities(text: str) -> list[float]:
    """``"0.1,0.5"`` or an inclusive range ``"0.1..0.9"`` (step 0.1, or ``"..:step"``)."""
    if ".." in text:
        rng, _, step = text.partition(":")
        lo, hi = (float(v) for v in rng.split(".."))
        step = float(step) if step else 0.1
        n = int(round((hi - lo) / step))
        return [round(lo + i * step, 10) for i in range(n + 1)]
    return [float(v) for v in text.split(",") if v]


def _csv_list(parse):
    def inner(text):
        try:
            return parse(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse {text!r}") from None

    return inner


def _add_run_options(p):
    p.add_argument("--block", type=_block, default=BlockConfig(), help="block size BXxBY (default 32x32)")
    p.add_argument("--variant", type=_variant, default=Variant.C2FL, help="c2fl|rc2fl|cc2fl|nc2fl")
    p.add_argument("--workers", type=_positive_int, default=None, help="worker threads (default: $CCL_WORKERS or CPU count)")
    p.add_argument("--threshold", type=int, default=0, help="PGM foreground threshold (value > T)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockccl", description="Block-parallel connected components labeling.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("label", help="label a PBM/PGM image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=io.LABEL_FORMATS, default="raw")
    p.add_argument("--metrics", help="append run metrics to this CSV")
    _add_run_options(p)

    p = sub.add_parser("verify", help="check the labeling against the sequential reference")
    p.add_argument("--in", dest="input", required=True)
    _add_run_options(p)
    p.add_argument("--corrupt-pixel", help=argparse.SUPPRESS)

    p = sub.add_parser("generate", help="write a synthetic PBM")
    p.add_argument("--kind", choices=("random",) + PATTERNS, required=True)
    p.add_argument("--size", type=_dims, required=True, help="WxH")
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=_positive_int, default=2, help="stripe period")
    p.add_argument("--plain", action="store_true", help="write plain P1 instead of raw P4")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="sweep sizes, densities and variants")
    p.add_argument("--sizes", type=_csv_list(parse_sizes), default=list(DEFAULT_SIZES))
    p.add_argument("--densities", type=_csv_list(parse_densities), default=list(DEFAULT_DENSITIES))
    p.add_argument("--runs", type=_positive_int, default=100)
    p.add_argument("--variants", type=_csv_list(lambda t: [Variant.parse(v) for v in t.split(",")]),
                   default=list(Variant))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block", type=_block, default=BlockConfig())
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--out", required=True)
    return parser


def _workers(args):
    return args.workers if args.workers is not None else default_workers()


def cmd_label(args) -> int:
    img = io.read_binary_image(args.input, args.threshold)
    report = label_image(img, args.block, args.variant, _workers(args))
    io.write_label_map(report.label_map, args.out, args.format)
    if args.metrics:
        io.write_metrics_csv(report, args.metrics)
    print(f"components={report.component_count} time={report.wall_time * 1e3:.3f}ms")
    return EXIT_OK


def _corrupt(lm: LabelMap, spec: str) -> LabelMap:
    x, y = (int(v) for v in spec.split(","))
    labels = lm.labels.copy()
    p = x + y * lm.width
    # give the pixel a label no other pixel has
    labels[p] = lm.background - 1 if labels[p] == lm.background else lm.background
    return LabelMap(lm.width, lm.height, labels, lm.background)


def cmd_verify(args) -> int:
    img = io.read_binary_image(args.input, args.threshold)
    report = label_image(img, args.block, args.variant, _workers(args))
    got = report.label_map
    if args.corrupt_pixel:
        got = _corrupt(got, args.corrupt_pixel)
    bad = same_partition(got, sequential_ccl(img))
    if bad is not None:
        y, x = divmod(bad, img.width)
        print(f"mismatch at x={x} y={y}", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"ok components={report.component_count} variant={report.variant.name} block={report.cfg}")
    return EXIT_OK


def cmd_generate(args) -> int:
    w, h = args.size
    if args.kind == "random":
        if not 0.0 <= args.density <= 1.0:
            raise UsageError(f"density must be in [0, 1], got {args.density}")
        img = random_image(w, h, args.density, args.seed)
    elif args.kind == "stripes":
        img = pattern_image("stripes", w, h, period=args.period)
    elif args.kind == "blobs":
        img = pattern_image("blobs", w, h, seed=args.seed)
    else:
        img = pattern_image(args.kind, w, h)
    io.write_pbm(img, args.out, plain=args.plain)
    return EXIT_OK


def run_bench(sizes, densities, variants, runs, seed=0, cfg=None, workers=1, clock=time.perf_counter):
    """Yield one result dict per (size, density, variant) cell."""
    cfg = cfg or BlockConfig()
    for size in sizes:
        for density in densities:
            img = random_image(size, size, density, seed)
            for variant in variants:
                times, its, ats = [], [], []
                for _ in range(runs):
                    rep = label_image(img, cfg, variant, workers, clock=clock)
                    s = aggregate_metrics(rep)
                    times.append(rep.wall_time * 1e3)
                    its.append(s.mean_iterations)
                    ats.append(s.mean_atomics)
                t = np.asarray(times)
                yield {
                    "size": size,
                    "density": density,
                    "variant": variant.name,
                    "block": str(cfg),
                    "workers": workers,
                    "runs": runs,
                    "min_ms": f"{t.min():.6f}",
                    "max_ms": f"{t.max():.6f}",
                    "mean_ms": f"{t.mean():.6f}",
                    "std_ms": f"{t.std():.6f}",
                    "mean_iterations": f"{np.mean(its):.6g}",
                    "mean_atomics": f"{np.mean(ats):.6g}",
                    "components": rep.component_count,
                }


def cmd_bench(args) -> int:
    for d in args.densities:
        if not 0.0 <= d <= 1.0:
            raise UsageError(f"density must be in [0, 1], got {d}")
    if any(s < 1 for s in args.sizes):
        raise UsageError("sizes must be positive")
    out = Path(args.out)
    new = not out.exists() or out.stat().st_size == 0
    with open(out, "a", newline="") as f:
        writer = csv.DictWriter(f, BENCH_FIELDS, lineterminator="\n")
        if new:
            writer.writeheader()
        for row in run_bench(args.sizes, args.densities, args.variants, args.runs,
                             args.seed, args.block, _workers(args)):
            writer.writerow(row)
            f.flush()
            print(f"{row['size']}x{row['size']} d={row['density']} {row['variant']}: "
                  f"mean={row['mean_ms']}ms iters={row['mean_iterations']} atomics={row['mean_atomics']}")
    return EXIT_OK


COMMANDS = {"label": cmd_label, "verify": cmd_verify, "generate": cmd_generate, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, io.NetpbmError, io.LabelFormatError, ValueError) as e:
        print(f"blockccl {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"blockccl {args.command}: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
