"""Netpbm input, label-map output and metrics CSV export.

CCLM label files are little-endian::

    b"CCLM"  version:u8=1  width:u32  height:u32  labels:u32[width*height]

Labels are compacted first (background 0, components 1..K).
"""

from __future__ import annotations

import csv
import os
import re
import struct
from pathlib import Path

import numpy as np

from .pipeline import RunReport, aggregate_metrics, compact_labels
from .types import BinaryImage, LabelMap

CCLM_MAGIC = b"CCLM"
CCLM_VERSION = 1
CCLM_HEADER = struct.Struct("<4sBII")

LABEL_FORMATS = ("raw", "csv", "pgm16")

SUMMARY_FIELDS = (
    "width",
    "height",
    "density",
    "variant",
    "block",
    "workers",
    "mean_iterations",
    "mean_atomics",
    "wall_time_ms",
)


class NetpbmError(ValueError):
    pass


class HeaderError(NetpbmError):
    pass


class TruncatedError(NetpbmError):
    pass


class UnsupportedFormatError(NetpbmError):
    pass


class LabelFormatError(ValueError):
    pass


class OverflowFormatError(LabelFormatError):
    pass


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_header(buf: bytes, n_fields: int) -> tuple[list[int], int]:
    """Parse ``n_fields`` integers after the magic; return them and the payload offset."""
    pos = 2
    values = []
    for _ in range(n_fields):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise HeaderError("header ended early")
        try:
            values.append(int(m.group(1)))
        except ValueError:
            raise HeaderError(f"bad header field {m.group(1)!r}") from None
        pos = m.end()
    # exactly one whitespace byte separates the header from a raw payload
    if pos < len(buf) and not buf[pos : pos + 1].isspace():
        raise HeaderError("missing whitespace after header")
    return values, pos + 1


def _check_dims(w, h):
    if w < 1 or h < 1:
        raise HeaderError(f"bad dimensions {w}x{h}")


def _plain_values(payload: bytes, count: int, single_digits: bool) -> np.ndarray:
    text = re.sub(rb"#[^\n]*", b"", payload)
    if single_digits:
        # P1 allows bits with no separating whitespace.
        tokens = re.findall(rb"[01]", text)
        junk = re.sub(rb"[01\s]", b"", text)
        if junk:
            raise HeaderError("unexpected characters in P1 payload")
    else:
        tokens = text.split()
    if len(tokens) < count:
        raise TruncatedError(f"expected {count} samples, found {len(tokens)}")
    try:
        return np.array([int(t) for t in tokens[:count]], dtype=np.int64)
    except ValueError:
        raise HeaderError("non-numeric sample in plain payload") from None


def parse_netpbm(buf: bytes, threshold: int = 0) -> BinaryImage:
    magic = buf[:2]
    if magic in (b"P1", b"P4"):
        (w, h), off = _read_header(buf, 2)
        _check_dims(w, h)
        if magic == b"P1":
            bits = _plain_values(buf[off:], w * h, single_digits=True)
            return BinaryImage(w, h, bits.astype(np.uint8))
        row_bytes = (w + 7) // 8
        payload = buf[off : off + row_bytes * h]
        if len(payload) < row_bytes * h:
            raise TruncatedError(f"P4 payload has {len(payload)} of {row_bytes * h} bytes")
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(h, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :w]
        return BinaryImage(w, h, bits.reshape(-1))

    if magic in (b"P2", b"P5"):
        (w, h, maxval), off = _read_header(buf, 3)
        _check_dims(w, h)
        if not 0 < maxval < 65536:
            raise HeaderError(f"bad maxval {maxval}")
        if magic == b"P2":
            vals = _plain_values(buf[off:], w * h, single_digits=False)
        else:
            dt = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
            need = w * h * dt.itemsize
            payload = buf[off : off + need]
            if len(payload) < need:
                raise TruncatedError(f"P5 payload has {len(payload)} of {need} bytes")
            vals = np.frombuffer(payload, dtype=dt)
        if vals.max(initial=0) > maxval:
            raise HeaderError("sample exceeds maxval")
        return BinaryImage(w, h, (vals > threshold).astype(np.uint8))

    raise UnsupportedFormatError(f"unsupported magic {magic!r}")


def read_binary_image(path, threshold: int = 0) -> BinaryImage:
    """Read PBM (1 = foreground) or PGM (foreground where value > threshold)."""
    return parse_netpbm(Path(path).read_bytes(), threshold)


def encode_pbm(img: BinaryImage, plain: bool = False) -> bytes:
    header = f"{'P1' if plain else 'P4'}\n{img.width} {img.height}\n".encode()
    grid = img.as_2d()
    if plain:
        body = "\n".join(" ".join(map(str, row)) for row in grid.tolist())
        return header + body.encode() + b"\n"
    return header + np.packbits(grid, axis=1).tobytes()


def write_pbm(img: BinaryImage, path, plain: bool = False):
    Path(path).write_bytes(encode_pbm(img, plain))


def _compacted(lm: LabelMap) -> LabelMap:
    return lm if lm.background == 0 else compact_labels(lm)


def encode_label_map(lm: LabelMap, fmt: str = "raw") -> bytes:
    lm = _compacted(lm)
    if fmt == "raw":
        header = CCLM_HEADER.pack(CCLM_MAGIC, CCLM_VERSION, lm.width, lm.height)
        return header + lm.labels.astype("<u4").tobytes()
    if fmt == "csv":
        lines = (",".join(map(str, row)) for row in lm.as_2d().tolist())
        return ("\n".join(lines) + "\n").encode()
    if fmt == "pgm16":
        k = int(lm.labels.max(initial=0))
        if k > 65535:
            raise OverflowFormatError(f"{k} components do not fit in 16-bit PGM")
        header = f"P5\n{lm.width} {lm.height}\n65535\n".encode()
        return header + lm.labels.astype(">u2").tobytes()
    raise LabelFormatError(f"unknown label format {fmt!r}; expected one of {', '.join(LABEL_FORMATS)}")


def write_label_map(lm: LabelMap, path, fmt: str = "raw"):
    Path(path).write_bytes(encode_label_map(lm, fmt))


def decode_label_map(buf: bytes) -> LabelMap:
    if len(buf) < CCLM_HEADER.size:
        raise LabelFormatError("file shorter than CCLM header")
    magic, version, w, h = CCLM_HEADER.unpack_from(buf)
    if magic != CCLM_MAGIC:
        raise LabelFormatError(f"bad magic {magic!r}")
    if version != CCLM_VERSION:
        raise LabelFormatError(f"unsupported CCLM version {version}")
    need = CCLM_HEADER.size + 4 * w * h
    if len(buf) != need:
        raise LabelFormatError(f"expected {need} bytes, got {len(buf)}")
    labels = np.frombuffer(buf, dtype="<u4", offset=CCLM_HEADER.size)
    return LabelMap(w, h, labels.astype(np.uint32), background=0)


def read_label_map(path) -> LabelMap:
    return decode_label_map(Path(path).read_bytes())


def grid_paths(path) -> tuple[Path, Path]:
    """Sibling files receiving the per-block iteration and atomic grids."""
    p = Path(path)
    stem = p.with_suffix("")
    return Path(f"{stem}.iterations.csv"), Path(f"{stem}.atomics.csv")


def _write_grid(grid: np.ndarray, path: Path):
    with open(path, "w", newline="") as f:
        csv.writer(f, lineterminator="\n").writerows(grid.tolist())


def write_metrics_csv(report: RunReport | None, path, density: float | None = None):
    """Append one summary row to ``path`` and write per-block grids beside it.

    The header is written when the file is new or empty, so repeated calls
    build up one table. ``report=None`` only ensures the header exists.
    """
    path = Path(path)
    new = not path.exists() or os.path.getsize(path) == 0
    with open(path, "a", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if new:
            writer.writerow(SUMMARY_FIELDS)
        if report is None:
            return
        summary = aggregate_metrics(report)
        writer.writerow(
            (
                report.label_map.width,
                report.label_map.height,
                "" if density is None else density,
                report.variant.name,
                str(report.cfg),
                report.worker_count,
                f"{summary.mean_iterations:.6g}",
                f"{summary.mean_atomics:.6g}",
                f"{report.wall_time * 1e3:.6f}",
            )
        )
    it_path, at_path = grid_paths(path)
    _write_grid(summary.iterations, it_path)
    _write_grid(summary.atomics, at_path)
