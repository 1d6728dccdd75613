import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockccl import BinaryImage, BlockConfig, LabelMap, compact_labels, label_image, random_image
from blockccl import io


def test_plain_pbm():
    img = io.parse_netpbm(b"P1\n2 2\n1 0\n0 1\n")
    assert img.data.tolist() == [1, 0, 0, 1]


def test_plain_pbm_without_separators_and_comments():
    img = io.parse_netpbm(b"P1\n# made by hand\n3 2\n101\n# mid\n010")
    assert img.data.tolist() == [1, 0, 1, 0, 1, 0]


def test_raw_pbm_padding_bits_ignored():
    # width 3: each row is one byte, low 5 bits are padding
    img = io.parse_netpbm(b"P4\n3 2\n" + bytes([0b10111111, 0b01000000]))
    assert img.data.tolist() == [1, 0, 1, 0, 1, 0]


def test_pgm_threshold():
    img = io.parse_netpbm(b"P5\n3 1\n255\n" + bytes([0, 127, 128]), threshold=127)
    assert img.data.tolist() == [0, 0, 1]
    img = io.parse_netpbm(b"P2\n3 1\n255\n0 127 128\n", threshold=0)
    assert img.data.tolist() == [0, 1, 1]


def test_pgm_16bit_big_endian():
    img = io.parse_netpbm(b"P5\n2 1\n65535\n" + bytes([0x01, 0x00, 0x00, 0xFF]), threshold=255)
    assert img.data.tolist() == [1, 0]


def test_truncated_raw_pbm():
    with pytest.raises(io.TruncatedError):
        io.parse_netpbm(b"P4\n16 4\n" + bytes(5))


def test_truncated_plain_pbm():
    with pytest.raises(io.TruncatedError):
        io.parse_netpbm(b"P1\n2 2\n1 0 1")


@pytest.mark.parametrize("buf", [b"P7\n1 1\n", b"GIF89a", b""])
def test_unsupported_magic(buf):
    with pytest.raises(io.UnsupportedFormatError):
        io.parse_netpbm(buf)


@pytest.mark.parametrize("buf", [b"P4\nx 2\n", b"P4\n0 2\n", b"P5\n2 2\n0\n\0\0\0\0", b"P4\n2", b"P5\n1 1\n9\n\x20"])
def test_malformed_header(buf):
    with pytest.raises(io.HeaderError):
        io.parse_netpbm(buf)


def test_errors_are_value_errors():
    assert issubclass(io.TruncatedError, ValueError)
    assert issubclass(io.OverflowFormatError, io.LabelFormatError)


@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**31), st.booleans())
@settings(max_examples=60, deadline=None)
def test_pbm_round_trip(w, h, seed, plain):
    img = random_image(w, h, 0.5, seed)
    back = io.parse_netpbm(io.encode_pbm(img, plain))
    assert np.array_equal(back.data, img.data)


def test_cclm_single_pixel_layout():
    lm = LabelMap(1, 1, np.array([1], dtype=np.uint32), background=0)
    buf = io.encode_label_map(lm, "raw")
    assert len(buf) == 17
    assert buf[:4] == b"CCLM" and buf[4] == 1
    assert buf[5:13] == bytes([1, 0, 0, 0, 1, 0, 0, 0])
    assert buf[13:] == bytes([1, 0, 0, 0])


def test_cclm_stores_compacted_labels():
    raw = label_image(BinaryImage(3, 1, [0, 1, 1]), workers=1).label_map
    back = io.decode_label_map(io.encode_label_map(raw))
    assert back.labels.tolist() == [0, 1, 1]
    assert back == compact_labels(raw)


@given(st.integers(1, 50), st.integers(1, 50), st.floats(0, 1), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_cclm_round_trip(w, h, d, seed):
    lm = compact_labels(label_image(random_image(w, h, d, seed), BlockConfig(8, 8), workers=1).label_map)
    assert io.decode_label_map(io.encode_label_map(lm, "raw")) == lm


@pytest.mark.parametrize("mutate,msg", [
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b[:4] + b"\x02" + b[5:], "version"),
    (lambda b: b[:-1], "bytes"),
    (lambda b: b[:10], "header"),
])
def test_cclm_rejects_bad_files(mutate, msg):
    good = io.encode_label_map(LabelMap(2, 1, np.array([1, 0], dtype=np.uint32), background=0))
    with pytest.raises(io.LabelFormatError, match=msg):
        io.decode_label_map(mutate(good))


def test_csv_format():
    lm = LabelMap(2, 1, np.array([1, 2], dtype=np.uint32), background=0)
    assert io.encode_label_map(lm, "csv") == b"1,2\n"
    lm = LabelMap(2, 2, np.array([1, 0, 0, 2], dtype=np.uint32), background=0)
    assert io.encode_label_map(lm, "csv") == b"1,0\n0,2\n"


def test_pgm16_format():
    lm = LabelMap(2, 1, np.array([1, 258], dtype=np.uint32), background=0)
    assert io.encode_label_map(lm, "pgm16") == b"P5\n2 1\n65535\n\x00\x01\x01\x02"


def test_pgm16_overflow():
    lm = LabelMap(70000, 1, np.arange(1, 70001, dtype=np.uint32), background=0)
    with pytest.raises(io.OverflowFormatError):
        io.encode_label_map(lm, "pgm16")


def test_unknown_label_format():
    with pytest.raises(io.LabelFormatError):
        io.encode_label_map(LabelMap(1, 1, np.zeros(1, dtype=np.uint32), background=0), "tiff")


def test_label_map_file_round_trip(tmp_path):
    lm = compact_labels(label_image(random_image(30, 20, 0.4, 2), workers=1).label_map)
    io.write_label_map(lm, tmp_path / "x.cclm")
    assert io.read_label_map(tmp_path / "x.cclm") == lm


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_metrics_csv(tmp_path):
    rep = label_image(random_image(16, 16, 0.6, 1), BlockConfig(8, 8), workers=1)
    out = tmp_path / "m.csv"
    io.write_metrics_csv(rep, out, density=0.6)
    io.write_metrics_csv(rep, out, density=0.6)
    rows = read_rows(out)
    assert rows[0] == list(io.SUMMARY_FIELDS) and len(rows[0]) == 9
    assert len(rows) == 3 and all(len(r) == 9 for r in rows)
    assert rows[1][:6] == ["16", "16", "0.6", "C2FL", "8x8", "1"]
    it_path, at_path = io.grid_paths(out)
    it_rows = read_rows(it_path)
    assert len(it_rows) == 2 and all(len(r) == 2 for r in it_rows)
    assert [int(v) for r in it_rows for v in r] == rep.block_stats[..., 0].reshape(-1).tolist()
    assert len(read_rows(at_path)) == 2


def test_metrics_csv_header_only(tmp_path):
    out = tmp_path / "m.csv"
    io.write_metrics_csv(None, out)
    assert read_rows(out) == [list(io.SUMMARY_FIELDS)]
    assert not io.grid_paths(out)[0].exists()


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        io.read_binary_image(tmp_path / "nope.pbm")
