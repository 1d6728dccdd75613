import csv
import subprocess
import sys

import numpy as np
import pytest

from blockccl import BlockConfig, Variant, io, random_image
from blockccl.cli import BENCH_FIELDS, main, parse_densities, parse_sizes, run_bench


@pytest.fixture
def pbm(tmp_path):
    path = tmp_path / "in.pbm"
    io.write_pbm(random_image(70, 45, 0.55, seed=5), path)
    return path


def test_label_writes_map_and_reports(pbm, tmp_path, capsys):
    out = tmp_path / "out.cclm"
    assert main(["label", "--in", str(pbm), "--out", str(out), "--workers", "1"]) == 0
    line = capsys.readouterr().out
    assert line.startswith("components=")
    k = int(line.split()[0].split("=")[1])
    lm = io.read_label_map(out)
    assert (lm.width, lm.height) == (70, 45)
    assert int(lm.labels.max()) == k


def test_label_metrics_and_formats(pbm, tmp_path):
    for fmt in io.LABEL_FORMATS:
        out = tmp_path / f"o.{fmt}"
        args = ["label", "--in", str(pbm), "--out", str(out), "--format", fmt,
                "--metrics", str(tmp_path / "m.csv"), "--block", "16x8", "--variant", "nc2fl"]
        assert main(args) == 0
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert len(rows) == 1 + len(io.LABEL_FORMATS)
    assert rows[1][3:5] == ["NC2FL", "16x8"]
    assert (tmp_path / "m.iterations.csv").exists()


@pytest.mark.parametrize("block", ["0x32", "32", "axb", "128x128"])
def test_bad_block_is_usage_error(pbm, tmp_path, block):
    with pytest.raises(SystemExit) as e:
        main(["label", "--in", str(pbm), "--out", str(tmp_path / "o"), "--block", block])
    assert e.value.code == 1


def test_bad_variant_is_usage_error(pbm, tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["label", "--in", str(pbm), "--out", str(tmp_path / "o"), "--variant", "fast"])
    assert e.value.code == 1


def test_missing_input_is_io_error(tmp_path, capsys):
    assert main(["label", "--in", str(tmp_path / "none.pbm"), "--out", str(tmp_path / "o")]) == 2
    assert "none.pbm" in capsys.readouterr().err


def test_malformed_input_is_usage_error(tmp_path):
    bad = tmp_path / "bad.pbm"
    bad.write_bytes(b"P4\n8 8\n\x00")
    assert main(["label", "--in", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_unwritable_output_is_io_error(pbm, tmp_path):
    assert main(["label", "--in", str(pbm), "--out", str(tmp_path / "no" / "dir" / "o")]) == 2


def test_verify_ok(pbm, capsys):
    for v in Variant:
        assert main(["verify", "--in", str(pbm), "--variant", v.name, "--block", "5x7"]) == 0
    assert capsys.readouterr().out.startswith("ok ")


def test_verify_reports_corrupted_pixel(pbm, capsys):
    assert main(["verify", "--in", str(pbm), "--corrupt-pixel", "12,30"]) == 3
    assert "mismatch at x=12 y=30" in capsys.readouterr().err


def test_verify_empty_image(tmp_path):
    path = tmp_path / "e.pbm"
    path.write_bytes(b"P1\n3 3\n000000000\n")
    assert main(["verify", "--in", str(path)]) == 0


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.pbm", tmp_path / "b.pbm"
    for p in (a, b):
        assert main(["generate", "--kind", "random", "--size", "33x21", "--density", "0.4",
                     "--seed", "8", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    img = io.read_binary_image(a)
    assert np.array_equal(img.data, random_image(33, 21, 0.4, 8).data)


@pytest.mark.parametrize("density", ["-0.5", "1.01"])
def test_generate_rejects_density(tmp_path, density):
    assert main(["generate", "--kind", "random", "--size", "4x4", "--density", density,
                 "--out", str(tmp_path / "x.pbm")]) == 1


@pytest.mark.parametrize("kind", ["spiral", "stripes", "checkerboard", "blobs"])
def test_generated_patterns_verify(tmp_path, kind):
    p = tmp_path / "p.pbm"
    assert main(["generate", "--kind", kind, "--size", "50x40", "--plain", "--out", str(p)]) == 0
    assert p.read_bytes().startswith(b"P1")
    assert main(["verify", "--in", str(p), "--block", "8x8"]) == 0


def test_range_parsers():
    assert parse_sizes("32..256") == [32, 64, 128, 256]
    assert parse_sizes("10,20") == [10, 20]
    assert parse_densities("0.1..0.3") == [0.1, 0.2, 0.3]
    assert parse_densities("0..1:0.5") == [0.0, 0.5, 1.0]


def test_bench_single_cell(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--sizes", "32", "--densities", "0.5", "--runs", "3",
                 "--variants", "c2fl", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 1
    r = rows[0]
    assert list(r) == list(BENCH_FIELDS)
    assert float(r["min_ms"]) <= float(r["mean_ms"]) <= float(r["max_ms"])
    assert r["variant"] == "C2FL" and r["runs"] == "3"


def test_bench_grid_and_append(tmp_path):
    out = tmp_path / "b.csv"
    args = ["bench", "--sizes", "16,32", "--densities", "0.2,0.8", "--runs", "1",
            "--variants", "c2fl,nc2fl", "--out", str(out)]
    assert main(args) == 0
    assert main(args) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == list(BENCH_FIELDS)
    assert len(rows) == 1 + 2 * 8


def test_bench_constant_clock_has_zero_spread():
    rows = list(run_bench([16], [0.5], [Variant.C2FL], runs=4, clock=lambda: 1.0))
    assert float(rows[0]["std_ms"]) == 0.0
    assert float(rows[0]["mean_ms"]) == 0.0


def test_bench_rejects_bad_density(tmp_path):
    assert main(["bench", "--sizes", "8", "--densities", "1.5", "--runs", "1",
                 "--out", str(tmp_path / "b.csv")]) == 1


def test_workers_give_identical_output(pbm, tmp_path):
    outs = []
    for w in (1, 2, 4, 8):
        out = tmp_path / f"w{w}.cclm"
        assert main(["label", "--in", str(pbm), "--out", str(out), "--workers", str(w), "--block", "8x8"]) == 0
        outs.append(out.read_bytes())
    assert all(o == outs[0] for o in outs)


def test_ccl_workers_env(pbm, tmp_path, monkeypatch):
    monkeypatch.setenv("CCL_WORKERS", "3")
    out = tmp_path / "m.csv"
    assert main(["label", "--in", str(pbm), "--out", str(tmp_path / "o"), "--metrics", str(out)]) == 0
    assert list(csv.reader(open(out)))[1][5] == "3"


def test_module_entry_point(pbm, tmp_path):
    r = subprocess.run([sys.executable, "-m", "blockccl", "verify", "--in", str(pbm)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_no_command_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
