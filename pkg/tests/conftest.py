import numpy as np
import pytest

from blockccl import BinaryImage

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def image(rows):
    return BinaryImage.from_rows(rows)


CROSS_BLOCK_ROWS = [
    # 16x16 split into four 8x8 blocks; regions cross both block boundaries.
    "0000000000000000",
    "0111100000011100",
    "0100000000010100",
    "0101110000010100",
    "0100010000011111",
    "0111110000000001",
    "0000000011100001",
    "0000001111100111",
    "0000001000000100",
    "0011111000000100",
    "0010000000111100",
    "0010011100100000",
    "0000010000100110",
    "1100011111100010",
    "1000000000000010",
    "1111111100011110",
]
