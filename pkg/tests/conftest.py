import numpy as np
import pytest

from lob_outliers.market_data import LobRecord


def make_record(ts=0, close=100.0, volume=1.0, bid=99.9, ask=100.1, levels=1,
                size=1.0, o=None, h=None, lo=None, step=0.1):
    o = close if o is None else o
    h = max(o, close) if h is None else h
    lo = min(o, close) if lo is None else lo
    return LobRecord(
        timestamp=ts, open=o, high=h, low=lo, close=close, volume=volume,
        bid_px=tuple(bid - step * i for i in range(levels)),
        bid_sz=(size,) * levels,
        ask_px=tuple(ask + step * i for i in range(levels)),
        ask_sz=(size,) * levels,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
