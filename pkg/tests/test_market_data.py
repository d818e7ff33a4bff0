import numpy as np
import pytest
from conftest import make_record

from lob_outliers.market_data import (
    AnomalySpec, MarketDataError, RecordValidationError, SyntheticConfig, content_hash,
    csv_header, generate_synthetic, parse_csv, validate_series, write_csv,
)


def _write(path, rows, levels=1):
    path.write_text("\n".join([",".join(csv_header(levels))] + rows) + "\n")


def test_single_bar_file(tmp_path):
    f = tmp_path / "one.csv"
    _write(f, ["0,100,100,100,100,1.5,99.9,2,100.1,3"])
    recs = parse_csv(f, levels=1)
    assert len(recs) == 1
    assert recs[0].best_bid == 99.9 and recs[0].best_ask == 100.1
    assert recs[0].ask_px[0] - recs[0].bid_px[0] == pytest.approx(0.2)


def test_inverted_range_rejected(tmp_path):
    f = tmp_path / "bad.csv"
    _write(f, ["0,100,100,101,100,1,99.9,2,100.1,3"])
    with pytest.raises(RecordValidationError, match="low exceeds high") as ei:
        parse_csv(f, levels=1)
    assert ei.value.line == 2


@pytest.mark.parametrize("row, msg", [
    ("0,100,101,99,100", "expected"),
    ("x,100,101,99,100,1,99.9,2,100.1,3", "not an integer"),
    ("0,100,abc,99,100,1,99.9,2,100.1,3", "not a decimal"),
    ("0,100,101,99,100,1,99.9,2,nan,3", "non-finite"),
])
def test_malformed_rows(tmp_path, row, msg):
    f = tmp_path / "bad.csv"
    _write(f, [row])
    with pytest.raises(MarketDataError, match=msg):
        parse_csv(f, levels=1)


def test_bad_header_and_empty(tmp_path):
    f = tmp_path / "h.csv"
    f.write_text("a,b,c\n")
    with pytest.raises(MarketDataError, match="header"):
        parse_csv(f, levels=1)
    f.write_text("")
    with pytest.raises(MarketDataError, match="empty"):
        parse_csv(f, levels=1)


def test_timestamp_order_enforced(tmp_path):
    f = tmp_path / "t.csv"
    row = "{},100,100,100,100,1,99.9,2,100.1,3"
    _write(f, [row.format(5), row.format(5)])
    with pytest.raises(MarketDataError, match="duplicate"):
        parse_csv(f, levels=1)
    _write(f, [row.format(5), row.format(4)])
    with pytest.raises(MarketDataError, match="precedes"):
        parse_csv(f, levels=1)


def test_round_trip_bit_exact(tmp_path):
    f = tmp_path / "three.csv"
    _write(f, [
        "0,100.1,100.3,99.7,100.2,1.25,100.1,2,100.3,3",
        "60000,100.2,100.9,100.0,100.00000001,0.3,100.0,2,100.2,3",
        "120000,100.00000001,101,99,99.12345678,7,99.1,2,99.2,3",
    ])
    recs = parse_csv(f, levels=1)
    g = tmp_path / "again.csv"
    write_csv(recs, g)
    back = parse_csv(g, levels=1)
    assert len(back) == 3
    for a, b in zip(recs, back):
        assert a == b
        assert a.close.hex() == b.close.hex()
    assert f.read_text() == g.read_text() or content_hash(recs) == content_hash(back)


def test_synthetic_round_trip(tmp_path):
    s = generate_synthetic(SyntheticConfig(n_records=300, seed=4))
    f = tmp_path / "s.csv"
    write_csv(s.records, f)
    assert parse_csv(f) == s.records


def test_no_injection_means_no_labels():
    s = generate_synthetic(SyntheticConfig(n_records=2000, anomaly_specs=()))
    assert not s.labels.any()
    zero = tuple(AnomalySpec(k, 0.0, 5.0) for k in ("volume_spike", "time_gap"))
    assert not generate_synthetic(SyntheticConfig(n_records=500, anomaly_specs=zero)).labels.any()


def test_same_seed_identical():
    a = generate_synthetic(SyntheticConfig(n_records=1500, seed=9))
    b = generate_synthetic(SyntheticConfig(n_records=1500, seed=9))
    assert content_hash(a.records) == content_hash(b.records)
    assert np.array_equal(a.labels, b.labels)
    c = generate_synthetic(SyntheticConfig(n_records=1500, seed=10))
    assert content_hash(a.records) != content_hash(c.records)


def test_volume_spike_counts_and_means():
    n = 10_000
    cfg = SyntheticConfig(n_records=n, seed=3,
                          anomaly_specs=(AnomalySpec("volume_spike", 0.02, 20.0),))
    s = generate_synthetic(cfg)
    k = int(s.labels.sum())
    assert abs(k - 200) <= 3 * np.sqrt(n * 0.02 * 0.98)
    v = np.array([r.volume for r in s.records])
    assert v[s.labels].mean() > 10 * v[~s.labels].mean()


def test_generated_series_is_valid():
    s = generate_synthetic(SyntheticConfig(n_records=3000, seed=1))
    assert validate_series(s.records) == []
    assert s.labels.sum() > 0
    assert set(k for k in s.anomaly_kinds if k) <= {sp.kind for sp in SyntheticConfig().anomaly_specs}


def test_validate_finds_crossed_book():
    recs = [make_record(ts=i * 60_000) for i in range(5)]
    recs[3] = make_record(ts=180_000, bid=100.2, ask=100.1)
    v = validate_series(recs)
    assert len(v) == 1 and v[0][0] == 3 and "crossed" in v[0][1]


def test_validate_empty():
    assert validate_series([]) == []


def test_config_validation():
    with pytest.raises(ValueError):
        SyntheticConfig(anomaly_specs=(AnomalySpec("bogus", 0.1, 2.0),))
    with pytest.raises(ValueError):
        SyntheticConfig(anomaly_specs=(AnomalySpec("volume_spike", 0.3, 2.0),
                                       AnomalySpec("time_gap", 0.3, 2.0)))
