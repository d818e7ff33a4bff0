import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lob_outliers.detectors import DetectorSpec, ScoreVector
from lob_outliers.signals import (
    SignalError, binarize, build_signal_series, compute_threshold, generate_signals,
    normalize_scores, rolling_threshold, write_signals_csv,
)


def test_normalize_hand_example():
    assert normalize_scores([3, 7, 5]).tolist() == [0.0, 1.0, 0.5]


def test_normalize_constant_rejected():
    with pytest.raises(SignalError):
        normalize_scores([2.0, 2.0, 2.0])


@given(st.lists(st.floats(-1e9, 1e9), min_size=2, max_size=200).filter(lambda v: max(v) > min(v)))
@settings(max_examples=100, deadline=None)
def test_normalize_range_and_order(v):
    s = normalize_scores(v)
    assert s.min() == 0.0 and s.max() == 1.0
    a = np.asarray(v)
    i, j = np.argsort(a, kind="stable")[[0, -1]]
    assert s[i] == 0.0 and s[j] == 1.0
    order = np.argsort(a, kind="stable")
    assert np.all(np.diff(s[order]) >= 0)


def test_threshold_interpolates():
    s = np.arange(1, 101, dtype=float)
    tau = compute_threshold(s, 0.95)
    assert 95 < tau < 96
    assert tau == pytest.approx(95.05)
    assert binarize(s, tau).sum() == 5


def test_threshold_q1_flags_nothing():
    s = np.random.default_rng(0).random(50)
    tau = compute_threshold(s, 1.0)
    assert tau == s.max() and not binarize(s, tau).any()


def test_threshold_small_sample_warns():
    with pytest.warns(RuntimeWarning, match="nearest rank"):
        tau = compute_threshold([1.0, 2.0, 3.0], 0.95)
    assert tau == 3.0


def test_strict_inequality_at_threshold():
    assert binarize([0.4, 0.5, 0.6], 0.5).tolist() == [False, False, True]


@pytest.mark.parametrize("m, want", [(0.02, "short"), (-0.01, "long")])
def test_direction_opposes_momentum(m, want):
    sig = generate_signals([True], [m], [123])
    assert len(sig) == 1 and sig[0].direction == want and sig[0].timestamp == 123


def test_zero_momentum_no_signal():
    out = generate_signals([True, True], [0.0, 0.1])
    assert [s.index for s in out] == [1]


def test_misaligned_rejected():
    with pytest.raises(SignalError):
        generate_signals([True], [0.1, 0.2])


def _sv(scores, labels=None, kind="EC"):
    return ScoreVector(DetectorSpec(kind), np.asarray(scores, float),
                       None if labels is None else np.asarray(labels, bool))


def test_native_mode_follows_labels():
    ss = build_signal_series(_sv([1, 2, 3, 4], [True, False, False, True]),
                             [0.1, 0.1, 0.1, -0.1], [0, 1, 2, 3], mode="native")
    assert ss.threshold == -math.inf
    assert [s.index for s in ss.signals] == [0, 3]
    assert [s.direction for s in ss.signals] == ["short", "long"]


def test_native_mode_without_labels():
    with pytest.raises(SignalError):
        build_signal_series(_sv([1, 2, 3]), [1, 1, 1], [0, 1, 2], mode="native")


def test_percentile_series(rng):
    raw = rng.random(1000)
    mom = rng.standard_normal(1000)
    ss = build_signal_series(_sv(raw), mom, np.arange(1000) * 60_000)
    assert ss.flags.sum() == 50
    assert len(ss.signals) == 50
    assert all(s.source_score > ss.threshold for s in ss.signals)


def test_rolling_threshold_uses_past_only(rng):
    s = rng.random(300)
    taus = rolling_threshold(s, 0.9, min_history=50)
    assert np.all(np.isinf(taus[:50]))
    for t in (50, 123, 299):
        assert taus[t] == pytest.approx(np.percentile(s[:t + 1], 90), abs=1e-12)
    s2 = s.copy()
    s2[200:] = 0.0
    assert np.array_equal(rolling_threshold(s2, 0.9, 50)[:200], taus[:200])


def test_signals_csv(tmp_path):
    sig = generate_signals([True, False, True], [0.5, 0.0, -0.25], [10, 20, 30], [0.9, 0.1, 1.0])
    f = tmp_path / "s.csv"
    write_signals_csv(sig, f)
    assert f.read_text().splitlines() == ["ts,direction,score,momentum", "10,short,0.9,0.5",
                                          "30,long,1.0,-0.25"]
