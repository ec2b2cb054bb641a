from datetime import date, timedelta

import numpy as np
import pytest

from tradelens.data import (
    CLOSE_INDEX,
    FEATURE_NAMES,
    InputWindow,
    OhlcvRow,
    SyntheticSpec,
    compute_stats,
    generate_synthetic,
    generate_synthetic_series,
    make_windows,
    normalize,
    parse_ohlcv_csv,
    split_chronological,
    window_before,
    write_ohlcv_csv,
)
from tradelens.errors import ConfigurationError, DataError


def flat_row(day, close=100.0):
    return OhlcvRow(day, close, close + 1.0, close - 1.0, close, 1000.0)


def series(n, start=date(2024, 1, 1), closes=None):
    rows = []
    for i in range(n):
        c = 100.0 + i if closes is None else closes[i]
        rows.append(OhlcvRow(start + timedelta(days=i), c, c + 1, c - 1, c, 1000.0))
    return rows


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------

def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


HEADER = "date,open,high,low,close,volume"


def test_parse_happy_path(tmp_path):
    path = write_csv(
        tmp_path / "d.csv",
        [
            HEADER,
            "2024-01-02,10,11,9,10.5,100",
            "2024-01-03,10.5,12,10,11,120",
            "2024-01-04,11,11.5,10.5,11.2,90",
        ],
    )
    rows = parse_ohlcv_csv(path)
    assert len(rows) == 3
    assert [r.day.isoformat() for r in rows] == ["2024-01-02", "2024-01-03", "2024-01-04"]
    assert rows[1].features() == (10.5, 12.0, 10.0, 11.0, 120.0)


def test_parse_sorts_shuffled_dates(tmp_path):
    days = ["2024-01-0%d" % d for d in (5, 2, 9, 3, 7)]
    lines = [HEADER] + ["%s,10,11,9,10,1" % d for d in days]
    rows = parse_ohlcv_csv(write_csv(tmp_path / "d.csv", lines))
    assert [r.day.isoformat() for r in rows] == sorted(days)


def test_parse_rejects_high_below_low_naming_line(tmp_path):
    path = write_csv(
        tmp_path / "d.csv",
        [HEADER, "2024-01-02,10,11,9,10,1", "2024-01-03,10,9.5,9.9,10,1"],
    )
    with pytest.raises(DataError, match="line 3"):
        parse_ohlcv_csv(path)


def test_parse_rejects_malformed_number(tmp_path):
    path = write_csv(tmp_path / "d.csv", [HEADER, "2024-01-02,ten,11,9,10,1"])
    with pytest.raises(DataError, match="line 2"):
        parse_ohlcv_csv(path)


def test_parse_rejects_missing_column(tmp_path):
    path = write_csv(tmp_path / "d.csv", [HEADER, "2024-01-02,10,11,9,10"])
    with pytest.raises(DataError, match="line 2"):
        parse_ohlcv_csv(path)


def test_parse_rejects_duplicate_dates(tmp_path):
    path = write_csv(
        tmp_path / "d.csv",
        [HEADER, "2024-01-02,10,11,9,10,1", "2024-01-02,10,11,9,10,1"],
    )
    with pytest.raises(DataError, match="duplicate date"):
        parse_ohlcv_csv(path)


def test_parse_rejects_bad_header(tmp_path):
    path = write_csv(tmp_path / "d.csv", ["day,open,high,low,close,volume"])
    with pytest.raises(DataError, match="line 1"):
        parse_ohlcv_csv(path)


def test_parse_rejects_negative_volume_and_nonfinite(tmp_path):
    with pytest.raises(DataError, match="volume"):
        parse_ohlcv_csv(
            write_csv(tmp_path / "a.csv", [HEADER, "2024-01-02,10,11,9,10,-1"])
        )
    with pytest.raises(DataError, match="non-finite"):
        parse_ohlcv_csv(
            write_csv(tmp_path / "b.csv", [HEADER, "2024-01-02,nan,11,9,10,1"])
        )


def test_parse_accepts_crlf(tmp_path):
    path = tmp_path / "d.csv"
    path.write_bytes(
        (HEADER + "\r\n2024-01-02,10,11,9,10,1\r\n").encode("utf-8")
    )
    assert len(parse_ohlcv_csv(path)) == 1


def test_parse_missing_file_names_path(tmp_path):
    with pytest.raises(DataError, match="nope.csv"):
        parse_ohlcv_csv(tmp_path / "nope.csv")


def test_write_then_parse_round_trip(tmp_path):
    rows = series(5)
    path = tmp_path / "out.csv"
    write_ohlcv_csv(rows, path)
    back = parse_ohlcv_csv(path)
    assert [r.features() for r in back] == [r.features() for r in rows]


# ---------------------------------------------------------------------------
# windowing
# ---------------------------------------------------------------------------

def test_one_window_rising_day31_is_labeled_rise():
    closes = list(range(100, 131))  # strictly rising, day 31 higher
    windows = make_windows(series(31, closes=closes), 30)
    assert len(windows) == 1
    assert windows[0].label == 1
    assert windows[0].values.shape == (30, 5)


def test_one_window_falling_day31_is_labeled_fall():
    closes = [100.0] * 30 + [99.0]
    windows = make_windows(series(31, closes=closes), 30)
    assert windows == windows and windows[0].label == 0


def test_flat_day31_counts_as_fall():
    closes = [100.0] * 31
    assert make_windows(series(31, closes=closes), 30)[0].label == 0


def test_window_count_and_offsets_match_enumeration():
    rows = series(40)
    windows = make_windows(rows, 30)
    # every start offset that leaves 30 rows plus one label row is valid
    expected_offsets = [i for i in range(40) if i + 30 + 1 <= 40]
    assert len(windows) == len(expected_offsets) == 40 - 30
    for w, i in zip(windows, expected_offsets):
        assert w.start_date == rows[i].day
        assert w.end_date == rows[i + 29].day
        assert w.label == (1 if rows[i + 30].close > rows[i + 29].close else 0)


def test_too_few_rows_is_sizing_error():
    with pytest.raises(DataError, match="31"):
        make_windows(series(30), 30)


def test_window_values_follow_feature_order():
    rows = series(31)
    w = make_windows(rows, 30)[0]
    np.testing.assert_array_equal(w.values[0], rows[0].features())
    assert FEATURE_NAMES[CLOSE_INDEX] == "close"


def test_window_before_covers_preceding_rows():
    rows = series(40)
    w = window_before(rows, 35, 30)
    assert w.label is None
    assert w.start_date == rows[5].day
    assert w.end_date == rows[34].day


def test_window_before_requires_history():
    rows = series(20)
    with pytest.raises(DataError, match="history"):
        window_before(rows, 10, 30)


# ---------------------------------------------------------------------------
# splitting and normalization
# ---------------------------------------------------------------------------

def synthetic_windows(n, seed=0):
    return generate_synthetic(SyntheticSpec(), n, seed)


def test_split_10_windows_gives_9_train_1_eval():
    split = split_chronological(synthetic_windows(10))
    assert len(split.train) == 9 and len(split.eval) == 1


def test_split_single_window_is_error():
    with pytest.raises(DataError):
        split_chronological(synthetic_windows(1))


def test_split_is_chronological_for_disjoint_windows():
    split = split_chronological(synthetic_windows(100))
    for t in split.train:
        for e in split.eval:
            assert t.end_date < e.start_date


def test_split_stats_ignore_eval_windows():
    windows = synthetic_windows(50)
    split = split_chronological(windows)
    before_means = split.stats.means.copy()
    before_stds = split.stats.stds.copy()
    for w in split.eval:
        w.values[:] = 1e9  # vandalize the eval windows
    after = split_chronological(windows).stats
    np.testing.assert_array_equal(before_means, after.means)
    np.testing.assert_array_equal(before_stds, after.stds)


def test_normalize_constant_feature_maps_to_zeros():
    windows = synthetic_windows(20)
    for w in windows:
        w.values[:, 4] = 7.25  # make the volume column constant
    stats = compute_stats(windows)
    assert stats.stds[4] == 0.0
    out = normalize(windows, stats)
    for w in out:
        assert np.array_equal(w.values[:, 4], np.zeros(len(w.values)))


def test_normalized_train_set_has_unit_moments():
    split = split_chronological(synthetic_windows(200))
    out = normalize(split.train, split.stats)
    flat = np.stack([w.values for w in out]).reshape(-1, 5)
    np.testing.assert_allclose(flat.mean(axis=0), np.zeros(5), atol=1e-9)
    np.testing.assert_allclose(flat.std(axis=0), np.ones(5), atol=1e-9)


def test_normalize_is_not_idempotent():
    windows = synthetic_windows(20)
    stats = compute_stats(windows)
    once = normalize(windows, stats)
    twice = normalize(once, stats)
    assert not np.allclose(once[0].values, twice[0].values)


def test_normalize_is_pure():
    windows = synthetic_windows(5)
    snapshot = windows[0].values.copy()
    normalize(windows, compute_stats(windows))
    np.testing.assert_array_equal(windows[0].values, snapshot)


def test_split_rejects_bad_fraction():
    with pytest.raises(ConfigurationError):
        split_chronological(synthetic_windows(10), train_fraction=1.0)


# ---------------------------------------------------------------------------
# synthetic planted-signal windows
# ---------------------------------------------------------------------------

def test_generate_synthetic_is_seed_deterministic():
    a = generate_synthetic(SyntheticSpec(), 50, seed=7)
    b = generate_synthetic(SyntheticSpec(), 50, seed=7)
    for wa, wb in zip(a, b):
        assert np.array_equal(wa.values, wb.values)
        assert wa.label == wb.label and wa.start_date == wb.start_date


def test_generate_synthetic_labels_match_planting_rule():
    spec = SyntheticSpec()
    for w in generate_synthetic(spec, 200, seed=3):
        rule = 1 if w.values[spec.signal_end - 1, CLOSE_INDEX] > w.values[
            spec.signal_start, CLOSE_INDEX
        ] else 0
        assert w.label == rule


def test_generate_synthetic_zero_noise_is_hand_predictable():
    spec = SyntheticSpec(noise_std=0.0)
    for w in generate_synthetic(spec, 50, seed=1):
        closes = w.values[spec.signal_start : spec.signal_end, CLOSE_INDEX]
        assert w.label == (1 if closes[-1] > closes[0] else 0)
        # outside the signal window everything is exactly zero
        assert not w.values[: spec.signal_start].any()


def test_generate_synthetic_rejects_bad_bounds():
    with pytest.raises(ConfigurationError):
        SyntheticSpec(signal_start=28, signal_end=34)
    with pytest.raises(ConfigurationError):
        SyntheticSpec(signal_start=-1, signal_end=3)
    with pytest.raises(ConfigurationError):
        SyntheticSpec(signal_start=10, signal_end=11)


def test_generate_synthetic_labels_are_binary_and_balanced():
    labels = [w.label for w in generate_synthetic(SyntheticSpec(), 1000, seed=5)]
    assert set(labels) <= {0, 1}
    assert 0.4 <= np.mean(labels) <= 0.6


def test_generate_synthetic_windows_have_disjoint_date_spans():
    windows = generate_synthetic(SyntheticSpec(), 10, seed=0)
    for earlier, later in zip(windows, windows[1:]):
        assert earlier.end_date < later.start_date


# ---------------------------------------------------------------------------
# synthetic series
# ---------------------------------------------------------------------------

def test_series_is_seed_deterministic():
    rows_a, intended_a = generate_synthetic_series(120, seed=7)
    rows_b, intended_b = generate_synthetic_series(120, seed=7)
    assert intended_a == intended_b
    assert [r.features() for r in rows_a] == [r.features() for r in rows_b]


def test_series_rows_satisfy_ohlcv_invariants(tmp_path):
    rows, _ = generate_synthetic_series(200, seed=2)
    for r in rows:
        assert r.low <= min(r.open, r.close)
        assert r.high >= max(r.open, r.close)
        assert r.volume >= 0
    # format closure: written file parses cleanly
    path = tmp_path / "synth.csv"
    write_ohlcv_csv(rows, path)
    assert len(parse_ohlcv_csv(path)) == 200


def test_series_windowed_labels_agree_with_planted_rule_exactly():
    rows, intended = generate_synthetic_series(150, seed=4, lookback=4)
    windows = make_windows(rows, 30)
    checked = 0
    for i, w in enumerate(windows):
        want = intended[i + 29]
        if want is None:
            continue
        assert w.label == want
        checked += 1
    assert checked == len(windows)


def test_series_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        generate_synthetic_series(100, seed=0, lookback=1)
    with pytest.raises(ConfigurationError):
        generate_synthetic_series(100, seed=0, noise_frac=0.5)
    with pytest.raises(ConfigurationError):
        generate_synthetic_series(3, seed=0)
