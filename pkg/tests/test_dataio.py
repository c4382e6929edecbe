"""Tests for CSV ingestion, differencing, and artefact injection."""

import numpy as np
import pytest

from arid.errors import HorizonTooShort, IndexOutOfRange, ParseError, RaggedRows
from arid.dataio import first_difference, inject_artefact, load_csv, write_csv
from arid.model import TimeSeries, scalar_values

# ---------------------------------------------------------------------------
# CSV round trips


def test_single_column_file(tmp_path):
    path = tmp_path / "single.csv"
    path.write_text("1\n2\n3\n")
    series = load_csv(path)
    assert series.n_steps == 3
    assert series.n_channels == 1
    np.testing.assert_array_equal(scalar_values(series), [1.0, 2.0, 3.0])


def test_two_column_file(tmp_path):
    path = tmp_path / "pair.csv"
    path.write_text("1,2\n3,4\n")
    series = load_csv(path)
    assert series.n_steps == 2
    assert series.n_channels == 2
    np.testing.assert_array_equal(series.values, [[1.0, 2.0], [3.0, 4.0]])


def test_header_row_becomes_channel_names(tmp_path):
    path = tmp_path / "named.csv"
    path.write_text("left,right\n1,2\n3,4\n")
    series = load_csv(path, has_header=True)
    assert series.channel_names == ("left", "right")
    assert series.n_steps == 2


def test_blank_lines_skipped(tmp_path):
    path = tmp_path / "gaps.csv"
    path.write_text("1\n\n2\n\n\n3\n")
    assert load_csv(path).n_steps == 3


def test_ragged_rows_rejected(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(RaggedRows):
        load_csv(path)


def test_unparseable_cell_reports_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,oops\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert "row 2" in str(info.value)
    assert "column 2" in str(info.value)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        load_csv(path)


def test_roundtrip_preserves_values_bit_exactly(tmp_path):
    rng = np.random.Generator(np.random.Philox(key=81))
    original = TimeSeries(rng.normal(size=(50, 3)) * 10.0 ** rng.integers(-8, 8, size=(50, 3)))
    path = tmp_path / "roundtrip.csv"
    write_csv(original, path)
    reloaded = load_csv(path)
    np.testing.assert_array_equal(reloaded.values, original.values)


# ---------------------------------------------------------------------------
# first differences


def test_difference_hand_example():
    diffed = first_difference(TimeSeries(np.array([1.0, 3.0, 6.0])))
    np.testing.assert_array_equal(scalar_values(diffed), [2.0, 3.0])


def test_difference_of_constant_is_zero():
    diffed = first_difference(TimeSeries(np.full(5, 4.2)))
    np.testing.assert_array_equal(scalar_values(diffed), np.zeros(4))


def test_difference_inverts_cumulative_sum():
    rng = np.random.Generator(np.random.Philox(key=82))
    x = rng.normal(size=(20, 2))
    diffed = first_difference(TimeSeries(np.cumsum(np.vstack((np.zeros(2), x)), axis=0)))
    np.testing.assert_allclose(diffed.values, x, rtol=0, atol=1e-12)


def test_difference_applies_per_channel():
    values = np.column_stack((np.arange(4.0), 2.0 * np.arange(4.0)))
    diffed = first_difference(TimeSeries(values))
    np.testing.assert_array_equal(diffed.values, np.tile([1.0, 2.0], (3, 1)))


def test_difference_needs_two_steps():
    with pytest.raises(HorizonTooShort):
        first_difference(TimeSeries(np.array([1.0])))


# ---------------------------------------------------------------------------
# artefact injection


def test_zero_std_zeroes_the_window():
    y = TimeSeries(np.ones((10, 2)))
    injected = inject_artefact(y, 1, 3, 6, 0.0, seed=0)
    np.testing.assert_array_equal(injected.values[2:6, 0], np.zeros(4))
    np.testing.assert_array_equal(injected.values[:2, 0], np.ones(2))
    np.testing.assert_array_equal(injected.values[6:, 0], np.ones(4))
    np.testing.assert_array_equal(injected.values[:, 1], np.ones(10))


def test_window_bounds_validated():
    y = TimeSeries(np.ones((10, 1)))
    with pytest.raises(IndexOutOfRange):
        inject_artefact(y, 1, 0, 5, 1.0, seed=0)
    with pytest.raises(IndexOutOfRange):
        inject_artefact(y, 1, 3, 11, 1.0, seed=0)
    with pytest.raises(IndexOutOfRange):
        inject_artefact(y, 2, 1, 5, 1.0, seed=0)


def test_injection_replaces_rather_than_adds():
    y = TimeSeries(np.full(8, 100.0))
    injected = inject_artefact(y, 1, 1, 8, 1.0, seed=3)
    assert float(np.abs(scalar_values(injected)).max()) < 50.0


def test_injection_deterministic_under_seed():
    y = TimeSeries(np.zeros(20))
    first = inject_artefact(y, 1, 5, 15, 2.0, seed=9)
    second = inject_artefact(y, 1, 5, 15, 2.0, seed=9)
    np.testing.assert_array_equal(first.values, second.values)
    different = inject_artefact(y, 1, 5, 15, 2.0, seed=10)
    assert not np.array_equal(first.values, different.values)


def test_injected_window_matches_requested_std():
    y = TimeSeries(np.zeros(10000))
    injected = inject_artefact(y, 1, 1, 10000, 3.0, seed=11)
    sample_std = float(np.std(scalar_values(injected)))
    assert abs(sample_std - 3.0) / 3.0 < 0.03


def test_original_series_left_untouched():
    y = TimeSeries(np.ones(10))
    inject_artefact(y, 1, 2, 5, 1.0, seed=1)
    np.testing.assert_array_equal(scalar_values(y), np.ones(10))
