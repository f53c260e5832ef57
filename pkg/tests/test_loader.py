from datetime import date

import numpy as np
import pytest
from conftest import hourly_rows, make_panel

from kernelcast.config import ColumnSchema
from kernelcast.dataset.loader import DayMatrix, impute_gaps, load_csv
from kernelcast.exceptions import DataError, DuplicateTimestamp, EmptyFile, GapTooLong, MalformedRow


def test_load_builds_day_grid(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24)) + hourly_rows(date(2023, 1, 2), range(100, 124))
    panel = load_csv(write_csv(rows))
    assert panel.n_days == 2
    assert panel.start_date == date(2023, 1, 1)
    assert panel.price.shape == (2, 24)
    assert panel.price[1, 5] == 105.0
    assert panel.residual_load[0, 3] == 43.0
    assert panel.gaps == ()


def test_load_sorts_rows_and_marks_missing_hours(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24))
    del rows[5]
    panel = load_csv(write_csv(list(reversed(rows))))
    assert np.isnan(panel.price[0, 5])
    assert panel.gaps == ((date(2023, 1, 1), 5),)
    assert panel.price[0, 6] == 6.0


def test_custom_column_names(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24))
    path = write_csv(rows, header="time,p,load,res")
    panel = load_csv(path, ColumnSchema(timestamp="time", price="p", residual_load="load", renewables="res"))
    assert panel.renewables[0, 0] == 10.0


def test_header_only_is_empty(write_csv):
    with pytest.raises(EmptyFile):
        load_csv(write_csv([]))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "none.csv")


def test_malformed_number_reports_line(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24))
    rows[3] = "2023-01-01T03:00:00+01:00,abc,1,1"
    with pytest.raises(MalformedRow) as info:
        load_csv(write_csv(rows))
    assert info.value.line == 5


def test_malformed_timestamp_reports_line(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24))
    rows[0] = "yesterday,1,1,1"
    with pytest.raises(MalformedRow) as info:
        load_csv(write_csv(rows))
    assert info.value.line == 2


def test_duplicate_with_same_offset_raises(write_csv):
    rows = hourly_rows(date(2023, 1, 1), range(24))
    rows.append(rows[7])
    with pytest.raises(DuplicateTimestamp) as info:
        load_csv(write_csv(rows))
    assert info.value.hour == 7
    assert info.value.date == date(2023, 1, 1)


def test_autumn_dst_repeated_hour_is_dropped(write_csv):
    day = date(2023, 10, 29)
    rows = hourly_rows(day, range(3), offset="+02:00", hours=range(3))
    rows.append(f"{day.isoformat()}T02:00:00+01:00,999,1,1")
    rows += hourly_rows(day, range(3, 24), offset="+01:00", hours=range(3, 24))
    panel = load_csv(write_csv(rows))
    assert panel.dst_dropped == 1
    assert panel.price[0, 2] == 2.0
    assert panel.gaps == ()


def test_spring_dst_missing_hour_is_a_gap(write_csv):
    day = date(2023, 3, 26)
    rows = hourly_rows(day, range(2), offset="+01:00", hours=range(2))
    rows += hourly_rows(day, range(3, 24), offset="+02:00", hours=range(3, 24))
    panel = load_csv(write_csv(rows))
    assert panel.gaps == ((day, 2),)
    filled = impute_gaps(panel)
    assert filled.price[0, 2] == pytest.approx(2.0)
    assert filled.imputed == ((day, 2),)
    assert filled.gaps == ()


def test_impute_interpolates_linearly():
    panel = make_panel(3)
    price = panel.price.copy()
    price[1, 4:6] = np.nan
    residual_load = panel.residual_load.copy()
    residual_load[1, 4:6] = np.nan
    renewables = panel.renewables.copy()
    renewables[1, 4:6] = np.nan
    gappy = panel.with_values(price=price, residual_load=residual_load, renewables=renewables)

    filled = impute_gaps(gappy, max_run=3)
    left, right = price[1, 3], price[1, 6]
    assert filled.price[1, 4] == pytest.approx(left + (right - left) / 3)
    assert filled.price[1, 5] == pytest.approx(left + 2 * (right - left) / 3)
    assert len(filled.imputed) == 2


def test_impute_edges_take_nearest_neighbour():
    panel = make_panel(2)
    price = panel.price.copy()
    price[0, 0] = np.nan
    filled = impute_gaps(panel.with_values(price=price))
    assert filled.price[0, 0] == panel.price[0, 1]


def test_long_gap_raises_or_is_kept():
    panel = make_panel(3)
    price = panel.price.copy()
    price[1, :5] = np.nan
    gappy = panel.with_values(price=price)

    with pytest.raises(GapTooLong) as info:
        impute_gaps(gappy, max_run=3)
    assert info.value.length == 5
    assert info.value.start == (date(2023, 1, 2), 0)

    kept = impute_gaps(gappy, max_run=3, on_long_gap="keep")
    assert np.isnan(kept.price[1, :5]).all()
    assert len(kept.gaps) == 5


def test_day_matrices_triple():
    panel = make_panel(5)
    triple = panel.to_day_matrices()
    assert triple.n_days == 5
    assert triple.price.date_of(2) == date(2023, 1, 3)
    assert triple.renewables.is_complete
    np.testing.assert_array_equal(triple.to_panel().residual_load, panel.residual_load)


def test_day_matrix_needs_24_columns():
    with pytest.raises(DataError):
        DayMatrix(np.zeros((2, 23)), date(2023, 1, 1))
