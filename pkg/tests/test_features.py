from datetime import date

import numpy as np
import pytest
from conftest import make_panel

from kernelcast.dataset.features import (
    FEATURE_DIM,
    DayIndexScale,
    FeatureVector,
    build_day_dataset,
    build_hour_dataset,
    build_prediction_inputs,
    day_features,
    weekday_dummies,
)
from kernelcast.exceptions import DataError, LagUnavailable, WindowTooShort


def test_feature_dimension():
    assert FEATURE_DIM == 248


def test_window_yields_one_pair_per_day_after_the_lags():
    panel = make_panel(30)
    dataset = build_day_dataset(panel, (3, 23))
    assert len(dataset) == 13
    assert dataset.inputs.shape == (13, FEATURE_DIM)
    assert dataset.targets.shape == (13, 24)
    np.testing.assert_array_equal(dataset.rows, np.arange(10, 23))
    np.testing.assert_array_equal(dataset.targets, panel.price[10:23])


def test_feature_blocks_hold_the_right_lags():
    panel = make_panel(20)
    scale = DayIndexScale(origin=7, span=10.0)
    vector = FeatureVector.from_array(day_features(panel, 12, scale))
    assert vector.day_index == pytest.approx(0.5)
    for block, lag in zip(vector.price_lags, (1, 2, 3, 7)):
        np.testing.assert_array_equal(block, panel.price[12 - lag])
    for block, lag in zip(vector.load_terms, (0, 1, 7)):
        np.testing.assert_array_equal(block, panel.residual_load[12 - lag])
    for block, lag in zip(vector.renewables_terms, (0, 1, 7)):
        np.testing.assert_array_equal(block, panel.renewables[12 - lag])
    assert vector.weekday_dummies.sum() == 1.0
    assert vector.weekday_dummies[panel.date_of(12).weekday()] == 1.0
    np.testing.assert_array_equal(vector.as_array(), day_features(panel, 12, scale))


def test_features_never_read_the_target_day_price():
    panel = make_panel(20)
    scale = DayIndexScale(origin=7, span=10.0)
    before = day_features(panel, 15, scale)
    price = panel.price.copy()
    price[15] = 1e9
    after = day_features(panel.with_values(price=price), 15, scale)
    np.testing.assert_array_equal(before, after)


def test_day_index_spans_zero_to_one():
    dataset = build_day_dataset(make_panel(30), (0, 30))
    assert dataset.inputs[0, 0] == 0.0
    assert dataset.inputs[-1, 0] == 1.0


def test_weekday_dummies():
    np.testing.assert_array_equal(weekday_dummies(date(2023, 1, 2)), [1, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(weekday_dummies(date(2023, 1, 1)), [0, 0, 0, 0, 0, 0, 1])


def test_short_window_and_missing_lags():
    panel = make_panel(20)
    with pytest.raises(WindowTooShort):
        build_day_dataset(panel, (0, 7))
    with pytest.raises(LagUnavailable):
        day_features(panel, 6, DayIndexScale(origin=0, span=1.0))
    with pytest.raises(LagUnavailable):
        build_day_dataset(panel, (15, 25))


def test_incomplete_days_are_skipped():
    panel = make_panel(20)
    price = panel.price.copy()
    price[12, 3] = np.nan
    dataset = build_day_dataset(panel.with_values(price=price), (0, 20))
    # row 12 is missing as a target and as lag 1, 2, 3 and 7 of later rows
    assert 12 not in dataset.rows
    assert 13 not in dataset.rows and 19 not in dataset.rows
    assert np.isfinite(dataset.inputs).all()


def test_hour_dataset_selects_one_target_column():
    panel = make_panel(20)
    inputs, targets = build_hour_dataset(panel, 5, (0, 20))
    np.testing.assert_array_equal(targets, panel.price[7:20, 5])
    assert inputs.shape == (13, FEATURE_DIM)
    with pytest.raises(DataError):
        build_hour_dataset(panel, 24, (0, 20))


def test_prediction_inputs_accept_price_override():
    panel = make_panel(20)
    scale = DayIndexScale(origin=7, span=10.0)
    override = {18: np.full(24, -3.0)}
    inputs = build_prediction_inputs(panel, [19], scale, price_override=override)
    vector = FeatureVector.from_array(inputs[0])
    np.testing.assert_array_equal(vector.price_lags[0], np.full(24, -3.0))
    np.testing.assert_array_equal(vector.price_lags[1], panel.price[17])
