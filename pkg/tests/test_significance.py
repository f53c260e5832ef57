from datetime import date, timedelta

import numpy as np
import pandas as pd
import pytest

from kernelcast.evaluation import dm_test, friedman_nemenyi, friedman_test, nemenyi
from kernelcast.evaluation.significance import daily_mse, dm_table, long_run_variance, loss_matrix
from kernelcast.exceptions import DegenerateRanks, EvaluationError, LengthMismatch, ZeroVariance


def test_identical_losses_have_zero_variance(rng):
    losses = rng.gamma(2.0, size=30)
    with pytest.raises(ZeroVariance):
        dm_test(losses, losses)


def test_dm_is_antisymmetric_and_shift_invariant(rng):
    a, b = rng.gamma(2.0, size=50), rng.gamma(2.0, size=50)
    forward, backward = dm_test(a, b), dm_test(b, a)
    assert forward.statistic == pytest.approx(-backward.statistic)
    assert forward.p_value == pytest.approx(backward.p_value)
    assert forward.lag == 3 and forward.n == 50

    shifted = dm_test(a + 7.0, b + 7.0)
    assert shifted.statistic == pytest.approx(forward.statistic)


def test_dm_input_checks(rng):
    with pytest.raises(EvaluationError, match="at least 10"):
        dm_test(rng.normal(size=9), rng.normal(size=9))
    with pytest.raises(LengthMismatch):
        dm_test(rng.normal(size=12), rng.normal(size=13))


def test_long_run_variance_without_lags_is_the_variance(rng):
    x = rng.normal(size=40)
    assert long_run_variance(x, 0) == pytest.approx(x.var())


@pytest.mark.slow
def test_dm_size_and_power():
    rng = np.random.default_rng(2024)
    rejections = 0
    for _ in range(1000):
        rejections += dm_test(rng.normal(size=200), rng.normal(size=200)).p_value < 0.05
    assert 0.03 <= rejections / 1000 <= 0.08

    detected = 0
    for _ in range(200):
        detected += dm_test(rng.normal(0.5, 1.0, size=200), rng.normal(size=200)).p_value < 0.05
    assert detected / 200 >= 0.95


def test_friedman_ranks_the_lower_loss_first(rng):
    better = rng.uniform(0, 1, size=20)
    result = friedman_test(np.vstack((better, better + 1.0)))
    np.testing.assert_array_equal(result.mean_ranks, [1.0, 2.0])
    assert result.statistic == pytest.approx(20.0)
    assert result.p_value < 1e-4


def test_friedman_full_ties():
    result = friedman_test(np.ones((3, 8)))
    assert result.statistic == 0.0
    assert result.p_value == 1.0
    np.testing.assert_array_equal(result.mean_ranks, [2.0, 2.0, 2.0])

    pair = friedman_test(np.ones((2, 5)))
    np.testing.assert_array_equal(pair.mean_ranks, [1.5, 1.5])


def test_friedman_tie_corrected_statistic():
    losses = np.array([[1.0, 1.0, 2.0, 1.0], [2.0, 2.0, 1.0, 1.0], [3.0, 3.0, 3.0, 2.0]])
    result = friedman_test(losses)
    # (12 / (n k (k + 1)) * sum R^2 - 3 n (k + 1)) / (1 - 6 / (n k (k^2 - 1)))
    assert result.statistic == pytest.approx(6.125 / 0.9375)
    assert result.p_value == pytest.approx(np.exp(-result.statistic / 2.0))
    np.testing.assert_allclose(result.mean_ranks, [5.5 / 4, 6.5 / 4, 3.0])


def test_friedman_two_models_counts_wins_and_losses():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    b = np.array([2.0, 3.0, 4.0, 5.0, 5.0, 1.0])
    result = friedman_test(np.vstack((a, b)))
    assert result.statistic == pytest.approx((4 - 1) ** 2 / (4 + 1))
    np.testing.assert_allclose(result.mean_ranks, [1.25, 1.75])


def test_friedman_is_invariant_to_monotone_transforms(rng):
    losses = rng.gamma(2.0, size=(4, 30))
    plain, logged = friedman_test(losses), friedman_test(np.log(losses))
    assert plain.statistic == pytest.approx(logged.statistic)
    np.testing.assert_array_equal(plain.mean_ranks, logged.mean_ranks)


@pytest.mark.parametrize("shape", [(1, 10), (3, 1), (5,)])
def test_friedman_needs_two_models_and_blocks(shape):
    with pytest.raises(DegenerateRanks):
        friedman_test(np.ones(shape))


@pytest.mark.slow
def test_friedman_is_calibrated_under_the_null():
    rng = np.random.default_rng(99)
    rejections = sum(friedman_test(rng.normal(size=(3, 50))).p_value < 0.05 for _ in range(1000))
    assert 0.03 <= rejections / 1000 <= 0.08


def test_nemenyi_critical_difference():
    result = nemenyi(np.array([1.0, 2.0, 3.0]), n_blocks=50)
    scale = np.sqrt(3 * 4 / (6.0 * 50))
    assert result.critical_difference / scale == pytest.approx(2.343, abs=1e-3)
    assert result.p_values.shape == (3, 3)
    np.testing.assert_array_equal(np.diag(result.p_values), 1.0)
    assert result.p_values[0, 2] < result.p_values[0, 1]
    assert result.p_values[0, 2] == result.p_values[2, 0]


def test_friedman_nemenyi_report(rng):
    losses = rng.gamma(2.0, size=(3, 25))
    report = friedman_nemenyi(losses, ["gpr", "svr", "lear"])
    assert report["models"] == ["gpr", "svr", "lear"]
    assert report["n_blocks"] == 25
    assert set(report["mean_ranks"]) == {"gpr", "svr", "lear"}
    assert sum(report["mean_ranks"].values()) == pytest.approx(6.0)
    assert len(report["nemenyi"]["p_values"]) == 3


def _daily_table(days, rng):
    rows = []
    for day in days:
        for model, scale in (("gpr", 1.0), ("hybrid", 0.8), ("lear", 1.5)):
            rows.append({"model": model, "date": day, "horizon_day": 0, "rmse": scale * rng.gamma(4.0)})
    return pd.DataFrame(rows)


def test_loss_matrix_keeps_days_every_model_has(rng):
    days = [date(2023, 1, 1) + timedelta(days=i) for i in range(12)]
    table = _daily_table(days, rng)
    table = table[~((table["model"] == "lear") & (table["date"] == days[3]))]
    matrix = loss_matrix(table, "rmse")
    assert list(matrix.columns) == ["gpr", "hybrid", "lear"]
    assert len(matrix) == 11
    np.testing.assert_allclose(daily_mse(table).to_numpy(), matrix.to_numpy() ** 2)


def test_dm_table_per_year(rng):
    days = [date(2022, 12, 25) + timedelta(days=i) for i in range(40)]
    losses = daily_mse(_daily_table(days, rng))
    entries = dm_table(losses, focus="hybrid")

    assert len(entries) == 2 * 3
    assert {(e["model_a"], e["model_b"]) for e in entries} == {("gpr", "hybrid"), ("hybrid", "lear")}
    short = [e for e in entries if e["period"] == 2022]
    assert all(e["n"] == 7 and e["statistic"] is None and "at least 10" in e["note"] for e in short)
    full = [e for e in entries if e["period"] == "all"]
    assert all(e["n"] == 40 and e["p_value"] is not None for e in full)

    assert len(dm_table(losses)) == 3 * 3
    assert dm_table(pd.DataFrame()) == []
