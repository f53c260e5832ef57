import json

import numpy as np
import pandas as pd
import pytest
from conftest import random_problem

from kernelcast.backtest import diagnose_kernels, diagnose_window
from kernelcast.backtest.diagnostics import KINDS, kernel_grams
from kernelcast.exceptions import InsufficientHistory
from kernelcast.models.kernels import KernelParams


def read_grams(written):
    return {kind: pd.read_csv(written[f"gram_{kind}"], header=None).to_numpy() for kind in KINDS}


def test_kernel_grams_are_additive():
    inputs = np.linspace(0.0, 3.0, 12).reshape(-1, 1)
    params = KernelParams.create(sigma_se=0.7, ell_se=0.4, sigma_rq=1.3, ell_rq=2.0, alpha_rq=0.5)
    grams = kernel_grams(inputs, params)
    np.testing.assert_allclose(grams["sum"], grams["se"] + grams["rq"], rtol=0, atol=1e-12)


def test_default_mode_grams_are_additive(rng):
    inputs, targets = random_problem(rng, 15, 3)
    result = diagnose_window(inputs, targets, restarts=1, seed=4, max_iter=20)

    np.testing.assert_allclose(result.grams["sum"], result.grams["se"] + result.grams["rq"], rtol=0, atol=1e-12)
    assert result.fitted_params["sum"] == result.params
    assert result.fitted_params["se"] != result.params
    assert result.fitted_counts["sum"] == result.counts["sum"]
    for kind in KINDS:
        assert result.grams[kind].shape == (15, 15)
        assert 0 <= result.fitted_counts[kind].count <= 15 * 15


def test_shared_mode_skips_separate_fits(rng):
    inputs, targets = random_problem(rng, 15, 3)
    result = diagnose_window(inputs, targets, mode="shared", restarts=1, seed=4, max_iter=20)
    assert result.fitted_params is None
    assert result.fitted_counts is None
    np.testing.assert_allclose(result.grams["sum"], result.grams["se"] + result.grams["rq"], rtol=0, atol=1e-12)


def test_separately_fitted_counts_order_se_rq_sum():
    # linear trend plus a fast oscillation
    rng = np.random.default_rng(11)
    x = np.sort(rng.uniform(0.0, 10.0, 200))
    y = 0.8 * x + np.sin(4.0 * x) + 0.05 * rng.normal(size=x.size)

    result = diagnose_window(x.reshape(-1, 1), y, mode="fitted", restarts=3, seed=2, max_iter=200)
    counts = {kind: result.fitted_counts[kind].count for kind in KINDS}
    assert counts["se"] > counts["rq"] > counts["sum"]


def test_default_mode_writes_additive_grams_and_fitted_counts(panel, make_settings, tmp_path):
    settings = make_settings("diagnostics.hour = 8")
    written = diagnose_kernels(settings, panel, outdir=tmp_path / "diag")

    grams = read_grams(written)
    np.testing.assert_allclose(grams["sum"], grams["se"] + grams["rq"], rtol=0, atol=1e-12)

    summary = json.loads(written["counts"].read_text())
    assert summary["mode"] == "fitted"
    assert set(summary["fitted"]) == set(KINDS)
    assert summary["fitted"]["sum"]["count"] == summary["kernels"]["sum"]["count"]
    assert summary["fitted"]["sum"]["params"] == summary["kernels"]["sum"]["params"]
    assert summary["fitted"]["se"]["params"] != summary["fitted"]["sum"]["params"]


def test_shared_mode_writes_additive_grams(panel, make_settings, tmp_path):
    settings = make_settings("diagnostics.mode = shared", "diagnostics.hour = 8")
    written = diagnose_kernels(settings, panel, outdir=tmp_path / "diag")

    grams = read_grams(written)
    n = 20
    for kind in KINDS:
        assert grams[kind].shape == (n, n)
    np.testing.assert_allclose(grams["sum"], grams["se"] + grams["rq"], rtol=0, atol=1e-12)

    summary = json.loads(written["counts"].read_text())
    assert summary["day"] == panel.date_of(27).isoformat()
    assert summary["hour"] == 8
    assert summary["mode"] == "shared"
    assert summary["n"] == n
    assert summary["fitted"] is None
    assert summary["kernels"]["se"]["params"] == summary["kernels"]["sum"]["params"]
    assert summary["kernels"]["rq"]["fraction"] == pytest.approx(summary["kernels"]["rq"]["count"] / n**2)


def test_default_output_dir(panel, make_settings, tmp_path):
    settings = make_settings("diagnostics.mode = shared", output_dir=tmp_path / "run")
    written = diagnose_kernels(settings, panel)
    assert written["counts"] == tmp_path / "run" / "diagnostics" / "kernel_counts.json"


def test_window_must_be_covered(panel, make_settings):
    settings = make_settings(f"diagnostics.day = {panel.date_of(10)}")
    with pytest.raises(InsufficientHistory):
        diagnose_kernels(settings, panel)
