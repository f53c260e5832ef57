import numpy as np
import pytest
from conftest import make_panel

from kernelcast.dataset.loader import VARIABLES
from kernelcast.dataset.transforms import (
    TransformSpec,
    forward_transform,
    inverse_signed_log,
    inverse_transform,
    signed_log,
)
from kernelcast.exceptions import SpecNotFitted


def test_signed_log_is_odd_and_invertible():
    x = np.array([-500.0, -1.0, -1e-9, 0.0, 0.3, 42.0, 3000.0])
    np.testing.assert_allclose(signed_log(-x), -signed_log(x))
    np.testing.assert_allclose(inverse_signed_log(signed_log(x)), x, rtol=1e-12, atol=1e-15)
    assert signed_log(0.0) == 0.0


def test_fit_uses_only_window_rows():
    panel = make_panel(30)
    spec = TransformSpec.create().fit(panel, 5, 20)

    price = panel.price.copy()
    price[20:] = 1e6
    price[:5] = -1e6
    changed = panel.with_values(price=price)
    assert TransformSpec.create().fit(changed, 5, 20).train_mean == spec.train_mean


def test_standardized_window_has_zero_mean_unit_std():
    panel = make_panel(30)
    spec = TransformSpec.create().fit(panel, 0, 30)
    transformed = forward_transform(panel, spec)
    for name in VARIABLES:
        values = transformed.variable(name)
        assert values.mean() == pytest.approx(0.0, abs=1e-12)
        assert values.std() == pytest.approx(1.0, rel=1e-12)


def test_inverse_recovers_raw_prices():
    panel = make_panel(10)
    spec = TransformSpec.create().fit(panel, 0, 7)
    restored = inverse_transform(forward_transform(panel, spec), spec)
    np.testing.assert_allclose(restored.price, panel.price, rtol=1e-10)


def test_log_stage_can_be_switched_off():
    panel = make_panel(10)
    spec = TransformSpec.create(signed_log=False, standardize=False)
    np.testing.assert_array_equal(spec.forward(panel.price, "price"), panel.price)


def test_standardize_before_fit_raises():
    with pytest.raises(SpecNotFitted):
        TransformSpec.create().forward(np.ones(3), "price")
    with pytest.raises(SpecNotFitted):
        TransformSpec.create().inverse(np.ones(3), "price")


def test_constant_window_cannot_be_fitted():
    panel = make_panel(10)
    flat = panel.with_values(renewables=np.full(panel.renewables.shape, 3.0))
    with pytest.raises(SpecNotFitted, match="renewables"):
        TransformSpec.create().fit(flat, 0, 10)
