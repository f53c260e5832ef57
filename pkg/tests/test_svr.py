import numpy as np
import pytest
from conftest import random_problem
from scipy import optimize

from kernelcast.config import Settings
from kernelcast.exceptions import DimensionMismatch, ModelError, NoConvergence, WindowTooShort
from kernelcast.models import svr
from kernelcast.models.base import ForecasterRegistry
from kernelcast.models.svr import SvrConfig


def _slsqp_dual(inputs, targets, config):
    """Reference optimum of the dual over (alpha, alpha*) with a generic solver."""
    config = config.resolved(inputs)
    kernel = svr.svr_kernel(inputs, inputs, config)
    n = len(targets)

    def objective(z):
        beta = z[:n] - z[n:]
        value = 0.5 * beta @ kernel @ beta + config.epsilon * z.sum() - targets @ beta
        grad_beta = kernel @ beta - targets
        return value, np.concatenate((grad_beta + config.epsilon, -grad_beta + config.epsilon))

    result = optimize.minimize(
        objective,
        np.zeros(2 * n),
        jac=True,
        method="SLSQP",
        bounds=[(0.0, config.C)] * (2 * n),
        constraints=[{"type": "eq", "fun": lambda z: z[:n].sum() - z[n:].sum()}],
        options={"ftol": 1e-12, "maxiter": 1000},
    )
    return -result.fun


def test_dual_reaches_reference_optimum(rng):
    kinds = ("squared_exponential", "polynomial", "linear")
    for trial in range(30):
        inputs, targets = random_problem(rng, 12, 3)
        config = SvrConfig(
            C=float(rng.choice([0.1, 1.0, 10.0])),
            epsilon=float(rng.choice([0.001, 0.01, 0.1])),
            kernel_kind=kinds[trial % 3],
            coef0=1.0,
        )
        model = svr.solve_dual(inputs, targets, config, tol=1e-8, max_passes=2000)
        assert model.converged
        assert model.dual_objective >= _slsqp_dual(inputs, targets, config) - 1e-6

        beta = model.dual_coefs
        assert abs(beta.sum()) <= 1e-10
        assert (np.abs(beta) <= config.C + 1e-12).all()
        assert svr.kkt_violation(model, targets) <= 1e-3
        assert -1e-8 <= svr.duality_gap(model, targets) <= 1e-4


def test_fits_a_smooth_function(rng):
    inputs = np.linspace(-3, 3, 60)[:, None]
    targets = np.sin(inputs[:, 0])
    model = svr.solve_dual(inputs, targets, SvrConfig(C=10.0, epsilon=0.01, gamma=1.0), tol=1e-6)
    np.testing.assert_allclose(svr.predict(model, inputs), targets, atol=0.05)
    assert svr.epsilon_insensitive_loss(model, inputs, targets) < 0.5


def test_strict_mode_raises_without_convergence(rng):
    inputs, targets = random_problem(rng, 30, 4)
    config = SvrConfig(C=10.0, epsilon=0.001)
    with pytest.raises(NoConvergence):
        svr.solve_dual(inputs, targets, config, tol=1e-12, max_passes=1, strict=True)

    model = svr.solve_dual(inputs, targets, config, tol=1e-12, max_passes=1)
    assert not model.converged
    assert model.iterations == 60


def test_wide_tube_keeps_no_support_vectors(rng):
    inputs = rng.normal(size=(10, 2))
    targets = np.linspace(1.0, 2.0, 10)
    model = svr.solve_dual(inputs, targets, SvrConfig(epsilon=5.0))
    assert model.support_index.size == 0
    assert model.bias == pytest.approx(1.5)
    np.testing.assert_array_equal(svr.predict(model, rng.normal(size=(3, 2))), np.full(3, model.bias))


def test_default_grid_cells():
    grid = svr.default_grid()
    assert len(grid) == 72
    kinds = [cell.kernel_kind for cell in grid]
    assert kinds.count("squared_exponential") == 9
    assert kinds.count("polynomial") == 27
    assert all(cell.degree == 2 for cell in grid)


def test_grid_search(rng):
    inputs, targets = random_problem(rng, 40, 2)
    single = [SvrConfig(C=5.0)]
    assert svr.grid_search(inputs, targets, grid=single) is single[0]

    grid = [SvrConfig(C=c, epsilon=0.01) for c in (0.1, 1.0, 10.0)]
    best = svr.grid_search(inputs, targets, holdout_days=10, grid=grid)
    assert best in grid

    with pytest.raises(WindowTooShort):
        svr.grid_search(inputs[:11], targets[:11], holdout_days=10, grid=grid)
    with pytest.raises(ModelError):
        svr.grid_search(inputs, targets, grid=[])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"C": 0.0},
        {"epsilon": -0.1},
        {"kernel_kind": "laplacian"},
        {"kernel_kind": "polynomial", "degree": 0},
        {"gamma": -1.0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ModelError):
        SvrConfig(**kwargs)


def test_gamma_defaults_to_inverse_dimension_times_variance(rng):
    inputs = rng.normal(scale=2.0, size=(50, 4))
    resolved = SvrConfig().resolved(inputs)
    assert resolved.gamma == pytest.approx(1.0 / (4 * inputs.var()))
    assert SvrConfig(gamma=0.3).resolved(inputs).gamma == 0.3


def test_shape_checks(rng):
    inputs, targets = random_problem(rng, 10, 2)
    with pytest.raises(DimensionMismatch):
        svr.solve_dual(inputs, targets[:-1], SvrConfig())
    model = svr.solve_dual(inputs, targets, SvrConfig())
    with pytest.raises(DimensionMismatch):
        svr.predict(model, rng.normal(size=(2, 3)))


def test_forecaster_gives_intervals_around_points(rng):
    settings = Settings()
    settings.svr.grid_search = False
    settings.conformal.num_candidates = 500
    settings.conformal.bootstrap_reps = 5
    forecaster = ForecasterRegistry.create("svr", settings)
    assert isinstance(forecaster, svr.SvrForecaster)

    inputs, targets = random_problem(rng, 30, 3)
    forecaster.fit(inputs, targets, rng=np.random.default_rng(0))
    forecast = forecaster.predict(rng.normal(size=(3, 3)), rng=np.random.default_rng(1))
    assert forecast.model == "svr"
    assert (forecast.lower <= forecast.point).all()
    assert (forecast.point <= forecast.upper).all()

    again = forecaster.predict(rng.normal(size=(3, 3)), rng=np.random.default_rng(1))
    assert len(again) == 3


def test_split_conformal_holds_out_calibration_days(rng):
    settings = Settings()
    settings.svr.grid_search = False
    settings.conformal.split = True
    settings.conformal.calibration_days = 10
    forecaster = ForecasterRegistry.create("svr", settings)
    inputs, targets = random_problem(rng, 30, 3)
    forecaster.fit(inputs, targets)
    assert forecaster.model.train_inputs.shape[0] == 20
    assert forecaster.calibration.n == 10

    with pytest.raises(WindowTooShort):
        forecaster.fit(inputs[:11], targets[:11])


def test_grid_picks_polynomial_on_a_quadratic():
    inputs = np.linspace(-2.0, 2.0, 40)[:, None]
    targets = inputs[:, 0] ** 2
    best = svr.grid_search(inputs, targets, holdout_days=8, grid=svr.default_grid(degree=2))
    assert best.kernel_kind == "polynomial"


def test_training_loss_never_grows_with_C(rng):
    inputs, targets = random_problem(rng, 30, 2)
    losses = []
    for C in (0.1, 1.0, 10.0):
        model = svr.solve_dual(inputs, targets, SvrConfig(C=C, epsilon=0.01, gamma=0.5), tol=1e-8, max_passes=5000)
        assert model.converged
        losses.append(svr.epsilon_insensitive_loss(model, inputs, targets))
    assert losses[0] >= losses[1] - 1e-6
    assert losses[1] >= losses[2] - 1e-6


def test_row_order_does_not_change_the_fit(rng):
    inputs, targets = random_problem(rng, 25, 2)
    order = rng.permutation(25)
    config = SvrConfig(C=1.0, epsilon=0.05, gamma=0.5)
    query = rng.normal(size=(6, 2))

    plain = svr.solve_dual(inputs, targets, config, tol=1e-10, max_passes=5000)
    permuted = svr.solve_dual(inputs[order], targets[order], config, tol=1e-10, max_passes=5000)
    np.testing.assert_allclose(svr.predict(permuted, query), svr.predict(plain, query), atol=1e-5)


def test_moving_points_inside_the_tube_changes_nothing(rng):
    inputs = np.linspace(-3.0, 3.0, 40)[:, None]
    targets = np.sin(inputs[:, 0]) + 0.2 * rng.normal(size=40)
    config = SvrConfig(C=1.0, epsilon=0.15, gamma=1.0)
    model = svr.solve_dual(inputs, targets, config, tol=1e-10, max_passes=5000)

    residual = targets - svr.predict(model, inputs)
    inside = np.abs(residual) < config.epsilon - 0.02
    assert inside.sum() >= 3
    assert np.abs(model.dual_coefs[inside]).max() < 1e-8

    moved = targets.copy()
    moved[inside] += np.where(residual[inside] > 0, -0.01, 0.01)
    refit = svr.solve_dual(inputs, moved, config, tol=1e-10, max_passes=5000)
    np.testing.assert_allclose(svr.predict(refit, inputs), svr.predict(model, inputs), atol=1e-5)


def test_odd_targets_on_symmetric_inputs_have_zero_bias():
    inputs = np.linspace(-2.0, 2.0, 21)[:, None]
    targets = np.sin(inputs[:, 0])
    model = svr.solve_dual(inputs, targets, SvrConfig(C=1.0, epsilon=0.01, gamma=1.0), tol=1e-10, max_passes=5000)
    assert model.bias == pytest.approx(0.0, abs=1e-6)


def test_grid_ties_go_to_smaller_C_then_wider_tube(rng):
    # tube wider than the target range: every cell predicts the same constant
    inputs, targets = random_problem(rng, 30, 2)
    by_C = [SvrConfig(C=C, epsilon=5.0) for C in (10.0, 0.1, 1.0)]
    assert svr.grid_search(inputs, targets, holdout_days=10, grid=by_C).C == 0.1

    by_epsilon = [SvrConfig(C=1.0, epsilon=eps) for eps in (5.0, 7.0, 6.0)]
    assert svr.grid_search(inputs, targets, holdout_days=10, grid=by_epsilon).epsilon == 7.0
