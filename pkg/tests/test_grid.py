import math

import numpy as np
import pytest

from src.errors import ConfigurationError, ContractError, DimensionError, UndefinedCorrelationError
from src.grid import (
    Climatology,
    GridSpec,
    VariableSet,
    acc,
    climatology,
    latitude_weights,
    rmse,
    weighted_loss,
)
from src.tensor import GaussianSampler, Tensor, backward, grad_check


@pytest.fixture
def grid():
    return GridSpec.regular(8, 16)


@pytest.fixture
def variables():
    return VariableSet.from_profile(("z500", "t850"))


def _fields(seed, count, shape=(2, 8, 16)):
    return GaussianSampler(seed, 5).normal((count, *shape))


class TestGridSpec:
    def test_regular_grid(self, grid):
        assert (grid.H, grid.W) == (8, 16)
        assert grid.latitudes[0] > grid.latitudes[-1]
        assert grid.longitudes[1] == pytest.approx(22.5)

    def test_non_monotone_latitudes(self):
        with pytest.raises(ConfigurationError):
            GridSpec((10.0, 20.0, 15.0), (0.0, 180.0))

    def test_latitude_out_of_range(self):
        with pytest.raises(ConfigurationError):
            GridSpec((91.0, 0.0), (0.0, 180.0))

    def test_uneven_longitudes(self):
        with pytest.raises(ConfigurationError):
            GridSpec((10.0, 0.0), (0.0, 100.0, 180.0))


class TestVariableSet:
    def test_weights_sum_to_one(self):
        vs = VariableSet.from_profile(VariableSet.default_names(7), "surface")
        assert sum(vs.pressure_weights) == pytest.approx(1.0, abs=1e-12)
        assert vs.pressure_weights[vs.index("t2m")] == pytest.approx(2 * vs.pressure_weights[vs.index("z500")])

    def test_bad_weights(self):
        with pytest.raises(ConfigurationError):
            VariableSet(("a", "b"), (0.7, 0.7))

    def test_duplicate_names(self):
        with pytest.raises(ConfigurationError):
            VariableSet(("a", "a"), (0.5, 0.5))

    def test_unknown_profile(self):
        with pytest.raises(ConfigurationError):
            VariableSet.from_profile(("a",), "exponential")

    def test_default_names_extend(self):
        names = VariableSet.default_names(12)
        assert len(names) == 12 and names[-1] == "var11"


class TestLatitudeWeights:
    def test_equal_latitudes(self):
        np.testing.assert_allclose(latitude_weights([30.0]), [1.0])

    def test_hand_example(self):
        np.testing.assert_allclose(latitude_weights([0.0, 60.0]), [4.0 / 3.0, 2.0 / 3.0])

    @pytest.mark.parametrize("seed", range(20))
    def test_mean_is_one(self, seed):
        sampler = GaussianSampler(seed, 1)
        h = 1 + int(sampler.uniform(1)[0] * 60)
        w = 1 + int(sampler.uniform(1)[0] * 60)
        assert latitude_weights(GridSpec.regular(h, w)).mean() == pytest.approx(1.0, abs=1e-12)

    def test_odd_grid(self):
        assert latitude_weights(GridSpec.regular(33, 4)).mean() == pytest.approx(1.0, abs=1e-12)


class TestRmse:
    def test_identical(self, grid):
        x = _fields(0, 3)
        assert rmse(x, x, grid, 0) == 0.0

    def test_constant_offset(self):
        flat = GridSpec((0.0,), (0.0, 90.0, 180.0, 270.0))
        x = np.zeros((1, 1, 1, 4))
        assert rmse(x + 2.5, x, flat, 0) == pytest.approx(2.5)

    def test_recomputation(self, grid):
        pred, truth = _fields(1, 4), _fields(2, 4)
        weights = np.cos(np.deg2rad(grid.latitudes))
        weights = weights / weights.mean()
        expected = np.mean([
            math.sqrt(sum(
                weights[i] * (pred[t, 1, i, j] - truth[t, 1, i, j]) ** 2 for i in range(8) for j in range(16)
            ) / (8 * 16))
            for t in range(4)
        ])
        assert rmse(pred, truth, grid, 1) == pytest.approx(expected, abs=1e-12)

    def test_empty_series(self, grid):
        with pytest.raises(ContractError):
            rmse([], [], grid, 0)

    def test_shape_mismatch(self, grid):
        with pytest.raises(DimensionError):
            rmse(_fields(0, 2), _fields(0, 3), grid, 0)


class TestAcc:
    def test_identical_is_one(self, grid):
        x = _fields(3, 2)
        clim = Climatology(np.zeros((2, 8, 16)))
        assert acc(x, x, clim, grid, 0) == pytest.approx(1.0, abs=1e-12)

    def test_negated_anomalies(self, grid):
        x = _fields(4, 2)
        base = _fields(5, 1)[0]
        clim = Climatology(base)
        assert acc(base + x, base - x, clim, grid, 1) == pytest.approx(-1.0, abs=1e-12)

    def test_invariant_to_climatology_shift(self, grid):
        pred, truth, c = _fields(6, 2), _fields(7, 2), _fields(8, 1)[0]
        a = acc(pred, truth, Climatology(np.zeros_like(c)), grid, 0)
        b = acc(pred + c, truth + c, Climatology(c), grid, 0)
        assert a == pytest.approx(b, abs=1e-12)

    def test_recomputation(self, grid):
        pred, truth, c = _fields(9, 1)[0], _fields(10, 1)[0], _fields(11, 1)[0]
        weights = latitude_weights(grid)[:, None]
        pa, ta = pred[0] - c[0], truth[0] - c[0]
        expected = (weights * pa * ta).sum() / math.sqrt((weights * pa * pa).sum() * (weights * ta * ta).sum())
        assert acc(pred, truth, Climatology(c), grid, 0) == pytest.approx(expected, abs=1e-12)

    def test_zero_anomaly(self, grid):
        x = _fields(12, 1)
        with pytest.raises(UndefinedCorrelationError):
            acc(x, _fields(13, 1), Climatology(x[0]), grid, 0)


class TestWeightedLoss:
    def test_zero_when_equal(self, grid, variables):
        target = _fields(0, 1)[0]
        pred = Tensor(target, requires_grad=True)
        loss = weighted_loss(pred, target, variables, grid)
        assert loss.item() == 0.0
        np.testing.assert_array_equal(backward(loss)[pred], np.zeros_like(target))

    def test_single_cell(self):
        one_cell = GridSpec((0.0,), (0.0,))
        vs = VariableSet(("x",), (1.0,))
        loss = weighted_loss(Tensor(np.full((1, 1, 1), 2.0)), np.zeros((1, 1, 1)), vs, one_cell)
        assert loss.item() == pytest.approx(4.0)

    def test_homogeneity(self, grid, variables):
        target, delta = _fields(1, 1)[0], _fields(2, 1)[0]
        mse1 = weighted_loss(Tensor(target + delta), target, variables, grid, "mse").item()
        mse3 = weighted_loss(Tensor(target + 3 * delta), target, variables, grid, "mse").item()
        mae1 = weighted_loss(Tensor(target + delta), target, variables, grid, "mae").item()
        mae3 = weighted_loss(Tensor(target + 3 * delta), target, variables, grid, "mae").item()
        assert mse3 == pytest.approx(9 * mse1)
        assert mae3 == pytest.approx(3 * mae1)

    def test_gradient(self, variables):
        small = GridSpec.regular(2, 3)
        target = GaussianSampler(3).normal((2, 2, 3))
        error = grad_check(lambda p: weighted_loss(p, target, variables, small), GaussianSampler(4).normal((2, 2, 3)))
        assert error < 1e-6

    def test_cell_mask(self, grid, variables):
        target = np.zeros((2, 8, 16))
        pred = np.zeros((2, 8, 16))
        pred[0, 3, 5] = 1.0
        mask = np.zeros((2, 8, 16), dtype=bool)
        mask[0, 3, 5] = True
        loss = weighted_loss(Tensor(pred), target, variables, grid, cell_mask=mask).item()
        assert loss == pytest.approx(0.5 * latitude_weights(grid)[3])

    def test_empty_mask(self, grid, variables):
        with pytest.raises(ContractError):
            weighted_loss(Tensor(np.zeros((2, 8, 16))), np.zeros((2, 8, 16)), variables, grid,
                          cell_mask=np.zeros((2, 8, 16), dtype=bool))

    def test_shape_mismatch(self, grid, variables):
        with pytest.raises(DimensionError):
            weighted_loss(Tensor(np.zeros((2, 8, 8))), np.zeros((2, 8, 8)), variables, grid)


class TestClimatology:
    def test_single_snapshot(self):
        x = _fields(0, 1)[0]
        np.testing.assert_array_equal(climatology([x]).mean, x)

    def test_symmetric_pair(self):
        x = _fields(1, 1)[0]
        np.testing.assert_allclose(climatology([x, -x]).mean, 0.0, atol=0.0)

    def test_streaming_mean(self):
        xs = _fields(2, 10)
        np.testing.assert_allclose(climatology(list(xs)).mean, xs.mean(axis=0), atol=1e-12)

    def test_empty(self):
        with pytest.raises(ContractError):
            climatology([])
