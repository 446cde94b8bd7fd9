import math
from fractions import Fraction

import numpy as np
import pytest

from src.errors import ConfigurationError, ContractError, InfiniteDifficultyError
from src.masking import apply, frame_ratios, make_plan, masked_count, task_difficulty
from src.model import TokenSequence
from src.tensor import GaussianSampler, Tensor, backward
from src.tensor import sum as tensor_sum

RATIOS = [0.5, 0.75, 0.95, 0.99]


class TestMaskedCount:
    @pytest.mark.parametrize("ratio", RATIOS)
    def test_matches_half_up_rounding(self, ratio):
        exact = Fraction(repr(ratio))
        for n in [1, 2, 3, 7, 8, 16, 99, 100, 101, 1024, 16380, 99999, 100000]:
            assert masked_count(ratio, n) == math.floor(exact * n + Fraction(1, 2)), n

    def test_halves_round_up(self):
        assert masked_count(0.5, 3) == 2
        assert masked_count(0.5, 1) == 1
        assert masked_count(0.75, 2) == 2

    @pytest.mark.parametrize("n", [1, 5, 64])
    def test_extremes(self, n):
        assert masked_count(0.0, n) == 0
        assert masked_count(1.0, n) == n


class TestMaskPlan:
    @pytest.mark.parametrize("ratio", RATIOS)
    def test_exact_sizes(self, ratio):
        plan = make_plan(128, ratio, 0.0, seed=3)
        assert len(plan.frame2_indices) == masked_count(ratio, 128)
        assert len(set(plan.frame2_indices)) == len(plan.frame2_indices)
        assert plan.frame1_indices == ()
        assert all(0 <= i < 128 for i in plan.frame2_indices)

    def test_deterministic(self):
        assert make_plan(64, 0.75, 0.5, seed=9) == make_plan(64, 0.75, 0.5, seed=9)

    def test_seed_changes_selection(self):
        assert make_plan(64, 0.5, 0.0, seed=1).frame2_indices != make_plan(64, 0.5, 0.0, seed=2).frame2_indices

    def test_flags(self):
        plan = make_plan(10, 0.3, 1.0, seed=0)
        assert plan.flags(2).sum() == 3
        assert plan.flags(1).all()

    @pytest.mark.parametrize("r_t, r_prev", [(-0.1, 0.0), (1.1, 0.0), (0.5, 2.0)])
    def test_bad_ratio(self, r_t, r_prev):
        with pytest.raises(ContractError):
            make_plan(8, r_t, r_prev, seed=0)

    def test_bad_frame(self):
        with pytest.raises(ContractError):
            make_plan(8, 0.5, 0.0, seed=0).indices(3)


class TestApply:
    def _tokens(self, n=32, d=4):
        return TokenSequence(Tensor(GaussianSampler(5).normal((n, d))))

    def test_unmasked_tokens_are_bit_identical(self):
        tokens = self._tokens()
        plan = make_plan(32, 0.75, 0.0, seed=4)
        out = apply(tokens, plan, frame=2)
        keep = ~plan.flags(2)
        np.testing.assert_array_equal(out.tokens.numpy()[keep], tokens.tokens.numpy()[keep])
        assert not np.any(out.tokens.numpy()[~keep] == tokens.tokens.numpy()[~keep])
        np.testing.assert_array_equal(out.masked, plan.flags(2))

    def test_unmasked_frame_passes_through(self):
        tokens = self._tokens()
        out = apply(tokens, make_plan(32, 0.75, 0.0, seed=4), frame=1)
        np.testing.assert_array_equal(out.tokens.numpy(), tokens.tokens.numpy())
        assert not out.masked.any()

    def test_noise_is_seeded(self):
        tokens = self._tokens()
        plan = make_plan(32, 0.5, 0.0, seed=4)
        np.testing.assert_array_equal(apply(tokens, plan).tokens.numpy(), apply(tokens, plan).tokens.numpy())

    def test_size_mismatch(self):
        with pytest.raises(ContractError):
            apply(self._tokens(n=16), make_plan(32, 0.5, 0.0, seed=0))

    def test_gradient_flows_to_visible_tokens(self):
        leaf = Tensor(GaussianSampler(1).normal((8, 2)), requires_grad=True)
        plan = make_plan(8, 0.5, 0.0, seed=2)
        grads = backward(tensor_sum(apply(TokenSequence(leaf), plan).tokens))
        np.testing.assert_array_equal(grads[leaf], np.repeat((~plan.flags(2)).astype(float)[:, None], 2, axis=1))

    def test_fill_replaces_masked_rows(self):
        tokens = self._tokens()
        plan = make_plan(32, 0.75, 0.0, seed=4)
        fill = GaussianSampler(9).normal((32, 4))
        out = apply(tokens, plan, frame=2, fill=fill).tokens.numpy()
        flags = plan.flags(2)
        np.testing.assert_array_equal(out[flags], fill[flags])
        np.testing.assert_array_equal(out[~flags], tokens.tokens.numpy()[~flags])

    def test_fill_shape_mismatch(self):
        with pytest.raises(ContractError):
            apply(self._tokens(), make_plan(32, 0.5, 0.0, seed=0), fill=np.zeros((32, 3)))

    def test_gradient_flows_to_fill(self):
        fill = Tensor(np.zeros((8, 2)), requires_grad=True)
        plan = make_plan(8, 0.5, 0.0, seed=2)
        grads = backward(tensor_sum(apply(self._tokens(n=8, d=2), plan, fill=fill).tokens))
        np.testing.assert_array_equal(grads[fill], np.repeat(plan.flags(2).astype(float)[:, None], 2, axis=1))


class TestFrameRatios:
    def test_objectives(self):
        assert frame_ratios("siamese", 0.75) == (0.75, 0.0)
        assert frame_ratios("mae", 0.75) == (0.75, 1.0)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            frame_ratios("bert", 0.5)


class TestDifficulty:
    def test_siamese_is_easier_than_mae(self):
        assert task_difficulty(1.0, 1.0, 0.75, 1.0).value == pytest.approx(4.0)
        assert task_difficulty(1.0, 1.0, 0.75, 0.0).value == pytest.approx(0.8)

    @pytest.mark.parametrize("r_prev", [0.0, 0.5, 1.0])
    def test_monotone_in_masking_ratio(self, r_prev):
        values = [task_difficulty(1.0, 0.5, r, r_prev).value for r in [0.0, 0.25, 0.5, 0.75, 0.95]]
        assert values == sorted(values)

    def test_fully_masked_is_infinite(self):
        with pytest.raises(InfiniteDifficultyError):
            task_difficulty(1.0, 1.0, 1.0, 1.0)

    def test_zero_information_is_infinite(self):
        with pytest.raises(InfiniteDifficultyError):
            task_difficulty(0.0, 0.0, 0.5, 0.5)

    @pytest.mark.parametrize("args", [(-1.0, 1.0, 0.5, 0.5), (1.0, 1.0, 1.5, 0.0)])
    def test_bad_arguments(self, args):
        with pytest.raises(ContractError):
            task_difficulty(*args)
