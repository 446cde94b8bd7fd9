import math

import numpy as np
import pytest

from src.errors import ConfigurationError, ContractError, DimensionError
from src.model import (
    BaguanModel,
    Checkpoint,
    ModelConfig,
    ModelParams,
    TokenSequence,
    adaln_modulate,
    aggregate_variables,
    attention_row,
    build_frame2,
    decode,
    embed_frame,
    encode,
    forward,
    init_params,
    lead_embedding,
    load_checkpoint,
    load_models,
    multi_head_attention,
    parameter_shapes,
    patchify,
    reset_decoder,
    save_checkpoint,
    token_cell_mask,
    token_count,
    unpatchify,
)
from src.model.network import encoder_block
from src.synthdata import FieldState
from src.tensor import GaussianSampler, Tensor, grad_check, mean

GRAD_TOLERANCE = 1e-5


def _gelu(x):
    return 0.5 * x * (1.0 + np.tanh(math.sqrt(2.0 / math.pi) * (x + 0.044715 * x ** 3)))


def _softmax(s):
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _scalar_loss(params, cfg, x, target, seed=0, lead=6):
    frame2 = build_frame2(params, cfg, lead, seed)
    pred = forward(params, cfg, x, frame2, lead)
    diff = pred - target
    return mean(diff * diff)


# =============================================================================
# Configuration and token geometry
# =============================================================================

class TestConfig:
    def test_earth_token_count(self):
        assert token_count(721, 1440, 8) == 16380
        cfg = ModelConfig(height=721, width=1440, patch=8)
        assert cfg.padded_height == 728
        assert cfg.n_tokens == 16380

    def test_single_token(self):
        assert ModelConfig(height=4, width=4, patch=4).n_tokens == 1

    def test_width_not_divisible(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(width=10, patch=4)
        with pytest.raises(ConfigurationError):
            token_count(8, 10, 4)

    def test_heads_must_divide_width(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(dim=6, heads=4)

    def test_center_token(self):
        cfg = ModelConfig(height=8, width=16, patch=4)
        assert (cfg.token_rows, cfg.token_cols) == (2, 4)
        assert cfg.center_token == 6


class TestParams:
    def test_shapes_match(self, tiny_config):
        params = init_params(tiny_config)
        params.check(tiny_config)
        assert params.n_parameters == sum(math.prod(s) for s in parameter_shapes(tiny_config).values())

    def test_deterministic_init(self, tiny_config, assert_same_params):
        assert_same_params(init_params(tiny_config, seed=5), init_params(tiny_config, seed=5))

    def test_immutable(self, tiny_config):
        params = init_params(tiny_config)
        with pytest.raises(ValueError):
            params["pos"][0, 0] = 1.0

    def test_replace_unknown(self, tiny_config):
        with pytest.raises(ContractError):
            init_params(tiny_config).replace({"nope": np.zeros(1)})

    def test_check_rejects_other_config(self, tiny_config):
        bigger = ModelConfig(**{**tiny_config.model_dump(), "enc_depth": 2})
        with pytest.raises(ContractError):
            init_params(tiny_config).check(bigger)

    def test_reset_decoder_only_touches_decoder(self, tiny_config):
        params = init_params(tiny_config, seed=1)
        fresh = reset_decoder(params, tiny_config, seed=9)
        for name in params:
            same = np.array_equal(params[name], fresh[name])
            if name.startswith("dec") and params[name].ndim > 1:
                assert not same, name
            elif not name.startswith("dec"):
                assert same, name
        assert np.array_equal(params["head_w"], fresh["head_w"])

    def test_adaln_zero_init(self, tiny_config):
        params = init_params(tiny_config)
        assert not params["enc0.mod_w"].any() and not params["enc0.mod_b"].any()


# =============================================================================
# Aggregation and tokenization
# =============================================================================

class TestAggregation:
    def test_single_variable_is_value_projection(self, standardized_field):
        cfg = ModelConfig(dim=4, heads=2, patch=2, n_vars=1, height=2, width=4)
        params = init_params(cfg, seed=2)
        x = standardized_field(cfg, 0)
        out = aggregate_variables(params, cfg, x).numpy()[0]
        embedding = x[0][..., None] * params["var_w"][0] + params["var_b"][0]
        np.testing.assert_allclose(out, embedding @ params["agg_wv"], atol=1e-12)

    def test_dense_oracle(self, standardized_field):
        cfg = ModelConfig(dim=4, heads=2, patch=2, n_vars=3, height=2, width=2)
        params = init_params(cfg, seed=4)
        params = params.replace({"var_b": GaussianSampler(8).normal((3, 4))})
        x = standardized_field(cfg, 1)
        out = aggregate_variables(params, cfg, x).numpy()[0]
        i, j = 1, 0
        e = x[:, i, j][:, None] * params["var_w"] + params["var_b"]
        keys, values = e @ params["agg_wk"], e @ params["agg_wv"]
        scores = keys @ params["agg_q"][0, i, j] / 2.0
        np.testing.assert_allclose(out[i, j], _softmax(scores) @ values, atol=1e-12)

    def test_shape(self, tiny_config, tiny_params, standardized_field):
        out = aggregate_variables(tiny_params, tiny_config, standardized_field(tiny_config, 0))
        assert out.shape == (1, 3, 4, 4)

    def test_variable_mismatch(self, tiny_config, tiny_params):
        with pytest.raises(DimensionError):
            aggregate_variables(tiny_params, tiny_config, np.zeros((3, 3, 4)))


class TestPatching:
    def test_round_trip_crops_padding(self):
        cfg = ModelConfig(dim=4, heads=2, patch=4, n_vars=2, height=7, width=8)
        grid = GaussianSampler(1).normal((7, 8, 3))
        patches = patchify(grid, cfg)
        assert patches.shape == (cfg.n_tokens, 4 * 4 * 3)
        np.testing.assert_array_equal(unpatchify(patches, cfg, 3).numpy(), np.transpose(grid, (2, 0, 1)))

    def test_padding_replicates_last_row(self):
        cfg = ModelConfig(dim=4, heads=2, patch=2, n_vars=1, height=3, width=2)
        grid = np.arange(6.0).reshape(3, 2, 1)
        patches = patchify(grid, cfg).numpy()
        np.testing.assert_array_equal(patches[1], [4.0, 5.0, 4.0, 5.0])

    def test_token_cell_mask(self):
        cfg = ModelConfig(dim=4, heads=2, patch=2, n_vars=2, height=3, width=4)
        mask = token_cell_mask(cfg, np.array([False, True, False, False]))
        assert mask.shape == (2, 3, 4)
        np.testing.assert_array_equal(np.argwhere(mask[0]), [[0, 2], [0, 3], [1, 2], [1, 3]])
        assert mask[1].sum() == 4

    def test_token_sequence_flags(self):
        with pytest.raises(DimensionError):
            TokenSequence(Tensor(np.zeros((3, 2))), np.zeros(2, dtype=bool))


# =============================================================================
# Conditioning, encoder, decoder
# =============================================================================

class TestEncoder:
    def test_zero_modulation_block_is_identity(self, tiny_config):
        params = {name: Tensor(value) for name, value in init_params(tiny_config, seed=0).items()}
        z = Tensor(GaussianSampler(2).normal((4, 4)))
        cond = lead_embedding(params, 6)
        np.testing.assert_array_equal(encoder_block(params, 0, z, cond, 2).numpy(), z.numpy())

    @pytest.mark.parametrize("seed", range(3))
    def test_lead_time_changes_output(self, tiny_config, standardized_field, seed):
        params = init_params(tiny_config, seed=seed, adaln_zero=False)
        frame = embed_frame(params, tiny_config, standardized_field(tiny_config, seed))
        z6, _ = encode(params, tiny_config, frame, frame, 6)
        z24, _ = encode(params, tiny_config, frame, frame, 24)
        assert not np.allclose(z6.numpy(), z24.numpy())

    def test_weight_sharing(self, tiny_config, tiny_params, standardized_field):
        frame = embed_frame(tiny_params, tiny_config, standardized_field(tiny_config, 0))
        z1, z2 = encode(tiny_params, tiny_config, frame, frame, 6)
        np.testing.assert_array_equal(z1.numpy(), z2.numpy())

    def test_depth_zero(self, standardized_field):
        cfg = ModelConfig(dim=4, patch=2, enc_depth=0, dec_depth=1, heads=2, n_vars=2, height=3, width=4)
        params = init_params(cfg, seed=1)
        frame = embed_frame(params, cfg, standardized_field(cfg, 0))
        z1, _ = encode(params, cfg, frame, frame, 6)
        np.testing.assert_allclose(z1.numpy(), frame.tokens.numpy() + params["pos"], atol=0.0)

    def test_length_mismatch(self, tiny_config, tiny_params):
        a = TokenSequence(Tensor(np.zeros((4, 4))))
        b = TokenSequence(Tensor(np.zeros((3, 4))))
        with pytest.raises(DimensionError):
            encode(tiny_params, tiny_config, a, b, 6)

    def test_modulate_gradient(self):
        h = GaussianSampler(3).normal((3, 4))
        shift = Tensor(GaussianSampler(4).normal((1, 4)))
        scale = GaussianSampler(5).normal((1, 4))
        assert grad_check(lambda s: mean(adaln_modulate(Tensor(h), shift, s) ** 2), scale) < GRAD_TOLERANCE


class TestDecoder:
    def test_zero_value_and_ffn_weights_are_identity(self, tiny_config, tiny_params):
        zeros = {name: np.zeros_like(tiny_params[name])
                 for name in ("dec0.wv1", "dec0.wv2", "dec0.ff_w2", "dec0.ff_b2")}
        params = tiny_params.replace(zeros)
        z1 = Tensor(GaussianSampler(1).normal((4, 4)))
        z2 = Tensor(GaussianSampler(2).normal((4, 4)))
        np.testing.assert_array_equal(decode(params, tiny_config, z1, z2).numpy(), z2.numpy())

    def test_cross_attention_reads_frame_one(self, tiny_config, tiny_params):
        zeros = {name: np.zeros_like(tiny_params[name]) for name in ("dec0.wv2", "dec0.ff_w2", "dec0.ff_b2")}
        params = tiny_params.replace(zeros)
        z2 = Tensor(GaussianSampler(2).normal((4, 4)))
        a = decode(params, tiny_config, Tensor(GaussianSampler(1).normal((4, 4))), z2).numpy()
        b = decode(params, tiny_config, Tensor(GaussianSampler(3).normal((4, 4))), z2).numpy()
        assert not np.allclose(a, b)

    def test_hand_oracle_single_head(self):
        cfg = ModelConfig(dim=2, heads=1, patch=2, enc_depth=1, dec_depth=1, mlp_ratio=1, n_vars=1, height=2, width=4)
        params = init_params(cfg, seed=6)
        params = params.replace({"dec0.ff_b1": np.array([0.1, -0.2]), "dec0.ff_b2": np.array([0.3, 0.05])})
        z1 = GaussianSampler(7).normal((2, 2))
        z2 = GaussianSampler(8).normal((2, 2))
        P = params

        def attend(q, k, v):
            return _softmax(q @ k.T / math.sqrt(2.0)) @ v

        expected = z2 + attend(z2 @ P["dec0.wq1"], z1 @ P["dec0.wk1"], z1 @ P["dec0.wv1"])
        expected = expected + attend(expected @ P["dec0.wq2"], expected @ P["dec0.wk2"], expected @ P["dec0.wv2"])
        hidden = _gelu(expected @ P["dec0.ff_w1"] + P["dec0.ff_b1"])
        expected = expected + hidden @ P["dec0.ff_w2"] + P["dec0.ff_b2"]
        np.testing.assert_allclose(decode(params, cfg, Tensor(z1), Tensor(z2)).numpy(), expected, atol=1e-12)


# =============================================================================
# Full model
# =============================================================================

class TestForward:
    def test_output_shape(self, tiny_config, tiny_params, standardized_field):
        x = standardized_field(tiny_config, 0)
        out = forward(tiny_params, tiny_config, x, build_frame2(tiny_params, tiny_config, 6, 0), 6)
        assert out.shape == (2, 3, 4)

    @pytest.mark.parametrize("seed", range(10))
    def test_fresh_model_is_bounded(self, desk_config, standardized_field, seed):
        params = init_params(desk_config, seed=seed)
        x = standardized_field(desk_config, seed)
        out = forward(params, desk_config, x, build_frame2(params, desk_config, 6, seed), 6).numpy()
        assert np.all(np.isfinite(out)) and np.abs(out).max() < 1e3

    def test_deterministic(self, tiny_config, tiny_params, standardized_field):
        x = standardized_field(tiny_config, 1)
        a = forward(tiny_params, tiny_config, x, build_frame2(tiny_params, tiny_config, 6, 3), 6).numpy()
        b = forward(tiny_params, tiny_config, x, build_frame2(tiny_params, tiny_config, 6, 3), 6).numpy()
        np.testing.assert_array_equal(a, b)

    def test_zeros_frame2(self, tiny_config):
        cfg = ModelConfig(**{**tiny_config.model_dump(), "frame2": "zeros"})
        params = init_params(cfg, seed=1)
        frame2 = build_frame2(params, cfg, 6, seed=0)
        assert frame2.masked.all()
        np.testing.assert_allclose(frame2.tokens.numpy(), np.repeat(lead_embedding(params, 6).numpy(), 4, axis=0))

    @pytest.mark.parametrize("name", ["var_w", "agg_q", "patch_w", "pos", "lead_w1", "enc0.mod_w", "enc0.wq",
                                      "enc0.ff_w1", "dec0.wk1", "dec0.wq2", "dec0.ff_w2", "head_w"])
    def test_gradient_per_parameter(self, tiny_config, tiny_params, standardized_field, name):
        x = standardized_field(tiny_config, 0)
        target = standardized_field(tiny_config, 1)

        def loss(w):
            params = {**{k: Tensor(v) for k, v in tiny_params.items()}, name: w}
            return _scalar_loss(params, tiny_config, x, target)

        assert grad_check(loss, tiny_params[name]) < GRAD_TOLERANCE

    def test_gradient_on_desk_grid(self, desk_config, standardized_field):
        params = init_params(desk_config, seed=2, adaln_zero=False)
        x = standardized_field(desk_config, 0)
        target = standardized_field(desk_config, 1)

        def loss(w):
            return _scalar_loss({**params, "enc0.wk": w}, desk_config, x, target)

        assert grad_check(loss, params["enc0.wk"]) < GRAD_TOLERANCE


class TestAttentionRow:
    def test_probability_vector(self, desk_config, standardized_field):
        params = init_params(desk_config, seed=3, adaln_zero=False)
        row = attention_row(params, desk_config, 0, desk_config.center_token, standardized_field(desk_config, 0), 6)
        assert row.shape == (desk_config.n_tokens,)
        assert np.all(row >= 0.0)
        assert row.sum() == pytest.approx(1.0, abs=1e-10)

    def test_single_token(self, standardized_field):
        cfg = ModelConfig(dim=4, heads=2, patch=4, n_vars=1, height=4, width=4)
        params = init_params(cfg, seed=0)
        np.testing.assert_allclose(attention_row(params, cfg, 0, 0, standardized_field(cfg, 0), 6), [1.0])

    def test_out_of_range(self, tiny_config, tiny_params, standardized_field):
        x = standardized_field(tiny_config, 0)
        with pytest.raises(ContractError):
            attention_row(tiny_params, tiny_config, 1, 0, x, 6)
        with pytest.raises(ContractError):
            attention_row(tiny_params, tiny_config, 0, 4, x, 6)

    def test_heads_average(self):
        q = Tensor(GaussianSampler(1).normal((3, 4)))
        captured = []
        multi_head_attention(q, q, q, 2, captured)
        np.testing.assert_allclose(captured[0].sum(axis=-1), np.ones(3))


# =============================================================================
# Model wrapper and checkpoints
# =============================================================================

class TestCheckpoint:
    def test_predict_advances_time(self, tiny_config, tiny_params, standardized_field):
        model = BaguanModel(tiny_params, tiny_config, 6)
        out = model.predict(FieldState(standardized_field(tiny_config, 0), 12))
        assert out.time == 18 and out.shape == (2, 3, 4)

    def test_round_trip_is_bit_exact(self, tmp_path, tiny_config, tiny_params, assert_same_params):
        moments = {name: np.full_like(value, 0.125) for name, value in tiny_params.items()}
        ckpt = Checkpoint(tiny_params, tiny_config, lead_hours=6, stage=2, step=4, optimizer_step=4,
                          first_moment=moments, second_moment=moments)
        save_checkpoint(str(tmp_path / "ckpt"), ckpt)
        loaded = load_checkpoint(str(tmp_path / "ckpt"))
        assert_same_params(loaded.params, tiny_params)
        assert_same_params(loaded.first_moment, moments)
        assert loaded.config == tiny_config
        assert (loaded.stage, loaded.lead_hours, loaded.step, loaded.optimizer_step) == (2, 6, 4, 4)

    def test_load_models_by_lead(self, tmp_path, tiny_config, tiny_params):
        for lead in (6, 24):
            save_checkpoint(str(tmp_path / f"m{lead}"), Checkpoint(tiny_params, tiny_config, lead, stage=2))
        models = load_models([str(tmp_path / "m6"), str(tmp_path / "m24")])
        assert sorted(models) == [6, 24]
        assert models[24].lead_hours == 24

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(str(tmp_path / "absent"))

    def test_params_mapping(self, tiny_config):
        params = ModelParams({"a": np.ones(2)})
        assert dict(params)["a"].tolist() == [1.0, 1.0]
