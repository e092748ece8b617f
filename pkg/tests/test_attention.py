"""Tests for masked multi-head attention, mask builders and encoder blocks."""

import numpy as np
import pytest
from conftest import naive_attention, random_mha

from moose.core import MaskError, ShapeError, Tensor, layer_norm
from moose.models import (
    AttentionMask,
    AttentionRecorder,
    EncoderBlockParams,
    MhaParams,
    attention,
    build_arrow_mask,
    build_causal_mask,
    encoder_block,
)
from moose.models.attention import mlp


class TestMasks:
    @pytest.mark.parametrize("num_patches", range(1, 65))
    def test_arrow_mask_count_and_symmetry(self, num_patches):
        mask = build_arrow_mask(num_patches)
        assert mask.shape == (num_patches + 1, num_patches + 1)
        assert mask.count == 3 * num_patches + 1
        assert mask.is_symmetric()

    def test_arrow_mask_pattern(self):
        allowed = build_arrow_mask(3).allowed
        expected = np.array(
            [
                [1, 1, 1, 1],
                [1, 1, 0, 0],
                [1, 0, 1, 0],
                [1, 0, 0, 1],
            ],
            dtype=bool,
        )
        np.testing.assert_array_equal(allowed, expected)

    def test_causal_mask(self):
        mask = build_causal_mask(4)
        np.testing.assert_array_equal(mask.allowed, np.tril(np.ones((4, 4), dtype=bool)))
        assert mask.count == 10
        assert not mask.is_symmetric()

    def test_invalid_masks(self):
        with pytest.raises(MaskError):
            build_arrow_mask(0)
        with pytest.raises(MaskError):
            build_causal_mask(0)
        with pytest.raises(MaskError):
            AttentionMask(np.array([[True, False], [False, False]]))
        with pytest.raises(MaskError):
            AttentionMask(np.ones(3, dtype=bool))

    def test_transposed(self):
        mask = AttentionMask(np.array([[True, True, False], [False, True, True]]))
        assert mask.transposed().shape == (3, 2)
        assert AttentionMask.full(2, 3).count == 6


class TestAttention:
    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            heads = int(rng.integers(1, 5))
            dim = heads * int(rng.integers(1, 4))
            kv_dim = int(rng.integers(1, 7))
            q_len, k_len = (int(n) for n in rng.integers(1, 10, size=2))
            params = random_mha(dim, heads, rng, kv_dim=kv_dim)
            x_q = rng.normal(size=(q_len, dim))
            x_k = rng.normal(size=(k_len, kv_dim))
            allowed = rng.uniform(size=(q_len, k_len)) < 0.6
            allowed[np.arange(q_len), rng.integers(0, k_len, size=q_len)] = True
            use_mask = bool(rng.integers(0, 2))
            mask = AttentionMask(allowed) if use_mask else None

            got = attention(Tensor(x_q), Tensor(x_k), params, mask).data
            expected = naive_attention(x_q, x_k, params, allowed if use_mask else None)
            np.testing.assert_allclose(got, expected, rtol=0, atol=1e-10)

    def test_leading_axes_are_independent(self):
        rng = np.random.default_rng(1)
        params = random_mha(4, 2, rng)
        x = rng.normal(size=(3, 5, 4))
        batched = attention(Tensor(x), Tensor(x), params).data
        for t in range(3):
            single = attention(Tensor(x[t]), Tensor(x[t]), params).data
            np.testing.assert_allclose(batched[t], single, atol=1e-12)

    def test_records_masked_weights(self):
        rng = np.random.default_rng(2)
        params = random_mha(4, 2, rng)
        x = Tensor(rng.normal(size=(5, 4)))
        mask = build_arrow_mask(4)
        recorder = AttentionRecorder()
        attention(x, x, params, mask, recorder, layer=3, purpose="sample")
        weights = recorder.records[(3, "sample")]
        assert weights.shape == (2, 5, 5)
        assert np.all(weights[:, ~mask.allowed] == 0.0)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-12)

    def test_arrow_mask_isolates_patch_rows(self):
        rng = np.random.default_rng(3)
        params = random_mha(4, 2, rng, kv_dim=6)
        x_q = Tensor(rng.normal(size=(4, 4)))
        x_k = rng.normal(size=(4, 6))
        mask = build_arrow_mask(3)
        before = attention(x_q, Tensor(x_k), params, mask).data
        x_k[2] += 5.0
        after = attention(x_q, Tensor(x_k), params, mask).data
        np.testing.assert_array_equal(before[1], after[1])
        np.testing.assert_array_equal(before[3], after[3])
        assert not np.allclose(before[0], after[0])
        assert not np.allclose(before[2], after[2])

    def test_shape_errors(self):
        rng = np.random.default_rng(4)
        params = random_mha(4, 2, rng)
        with pytest.raises(ShapeError):
            attention(Tensor(np.zeros((3, 5))), Tensor(np.zeros((3, 4))), params)
        with pytest.raises(ShapeError):
            x = Tensor(np.zeros((3, 4)))
            attention(x, x, params, build_arrow_mask(3))

    def test_heads_must_divide_dim(self):
        with pytest.raises(ShapeError):
            MhaParams.init(6, 4, np.random.default_rng(0))

    def test_cross_attention_init_shapes(self):
        params = MhaParams.init(8, 2, np.random.default_rng(0), kv_dim=3)
        assert params.w_k.shape == (3, 8)
        assert params.w_q.shape == (8, 8)
        assert (params.dim, params.kv_dim, params.head_dim) == (8, 3, 4)


class TestRecorder:
    def test_queries(self):
        recorder = AttentionRecorder()
        weights = np.random.default_rng(0).uniform(size=(2, 3, 3))
        recorder.record(0, "spatial_self", weights)
        recorder.record(1, "spatial_self", weights * 2)
        assert len(recorder) == 2
        assert recorder.has("spatial_self")
        assert recorder.has("spatial_self", layer=1)
        assert not recorder.has("temporal_self")
        assert recorder.layers("spatial_self") == [0, 1]
        np.testing.assert_allclose(recorder.weights(0, "spatial_self"), weights.mean(axis=0))
        np.testing.assert_array_equal(recorder.weights(1, "spatial_self", head=1), weights[1] * 2)
        assert sorted(recorder) == [(0, "spatial_self"), (1, "spatial_self")]

    def test_records_are_read_only_copies(self):
        recorder = AttentionRecorder()
        weights = np.ones((1, 2, 2))
        recorder.record(0, "x", weights)
        weights[0, 0, 0] = 5.0
        assert recorder.records[(0, "x")][0, 0, 0] == 1.0
        with pytest.raises(ValueError):
            recorder.records[(0, "x")][0, 0, 0] = 2.0

    def test_missing_entries(self):
        recorder = AttentionRecorder()
        recorder.record(0, "x", np.ones((2, 2, 2)))
        with pytest.raises(KeyError):
            recorder.weights(1, "x")
        with pytest.raises(KeyError):
            recorder.weights(0, "x", head=2)
        recorder.clear()
        assert len(recorder) == 0


class TestEncoderBlock:
    def test_zero_output_weights_give_identity(self):
        rng = np.random.default_rng(5)
        params = EncoderBlockParams.init(8, 2, rng)
        params.attn.w_o.data[:] = 0.0
        params.mlp_w2.data[:] = 0.0
        x = Tensor(rng.normal(size=(6, 8)))
        np.testing.assert_array_equal(encoder_block(x, params).data, x.data)

    def test_residual_composition(self):
        rng = np.random.default_rng(6)
        params = EncoderBlockParams.init(4, 2, rng)
        x = Tensor(rng.normal(size=(3, 4)))
        normed = layer_norm(x, params.ln1_gamma, params.ln1_beta)
        hidden = x.data + naive_attention(normed.data, normed.data, params.attn)
        normed_hidden = layer_norm(Tensor(hidden), params.ln2_gamma, params.ln2_beta)
        expected = hidden + mlp(normed_hidden, params).data
        np.testing.assert_allclose(encoder_block(x, params).data, expected, atol=1e-10)

    def test_named_parameters(self):
        params = EncoderBlockParams.init(4, 2, np.random.default_rng(0))
        names = params.named_parameters("spatial.block0")
        assert len(names) == 16
        assert names["spatial.block0.mlp.w1"].shape == (4, 16)
        assert "spatial.block0.attn.w_q" in names

    def test_rejects_wrong_width(self):
        params = EncoderBlockParams.init(4, 2, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            encoder_block(Tensor(np.zeros((2, 6))), params)
