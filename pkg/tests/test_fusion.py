"""Tests for pathway fusion and temporal aggregation."""

import numpy as np
import pytest
from conftest import naive_attention

from moose.core import ShapeError, Tensor
from moose.models import (
    FLOW_PRIOR_PURPOSE,
    VISUAL_PRIOR_PURPOSE,
    AggregationMode,
    AttentionRecorder,
    CausalAggregatorParams,
    ClipEmbedding,
    FusionMode,
    FusionParams,
    TokenSequence,
    UnitEmbedding,
    aggregate_causal,
    aggregate_mean,
    build_arrow_mask,
    causal_sequence,
    fuse,
    fuse_bidirectional,
    fuse_flow_prior,
    fuse_visual_prior,
)

D_S, D_F, H_S, H_F = 8, 4, 2, 2


def sequences(rng, patches=3, lead=()):
    e_s = TokenSequence(Tensor(rng.normal(size=lead + (patches + 1, D_S))), "spatial")
    e_f = TokenSequence(Tensor(rng.normal(size=lead + (patches + 1, D_F))), "temporal")
    return e_s, e_f


def params_for(mode, seed=0):
    return FusionParams.init(FusionMode(mode), D_S, D_F, H_S, H_F, np.random.default_rng(seed))


class TestFusionMode:
    def test_parse(self):
        assert FusionMode.parse("visual_prior") is FusionMode.VISUAL_PRIOR
        with pytest.raises(ValueError):
            FusionMode.parse("sideways")

    def test_unit_dim(self):
        assert FusionMode.FLOW_PRIOR.unit_dim(D_S, D_F) == D_S
        assert FusionMode.VISUAL_PRIOR.unit_dim(D_S, D_F) == D_S
        assert FusionMode.BIDIRECTIONAL.unit_dim(D_S, D_F) == D_S + D_F

    def test_params_per_mode(self):
        flow = params_for("flow_prior")
        assert flow.visual_prior is None and flow.proj_w is None
        visual = params_for("visual_prior")
        assert visual.flow_prior is None and visual.proj_w.shape == (D_F, D_S)
        both = params_for("bidirectional")
        assert both.flow_prior is not None and both.visual_prior is not None
        assert both.proj_w is None
        assert "fusion.visual_prior.w_k" in both.named_parameters("fusion")
        assert both.visual_prior.w_k.shape == (D_S, D_F)

    def test_missing_weights(self):
        with pytest.raises(ValueError):
            FusionParams(mode=FusionMode.BIDIRECTIONAL)


class TestFuse:
    def test_flow_prior_matches_oracle(self):
        rng = np.random.default_rng(1)
        e_s, e_f = sequences(rng)
        params = params_for("flow_prior", seed=2)
        unit = fuse_flow_prior(e_s, e_f, params)
        allowed = build_arrow_mask(3).allowed
        cross = naive_attention(e_s.tokens.data, e_f.tokens.data, params.flow_prior, allowed)
        expected = e_s.tokens.data[0] + cross[0]
        np.testing.assert_allclose(unit.e_z.data, expected, rtol=0, atol=1e-10)

    def test_visual_prior_matches_oracle(self):
        rng = np.random.default_rng(3)
        e_s, e_f = sequences(rng)
        params = params_for("visual_prior", seed=4)
        unit = fuse_visual_prior(e_s, e_f, params, use_arrow_mask=False)
        cross = naive_attention(e_f.tokens.data, e_s.tokens.data, params.visual_prior)
        cls = e_f.tokens.data[0] + cross[0]
        expected = cls @ params.proj_w.data + params.proj_b.data
        assert unit.dim == D_S
        np.testing.assert_allclose(unit.e_z.data, expected, rtol=0, atol=1e-10)

    def test_bidirectional_concatenates_both_directions(self):
        rng = np.random.default_rng(5)
        e_s, e_f = sequences(rng, lead=(2,))
        params = params_for("bidirectional", seed=6)
        unit = fuse_bidirectional(e_s, e_f, params)
        assert unit.e_z.shape == (2, D_S + D_F)
        flow_only = FusionParams(mode=FusionMode.FLOW_PRIOR, flow_prior=params.flow_prior)
        np.testing.assert_allclose(
            unit.e_z.data[:, :D_S], fuse_flow_prior(e_s, e_f, flow_only).e_z.data, atol=1e-14
        )

    @pytest.mark.parametrize("mode", [m.value for m in FusionMode])
    def test_forbidden_entries_get_zero_weight(self, mode):
        rng = np.random.default_rng(7)
        e_s, e_f = sequences(rng, patches=4, lead=(3,))
        recorder = AttentionRecorder()
        fuse(e_s, e_f, params_for(mode, seed=8), recorder=recorder)
        forbidden = ~build_arrow_mask(4).allowed
        assert len(recorder) == (2 if mode == "bidirectional" else 1)
        for weights in recorder.records.values():
            assert weights.shape == (3, 2, 5, 5)
            assert np.all(weights[..., forbidden] == 0.0)

    def test_unmasked_fusion_uses_every_pair(self):
        rng = np.random.default_rng(9)
        e_s, e_f = sequences(rng)
        recorder = AttentionRecorder()
        fuse(e_s, e_f, params_for("bidirectional"), use_arrow_mask=False, recorder=recorder)
        assert np.all(recorder.records[(0, FLOW_PRIOR_PURPOSE)] > 0.0)
        assert np.all(recorder.records[(0, VISUAL_PRIOR_PURPOSE)] > 0.0)

    def test_mismatched_patch_counts(self):
        rng = np.random.default_rng(10)
        e_s, _ = sequences(rng, patches=3)
        _, e_f = sequences(rng, patches=4)
        with pytest.raises(ShapeError):
            fuse(e_s, e_f, params_for("flow_prior"))


class TestAggregation:
    def test_parse(self):
        assert AggregationMode.parse("mean") is AggregationMode.MEAN
        with pytest.raises(ValueError):
            AggregationMode.parse("max")

    def test_mean(self):
        rows = np.random.default_rng(0).normal(size=(4, 6))
        units = [UnitEmbedding(Tensor(row), time=t) for t, row in enumerate(rows)]
        np.testing.assert_allclose(aggregate_mean(units).e.data, rows.mean(axis=0), atol=1e-15)

    @pytest.mark.parametrize("frames", [2, 4, 8])
    def test_causal_outputs_ignore_later_units(self, frames):
        rng = np.random.default_rng(frames)
        params = CausalAggregatorParams.init(frames, 6, 2, rng)
        units = rng.normal(size=(frames, 6))
        base = causal_sequence(Tensor(units), params).data
        for t in range(1, frames):
            changed = units.copy()
            changed[t:] += rng.normal(scale=3.0, size=changed[t:].shape)
            out = causal_sequence(Tensor(changed), params).data
            np.testing.assert_array_equal(out[:t], base[:t])
            assert not np.array_equal(out[t], base[t])

    def test_causal_clip_embedding_is_last_position(self):
        rng = np.random.default_rng(11)
        params = CausalAggregatorParams.init(4, 6, 3, rng)
        units = Tensor(rng.normal(size=(3, 6)))
        clip = aggregate_causal(units, params)
        np.testing.assert_array_equal(clip.e.data, causal_sequence(units, params).data[-1])
        assert clip.dim == 6

    def test_causal_records_lower_triangular_weights(self):
        rng = np.random.default_rng(12)
        params = CausalAggregatorParams.init(4, 6, 2, rng)
        recorder = AttentionRecorder()
        causal_sequence(Tensor(rng.normal(size=(4, 6))), params, recorder)
        weights = recorder.weights(0, "aggregation")
        np.testing.assert_array_equal(np.triu(weights, k=1), 0.0)

    def test_errors(self):
        rng = np.random.default_rng(13)
        params = CausalAggregatorParams.init(2, 4, 2, rng)
        with pytest.raises(ShapeError):
            causal_sequence(Tensor(rng.normal(size=(3, 4))), params)
        with pytest.raises(ShapeError):
            causal_sequence(Tensor(rng.normal(size=(2, 6))), params)
        with pytest.raises(ShapeError):
            aggregate_mean([])
        with pytest.raises(ValueError):
            ClipEmbedding(Tensor(np.array([np.nan, 1.0])))
