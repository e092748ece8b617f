"""Tests for Horn-Schunck flow estimation and the flow cache."""

import numpy as np
import pytest
from conftest import random_clip

from moose.core import Tensor
from moose.data import VideoClip
from moose.flow import (
    FlowCache,
    FlowError,
    FlowField,
    FlowParams,
    HornSchunckSolver,
    clip_flow,
    estimate_flow,
    to_luminance,
)

SIZE = 32
BORDER = 3


def textured_pair(dx: float, dy: float, seed: int, size: int = SIZE):
    """Smooth sinusoidal texture and the same texture translated by (dx, dy)."""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, np.pi, 3)
    periods = rng.uniform(24.0, 36.0, 3)
    phases = rng.uniform(0.0, 2 * np.pi, 3)
    x, y = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")

    def render(sx: float, sy: float) -> np.ndarray:
        image = np.full((size, size), 0.5)
        for angle, period, phase in zip(angles, periods, phases):
            k = 2 * np.pi / period
            image += 0.13 * np.sin(
                k * (np.cos(angle) * (x - sx) + np.sin(angle) * (y - sy)) + phase
            )
        return image[None]

    return render(0.0, 0.0), render(dx, dy)


def interior_epe(flow: np.ndarray, dx: float, dy: float) -> float:
    inner = flow[:, BORDER:-BORDER, BORDER:-BORDER]
    return float(np.mean(np.hypot(inner[0] - dx, inner[1] - dy)))


class TestFlowParams:
    def test_defaults(self):
        params = FlowParams()
        assert params.alpha == 1.0
        assert params.iterations == 100

    @pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": -1.0}, {"iterations": 0}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            FlowParams(**kwargs)


class TestEstimateFlow:
    def test_identical_frames_give_exact_zero(self):
        frame = np.random.default_rng(0).uniform(size=(1, 16, 16))
        flow = estimate_flow(frame, frame)
        assert flow.shape == (2, 16, 16)
        assert np.all(flow.data == 0.0)

    def test_translation_recovery(self):
        rng = np.random.default_rng(2024)
        errors = []
        for seed in range(20):
            dx, dy = rng.integers(-2, 3, size=2)
            first, second = textured_pair(float(dx), float(dy), seed)
            flow = estimate_flow(first, second).data
            errors.append(interior_epe(flow, dx, dy))
        assert np.mean(errors) < 0.3

    @pytest.mark.parametrize("dx,dy", [(1.0, 0.0), (0.0, -1.0), (1.0, 1.0)])
    def test_direction_of_unit_shift(self, dx, dy):
        first, second = textured_pair(dx, dy, seed=5)
        flow = estimate_flow(first, second).data
        inner = flow[:, BORDER:-BORDER, BORDER:-BORDER]
        assert np.sign(inner[0].mean()) == np.sign(dx) or dx == 0.0
        assert np.sign(inner[1].mean()) == np.sign(dy) or dy == 0.0
        assert interior_epe(flow, dx, dy) < 0.3

    def test_reversed_pair_negates_flow(self):
        first, second = textured_pair(1.0, -2.0, seed=9)
        forward = estimate_flow(first, second).data
        backward = estimate_flow(second, first).data
        np.testing.assert_allclose(forward, -backward, atol=1e-9)

    def test_accepts_tensors_and_rgb(self):
        rng = np.random.default_rng(1)
        frame = Tensor(rng.uniform(size=(3, 8, 8)))
        assert estimate_flow(frame, frame).shape == (2, 8, 8)

    def test_shape_mismatch(self):
        with pytest.raises(FlowError):
            estimate_flow(np.zeros((1, 8, 8)), np.zeros((1, 8, 9)))

    def test_too_small_frames(self):
        with pytest.raises(FlowError):
            estimate_flow(np.zeros((1, 2, 8)), np.zeros((1, 2, 8)))

    def test_bad_channel_count(self):
        with pytest.raises(FlowError):
            to_luminance(np.zeros((2, 8, 8)))


class TestSolver:
    def test_energy_is_non_increasing(self):
        first, second = textured_pair(2.0, 1.0, seed=3)
        solver = HornSchunckSolver(FlowParams(iterations=50))
        solution = solver.solve(first[0], second[0], track_energy=True)
        energies = np.array([float(e) for e in solution.energies])
        assert len(energies) == 51
        assert np.all(np.diff(energies) <= 1e-9 * energies[:-1])
        assert energies[-1] < energies[0]

    def test_stacked_pairs_match_single_solves(self):
        pairs = [textured_pair(1.0, 0.0, seed=s) for s in range(3)]
        first = np.stack([p[0][0] for p in pairs])
        second = np.stack([p[1][0] for p in pairs])
        solver = HornSchunckSolver()
        stacked = solver.solve(first, second).flow
        assert stacked.shape == (3, 2, SIZE, SIZE)
        for i, (a, b) in enumerate(pairs):
            np.testing.assert_allclose(stacked[i], solver.solve(a[0], b[0]).flow, atol=1e-12)


class TestFlowField:
    def test_clip_flow_shape(self, clip, config):
        field = clip_flow(clip, config.flow)
        assert field.flows.shape == (config.frames, 2, config.width, config.height)
        assert field.source_pairs == config.frames

    def test_zeros(self):
        field = FlowField.zeros(3, 8, 8)
        assert field.flows.shape == (3, 2, 8, 8)
        assert np.all(field.normalized() == 0.0)

    def test_normalized_channels(self):
        data = np.random.default_rng(4).normal(2.0, 3.0, (2, 2, 6, 6))
        normed = FlowField(flows=Tensor(data), source_pairs=2).normalized()
        np.testing.assert_allclose(normed.mean(axis=(0, 2, 3)), 0.0, atol=1e-12)
        np.testing.assert_allclose(normed.std(axis=(0, 2, 3)), 1.0, atol=1e-12)

    def test_flipped_mirrors_x_and_negates_u(self):
        data = np.random.default_rng(5).normal(size=(1, 2, 4, 3))
        flipped = FlowField(flows=Tensor(data), source_pairs=1).flipped().flows.data
        np.testing.assert_array_equal(flipped[0, 0], -data[0, 0, ::-1, :])
        np.testing.assert_array_equal(flipped[0, 1], data[0, 1, ::-1, :])

    def test_rejects_pair_mismatch(self):
        with pytest.raises(FlowError):
            FlowField(flows=Tensor(np.zeros((2, 2, 4, 4))), source_pairs=3)

    def test_rejects_non_finite(self):
        data = np.zeros((1, 2, 4, 4))
        data[0, 0, 0, 0] = np.nan
        with pytest.raises(FlowError):
            FlowField(flows=Tensor(data), source_pairs=1)


class TestFlowCache:
    def test_solves_each_clip_once(self, clip, config):
        cache = FlowCache(config.flow)
        first = cache.get(clip)
        second = cache.get(clip)
        assert first is second
        assert cache.misses == 1
        assert clip.clip_id in cache

    def test_flipped_variant_derived_from_cached_field(self, clip, config):
        cache = FlowCache(config.flow)
        mirrored = cache.get(clip, flipped=True)
        assert cache.misses == 1
        assert len(cache) == 2
        np.testing.assert_array_equal(mirrored.flows.data, cache.get(clip).flipped().flows.data)

    def test_warm_and_clear(self, config):
        clips = [random_clip(config, seed=s) for s in range(3)]
        cache = FlowCache(config.flow)
        cache.warm(clips)
        assert len(cache) == 3
        cache.clear()
        assert len(cache) == 0

    def test_identical_frames_clip_has_zero_flow(self, config):
        frame = np.random.default_rng(6).uniform(size=(1, 1, 8, 8))
        clip = VideoClip(frames=Tensor(np.repeat(frame, 3, axis=0)), label=0, clip_id="still")
        assert np.all(clip_flow(clip, config.flow).flows.data == 0.0)
