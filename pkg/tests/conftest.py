"""Shared fixtures: a tiny model config, random clips and a small synthetic dataset."""

from dataclasses import replace

import numpy as np
import pytest

from moose.core import Tensor
from moose.data import DIRECTION_CLASSES, REVERSAL_CLASSES, SyntheticSpec, VideoClip, generate
from moose.flow import FlowParams, clip_flow
from moose.models import AggregationMode, FusionMode, MhaParams, MooseConfig, MooseModel


def tiny_config(**overrides) -> MooseConfig:
    """A model small enough for exhaustive gradient checks."""
    base = MooseConfig(
        frames=2,
        channels=1,
        width=8,
        height=8,
        patch=4,
        spatial_dim=8,
        spatial_layers=1,
        spatial_heads=2,
        temporal_dim=4,
        temporal_layers=1,
        temporal_heads=2,
        fusion=FusionMode.BIDIRECTIONAL,
        aggregation=AggregationMode.CAUSAL,
        aggregation_heads=2,
        num_classes=3,
        flow=FlowParams(iterations=10),
        seed=7,
    )
    return replace(base, **overrides)


def random_clip(config: MooseConfig, seed: int = 0, label: int = 0) -> VideoClip:
    rng = np.random.default_rng(seed)
    shape = (config.frames + 1, config.channels, config.width, config.height)
    return VideoClip(frames=Tensor(rng.uniform(0.0, 1.0, shape)), label=label, clip_id=f"r{seed}")


@pytest.fixture
def config() -> MooseConfig:
    return tiny_config()


@pytest.fixture
def model(config: MooseConfig) -> MooseModel:
    return MooseModel(config)


@pytest.fixture
def clip(config: MooseConfig) -> VideoClip:
    return random_clip(config, seed=3, label=1)


@pytest.fixture
def flow(clip: VideoClip, config: MooseConfig):
    return clip_flow(clip, config.flow)


@pytest.fixture
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(
        classes=DIRECTION_CLASSES, frames=2, width=16, height=16, blob_size=6, speed=1.0
    )


@pytest.fixture
def reversal_spec() -> SyntheticSpec:
    return SyntheticSpec(
        classes=REVERSAL_CLASSES, frames=4, width=16, height=16, blob_size=6, speed=1.0
    )


@pytest.fixture
def small_dataset(small_spec: SyntheticSpec):
    return generate(small_spec, count_per_class=6, seed=11)


def naive_attention(x_q, x_k, params, allowed=None) -> np.ndarray:
    """Loop-by-loop multi-head attention over plain arrays, for checking the vectorized path."""
    q = x_q @ params.w_q.data + params.b_q.data
    k = x_k @ params.w_k.data + params.b_k.data
    v = x_k @ params.w_v.data + params.b_v.data
    d_k = params.head_dim
    context = np.zeros_like(q)
    for h in range(params.heads):
        cols = slice(h * d_k, (h + 1) * d_k)
        for i in range(q.shape[0]):
            scores = []
            for j in range(k.shape[0]):
                if allowed is None or allowed[i, j]:
                    scores.append(float(np.dot(q[i, cols], k[j, cols])) / np.sqrt(d_k))
                else:
                    scores.append(-np.inf)
            scores = np.array(scores)
            weights = np.exp(scores - scores.max())
            weights /= weights.sum()
            for j in range(k.shape[0]):
                context[i, cols] += weights[j] * v[j, cols]
    return context @ params.w_o.data + params.b_o.data


def random_mha(dim: int, heads: int, rng: np.random.Generator, kv_dim=None):
    """MhaParams with every weight and bias drawn from N(0, 1/dim)."""
    kv = dim if kv_dim is None else kv_dim
    shapes = {
        "w_q": (dim, dim),
        "w_k": (kv, dim),
        "w_v": (kv, dim),
        "w_o": (dim, dim),
        "b_q": (dim,),
        "b_k": (dim,),
        "b_v": (dim,),
        "b_o": (dim,),
    }
    scale = 1.0 / np.sqrt(dim)
    tensors = {
        name: Tensor(rng.normal(0.0, scale, shape), requires_grad=True)
        for name, shape in shapes.items()
    }
    return MhaParams(heads=heads, **tensors)
