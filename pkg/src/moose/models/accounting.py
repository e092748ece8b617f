"""Closed-form parameter and multiply-accumulate counts for a model configuration."""

from collections import OrderedDict
from typing import TYPE_CHECKING, Dict, Optional

from ..core import MacCounter
from ..flow import STENCIL_MACS, FlowField
from .aggregation import AggregationMode
from .encoder import FLOW_CHANNELS, MooseConfig, MooseModel
from .fusion import FusionMode

if TYPE_CHECKING:
    from ..data.clip import VideoClip

PARAM_COMPONENTS = ("spatial", "temporal", "fusion", "aggregation", "head")
MAC_COMPONENTS = ("flow", "embedding", "spatial", "temporal", "fusion", "aggregation", "head")


def linear_params(in_dim: int, out_dim: int) -> int:
    return in_dim * out_dim + out_dim


def attention_params(dim: int, kv_dim: int) -> int:
    """Q and O map ``D -> D``; K and V map ``D_kv -> D``; four biases of width ``D``."""
    return 2 * dim * dim + 2 * kv_dim * dim + 4 * dim


def block_params(dim: int) -> int:
    """Two layer norms, self-attention and a 4x MLP: ``12 D^2 + 13 D``."""
    mlp = linear_params(dim, 4 * dim) + linear_params(4 * dim, dim)
    return 4 * dim + attention_params(dim, dim) + mlp


def pathway_params(channels: int, patch: int, num_patches: int, dim: int, layers: int) -> int:
    embedder = channels * patch * patch * dim + (num_patches + 1) * dim + dim
    return embedder + layers * block_params(dim) + 2 * dim


def param_breakdown(config: MooseConfig) -> Dict[str, int]:
    """Trainable scalars per component, in :data:`PARAM_COMPONENTS` order."""
    n = config.num_patches
    d_s, d_f, d_u = config.spatial_dim, config.temporal_dim, config.unit_dim

    fusion = 0
    if config.fusion.uses_flow_prior:
        fusion += attention_params(d_s, d_f)
    if config.fusion.uses_visual_prior:
        fusion += attention_params(d_f, d_s)
    if config.fusion is FusionMode.VISUAL_PRIOR:
        fusion += linear_params(d_f, d_s)

    aggregation = 0
    if config.aggregation is AggregationMode.CAUSAL:
        aggregation = config.frames * d_u + block_params(d_u)

    spatial = pathway_params(config.channels, config.patch, n, d_s, config.spatial_layers)
    temporal = pathway_params(FLOW_CHANNELS, config.patch, n, d_f, config.temporal_layers)
    return OrderedDict(
        [
            ("spatial", spatial),
            ("temporal", temporal),
            ("fusion", fusion),
            ("aggregation", aggregation),
            ("head", 2 * d_u + linear_params(d_u, config.num_classes)),
        ]
    )


def count_params(config: MooseConfig) -> int:
    """Exact number of trainable scalars of :class:`MooseModel` built from ``config``."""
    return sum(param_breakdown(config).values())


def attention_macs(q_len: int, k_len: int, dim: int, kv_dim: int) -> int:
    """
    MACs of one attention call: projections ``2 Lq D^2 + 2 Lk D_kv D`` plus scores
    and weighted values ``2 Lq Lk D``. Self-attention reduces to ``4 S D^2 + 2 S^2 D``.
    """
    projections = 2 * q_len * dim * dim + 2 * k_len * kv_dim * dim
    return projections + 2 * q_len * k_len * dim


def mlp_macs(length: int, dim: int) -> int:
    return 8 * length * dim * dim


def block_macs(length: int, dim: int) -> int:
    return attention_macs(length, length, dim, dim) + mlp_macs(length, dim)


def mac_breakdown(config: MooseConfig) -> Dict[str, int]:
    """Multiply-accumulates of one forward pass, in :data:`MAC_COMPONENTS` order."""
    t = config.frames
    n = config.num_patches
    s = config.sequence_length
    p2 = config.patch * config.patch
    d_s, d_f, d_u = config.spatial_dim, config.temporal_dim, config.unit_dim

    flow = 0
    if config.flow_input == "estimated":
        flow = t * config.flow.iterations * config.width * config.height * STENCIL_MACS

    fusion = 0
    if config.fusion.uses_flow_prior:
        fusion += attention_macs(s, s, d_s, d_f)
    if config.fusion.uses_visual_prior:
        fusion += attention_macs(s, s, d_f, d_s)
    if config.fusion is FusionMode.VISUAL_PRIOR:
        fusion += d_f * d_s

    aggregation = 0
    if config.aggregation is AggregationMode.CAUSAL:
        aggregation = block_macs(t, d_u)

    return OrderedDict(
        [
            ("flow", flow),
            ("embedding", t * n * p2 * (config.channels * d_s + FLOW_CHANNELS * d_f)),
            ("spatial", t * config.spatial_layers * block_macs(s, d_s)),
            ("temporal", t * config.temporal_layers * block_macs(s, d_f)),
            ("fusion", t * fusion),
            ("aggregation", aggregation),
            ("head", d_u * config.num_classes),
        ]
    )


def count_flops(config: MooseConfig) -> int:
    """Multiply-accumulate count of one forward pass, flow estimation included."""
    return sum(mac_breakdown(config).values())


def network_macs(config: MooseConfig) -> int:
    """MACs of the network alone (everything except flow estimation)."""
    breakdown = mac_breakdown(config)
    return sum(v for k, v in breakdown.items() if k != "flow")


def measure_network_macs(
    model: MooseModel, clip: "VideoClip", flow: Optional[FlowField] = None
) -> int:
    """Run one forward with an instrumented matmul and return the MACs it performed."""
    with MacCounter() as counter:
        model.forward(clip, flow)
    return counter.macs
