"""Patch embedding, attention, fusion, aggregation and the end-to-end encoder."""

from .accounting import (
    MAC_COMPONENTS,
    PARAM_COMPONENTS,
    count_flops,
    count_params,
    linear_params,
    mac_breakdown,
    measure_network_macs,
    network_macs,
    param_breakdown,
)
from .aggregation import (
    AggregationMode,
    CausalAggregatorParams,
    ClipEmbedding,
    aggregate_causal,
    aggregate_mean,
    causal_sequence,
)
from .attention import (
    AttentionMask,
    AttentionRecorder,
    EncoderBlockParams,
    MhaParams,
    attention,
    build_arrow_mask,
    build_causal_mask,
    encoder_block,
)
from .encoder import SPATIAL_SELF, TEMPORAL_SELF, ModelConfigError, MooseConfig, MooseModel, forward
from .fusion import (
    FLOW_PRIOR_PURPOSE,
    VISUAL_PRIOR_PURPOSE,
    FusionMode,
    FusionParams,
    UnitEmbedding,
    fuse,
    fuse_bidirectional,
    fuse_flow_prior,
    fuse_visual_prior,
)
from .patching import (
    EmbedderParams,
    PatchError,
    PatchGrid,
    TokenSequence,
    embed,
    patchify,
    unpatchify,
)

__all__ = [
    "FLOW_PRIOR_PURPOSE",
    "MAC_COMPONENTS",
    "PARAM_COMPONENTS",
    "SPATIAL_SELF",
    "TEMPORAL_SELF",
    "VISUAL_PRIOR_PURPOSE",
    "AggregationMode",
    "AttentionMask",
    "AttentionRecorder",
    "CausalAggregatorParams",
    "ClipEmbedding",
    "EmbedderParams",
    "EncoderBlockParams",
    "FusionMode",
    "FusionParams",
    "MhaParams",
    "ModelConfigError",
    "MooseConfig",
    "MooseModel",
    "PatchError",
    "PatchGrid",
    "TokenSequence",
    "UnitEmbedding",
    "aggregate_causal",
    "aggregate_mean",
    "attention",
    "build_arrow_mask",
    "build_causal_mask",
    "causal_sequence",
    "count_flops",
    "count_params",
    "embed",
    "encoder_block",
    "forward",
    "fuse",
    "fuse_bidirectional",
    "fuse_flow_prior",
    "fuse_visual_prior",
    "linear_params",
    "mac_breakdown",
    "measure_network_macs",
    "network_macs",
    "param_breakdown",
    "patchify",
    "unpatchify",
]
