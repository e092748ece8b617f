"""Fusion of the spatial and flow token sequences into one unit embedding per frame."""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np

from ..core import ShapeError, Tensor, concat
from .attention import (
    AttentionMask,
    AttentionRecorder,
    MhaParams,
    attention,
    build_arrow_mask,
    init_weight,
    linear,
    zero_param,
)
from .patching import TokenSequence

FLOW_PRIOR_PURPOSE = "flow_prior"
VISUAL_PRIOR_PURPOSE = "visual_prior"


class FusionMode(str, Enum):
    """Which pathway queries the other."""

    FLOW_PRIOR = "flow_prior"
    VISUAL_PRIOR = "visual_prior"
    BIDIRECTIONAL = "bidirectional"

    @classmethod
    def parse(cls, value: Union[str, "FusionMode"]) -> "FusionMode":
        try:
            return cls(value)
        except ValueError as e:
            options = ", ".join(m.value for m in cls)
            raise ValueError(f"fusion must be one of: {options}; got {value!r}") from e

    @property
    def uses_flow_prior(self) -> bool:
        return self in (FusionMode.FLOW_PRIOR, FusionMode.BIDIRECTIONAL)

    @property
    def uses_visual_prior(self) -> bool:
        return self in (FusionMode.VISUAL_PRIOR, FusionMode.BIDIRECTIONAL)

    def unit_dim(self, spatial_dim: int, temporal_dim: int) -> int:
        if self is FusionMode.BIDIRECTIONAL:
            return spatial_dim + temporal_dim
        return spatial_dim


@dataclass
class UnitEmbedding:
    """Fused embedding ``e_z`` of one video unit (or ``[T, D_unit]`` for a whole clip)."""

    e_z: Tensor
    time: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.e_z.shape[-1]


@dataclass
class FusionParams:
    """
    Cross-attention weights for the active directions.

    ``flow_prior`` attends spatial queries over flow keys; ``visual_prior`` attends
    flow queries over spatial keys. The projection back to ``D_s`` exists only for
    the visual-prior mode.
    """

    mode: FusionMode
    flow_prior: Optional[MhaParams] = None
    visual_prior: Optional[MhaParams] = None
    proj_w: Optional[Tensor] = None
    proj_b: Optional[Tensor] = None

    def __post_init__(self) -> None:
        if self.mode.uses_flow_prior and self.flow_prior is None:
            raise ValueError(f"{self.mode.value} fusion needs flow-prior attention weights")
        if self.mode.uses_visual_prior and self.visual_prior is None:
            raise ValueError(f"{self.mode.value} fusion needs visual-prior attention weights")
        if self.mode is FusionMode.VISUAL_PRIOR and (self.proj_w is None or self.proj_b is None):
            raise ValueError("visual_prior fusion needs a projection to the spatial width")

    @classmethod
    def init(
        cls,
        mode: FusionMode,
        spatial_dim: int,
        temporal_dim: int,
        spatial_heads: int,
        temporal_heads: int,
        rng: np.random.Generator,
    ) -> "FusionParams":
        flow_prior = visual_prior = proj_w = proj_b = None
        if mode.uses_flow_prior:
            flow_prior = MhaParams.init(spatial_dim, spatial_heads, rng, kv_dim=temporal_dim)
        if mode.uses_visual_prior:
            visual_prior = MhaParams.init(temporal_dim, temporal_heads, rng, kv_dim=spatial_dim)
        if mode is FusionMode.VISUAL_PRIOR:
            proj_w = init_weight(rng, temporal_dim, spatial_dim)
            proj_b = zero_param(spatial_dim)
        return cls(
            mode=mode,
            flow_prior=flow_prior,
            visual_prior=visual_prior,
            proj_w=proj_w,
            proj_b=proj_b,
        )

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        if self.flow_prior is not None:
            params.update(self.flow_prior.named_parameters(f"{prefix}.flow_prior"))
        if self.visual_prior is not None:
            params.update(self.visual_prior.named_parameters(f"{prefix}.visual_prior"))
        if self.proj_w is not None and self.proj_b is not None:
            params[f"{prefix}.proj.w"] = self.proj_w
            params[f"{prefix}.proj.b"] = self.proj_b
        return params


def _check_pair(e_s: TokenSequence, e_f: TokenSequence) -> None:
    if e_s.length != e_f.length:
        raise ShapeError(
            f"spatial sequence has N={e_s.num_patches} patches, flow sequence has "
            f"N={e_f.num_patches}"
        )
    if e_s.tokens.shape[:-2] != e_f.tokens.shape[:-2]:
        raise ShapeError(
            f"leading axes differ: spatial {e_s.tokens.shape} vs flow {e_f.tokens.shape}"
        )


def _mask(e_s: TokenSequence, use_arrow_mask: bool) -> Optional[AttentionMask]:
    return build_arrow_mask(e_s.num_patches) if use_arrow_mask else None


def _flow_prior_cls(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: MhaParams,
    mask: Optional[AttentionMask],
    recorder: Optional[AttentionRecorder],
) -> Tensor:
    fused = e_s.tokens + attention(
        e_s, e_f, params, mask, recorder, layer=0, purpose=FLOW_PRIOR_PURPOSE
    )
    return fused[..., 0, :]


def _visual_prior_cls(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: MhaParams,
    mask: Optional[AttentionMask],
    recorder: Optional[AttentionRecorder],
) -> Tensor:
    flipped = mask.transposed() if mask is not None else None
    fused = e_f.tokens + attention(
        e_f, e_s, params, flipped, recorder, layer=0, purpose=VISUAL_PRIOR_PURPOSE
    )
    return fused[..., 0, :]


def fuse_flow_prior(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: FusionParams,
    use_arrow_mask: bool = True,
    recorder: Optional[AttentionRecorder] = None,
) -> UnitEmbedding:
    """Spatial tokens plus their attention over flow tokens; the unit is the cls row."""
    _check_pair(e_s, e_f)
    if params.flow_prior is None:
        raise ValueError("fusion parameters carry no flow-prior attention")
    cls = _flow_prior_cls(e_s, e_f, params.flow_prior, _mask(e_s, use_arrow_mask), recorder)
    return UnitEmbedding(e_z=cls)


def fuse_visual_prior(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: FusionParams,
    use_arrow_mask: bool = True,
    recorder: Optional[AttentionRecorder] = None,
) -> UnitEmbedding:
    """Flow tokens plus their attention over spatial tokens; cls row projected to ``D_s``."""
    _check_pair(e_s, e_f)
    if params.visual_prior is None or params.proj_w is None or params.proj_b is None:
        raise ValueError("fusion parameters carry no visual-prior attention and projection")
    cls = _visual_prior_cls(e_s, e_f, params.visual_prior, _mask(e_s, use_arrow_mask), recorder)
    return UnitEmbedding(e_z=linear(cls, params.proj_w, params.proj_b))


def fuse_bidirectional(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: FusionParams,
    use_arrow_mask: bool = True,
    recorder: Optional[AttentionRecorder] = None,
) -> UnitEmbedding:
    """``[flow-prior cls, visual-prior cls]`` of width ``D_s + D_f``; both share one mask."""
    _check_pair(e_s, e_f)
    if params.flow_prior is None or params.visual_prior is None:
        raise ValueError("bidirectional fusion needs both attention directions")
    mask = _mask(e_s, use_arrow_mask)
    spatial_cls = _flow_prior_cls(e_s, e_f, params.flow_prior, mask, recorder)
    flow_cls = _visual_prior_cls(e_s, e_f, params.visual_prior, mask, recorder)
    return UnitEmbedding(e_z=concat([spatial_cls, flow_cls], axis=-1))


def fuse(
    e_s: TokenSequence,
    e_f: TokenSequence,
    params: FusionParams,
    use_arrow_mask: bool = True,
    recorder: Optional[AttentionRecorder] = None,
) -> UnitEmbedding:
    """Dispatch on ``params.mode``."""
    fusers = {
        FusionMode.FLOW_PRIOR: fuse_flow_prior,
        FusionMode.VISUAL_PRIOR: fuse_visual_prior,
        FusionMode.BIDIRECTIONAL: fuse_bidirectional,
    }
    return fusers[params.mode](e_s, e_f, params, use_arrow_mask, recorder)
