"""End-to-end two-pathway video encoder and classifier."""

import logging
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Union

import numpy as np

from ..core import Tensor, layer_norm
from ..flow import FlowField, FlowParams, clip_flow
from ..utils.helpers import validate_choice, validate_positive
from .aggregation import (
    AggregationMode,
    CausalAggregatorParams,
    ClipEmbedding,
    aggregate_causal,
    aggregate_mean,
)
from .attention import (
    AttentionRecorder,
    EncoderBlockParams,
    encoder_block,
    init_weight,
    linear,
    one_param,
    zero_param,
)
from .fusion import FusionMode, FusionParams, UnitEmbedding, fuse
from .patching import SPATIAL, TEMPORAL, EmbedderParams, PatchGrid, TokenSequence, embed, patchify

if TYPE_CHECKING:
    from ..data.clip import VideoClip

FLOW_CHANNELS = 2
FLOW_INPUTS = ("estimated", "zeroed")
SPATIAL_SELF = "spatial_self"
TEMPORAL_SELF = "temporal_self"

# Parameters excluded from weight decay: norms, biases, cls seeds, position tables.
_NO_DECAY = re.compile(r"^(b|b\d+|b_\w+|gamma|beta|cls|positional)$")


class ModelConfigError(ValueError):
    """Exception raised for inconsistent model settings or mismatched inputs."""

    pass


@dataclass(frozen=True)
class MooseConfig:
    """Architecture settings; defaults are the desk-scale model."""

    frames: int = 8
    channels: int = 1
    width: int = 32
    height: int = 32
    patch: int = 8
    spatial_dim: int = 64
    spatial_layers: int = 2
    spatial_heads: int = 4
    temporal_dim: int = 32
    temporal_layers: int = 2
    temporal_heads: int = 2
    fusion: FusionMode = FusionMode.BIDIRECTIONAL
    aggregation: AggregationMode = AggregationMode.CAUSAL
    aggregation_heads: int = 4
    num_classes: int = 4
    arrow_mask: bool = True
    flow_input: str = "estimated"
    flow: FlowParams = field(default_factory=FlowParams)
    seed: int = 0

    def __post_init__(self) -> None:
        """Simple validation after initialization."""
        try:
            object.__setattr__(self, "fusion", FusionMode.parse(self.fusion))
            object.__setattr__(self, "aggregation", AggregationMode.parse(self.aggregation))
            validate_positive(self.frames, "frames")
            validate_positive(self.width, "width")
            validate_positive(self.height, "height")
            validate_positive(self.patch, "patch")
            validate_positive(self.spatial_dim, "spatial_dim")
            validate_positive(self.temporal_dim, "temporal_dim")
            validate_positive(self.spatial_layers, "spatial_layers", allow_zero=True)
            validate_positive(self.temporal_layers, "temporal_layers", allow_zero=True)
            validate_positive(self.spatial_heads, "spatial_heads")
            validate_positive(self.temporal_heads, "temporal_heads")
            validate_positive(self.aggregation_heads, "aggregation_heads")
            validate_choice(self.flow_input, "flow_input", FLOW_INPUTS)
        except ValueError as e:
            raise ModelConfigError(str(e)) from e

        if self.channels not in (1, 3):
            raise ModelConfigError(f"channels must be 1 or 3, got {self.channels}")
        if self.num_classes < 2:
            raise ModelConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.width % self.patch or self.height % self.patch:
            raise ModelConfigError(
                f"frame {self.width}x{self.height} is not divisible by patch size {self.patch}"
            )
        for dim, heads, label in (
            (self.spatial_dim, self.spatial_heads, "spatial"),
            (self.temporal_dim, self.temporal_heads, "temporal"),
            (self.unit_dim, self.aggregation_heads, "aggregation"),
        ):
            if dim % heads:
                raise ModelConfigError(f"{label} heads {heads} must divide dim {dim}")
            if dim < 2:
                raise ModelConfigError(f"{label} dim must be >= 2 for layer norm, got {dim}")

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid.for_frame(self.width, self.height, self.patch)

    @property
    def num_patches(self) -> int:
        return self.grid.num_patches

    @property
    def sequence_length(self) -> int:
        return self.num_patches + 1

    @property
    def unit_dim(self) -> int:
        return FusionMode.parse(self.fusion).unit_dim(self.spatial_dim, self.temporal_dim)

    def to_dict(self) -> Dict[str, Union[int, float, str, bool]]:
        return {
            "frames": self.frames,
            "channels": self.channels,
            "width": self.width,
            "height": self.height,
            "patch": self.patch,
            "spatial_dim": self.spatial_dim,
            "spatial_layers": self.spatial_layers,
            "spatial_heads": self.spatial_heads,
            "temporal_dim": self.temporal_dim,
            "temporal_layers": self.temporal_layers,
            "temporal_heads": self.temporal_heads,
            "fusion": self.fusion.value,
            "aggregation": self.aggregation.value,
            "aggregation_heads": self.aggregation_heads,
            "num_classes": self.num_classes,
            "arrow_mask": self.arrow_mask,
            "flow_input": self.flow_input,
            "flow_alpha": self.flow.alpha,
            "flow_iterations": self.flow.iterations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Union[int, float, str, bool]]) -> "MooseConfig":
        """Inverse of :meth:`to_dict`."""
        data = dict(values)
        try:
            flow = FlowParams(
                alpha=float(data.pop("flow_alpha", 1.0)),
                iterations=int(data.pop("flow_iterations", 100)),
            )
            return cls(flow=flow, **data)  # type: ignore[arg-type]
        except TypeError as e:
            raise ModelConfigError(f"invalid model settings: {e}") from e


@dataclass
class PathwayParams:
    """Embedder, encoder blocks and final norm of one pathway."""

    embedder: EmbedderParams
    blocks: List[EncoderBlockParams]
    norm_gamma: Tensor
    norm_beta: Tensor

    @classmethod
    def init(
        cls,
        grid: PatchGrid,
        channels: int,
        dim: int,
        layers: int,
        heads: int,
        rng: np.random.Generator,
    ) -> "PathwayParams":
        return cls(
            embedder=EmbedderParams.init(grid, channels, dim, rng),
            blocks=[EncoderBlockParams.init(dim, heads, rng) for _ in range(layers)],
            norm_gamma=one_param(dim),
            norm_beta=zero_param(dim),
        )

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        params = self.embedder.named_parameters(f"{prefix}.embed")
        for i, block in enumerate(self.blocks):
            params.update(block.named_parameters(f"{prefix}.block{i}"))
        params[f"{prefix}.norm.gamma"] = self.norm_gamma
        params[f"{prefix}.norm.beta"] = self.norm_beta
        return params


@dataclass
class HeadParams:
    """Layer norm followed by a linear classifier with a zero bias."""

    norm_gamma: Tensor
    norm_beta: Tensor
    w: Tensor
    b: Tensor

    @classmethod
    def init(cls, dim: int, num_classes: int, rng: np.random.Generator) -> "HeadParams":
        return cls(
            norm_gamma=one_param(dim),
            norm_beta=zero_param(dim),
            w=init_weight(rng, dim, num_classes),
            b=zero_param(num_classes),
        )

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        return {
            f"{prefix}.norm.gamma": self.norm_gamma,
            f"{prefix}.norm.beta": self.norm_beta,
            f"{prefix}.w": self.w,
            f"{prefix}.b": self.b,
        }


class MooseModel:
    """
    Clip -> flow -> spatial and temporal token pathways -> per-frame fusion ->
    temporal aggregation -> class logits.

    All ``T`` frames of a clip run through each pathway as one batch
    ``[T, N+1, D]``.
    """

    def __init__(self, config: MooseConfig, logger: Optional[logging.Logger] = None) -> None:
        self.config = config
        self.logger = logger or logging.getLogger(__name__)
        rng = np.random.default_rng(config.seed)
        grid = config.grid

        self.spatial = PathwayParams.init(
            grid,
            config.channels,
            config.spatial_dim,
            config.spatial_layers,
            config.spatial_heads,
            rng,
        )
        self.temporal = PathwayParams.init(
            grid,
            FLOW_CHANNELS,
            config.temporal_dim,
            config.temporal_layers,
            config.temporal_heads,
            rng,
        )
        self.fusion = FusionParams.init(
            config.fusion,
            config.spatial_dim,
            config.temporal_dim,
            config.spatial_heads,
            config.temporal_heads,
            rng,
        )
        self.aggregator: Optional[CausalAggregatorParams] = None
        if config.aggregation is AggregationMode.CAUSAL:
            self.aggregator = CausalAggregatorParams.init(
                config.frames, config.unit_dim, config.aggregation_heads, rng
            )
        self.head = HeadParams.init(config.unit_dim, config.num_classes, rng)

        self._registry = self._build_registry()
        self.logger.debug(
            f"Built model with {self.num_parameters()} parameters "
            f"({config.fusion.value} fusion, {config.aggregation.value} aggregation)"
        )

    def _build_registry(self) -> Dict[str, Tensor]:
        registry = self.spatial.named_parameters("spatial")
        registry.update(self.temporal.named_parameters("temporal"))
        registry.update(self.fusion.named_parameters("fusion"))
        if self.aggregator is not None:
            registry.update(self.aggregator.named_parameters("aggregation"))
        registry.update(self.head.named_parameters("head"))
        for name, tensor in registry.items():
            tensor.name = name
        return registry

    def parameters(self) -> Dict[str, Tensor]:
        """Named trainable tensors in a fixed order."""
        return dict(self._registry)

    def num_parameters(self) -> int:
        return sum(p.size for p in self._registry.values())

    def decay_mask(self) -> Dict[str, bool]:
        """Whether each parameter takes weight decay."""
        return {
            name: not _NO_DECAY.match(name.rsplit(".", 1)[-1]) for name in self._registry
        }

    def zero_grad(self) -> None:
        for p in self._registry.values():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._registry.items()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Copy values into the existing tensors; names and shapes must match exactly."""
        missing = set(self._registry) - set(state)
        unexpected = set(state) - set(self._registry)
        if missing or unexpected:
            raise ModelConfigError(
                f"state mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, p in self._registry.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ModelConfigError(
                    f"parameter {name} has shape {p.shape}, state holds {value.shape}"
                )
            p.data[...] = value

    def _check_clip(self, clip: "VideoClip") -> np.ndarray:
        cfg = self.config
        expected = (cfg.frames + 1, cfg.channels, cfg.width, cfg.height)
        if clip.frames.shape != expected:
            raise ModelConfigError(
                f"clip {clip.clip_id} has shape {clip.frames.shape}, model expects {expected}"
            )
        return clip.frames.data

    def flow_input(self, clip: "VideoClip", flow: Optional[FlowField] = None) -> np.ndarray:
        """Per-clip standardized flow ``[T, 2, W, H]`` fed to the temporal pathway."""
        cfg = self.config
        if cfg.flow_input == "zeroed":
            return np.zeros((cfg.frames, FLOW_CHANNELS, cfg.width, cfg.height))
        field_ = flow if flow is not None else clip_flow(clip, cfg.flow)
        expected = (cfg.frames, FLOW_CHANNELS, cfg.width, cfg.height)
        if field_.flows.shape != expected:
            raise ModelConfigError(
                f"flow for clip {clip.clip_id} has shape {field_.flows.shape}, expected {expected}"
            )
        return field_.normalized()

    def _pathway(
        self,
        images: np.ndarray,
        params: PathwayParams,
        pathway: str,
        recorder: Optional[AttentionRecorder],
    ) -> TokenSequence:
        purpose = SPATIAL_SELF if pathway == SPATIAL else TEMPORAL_SELF
        tokens = embed(patchify(images, self.config.patch), params.embedder, pathway=pathway)
        for i, block in enumerate(params.blocks):
            out = encoder_block(tokens, block, recorder=recorder, layer=i, purpose=purpose)
            assert isinstance(out, TokenSequence)
            tokens = out
        return tokens.with_tokens(layer_norm(tokens.tokens, params.norm_gamma, params.norm_beta))

    def units(
        self,
        clip: "VideoClip",
        flow: Optional[FlowField] = None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> UnitEmbedding:
        """Fused unit embeddings ``[T, D_unit]``, one per frame and its following flow."""
        frames = self._check_clip(clip)
        flows = self.flow_input(clip, flow)
        spatial = self._pathway(frames[: self.config.frames], self.spatial, SPATIAL, recorder)
        temporal = self._pathway(flows, self.temporal, TEMPORAL, recorder)
        return fuse(spatial, temporal, self.fusion, self.config.arrow_mask, recorder)

    def aggregate(
        self, units: UnitEmbedding, recorder: Optional[AttentionRecorder] = None
    ) -> ClipEmbedding:
        if self.aggregator is None:
            return aggregate_mean(units.e_z)
        return aggregate_causal(units.e_z, self.aggregator, recorder)

    def encode(
        self,
        clip: "VideoClip",
        flow: Optional[FlowField] = None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> ClipEmbedding:
        return self.aggregate(self.units(clip, flow, recorder), recorder)

    def classify(self, embedding: ClipEmbedding) -> Tensor:
        normed = layer_norm(embedding.e, self.head.norm_gamma, self.head.norm_beta)
        return linear(normed, self.head.w, self.head.b)

    def forward(
        self,
        clip: "VideoClip",
        flow: Optional[FlowField] = None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        """
        Class logits ``[K]`` for one clip.

        Args:
            clip: ``T+1`` frames matching the config
            flow: Precomputed flow for the clip (estimated on the fly when omitted)
            recorder: Collects attention weights for visualization

        Returns:
            Tensor of ``num_classes`` logits
        """
        return self.classify(self.encode(clip, flow, recorder))

    __call__ = forward


def forward(
    clip: "VideoClip",
    model: MooseModel,
    flow: Optional[FlowField] = None,
    recorder: Optional[AttentionRecorder] = None,
) -> Tensor:
    """Functional form of :meth:`MooseModel.forward`."""
    return model.forward(clip, flow, recorder)
