"""Temporal aggregation of per-frame unit embeddings into one clip embedding."""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Union

import numpy as np

from ..core import ShapeError, Tensor, concat, reshape, tensor_mean
from .attention import (
    AttentionRecorder,
    EncoderBlockParams,
    build_causal_mask,
    encoder_block,
    init_weight,
)
from .fusion import UnitEmbedding

AGGREGATION_PURPOSE = "aggregation"

UnitsLike = Union[Tensor, Sequence[UnitEmbedding]]


class AggregationMode(str, Enum):
    MEAN = "mean"
    CAUSAL = "causal"

    @classmethod
    def parse(cls, value: Union[str, "AggregationMode"]) -> "AggregationMode":
        try:
            return cls(value)
        except ValueError as e:
            options = ", ".join(m.value for m in cls)
            raise ValueError(f"aggregation must be one of: {options}; got {value!r}") from e


@dataclass
class ClipEmbedding:
    """Clip-level embedding ``e`` of width ``L`` (the unit width)."""

    e: Tensor

    def __post_init__(self) -> None:
        if self.e.ndim != 1:
            raise ShapeError(f"clip embedding must be 1-D, got shape {self.e.shape}")
        if not np.all(np.isfinite(self.e.data)):
            raise ValueError("clip embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return self.e.shape[0]


@dataclass
class CausalAggregatorParams:
    """Learned time-position table ``[T, D]`` plus one causal encoder block."""

    positional: Tensor
    block: EncoderBlockParams

    @classmethod
    def init(
        cls, frames: int, dim: int, heads: int, rng: np.random.Generator
    ) -> "CausalAggregatorParams":
        return cls(
            positional=init_weight(rng, frames, dim),
            block=EncoderBlockParams.init(dim, heads, rng),
        )

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        params = {f"{prefix}.positional": self.positional}
        params.update(self.block.named_parameters(f"{prefix}.block"))
        return params


def stack_units(units: UnitsLike) -> Tensor:
    """Units as a ``[T, D]`` tensor."""
    if isinstance(units, Tensor):
        if units.ndim != 2 or units.shape[0] < 1:
            raise ShapeError(f"units must be a non-empty [T, D] tensor, got {units.shape}")
        return units
    if len(units) == 0:
        raise ShapeError("cannot aggregate an empty unit sequence")
    rows = []
    for unit in units:
        if unit.e_z.ndim == 2:
            rows.append(unit.e_z)
        else:
            rows.append(reshape(unit.e_z, (1, unit.dim)))
    return concat(rows, axis=0)


def aggregate_mean(units: UnitsLike) -> ClipEmbedding:
    """Arithmetic mean over time."""
    return ClipEmbedding(e=tensor_mean(stack_units(units), axis=0))


def causal_sequence(
    units: UnitsLike,
    params: CausalAggregatorParams,
    recorder: Optional[AttentionRecorder] = None,
) -> Tensor:
    """All ``T`` outputs of the causal block; position ``t`` only sees units ``0..t``."""
    sequence = stack_units(units)
    length = sequence.shape[0]
    if length > params.positional.shape[0]:
        raise ShapeError(
            f"{length} units exceed the {params.positional.shape[0]} time positions"
        )
    if sequence.shape[1] != params.block.dim:
        raise ShapeError(f"unit width {sequence.shape[1]} does not match D={params.block.dim}")
    positioned = sequence + params.positional[:length]
    out = encoder_block(
        positioned,
        params.block,
        mask=build_causal_mask(length),
        recorder=recorder,
        layer=0,
        purpose=AGGREGATION_PURPOSE,
    )
    assert isinstance(out, Tensor)
    return out


def aggregate_causal(
    units: UnitsLike,
    params: CausalAggregatorParams,
    recorder: Optional[AttentionRecorder] = None,
) -> ClipEmbedding:
    """Clip embedding from the last position, the only one that sees every unit."""
    return ClipEmbedding(e=causal_sequence(units, params, recorder)[-1])
