"""Masked multi-head attention, mask constructors and pre-norm encoder blocks."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..core import (
    MaskError,
    ShapeError,
    Tensor,
    gelu,
    layer_norm,
    matmul,
    reshape,
    softmax_lastdim,
    swap_last,
    transpose,
)
from .patching import INIT_STD, TokenSequence

TokensLike = Union[TokenSequence, Tensor]


@dataclass
class AttentionMask:
    """Boolean ``[Q_len, K_len]`` matrix; ``False`` forbids the pair."""

    allowed: np.ndarray

    def __post_init__(self) -> None:
        self.allowed = np.asarray(self.allowed, dtype=bool)
        if self.allowed.ndim != 2:
            raise MaskError(f"mask must be 2-D, got shape {self.allowed.shape}")
        if not np.all(self.allowed.any(axis=1)):
            raise MaskError("every mask row needs at least one allowed entry")

    @classmethod
    def full(cls, q_len: int, k_len: int) -> "AttentionMask":
        return cls(np.ones((q_len, k_len), dtype=bool))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.allowed.shape  # type: ignore[return-value]

    @property
    def count(self) -> int:
        return int(self.allowed.sum())

    def transposed(self) -> "AttentionMask":
        return AttentionMask(self.allowed.T.copy())

    def is_symmetric(self) -> bool:
        return self.allowed.shape[0] == self.allowed.shape[1] and bool(
            np.array_equal(self.allowed, self.allowed.T)
        )


def build_arrow_mask(num_patches: int) -> AttentionMask:
    """Cls row, cls column and the patch-to-same-patch diagonal over ``N+1`` tokens."""
    if num_patches < 1:
        raise MaskError(f"arrow mask needs N >= 1 patches, got {num_patches}")
    size = num_patches + 1
    allowed = np.eye(size, dtype=bool)
    allowed[0, :] = True
    allowed[:, 0] = True
    return AttentionMask(allowed)


def build_causal_mask(length: int) -> AttentionMask:
    """Lower-triangular mask: position ``i`` sees positions ``j <= i``."""
    if length < 1:
        raise MaskError(f"causal mask needs length >= 1, got {length}")
    return AttentionMask(np.tril(np.ones((length, length), dtype=bool)))


def init_weight(rng: np.random.Generator, rows: int, cols: int) -> Tensor:
    return Tensor(rng.normal(0.0, INIT_STD, (rows, cols)), requires_grad=True)


def zero_param(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def one_param(*shape: int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


@dataclass
class MhaParams:
    """
    Projections for attention with queries of width ``D_q`` and keys/values of
    width ``D_kv``. Self-attention is the ``D_q == D_kv`` case.
    """

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    b_q: Tensor
    b_k: Tensor
    b_v: Tensor
    b_o: Tensor
    heads: int

    def __post_init__(self) -> None:
        dim = self.dim
        if self.heads < 1 or dim % self.heads:
            raise ShapeError(f"heads={self.heads} must divide model dim {dim}")
        kv = self.kv_dim
        expected = {
            "w_q": (dim, dim),
            "w_k": (kv, dim),
            "w_v": (kv, dim),
            "w_o": (dim, dim),
            "b_q": (dim,),
            "b_k": (dim,),
            "b_v": (dim,),
            "b_o": (dim,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"MhaParams.{name} has shape {actual}, expected {shape}")

    @classmethod
    def init(
        cls,
        dim: int,
        heads: int,
        rng: np.random.Generator,
        kv_dim: Optional[int] = None,
    ) -> "MhaParams":
        kv = dim if kv_dim is None else kv_dim
        return cls(
            w_q=init_weight(rng, dim, dim),
            w_k=init_weight(rng, kv, dim),
            w_v=init_weight(rng, kv, dim),
            w_o=init_weight(rng, dim, dim),
            b_q=zero_param(dim),
            b_k=zero_param(dim),
            b_v=zero_param(dim),
            b_o=zero_param(dim),
            heads=heads,
        )

    @property
    def dim(self) -> int:
        return self.w_q.shape[0]

    @property
    def kv_dim(self) -> int:
        return self.w_k.shape[0]

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        names = ("w_q", "w_k", "w_v", "w_o", "b_q", "b_k", "b_v", "b_o")
        return {f"{prefix}.{name}": getattr(self, name) for name in names}


@dataclass
class EncoderBlockParams:
    """Pre-norm transformer block: attention sublayer then a 4x GELU MLP."""

    ln1_gamma: Tensor
    ln1_beta: Tensor
    attn: MhaParams
    ln2_gamma: Tensor
    ln2_beta: Tensor
    mlp_w1: Tensor
    mlp_b1: Tensor
    mlp_w2: Tensor
    mlp_b2: Tensor

    @classmethod
    def init(cls, dim: int, heads: int, rng: np.random.Generator) -> "EncoderBlockParams":
        hidden = 4 * dim
        return cls(
            ln1_gamma=one_param(dim),
            ln1_beta=zero_param(dim),
            attn=MhaParams.init(dim, heads, rng),
            ln2_gamma=one_param(dim),
            ln2_beta=zero_param(dim),
            mlp_w1=init_weight(rng, dim, hidden),
            mlp_b1=zero_param(hidden),
            mlp_w2=init_weight(rng, hidden, dim),
            mlp_b2=zero_param(dim),
        )

    @property
    def dim(self) -> int:
        return self.ln1_gamma.shape[0]

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        params = {
            f"{prefix}.ln1.gamma": self.ln1_gamma,
            f"{prefix}.ln1.beta": self.ln1_beta,
        }
        params.update(self.attn.named_parameters(f"{prefix}.attn"))
        params.update(
            {
                f"{prefix}.ln2.gamma": self.ln2_gamma,
                f"{prefix}.ln2.beta": self.ln2_beta,
                f"{prefix}.mlp.w1": self.mlp_w1,
                f"{prefix}.mlp.b1": self.mlp_b1,
                f"{prefix}.mlp.w2": self.mlp_w2,
                f"{prefix}.mlp.b2": self.mlp_b2,
            }
        )
        return params


@dataclass
class AttentionRecorder:
    """Read-only store of attention weights ``[..., h, Lq, Lk]`` keyed by (layer, purpose)."""

    records: Dict[Tuple[int, str], np.ndarray] = field(default_factory=dict)

    def record(self, layer: int, purpose: str, weights: np.ndarray) -> None:
        stored = np.array(weights, dtype=np.float64, copy=True)
        stored.setflags(write=False)
        self.records[(layer, purpose)] = stored

    def has(self, purpose: str, layer: Optional[int] = None) -> bool:
        if layer is None:
            return any(p == purpose for _, p in self.records)
        return (layer, purpose) in self.records

    def layers(self, purpose: str) -> List[int]:
        return sorted(layer for layer, p in self.records if p == purpose)

    def weights(self, layer: int, purpose: str, head: Optional[int] = None) -> np.ndarray:
        """Weights of one head, or the mean over heads when ``head`` is None."""
        key = (layer, purpose)
        if key not in self.records:
            raise KeyError(f"no attention recorded for layer {layer}, purpose {purpose!r}")
        stored = self.records[key]
        if head is None:
            return stored.mean(axis=-3)
        if not 0 <= head < stored.shape[-3]:
            raise KeyError(f"head {head} outside 0..{stored.shape[-3] - 1}")
        return stored[..., head, :, :]

    def clear(self) -> None:
        self.records.clear()

    def __iter__(self) -> Iterator[Tuple[int, str]]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _tokens(x: TokensLike) -> Tensor:
    return x.tokens if isinstance(x, TokenSequence) else x


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """``x @ weight + bias`` over the last axis; 1-D inputs are treated as one row."""
    if x.ndim == 1:
        return reshape(linear(reshape(x, (1, x.shape[0])), weight, bias), (weight.shape[1],))
    return matmul(x, weight) + bias


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, length, dim = x.shape
    k = len(lead)
    split = reshape(x, tuple(lead) + (length, heads, dim // heads))
    return transpose(split, tuple(range(k)) + (k + 1, k, k + 2))


def _merge_heads(x: Tensor) -> Tensor:
    *lead, heads, length, head_dim = x.shape
    k = len(lead)
    merged = transpose(x, tuple(range(k)) + (k + 1, k, k + 2))
    return reshape(merged, tuple(lead) + (length, heads * head_dim))


def attention(
    q_src: TokensLike,
    k_src: TokensLike,
    params: MhaParams,
    mask: Optional[AttentionMask] = None,
    recorder: Optional[AttentionRecorder] = None,
    layer: int = 0,
    purpose: str = "self",
) -> Tensor:
    """
    Multi-head attention of ``q_src`` rows over ``k_src`` rows.

    Args:
        q_src: Query tokens ``[..., Lq, D_q]``
        k_src: Key/value tokens ``[..., Lk, D_kv]``
        params: Projections; heads split ``D_q`` into ``d_k = D_q / h``
        mask: Optional ``[Lq, Lk]`` mask shared across heads and leading axes
        recorder: Receives the softmax weights under ``(layer, purpose)``

    Returns:
        Tensor ``[..., Lq, D_q]``
    """
    q_in, k_in = _tokens(q_src), _tokens(k_src)
    if q_in.shape[-1] != params.dim or k_in.shape[-1] != params.kv_dim:
        raise ShapeError(
            f"attention: query {q_in.shape} / key {k_in.shape} do not match "
            f"D_q={params.dim}, D_kv={params.kv_dim}"
        )
    if q_in.shape[:-2] != k_in.shape[:-2]:
        raise ShapeError(f"attention: leading axes differ: {q_in.shape} vs {k_in.shape}")
    if mask is not None and mask.shape != (q_in.shape[-2], k_in.shape[-2]):
        raise ShapeError(
            f"attention: mask {mask.shape} does not match lengths "
            f"{q_in.shape[-2]}x{k_in.shape[-2]}"
        )

    q = _split_heads(linear(q_in, params.w_q, params.b_q), params.heads)
    k = _split_heads(linear(k_in, params.w_k, params.b_k), params.heads)
    v = _split_heads(linear(k_in, params.w_v, params.b_v), params.heads)

    scores = matmul(q, swap_last(k)) * (1.0 / math.sqrt(params.head_dim))
    weights = softmax_lastdim(scores, mask)
    if recorder is not None:
        recorder.record(layer, purpose, weights.data)

    context = _merge_heads(matmul(weights, v))
    return linear(context, params.w_o, params.b_o)


def mlp(x: Tensor, params: EncoderBlockParams) -> Tensor:
    return linear(gelu(linear(x, params.mlp_w1, params.mlp_b1)), params.mlp_w2, params.mlp_b2)


def encoder_block(
    x: TokensLike,
    params: EncoderBlockParams,
    mask: Optional[AttentionMask] = None,
    recorder: Optional[AttentionRecorder] = None,
    layer: int = 0,
    purpose: str = "self",
) -> TokensLike:
    """``h = x + MHA(LN(x))``, then ``h + MLP(LN(h))``; returns the input's type."""
    tokens = _tokens(x)
    if tokens.shape[-1] != params.dim:
        raise ShapeError(f"encoder_block: tokens {tokens.shape} do not match D={params.dim}")
    normed = layer_norm(tokens, params.ln1_gamma, params.ln1_beta)
    hidden = tokens + attention(normed, normed, params.attn, mask, recorder, layer, purpose)
    out = hidden + mlp(layer_norm(hidden, params.ln2_gamma, params.ln2_beta), params)
    return x.with_tokens(out) if isinstance(x, TokenSequence) else out
