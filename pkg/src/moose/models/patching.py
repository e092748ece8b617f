"""Non-overlapping patch grids and the token embedder shared by both pathways."""

from dataclasses import dataclass
from typing import Dict, Union

import numpy as np

from ..core import Tensor, broadcast_to, concat, matmul, reshape

SPATIAL = "spatial"
TEMPORAL = "temporal"
INIT_STD = 0.02

ImageLike = Union[Tensor, np.ndarray]


class PatchError(ValueError):
    """Exception raised when an image does not tile into the patch grid."""

    pass


@dataclass(frozen=True)
class PatchGrid:
    """Patch layout of a ``W x H`` frame; patch index is ``gy * grid_w + gx``."""

    patch_size: int
    grid_w: int
    grid_h: int

    def __post_init__(self) -> None:
        if self.patch_size < 1 or self.grid_w < 1 or self.grid_h < 1:
            raise PatchError(
                f"PatchGrid needs positive extents, got P={self.patch_size}, "
                f"grid={self.grid_w}x{self.grid_h}"
            )

    @classmethod
    def for_frame(cls, width: int, height: int, patch_size: int) -> "PatchGrid":
        if patch_size < 1 or width % patch_size or height % patch_size:
            raise PatchError(
                f"frame {width}x{height} (W={width}, H={height}) is not divisible "
                f"by patch size P={patch_size}"
            )
        return cls(patch_size=patch_size, grid_w=width // patch_size, grid_h=height // patch_size)

    @property
    def num_patches(self) -> int:
        return self.grid_w * self.grid_h

    @property
    def width(self) -> int:
        return self.grid_w * self.patch_size

    @property
    def height(self) -> int:
        return self.grid_h * self.patch_size

    def patch_dim(self, channels: int) -> int:
        return channels * self.patch_size * self.patch_size

    def rectangle(self, index: int) -> tuple:
        """Pixel bounds ``(x0, x1, y0, y1)`` (half-open) covered by patch ``index``."""
        if not 0 <= index < self.num_patches:
            raise PatchError(f"patch index {index} outside 0..{self.num_patches - 1}")
        gy, gx = divmod(index, self.grid_w)
        p = self.patch_size
        return gx * p, (gx + 1) * p, gy * p, (gy + 1) * p


@dataclass
class TokenSequence:
    """Token matrix ``[..., N+1, D]`` of one pathway; row 0 is the cls token."""

    tokens: Tensor
    pathway: str = SPATIAL

    def __post_init__(self) -> None:
        if self.tokens.ndim < 2:
            raise PatchError(f"token sequence needs [..., N+1, D], got {self.tokens.shape}")
        if self.pathway not in (SPATIAL, TEMPORAL):
            raise PatchError(f"unknown pathway {self.pathway!r}")

    @property
    def length(self) -> int:
        return self.tokens.shape[-2]

    @property
    def num_patches(self) -> int:
        return self.length - 1

    @property
    def dim(self) -> int:
        return self.tokens.shape[-1]

    def with_tokens(self, tokens: Tensor) -> "TokenSequence":
        return TokenSequence(tokens=tokens, pathway=self.pathway)


@dataclass
class EmbedderParams:
    """Projection ``E [C*P*P, D]``, positional table ``[N+1, D]`` and cls seed ``[D]``."""

    projection: Tensor
    positional: Tensor
    cls: Tensor

    def __post_init__(self) -> None:
        dim = self.projection.shape[-1]
        if self.projection.ndim != 2 or self.positional.ndim != 2:
            raise PatchError("projection and positional tables must be 2-D")
        if self.positional.shape[1] != dim or self.cls.shape != (dim,):
            raise PatchError(
                f"embedder shapes disagree: E {self.projection.shape}, "
                f"pos {self.positional.shape}, cls {self.cls.shape}"
            )

    @classmethod
    def init(
        cls, grid: PatchGrid, channels: int, dim: int, rng: np.random.Generator
    ) -> "EmbedderParams":
        return cls(
            projection=Tensor(
                rng.normal(0.0, INIT_STD, (grid.patch_dim(channels), dim)), requires_grad=True
            ),
            positional=Tensor(
                rng.normal(0.0, INIT_STD, (grid.num_patches + 1, dim)), requires_grad=True
            ),
            cls=Tensor(np.zeros(dim), requires_grad=True),
        )

    @property
    def dim(self) -> int:
        return self.projection.shape[1]

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        return {
            f"{prefix}.projection": self.projection,
            f"{prefix}.positional": self.positional,
            f"{prefix}.cls": self.cls,
        }


def _array(image: ImageLike) -> np.ndarray:
    return image.data if isinstance(image, Tensor) else np.asarray(image, dtype=np.float64)


def patchify(image: ImageLike, patch_size: int) -> Tensor:
    """
    Split ``[..., C, W, H]`` into patches ``[..., N, C*P*P]``.

    Patches run left to right, then top to bottom; each row is the patch
    flattened channel-major, then x, then y.
    """
    data = _array(image)
    if data.ndim < 3:
        raise PatchError(f"patchify expects [..., C, W, H], got shape {data.shape}")
    *lead, channels, width, height = data.shape
    grid = PatchGrid.for_frame(width, height, patch_size)
    p = patch_size
    blocks = data.reshape(*lead, channels, grid.grid_w, p, grid.grid_h, p)
    k = len(lead)
    # -> [..., gh, gw, C, Px, Py]
    axes = list(range(k)) + [k + 3, k + 1, k, k + 2, k + 4]
    patches = blocks.transpose(axes).reshape(*lead, grid.num_patches, channels * p * p)
    return Tensor(patches)


def unpatchify(patches: ImageLike, grid: PatchGrid, channels: int) -> Tensor:
    """Inverse of :func:`patchify` for one frame: ``[N, C*P*P]`` back to ``[C, W, H]``."""
    data = _array(patches)
    expected = (grid.num_patches, grid.patch_dim(channels))
    if data.shape != expected:
        raise PatchError(f"unpatchify expects {expected}, got {data.shape}")
    p = grid.patch_size
    blocks = data.reshape(grid.grid_h, grid.grid_w, channels, p, p)
    image = blocks.transpose(2, 1, 3, 0, 4).reshape(channels, grid.width, grid.height)
    return Tensor(image)


def embed(patches: Tensor, params: EmbedderParams, pathway: str = SPATIAL) -> TokenSequence:
    """
    Token sequence ``[..., N+1, D]``: row 0 is ``cls + pos[0]``, row ``i+1`` is
    ``patches[i] @ E + pos[i+1]``.
    """
    n = patches.shape[-2] if patches.ndim >= 2 else -1
    if patches.ndim < 2 or patches.shape[-1] != params.projection.shape[0]:
        raise PatchError(
            f"patches {patches.shape} do not match projection {params.projection.shape}"
        )
    if params.positional.shape[0] != n + 1:
        raise PatchError(
            f"positional table has {params.positional.shape[0]} rows, need {n + 1} for N={n}"
        )
    lead = patches.shape[:-2]
    dim = params.dim
    projected = matmul(patches, params.projection)
    cls_row = broadcast_to(reshape(params.cls, (1,) * len(lead) + (1, dim)), lead + (1, dim))
    tokens = concat([cls_row, projected], axis=-2) + params.positional
    return TokenSequence(tokens=tokens, pathway=pathway)
