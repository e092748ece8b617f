"""Video clip container."""

from dataclasses import dataclass, replace

import numpy as np

from ..core import Tensor


@dataclass
class VideoClip:
    """A (T+1)-frame clip ``[T+1, C, W, H]``; the extra frame feeds flow extraction."""

    frames: Tensor
    label: int
    clip_id: str
    class_name: str = ""
    sample_rate: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Simple validation after initialization."""
        shape = self.frames.shape
        if len(shape) != 4:
            raise ValueError(f"Clip frames must be [T+1, C, W, H], got shape {shape}")
        if shape[0] < 2:
            raise ValueError(f"Clip needs at least 2 frames, got {shape[0]}")
        data = self.frames.data
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError(f"Clip {self.clip_id} has pixel values outside [0, 1]")
        if self.label < 0:
            raise ValueError(f"Clip label must be >= 0, got {self.label}")
        if self.sample_rate <= 0:
            raise ValueError(f"Clip sample_rate must be > 0, got {self.sample_rate}")

    @property
    def num_units(self) -> int:
        """T: number of video units (frame + following flow)."""
        return self.frames.shape[0] - 1

    @property
    def duration(self) -> float:
        """Time covered by the units, T * dt with dt = 1 / sample_rate."""
        return self.num_units / self.sample_rate

    @property
    def frame_shape(self) -> tuple:
        return tuple(self.frames.shape[1:])

    def reversed(self, label: int, class_name: str) -> "VideoClip":
        """The same frames in reverse temporal order under a new label."""
        return replace(
            self,
            frames=Tensor(self.frames.data[::-1]),
            label=label,
            class_name=class_name,
        )

    def flipped(self, label: int, class_name: str) -> "VideoClip":
        """Horizontal mirror (x axis) under a new label."""
        return replace(
            self,
            frames=Tensor(self.frames.data[:, :, ::-1, :]),
            label=label,
            class_name=class_name,
        )
