"""Synthetic motion benchmark: textured blobs translating across a flat background.

Classes differ only in motion direction. The reversal pair (sweep_LR / sweep_RL)
is built so that the set of frames the model turns into units has the same
distribution for both classes; only their temporal order differs.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ..core import Tensor
from ..utils.helpers import SimpleTimer, validate_positive, validate_range
from .clip import VideoClip

DIRECTION_CLASSES: Tuple[str, ...] = ("move_right", "move_left", "move_up", "move_down")
REVERSAL_CLASSES: Tuple[str, ...] = ("sweep_LR", "sweep_RL")
CLASS_SETS: Dict[str, Tuple[str, ...]] = {
    "directions": DIRECTION_CLASSES,
    "reversal": REVERSAL_CLASSES,
    "all": DIRECTION_CLASSES + REVERSAL_CLASSES,
}
# Label remapping under a horizontal mirror; vertical motion is unchanged.
FLIP_CLASSES: Dict[str, str] = {
    "move_right": "move_left",
    "move_left": "move_right",
    "move_up": "move_up",
    "move_down": "move_down",
    "sweep_LR": "sweep_RL",
    "sweep_RL": "sweep_LR",
}
# Unit displacement per class, in (x, y) with y pointing down.
_DIRECTIONS: Dict[str, Tuple[int, int]] = {
    "move_right": (1, 0),
    "move_left": (-1, 0),
    "move_up": (0, -1),
    "move_down": (0, 1),
    "sweep_LR": (1, 0),
}

MAX_SPEED = 2.0
SPLIT_FRACTIONS = {"train": 0.70, "val": 0.15}
SPLITS = ("train", "val", "test")


class DatasetError(ValueError):
    """Exception raised for invalid dataset requests."""

    pass


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings."""

    classes: Tuple[str, ...] = DIRECTION_CLASSES
    frames: int = 8
    channels: int = 1
    width: int = 32
    height: int = 32
    blob_size: int = 12
    speed: float = 1.0
    noise_sigma: float = 0.02
    texture_sigma: float = 3.0
    background: float = 0.2

    def __post_init__(self) -> None:
        """Simple validation after initialization."""
        if not self.classes:
            raise ValueError("SyntheticSpec classes cannot be empty")
        unknown = [c for c in self.classes if c not in FLIP_CLASSES]
        if unknown:
            raise ValueError(f"Unknown synthetic classes: {', '.join(unknown)}")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("SyntheticSpec classes must be unique")
        validate_positive(self.frames, "SyntheticSpec frames")
        if self.channels not in (1, 3):
            raise ValueError(f"SyntheticSpec channels must be 1 or 3, got {self.channels}")
        validate_positive(self.width, "SyntheticSpec width")
        validate_positive(self.height, "SyntheticSpec height")
        validate_positive(self.blob_size, "SyntheticSpec blob_size")
        validate_range(self.speed, "SyntheticSpec speed", low=0.0, high=MAX_SPEED)
        validate_range(self.noise_sigma, "SyntheticSpec noise_sigma", low=0.0)
        validate_range(self.texture_sigma, "SyntheticSpec texture_sigma", low=0.0)
        validate_range(self.background, "SyntheticSpec background", low=0.0, high=1.0)

    @property
    def travel(self) -> float:
        """Distance covered between the first and last frame."""
        return self.speed * self.frames

    def label_of(self, class_name: str) -> int:
        return self.classes.index(class_name)


@dataclass
class SyntheticDataset:
    """Generated clips grouped by split."""

    spec: SyntheticSpec
    splits: Dict[str, List[VideoClip]] = field(default_factory=dict)
    seed: int = 0

    def split(self, name: str) -> List[VideoClip]:
        if name not in self.splits:
            raise DatasetError(f"Unknown split {name!r}; available: {', '.join(self.splits)}")
        return self.splits[name]

    def all_clips(self) -> List[VideoClip]:
        return [clip for name in SPLITS for clip in self.splits.get(name, [])]

    def find(self, clip_id: str) -> VideoClip:
        for clip in self.all_clips():
            if clip.clip_id == clip_id:
                return clip
        raise DatasetError(f"Clip {clip_id!r} not found")

    def split_of(self, clip_id: str) -> str:
        for name, clips in self.splits.items():
            if any(clip.clip_id == clip_id for clip in clips):
                return name
        raise DatasetError(f"Clip {clip_id!r} not found")


def clip_seed(master_seed: int, index: int) -> int:
    """Independent per-clip seed derived from the master seed and a global clip index."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def smooth_texture(rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
    """Smooth random field scaled to [0.4, 1.0]."""
    pad = int(math.ceil(3 * sigma))
    noise = rng.standard_normal((size + 2 * pad, size + 2 * pad))
    field_ = ndimage.gaussian_filter(noise, sigma) if sigma > 0 else noise
    field_ = field_[pad : pad + size, pad : pad + size]
    low, high = field_.min(), field_.max()
    unit = (field_ - low) / (high - low) if high > low else np.zeros_like(field_)
    return 0.4 + 0.6 * unit


class ClipRenderer:
    """Renders blob trajectories into clips for one generator spec."""

    def __init__(self, spec: SyntheticSpec) -> None:
        self.spec = spec

    def start_range(self, class_name: str) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """Inclusive (x, y) ranges of admissible top-left starts for a class."""
        spec = self.spec
        free_x = spec.width - spec.blob_size
        free_y = spec.height - spec.blob_size
        if class_name in REVERSAL_CLASSES:
            # Window start w must admit both the LR clip (w) and the source of the
            # reversed clip (w - speed).
            x_range = (spec.speed, free_x - spec.travel)
            y_range = (0.0, float(free_y))
        else:
            dx, dy = _DIRECTIONS[class_name]
            x_range = _axis_range(free_x, dx, spec.travel)
            y_range = _axis_range(free_y, dy, spec.travel)
        for low, high in (x_range, y_range):
            if free_x < 0 or free_y < 0 or high < low:
                raise DatasetError(
                    f"blob of size {spec.blob_size} moving {spec.travel:g} px cannot stay "
                    f"inside a {spec.width}x{spec.height} frame for class {class_name}"
                )
        return x_range, y_range

    def render(
        self,
        rng: np.random.Generator,
        start: Tuple[float, float],
        step: Tuple[float, float],
    ) -> np.ndarray:
        """Frames ``[T+1, C, W, H]`` of a textured blob moving ``step`` px per frame."""
        spec = self.spec
        size = spec.blob_size
        texture = smooth_texture(rng, size, spec.texture_sigma)
        tint = rng.uniform(0.7, 1.0, size=spec.channels) if spec.channels == 3 else np.ones(1)

        layer = np.zeros((spec.width, spec.height))
        alpha = np.zeros((spec.width, spec.height))
        layer[:size, :size] = texture
        alpha[:size, :size] = 1.0

        frames = np.empty((spec.frames + 1, spec.channels, spec.width, spec.height))
        for k in range(spec.frames + 1):
            offset = (start[0] + k * step[0], start[1] + k * step[1])
            moved = ndimage.shift(layer, offset, order=1, mode="constant", cval=0.0)
            cover = ndimage.shift(alpha, offset, order=1, mode="constant", cval=0.0)
            gray = spec.background * (1.0 - cover) + moved
            frames[k] = gray[None, :, :] * tint[:, None, None]

        if spec.noise_sigma > 0:
            frames = frames + rng.normal(0.0, spec.noise_sigma, size=frames.shape)
        return np.clip(frames, 0.0, 1.0)


def _axis_range(free: int, direction: int, travel: float) -> Tuple[float, float]:
    if direction > 0:
        return 0.0, free - travel
    if direction < 0:
        return travel, float(free)
    return 0.0, float(free)


def _draw(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    """Integer-grid start within bounds (shifts stay exact for integer speeds)."""
    low, high = math.ceil(bounds[0] - 1e-9), math.floor(bounds[1] + 1e-9)
    return float(rng.integers(low, high + 1))


def make_clip(
    spec: SyntheticSpec, class_name: str, clip_id: str, seed: int
) -> VideoClip:
    """Render one clip of ``class_name`` from its own seeded stream."""
    rng = np.random.default_rng(seed)
    renderer = ClipRenderer(spec)
    x_range, y_range = renderer.start_range(class_name)
    x0, y0 = _draw(rng, x_range), _draw(rng, y_range)
    label = spec.label_of(class_name)

    if class_name == "sweep_RL":
        # Exact reversal of a sweep_LR trajectory starting one step earlier.
        source = renderer.render(rng, (x0 - spec.speed, y0), (spec.speed, 0.0))
        frames = source[::-1].copy()
    else:
        dx, dy = _DIRECTIONS[class_name]
        frames = renderer.render(rng, (x0, y0), (dx * spec.speed, dy * spec.speed))

    return VideoClip(
        frames=Tensor(frames),
        label=label,
        clip_id=clip_id,
        class_name=class_name,
        seed=seed,
    )


def _split_sizes(count: int) -> Dict[str, int]:
    n_train = int(math.floor(SPLIT_FRACTIONS["train"] * count + 0.5))
    n_val = int(math.floor(SPLIT_FRACTIONS["val"] * count + 0.5))
    n_val = min(n_val, count - n_train)
    return {"train": n_train, "val": n_val, "test": count - n_train - n_val}


def generate(
    spec: SyntheticSpec,
    count_per_class: int,
    seed: int = 0,
    logger: Optional[logging.Logger] = None,
) -> SyntheticDataset:
    """
    Generate a balanced dataset with disjoint, seeded 70/15/15 splits per class.

    Args:
        spec: Generator settings
        count_per_class: Clips per class
        seed: Master seed; every clip derives its own stream from it

    Returns:
        SyntheticDataset with train/val/test splits
    """
    log = logger or logging.getLogger(__name__)
    validate_positive(count_per_class, "count_per_class")
    sizes = _split_sizes(count_per_class)
    split_rng = np.random.default_rng(seed)
    splits: Dict[str, List[VideoClip]] = {name: [] for name in SPLITS}

    with SimpleTimer(f"Generating {count_per_class * len(spec.classes)} clips", log):
        for class_index, class_name in enumerate(spec.classes):
            clips = [
                make_clip(
                    spec,
                    class_name,
                    clip_id=f"{class_name}_{i:05d}",
                    seed=clip_seed(seed, class_index * count_per_class + i),
                )
                for i in range(count_per_class)
            ]
            order = split_rng.permutation(count_per_class)
            cursor = 0
            for name in SPLITS:
                picked = sorted(order[cursor : cursor + sizes[name]])
                splits[name].extend(clips[i] for i in picked)
                cursor += sizes[name]

    log.info(
        "Generated dataset: "
        + ", ".join(f"{name}={len(clips)}" for name, clips in splits.items())
    )
    return SyntheticDataset(spec=spec, splits=splits, seed=seed)


def class_names_for(key: str) -> Sequence[str]:
    if key not in CLASS_SETS:
        raise DatasetError(f"Unknown class set {key!r}; choose from {', '.join(CLASS_SETS)}")
    return CLASS_SETS[key]
