"""Fixed 256-entry blue-to-red lookup table."""

import numpy as np

LUT_SIZE = 256


def _build_lut() -> np.ndarray:
    t = np.linspace(0.0, 1.0, LUT_SIZE)
    red = np.clip(1.5 - np.abs(4.0 * t - 3.0), 0.0, 1.0)
    green = np.clip(1.5 - np.abs(4.0 * t - 2.0), 0.0, 1.0)
    blue = np.clip(1.5 - np.abs(4.0 * t - 1.0), 0.0, 1.0)
    lut = np.stack([red, green, blue], axis=1)
    lut.setflags(write=False)
    return lut


BLUE_RED_LUT = _build_lut()


def apply_colormap(values: np.ndarray) -> np.ndarray:
    """Map ``[W, H]`` values in [0, 1] to an RGB image ``[3, W, H]``."""
    index = np.round(np.clip(values, 0.0, 1.0) * (LUT_SIZE - 1)).astype(np.intp)
    return np.moveaxis(BLUE_RED_LUT[index], -1, 0)
