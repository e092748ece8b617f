"""Per-clip flow memo so training epochs solve each clip only once."""

import logging
from typing import TYPE_CHECKING, Dict, Iterable, Optional, Tuple

from ..utils.helpers import SimpleTimer
from .horn_schunck import FlowField, FlowParams, clip_flow

if TYPE_CHECKING:
    from ..data.clip import VideoClip


class FlowCache:
    """Flow fields keyed by clip id; mirrored variants are derived from the cached field."""

    def __init__(
        self, params: Optional[FlowParams] = None, logger: Optional[logging.Logger] = None
    ) -> None:
        self.params = params or FlowParams()
        self.logger = logger or logging.getLogger(__name__)
        self._fields: Dict[Tuple[str, bool], FlowField] = {}
        self.misses = 0

    def __len__(self) -> int:
        return len(self._fields)

    def __contains__(self, clip_id: str) -> bool:
        return (clip_id, False) in self._fields

    def get(self, clip: "VideoClip", flipped: bool = False) -> FlowField:
        key = (clip.clip_id, flipped)
        if key not in self._fields:
            if flipped:
                self._fields[key] = self.get(clip).flipped()
            else:
                self.misses += 1
                self._fields[key] = clip_flow(clip, self.params)
        return self._fields[key]

    def warm(self, clips: Iterable["VideoClip"]) -> None:
        clips = list(clips)
        with SimpleTimer(f"Estimating flow for {len(clips)} clips", self.logger):
            for clip in clips:
                self.get(clip)

    def clear(self) -> None:
        self._fields.clear()
