"""Segment slicing and silence detection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from inmsrl import dsp


@dataclass(frozen=True)
class SegmentRef:
    piece_id: str
    start: float
    duration: float

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"negative segment start {self.start}")
        if self.duration <= 0:
            raise ValueError(f"non-positive segment duration {self.duration}")


def slice_segments(piece_id: str, length_s: float, duration_s: float, hop_s=None):
    """Grid of segment references covering a piece; the partial tail is dropped."""
    if hop_s is None:
        hop_s = duration_s
    if duration_s > length_s + 1e-9:
        raise ValueError(
            f"segment duration {duration_s}s exceeds piece length {length_s}s"
        )
    if hop_s <= 0:
        raise ValueError(f"hop must be positive, got {hop_s}")
    refs = []
    k = 0
    while k * hop_s + duration_s <= length_s + 1e-9:
        refs.append(SegmentRef(piece_id, k * hop_s, duration_s))
        k += 1
    return refs


def is_silent(segment, threshold_dbfs: float = -60.0) -> bool:
    """True when segment RMS falls strictly below the dBFS threshold."""
    x = segment.samples if isinstance(segment, dsp.Waveform) else np.asarray(segment)
    rms = float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0
    if rms == 0.0:
        return True
    return 20.0 * np.log10(rms) < threshold_dbfs
