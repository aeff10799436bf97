"""Fixed 5-second windowing: trailing null-padding for short sequences,
overlapping sliding windows (plus one end-aligned window) for long ones."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ovhar.data import SensorSequence
from ovhar.errors import OvharError


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class WindowConfig:
    window_seconds: float = 5.0
    stride_seconds: float = 2.5
    pad_value: float = 0.0

    def __post_init__(self):
        if self.window_seconds <= 0:
            raise OvharError("window_seconds must be positive")
        if not (0 < self.stride_seconds <= self.window_seconds):
            raise OvharError("stride_seconds must be in (0, window_seconds]")

    def window_samples(self, rate_hz: float) -> int:
        return round_half_up(self.window_seconds * rate_hz)

    def stride_samples(self, rate_hz: float) -> int:
        return max(1, round_half_up(self.stride_seconds * rate_hz))


@dataclass
class Window:
    source_id: str
    class_id: str | None
    start_sample: int
    samples: np.ndarray  # [T, channels]
    padded_tail: int = 0


def segment(seq: SensorSequence, cfg: WindowConfig) -> list[Window]:
    """Cut one sequence into fixed-length windows.

    Short sequences yield a single window padded at the tail with
    cfg.pad_value. Long sequences yield stride-aligned windows starting at
    0, s, 2s, ...; if the last of those does not end at the final sample, an
    end-aligned window is appended so the ending motion is never truncated.
    """
    length = seq.length
    total = cfg.window_samples(seq.rate_hz)
    if length <= total:
        pad_rows = total - length
        padding = np.full((pad_rows, seq.channels), cfg.pad_value)
        samples = np.concatenate([seq.samples, padding], axis=0) if pad_rows else seq.samples.copy()
        return [
            Window(
                source_id=seq.id,
                class_id=seq.class_id,
                start_sample=0,
                samples=samples,
                padded_tail=pad_rows,
            )
        ]
    stride = cfg.stride_samples(seq.rate_hz)
    starts = list(range(0, length - total + 1, stride))
    if starts[-1] + total < length:
        starts.append(length - total)  # strictly greater than the last stride start
    return [
        Window(
            source_id=seq.id,
            class_id=seq.class_id,
            start_sample=start,
            samples=seq.samples[start : start + total].copy(),
            padded_tail=0,
        )
        for start in starts
    ]


def window_count(length: int, rate_hz: float, cfg: WindowConfig) -> int:
    """len(segment(...)) without materializing windows."""
    total = cfg.window_samples(rate_hz)
    if length <= total:
        return 1
    stride = cfg.stride_samples(rate_hz)
    n_stride = (length - total) // stride + 1
    last_end = (n_stride - 1) * stride + total
    return n_stride + (1 if last_end < length else 0)
