"""Utterance to cepstral features: pre-emphasis, framing, SAD, kernels, CMN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Waveform
from .errors import DataError
from .kernels import KernelSet, forward_frames


@dataclass
class FeatureMatrix:
    values: np.ndarray
    frame_shift_s: float = 0.01

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("feature matrix must be 2-D (frames x coefficients)")
        if not np.all(np.isfinite(self.values)):
            raise DataError("feature matrix contains non-finite values")

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]


def pre_emphasize(w: Waveform, coef: float = 0.97) -> Waveform:
    if not 0.0 <= coef < 1.0:
        raise ValueError("pre-emphasis coefficient must lie in [0, 1)")
    x = w.samples
    y = np.empty_like(x)
    y[0] = x[0] * (1.0 - coef)
    y[1:] = x[1:] - coef * x[:-1]
    # output can leave [-1, 1]; skip Waveform range validation
    return Waveform(y, w.sample_rate_hz, check_range=False)


def frame_signal(w: Waveform | np.ndarray, M: int, shift: int) -> np.ndarray:
    """Non-padded frames as a ``T x M`` array; the tail remainder is dropped."""
    x = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)
    if x.size < M:
        raise DataError(f"signal of {x.size} samples is shorter than one frame ({M})")
    T = 1 + (x.size - M) // shift
    return np.lib.stride_tricks.sliding_window_view(x, M)[::shift][:T].copy()


def sad_mask(frames, threshold: float = 0.1) -> np.ndarray:
    """Keep frames whose energy reaches ``threshold`` times the mean energy."""
    frames = np.atleast_2d(frames)
    if frames.shape[0] < 1:
        raise DataError("SAD needs at least one frame")
    energy = np.sum(frames * frames, axis=1)
    keep = energy >= threshold * energy.mean()
    keep[np.argmax(energy)] = True
    return keep


def cmn(fm: FeatureMatrix) -> FeatureMatrix:
    if fm.num_frames < 1:
        raise DataError("CMN needs at least one frame")
    return FeatureMatrix(fm.values - fm.values.mean(axis=0), fm.frame_shift_s)


def prepare_frames(w: Waveform, cfg, apply_sad: bool = True) -> np.ndarray:
    """Everything before the learnable kernels; independent of kernel values."""
    if w.sample_rate_hz != cfg.sample_rate_hz:
        raise DataError(
            f"waveform rate {w.sample_rate_hz} Hz does not match config {cfg.sample_rate_hz} Hz"
        )
    frames = frame_signal(pre_emphasize(w, cfg.preemph), cfg.frame_len, cfg.frame_shift)
    if apply_sad:
        frames = frames[sad_mask(frames, cfg.sad_fraction)]
    return frames


def extract(w: Waveform, ks: KernelSet, apply_sad: bool = True,
            apply_cmn: bool = True) -> FeatureMatrix:
    cfg = ks.config
    frames = prepare_frames(w, cfg, apply_sad)
    fm = FeatureMatrix(forward_frames(frames, ks), cfg.frame_shift / cfg.sample_rate_hz)
    return cmn(fm) if apply_cmn else fm
