"""Learnable MFCC front-end with constrained kernel adaptation."""

from .kernels import KernelSet, MfccConfig
from .pipeline import FeatureMatrix, extract
from .audio_io import Waveform, read_wav, write_wav, read_kernels, write_kernels
from .constraints import Mode
from .metrics import TrialScores, eer, min_dcf, det_points

__all__ = [
    "KernelSet", "MfccConfig", "FeatureMatrix", "extract", "Waveform", "read_wav",
    "write_wav", "read_kernels", "write_kernels", "Mode", "TrialScores", "eer",
    "min_dcf", "det_points",
]
__version__ = "0.1.0"
