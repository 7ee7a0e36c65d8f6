"""Static MFCCs from the initial kernels.

Freshly initialised kernels reproduce an ordinary MFCC front-end: Hamming
window, DFT power spectrum, triangular mel filters, log and DCT. This script
synthesises a short vowel-like signal, writes it to a WAV file, reads it
back and extracts features.
"""

import os
import tempfile

import numpy as np

from lmfcc import KernelSet, MfccConfig, extract, read_wav, write_wav

cfg = MfccConfig()
ks = KernelSet.initial(cfg)
print(f"window {ks.window.shape}, dft {ks.dft_real.shape}, "
      f"melbank {ks.melbank.shape}, dct {ks.dct.shape}")

t = np.arange(cfg.sample_rate_hz) / cfg.sample_rate_hz
x = 0.2 * (np.sin(2 * np.pi * 700 * t) + 0.5 * np.sin(2 * np.pi * 1200 * t))
x[: cfg.sample_rate_hz // 4] *= 0.001  # a quiet lead-in for SAD to drop
path = os.path.join(tempfile.mkdtemp(), "tone.wav")
write_wav(path, x, cfg.sample_rate_hz)

w = read_wav(path)
full = extract(w, ks, apply_sad=False)
speech = extract(w, ks)
print(f"{full.num_frames} frames before SAD, {speech.num_frames} after")
print("per-coefficient mean after CMN (should be ~0):",
      np.abs(speech.values.mean(axis=0)).max())
print("first frame, first 5 coefficients:", np.round(speech.values[0, :5], 3))
