"""The four learnable MFCC kernels: static initialisation and forward maps.

Every forward op broadcasts over leading axes, so a single frame (1-D) and a
stack of frames (T x dim) go through the same code.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError

@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: int = 16000
    frame_len: int = 400
    frame_shift: int = 160
    fft_size: int = 512
    num_bins: int = 257
    num_filters: int = 30
    num_ceps: int = 30
    fmin_hz: float = 20.0
    fmax_hz: float = 7600.0
    preemph: float = 0.97
    log_floor: float = 1e-10
    sad_fraction: float = 0.1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        if self.frame_len < 2 or self.frame_len % 2:
            raise ConfigError(f"frame_len must be even and >= 2, got {self.frame_len}")
        if self.frame_shift < 1:
            raise ConfigError("frame_shift must be >= 1")
        if self.fft_size < self.frame_len:
            raise ConfigError("fft_size must be >= frame_len")
        if self.num_bins != self.fft_size // 2 + 1:
            raise ConfigError(
                f"num_bins must be fft_size//2+1 = {self.fft_size // 2 + 1}, got {self.num_bins}"
            )
        if self.num_filters < 1:
            raise ConfigError("num_filters must be >= 1")
        if self.num_ceps != self.num_filters:
            raise ConfigError("num_ceps must equal num_filters (square DCT kernel)")
        if not 0.0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2:
            raise ConfigError("need 0 <= fmin_hz < fmax_hz <= sample_rate_hz/2")
        if not 0.0 <= self.preemph < 1.0:
            raise ConfigError("preemph must lie in [0, 1)")
        if not self.log_floor > 0:
            raise ConfigError("log_floor must be positive")
        if not self.sad_fraction >= 0:
            raise ConfigError("sad_fraction must be non-negative")

    @classmethod
    def small(cls, **overrides) -> "MfccConfig":
        """Tiny geometry for tests and gradient checks (M=8, N=16, C=4)."""
        base = dict(sample_rate_hz=16000, frame_len=8, frame_shift=4, fft_size=16,
                    num_bins=9, num_filters=4, num_ceps=4, fmin_hz=0.0, fmax_hz=8000.0)
        base.update(overrides)
        return cls(**base)

    def as_vector(self) -> np.ndarray:
        return np.array([float(getattr(self, f.name)) for f in fields(self)])

    @classmethod
    def from_vector(cls, values) -> "MfccConfig":
        kwargs = {}
        for f, v in zip(fields(cls), values):
            kwargs[f.name] = int(v) if f.type in ("int", int) else float(v)
        return cls(**kwargs)

    @classmethod
    def from_mapping(cls, mapping) -> "MfccConfig":
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                kwargs[key] = int(raw) if known[key].type in ("int", int) else float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class KernelSet:
    """Window, split DFT, mel filterbank and DCT kernels plus their config."""

    window: np.ndarray
    dft_real: np.ndarray
    dft_imag: np.ndarray
    melbank: np.ndarray
    dct: np.ndarray
    config: MfccConfig = field(default_factory=MfccConfig)

    TENSOR_NAMES = ("window", "dft_real", "dft_imag", "melbank", "dct")

    def __post_init__(self):
        cfg = self.config
        expected = {
            "window": (cfg.frame_len,),
            "dft_real": (cfg.fft_size, cfg.fft_size),
            "dft_imag": (cfg.fft_size, cfg.fft_size),
            "melbank": (cfg.num_filters, cfg.num_bins),
            "dct": (cfg.num_ceps, cfg.num_filters),
        }
        for name, shape in expected.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ConfigError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)

    @classmethod
    def initial(cls, cfg: MfccConfig | None = None) -> "KernelSet":
        """Static MFCC kernels: Hamming, DFT, triangular mel filters, DCT-II."""
        cfg = cfg or MfccConfig()
        f_real, f_imag = init_dft(cfg.fft_size)
        return cls(window=init_window(cfg.frame_len), dft_real=f_real, dft_imag=f_imag,
                   melbank=init_melbank(cfg), dct=init_dct(cfg.num_filters), config=cfg)

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.TENSOR_NAMES}

    def with_tensors(self, **updates) -> "KernelSet":
        return replace(self, **updates)

    def copy(self) -> "KernelSet":
        return replace(self, **{k: v.copy() for k, v in self.tensors().items()})


# -- initialisation ---------------------------------------------------------

def init_window(M: int) -> np.ndarray:
    """Symmetric Hamming window of even length ``M``."""
    if M < 2 or M % 2:
        raise ConfigError(f"window length must be even and >= 2, got {M}")
    n = np.arange(M)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (M - 1))


def init_dft(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the N-point DFT matrix."""
    if N < 2:
        raise ConfigError(f"DFT size must be >= 2, got {N}")
    # reduce j*k mod N before scaling so large products keep full accuracy
    jk = np.outer(np.arange(N), np.arange(N)) % N
    angle = 2.0 * np.pi * jk / N
    return np.cos(angle), -np.sin(angle)


def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    return 2595.0 * np.log10(1.0 + f / 700.0)


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be non-negative")
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def init_melbank(cfg: MfccConfig) -> np.ndarray:
    """Unit-peak triangular filters, mel-equispaced between fmin and fmax.

    Returns a ``num_filters x num_bins`` matrix evaluated on FFT bin centre
    frequencies ``k * sample_rate / fft_size``.
    """
    C, B = cfg.num_filters, cfg.num_bins
    edges_mel = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), C + 2)
    edges = mel_to_hz(edges_mel)
    if np.any(np.diff(edges) <= 0):
        raise ConfigError("mel edges are not strictly increasing")
    freqs = np.arange(B) * cfg.sample_rate_hz / cfg.fft_size

    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(bank.max(axis=1) <= 0)
    if empty.size:
        raise ConfigError(
            f"filters {empty.tolist()} cover no FFT bin; reduce num_filters or raise fft_size"
        )
    return bank


def init_dct(C: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, ``C x C``."""
    if C < 1:
        raise ConfigError(f"DCT size must be >= 1, got {C}")
    i = np.arange(C)[:, None]
    k = np.arange(C)[None, :]
    D = np.sqrt(2.0 / C) * np.cos(np.pi * i * (k + 0.5) / C)
    D[0, :] = np.sqrt(1.0 / C)
    return D


# -- forward stages ---------------------------------------------------------

def _check_last(x, n, what):
    if x.shape[-1] != n:
        raise ValueError(f"{what}: expected last dimension {n}, got {x.shape[-1]}")


def forward_window(x, W):
    x = np.asarray(x, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 1:
        raise ValueError("window must be a vector")
    _check_last(x, W.shape[0], "forward_window")
    return x * W


def zero_pad(xw, N: int):
    xw = np.asarray(xw, dtype=np.float64)
    M = xw.shape[-1]
    if M > N:
        raise ValueError(f"frame length {M} exceeds FFT size {N}")
    pad = [(0, 0)] * (xw.ndim - 1) + [(0, N - M)]
    return np.pad(xw, pad)


def forward_power_spectrum(xw, F_real, F_imag):
    """Power spectrum as the sum of squares of two real linear maps."""
    xw = np.asarray(xw, dtype=np.float64)
    N = xw.shape[-1]
    if F_real.shape != (N, N) or F_imag.shape != (N, N):
        raise ValueError(f"DFT kernels must be {N}x{N}")
    u_r = xw @ F_real.T
    u_i = xw @ F_imag.T
    return u_r * u_r + u_i * u_i


def forward_logmel(p_binned, Mel, log_floor: float):
    p_binned = np.asarray(p_binned, dtype=np.float64)
    _check_last(p_binned, Mel.shape[1], "forward_logmel")
    return np.log(np.maximum(p_binned @ Mel.T, log_floor))


def forward_dct(z, Dct):
    z = np.asarray(z, dtype=np.float64)
    _check_last(z, Dct.shape[1], "forward_dct")
    return z @ Dct.T


def forward_frames(frames, ks: KernelSet):
    """Cepstra for already framed (and pre-emphasised) samples.

    Same result as window -> zero_pad -> forward_power_spectrum -> slice, but
    only the first B kernel rows and first M (non-padded) columns are used.
    """
    cfg = ks.config
    B, M = cfg.num_bins, cfg.frame_len
    x = forward_window(frames, ks.window)
    p = forward_power_spectrum_active(x, ks.dft_real, ks.dft_imag, B)
    z = forward_logmel(p, ks.melbank, cfg.log_floor)
    return forward_dct(z, ks.dct)


def forward_power_spectrum_active(x, F_real, F_imag, bins: int):
    """First ``bins`` power-spectrum outputs of an implicitly zero-padded frame."""
    M = x.shape[-1]
    u_r = x @ F_real[:bins, :M].T
    u_i = x @ F_imag[:bins, :M].T
    return u_r * u_r + u_i * u_i
