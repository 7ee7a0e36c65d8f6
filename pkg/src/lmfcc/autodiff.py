"""Reverse-mode gradients through the learnable MFCC cascade.

Backward functions take the upstream gradient for a batch of frames (rows)
and return the kernel gradient summed over frames together with the
gradient for the stage input, so the chain can be continued down to the
window. 1-D inputs are treated as a single frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .kernels import KernelSet, MfccConfig


@dataclass
class Tape:
    """Forward intermediates for a stack of T frames."""

    x: np.ndarray        # T x M raw frames
    xw: np.ndarray       # T x N windowed, zero padded
    u_r: np.ndarray      # T x N, F_real @ xw
    u_i: np.ndarray      # T x N, F_imag @ xw
    p_binned: np.ndarray  # T x B
    mel_out: np.ndarray  # T x C, Mel @ p_binned (before the floor)
    z: np.ndarray        # T x C log-mel


@dataclass
class GradientSet:
    window: np.ndarray
    dft_real: np.ndarray
    dft_imag: np.ndarray
    melbank: np.ndarray
    dct: np.ndarray

    @classmethod
    def zeros_like(cls, ks: KernelSet) -> "GradientSet":
        return cls(**{name: np.zeros(t.shape) for name, t in ks.tensors().items()})

    def zero(self) -> None:
        for name in KernelSet.TENSOR_NAMES:
            getattr(self, name)[...] = 0.0

    def accumulate(self, other: "GradientSet", scale: float = 1.0) -> None:
        for name in KernelSet.TENSOR_NAMES:
            getattr(self, name)[...] += scale * getattr(other, name)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in KernelSet.TENSOR_NAMES}


def forward_taped(frames, ks: KernelSet) -> tuple[np.ndarray, Tape]:
    """Run the cascade on ``T x M`` frames and keep what backward needs."""
    cfg = ks.config
    M = cfg.frame_len
    x = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    xw = K.zero_pad(K.forward_window(x, ks.window), cfg.fft_size)
    # padded columns contribute nothing
    u_r = xw[:, :M] @ ks.dft_real[:, :M].T
    u_i = xw[:, :M] @ ks.dft_imag[:, :M].T
    p_binned = (u_r * u_r + u_i * u_i)[:, : cfg.num_bins]
    mel_out = p_binned @ ks.melbank.T
    z = np.log(np.maximum(mel_out, cfg.log_floor))
    c = z @ ks.dct.T
    return c, Tape(x, xw, u_r, u_i, p_binned, mel_out, z)


def _rows(g, width, what):
    g = np.asarray(g, dtype=np.float64)
    single = g.ndim == 1
    g = np.atleast_2d(g)
    if g.shape[1] != width:
        raise ValueError(f"{what}: upstream gradient width {g.shape[1]} != {width}")
    return g, single


def _out(a, single):
    return a[0] if single else a


def backward_dct(g_c, tape: Tape, Dct):
    """Returns ``(dDct, g_z)`` for ``c = Dct @ z``."""
    g_c, single = _rows(g_c, Dct.shape[0], "backward_dct")
    if tape.z.shape[0] != g_c.shape[0]:
        raise ValueError("backward_dct: frame count mismatch with tape")
    return g_c.T @ tape.z, _out(g_c @ Dct, single)


def backward_logmel(g_z, tape: Tape, Mel, log_floor: float):
    """Returns ``(dMel, g_p)``; floored filter outputs pass no gradient."""
    g_z, single = _rows(g_z, Mel.shape[0], "backward_logmel")
    if tape.mel_out.shape != g_z.shape:
        raise ValueError("backward_logmel: shape mismatch with tape")
    live = tape.mel_out > log_floor
    s = np.zeros_like(g_z)
    np.divide(g_z, tape.mel_out, out=s, where=live)
    return s.T @ tape.p_binned, _out(s @ Mel, single)


def backward_power(g_p_full, tape: Tape, F_real, F_imag, bins: int | None = None,
                   kernel_grads: bool = True):
    """Returns ``(dF_real, dF_imag, g_xw)``.

    ``g_p_full`` has length N; bins dropped before the filterbank carry zeros.
    Passing ``bins`` promises that only the first ``bins`` entries of
    ``g_p_full`` are non-zero, which lets the products skip the rest. With
    ``kernel_grads=False`` the two kernel gradients come back as ``None``.
    """
    N = F_real.shape[0]
    g, single = _rows(g_p_full, N, "backward_power")
    if F_imag.shape != (N, N) or tape.u_r.shape != g.shape:
        raise ValueError("backward_power: shape mismatch")
    b = N if bins is None else bins
    a_r = 2.0 * g[:, :b] * tape.u_r[:, :b]
    a_i = 2.0 * g[:, :b] * tape.u_i[:, :b]
    d_real = d_imag = None
    if kernel_grads:
        d_real = np.zeros((N, N))
        d_imag = np.zeros((N, N))
        d_real[:b] = a_r.T @ tape.xw
        d_imag[:b] = a_i.T @ tape.xw
    g_xw = a_r @ F_real[:b] + a_i @ F_imag[:b]
    return d_real, d_imag, _out(g_xw, single)


def backward_window(g_xw, tape: Tape, W):
    """Returns ``(dW, g_x)``; padded positions beyond M are ignored."""
    M = W.shape[0]
    g = np.atleast_2d(np.asarray(g_xw, dtype=np.float64))
    single = np.ndim(g_xw) == 1
    if g.shape[1] < M or tape.x.shape != (g.shape[0], M):
        raise ValueError("backward_window: shape mismatch")
    g = g[:, :M]
    return np.sum(tape.x * g, axis=0), _out(g * W, single)


def pad_bins(g_p, N: int):
    """Zero-extend a ``T x B`` gradient to the full ``T x N`` spectrum."""
    g_p = np.atleast_2d(g_p)
    out = np.zeros((g_p.shape[0], N))
    out[:, : g_p.shape[1]] = g_p
    return out


def backward_cascade(g_c, tape: Tape, ks: KernelSet, wrt: str = "all"):
    """Backpropagate cepstral gradients to the kernels.

    ``wrt`` is one component name (window, dft, melbank, dct) or ``"all"``.
    Only the requested kernel gradients are formed; the others stay zero and
    the input-gradient chain stops at the earliest requested stage.
    Returns ``(GradientSet, g_frames)``; ``g_frames`` is None unless the
    chain reached the window.
    """
    order = ("dct", "melbank", "dft", "window")
    if wrt != "all" and wrt not in order:
        raise ValueError(f"unknown component {wrt!r}")
    stop = 3 if wrt == "all" else order.index(wrt)
    want = set(order) if wrt == "all" else {wrt}
    cfg = ks.config
    grads = GradientSet.zeros_like(ks)

    d_dct, g = backward_dct(g_c, tape, ks.dct)
    if "dct" in want:
        grads.dct = d_dct
    if stop < 1:
        return grads, None
    d_mel, g = backward_logmel(g, tape, ks.melbank, cfg.log_floor)
    if "melbank" in want:
        grads.melbank = d_mel
    if stop < 2:
        return grads, None
    d_real, d_imag, g = backward_power(pad_bins(g, cfg.fft_size), tape, ks.dft_real,
                                       ks.dft_imag, bins=cfg.num_bins,
                                       kernel_grads="dft" in want)
    if "dft" in want:
        grads.dft_real, grads.dft_imag = d_real, d_imag
    if stop < 3:
        return grads, None
    grads.window, g_x = backward_window(g, tape, ks.window)
    return grads, g_x


# -- finite-difference verification -----------------------------------------

FD_COMPONENT_TENSORS = {"window": ("window",), "dft": ("dft_real", "dft_imag"),
                        "melbank": ("melbank",), "dct": ("dct",)}


def random_instance(seed: int, n_frames: int = 3):
    """Small random kernels and frames kept well away from the log floor."""
    rng = np.random.default_rng(seed)
    cfg = MfccConfig.small()
    M, N, B, C = cfg.frame_len, cfg.fft_size, cfg.num_bins, cfg.num_filters
    ks = KernelSet(
        window=K.init_window(M) + 0.1 * rng.standard_normal(M),
        dft_real=K.init_dft(N)[0] + 0.1 * rng.standard_normal((N, N)),
        dft_imag=K.init_dft(N)[1] + 0.1 * rng.standard_normal((N, N)),
        melbank=rng.uniform(0.2, 1.0, (C, B)),
        dct=rng.standard_normal((C, C)),
        config=cfg,
    )
    frames = rng.uniform(-1.0, 1.0, (n_frames, M))
    return ks, frames


def fd_check(component: str, seed: int) -> float:
    """Max relative error between analytic and central-difference gradients.

    Loss is the sum of all cepstral outputs over a few random frames. The
    error per entry is ``|a - f| / max(1, |a|, |f|)``.
    """
    names = FD_COMPONENT_TENSORS[component]
    ks, frames = random_instance(seed)
    c, tape = forward_taped(frames, ks)
    grads, _ = backward_cascade(np.ones_like(c), tape, ks, wrt=component)

    def loss(k):
        return float(np.sum(K.forward_frames(frames, k)))

    worst = 0.0
    for name in names:
        theta = getattr(ks, name)
        analytic = getattr(grads, name)
        for idx in np.ndindex(theta.shape):
            h = 1e-5 * (1.0 + abs(theta[idx]))
            plus, minus = theta.copy(), theta.copy()
            plus[idx] += h
            minus[idx] -= h
            f = (loss(ks.with_tensors(**{name: plus}))
                 - loss(ks.with_tensors(**{name: minus}))) / (2.0 * h)
            a = analytic[idx]
            worst = max(worst, abs(a - f) / max(1.0, abs(a), abs(f)))
    return worst
