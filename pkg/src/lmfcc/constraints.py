"""Kernel constraints: soft penalties added to the loss and hard projections.

Each penalty ``reg_*`` has a matching ``reg_*_grad`` used by the trainer.
Each projection ``proj_*`` is applied to a kernel right after its gradient
update.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import RankDeficientError

MEL_EPS = 1e-4
QR_RANK_TOL = 1e-12


class Mode(str, enum.Enum):
    NONE = "none"
    LOSS = "loss"
    KERNEL = "kernel"


COMPONENTS = ("window", "dft", "melbank", "dct")


def _square(A, what):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{what} needs a square matrix, got shape {A.shape}")
    return A


# -- loss regularisers ------------------------------------------------------

def _window_residual(W):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 1 or W.size == 0:
        raise ValueError("window must be a non-empty vector")
    M = W.size
    target = -np.cos(2.0 * np.pi * np.arange(M) / M)
    return (W - W.mean()) - target


def reg_window(W) -> float:
    """Distance of the mean-removed window from ``-cos(2 pi n / M)``."""
    return float(np.linalg.norm(_window_residual(W)))


def reg_window_grad(W) -> np.ndarray:
    d = _window_residual(W)
    r = np.linalg.norm(d)
    if r == 0.0:
        return np.zeros_like(d)
    # mean removal contributes the centring projection
    return (d - d.mean()) / r


def _dft_parts(F):
    F = _square(F, "reg_dft")
    norm = np.linalg.norm(F)
    if norm == 0.0:
        raise ValueError("reg_dft is undefined for the zero matrix")
    scale = np.sqrt(F.shape[0]) / norm
    Fn = scale * F
    return F, norm, scale, Fn, Fn - Fn @ Fn.T


def reg_dft(F) -> float:
    """Distance between the Frobenius-normalised kernel and ``Fn @ Fn.T``.

    The kernel is rescaled to Frobenius norm sqrt(N) first, the norm of an
    N x N orthogonal matrix.
    """
    return float(np.linalg.norm(_dft_parts(F)[4]))


def reg_dft_grad(F) -> np.ndarray:
    F, norm, scale, Fn, dist = _dft_parts(F)
    r = np.linalg.norm(dist)
    if r == 0.0:
        return np.zeros_like(F)
    G = dist / r
    g_fn = G - (G + G.T) @ Fn
    # through Fn = sqrt(N) * F / ||F||
    return scale * (g_fn - (np.sum(g_fn * F) / norm**2) * F)


def reg_melbank(Mel) -> float:
    Mel = np.asarray(Mel, dtype=np.float64)
    return float(np.sum(Mel * Mel))


def reg_melbank_grad(Mel) -> np.ndarray:
    return 2.0 * np.asarray(Mel, dtype=np.float64)


def reg_dct(D) -> float:
    """Squared Frobenius distance of the Gram matrix ``D.T @ D`` from I."""
    D = _square(D, "reg_dct")
    E = D.T @ D - np.eye(D.shape[0])
    return float(np.sum(E * E))


def reg_dct_grad(D) -> np.ndarray:
    D = _square(D, "reg_dct")
    E = D.T @ D - np.eye(D.shape[0])
    return 4.0 * D @ E


# -- kernel projections -----------------------------------------------------

def proj_window(W) -> np.ndarray:
    """Mirror the first half of the window and take absolute values."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 1 or W.size % 2:
        raise ValueError(f"proj_window needs an even-length vector, got {W.shape}")
    half = W[: W.size // 2]
    return np.abs(np.concatenate([half, half[::-1]]))


def proj_dft(F, keep_scale: bool = False) -> np.ndarray:
    """``F @ F.T``, a symmetric matrix.

    Repeated application squares the kernel's scale each time and overflows
    within about ten calls; ``keep_scale=True`` rescales the product back to
    the Frobenius norm of ``F``, which keeps it finite under iteration.
    """
    F = _square(F, "proj_dft")
    P = F @ F.T
    if keep_scale:
        norm_p = np.linalg.norm(P)
        if norm_p > 0.0:
            P = P * (np.linalg.norm(F) / norm_p)
    return P


def proj_melbank(Mel, eps: float = MEL_EPS) -> np.ndarray:
    Mel = np.asarray(Mel, dtype=np.float64)
    return np.where(Mel <= 0.0, eps, Mel)


def proj_dct(D) -> np.ndarray:
    """Orthogonal factor of ``D = QR`` under the convention ``diag(R) > 0``."""
    D = _square(D, "proj_dct")
    Q, R = np.linalg.qr(D)
    diag = np.diag(R)
    if np.any(np.abs(diag) < QR_RANK_TOL):
        raise RankDeficientError(
            f"DCT kernel is rank deficient (min |R_ii| = {np.abs(diag).min():.3e})"
        )
    return Q * np.sign(diag)[None, :]


# -- dispatch by component name ---------------------------------------------

def component_tensors(component: str) -> tuple[str, ...]:
    """KernelSet tensor names belonging to one adaptable component."""
    try:
        return {"window": ("window",), "dft": ("dft_real", "dft_imag"),
                "melbank": ("melbank",), "dct": ("dct",)}[component]
    except KeyError:
        raise ValueError(f"unknown component {component!r}") from None


_REG = {"window": (reg_window, reg_window_grad), "dft": (reg_dft, reg_dft_grad),
        "melbank": (reg_melbank, reg_melbank_grad), "dct": (reg_dct, reg_dct_grad)}
_PROJ = {"window": proj_window, "dft": proj_dft, "melbank": proj_melbank, "dct": proj_dct}


def regularizer(ks, component: str) -> float:
    """Penalty value for a component; the DFT penalty sums both parts."""
    names = component_tensors(component)
    fn = _REG[component][0]
    return float(sum(fn(getattr(ks, name)) for name in names))


def regularizer_grads(ks, component: str) -> dict[str, np.ndarray]:
    names = component_tensors(component)
    grad = _REG[component][1]
    return {name: grad(getattr(ks, name)) for name in names}


def project_tensors(ks, component: str, dft_keep_scale: bool = False) -> dict:
    """Projected tensors for one component, keyed by KernelSet field name."""
    names = component_tensors(component)
    if component == "dft":
        return {name: proj_dft(getattr(ks, name), dft_keep_scale) for name in names}
    proj = _PROJ[component]
    return {name: proj(getattr(ks, name)) for name in names}


def project(ks, component: str, dft_keep_scale: bool = False):
    """Return a new KernelSet with the component's projection applied."""
    return ks.with_tensors(**project_tensors(ks, component, dft_keep_scale))
