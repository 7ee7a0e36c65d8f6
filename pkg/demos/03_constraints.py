"""Soft penalties and hard projections on the kernels.

A kernel nudged away from its structure has a positive penalty; the
projection snaps it back onto the constraint set.
"""

import numpy as np

from lmfcc import KernelSet, MfccConfig
from lmfcc import constraints as C

rng = np.random.default_rng(0)
ks = KernelSet.initial(MfccConfig())

noisy = ks.with_tensors(
    window=ks.window + 0.05 * rng.standard_normal(ks.window.shape),
    melbank=ks.melbank - 0.01,
    dct=ks.dct + 0.05 * rng.standard_normal(ks.dct.shape),
)

print(f"DCT penalty: {C.reg_dct(ks.dct):.2e} at init, {C.reg_dct(noisy.dct):.3f} perturbed, "
      f"{C.reg_dct(C.proj_dct(noisy.dct)):.2e} after projection")
Q = C.proj_dct(noisy.dct)
print("projected DCT orthonormality error:", np.abs(Q.T @ Q - np.eye(Q.shape[0])).max())

w = C.proj_window(noisy.window)
print("projected window symmetric:", np.array_equal(w, w[::-1]), "| non-negative:", w.min() >= 0)
print("perturbed melbank min entry:", noisy.melbank.min(),
      "| projected:", C.proj_melbank(noisy.melbank).min())

# F F^T is symmetric but squares the scale; repeated use overflows,
# which is why training rescales it to the previous norm
F = G = ks.dft_real
with np.errstate(over="ignore", invalid="ignore"):
    for k in range(1, 8):
        F = C.proj_dft(F)
        G = C.proj_dft(G, keep_scale=True)
        print(f"projection {k}: norm {np.linalg.norm(F):.3e} literal, "
              f"{np.linalg.norm(G):.3e} rescaled, symmetric {np.array_equal(G, G.T)}")
