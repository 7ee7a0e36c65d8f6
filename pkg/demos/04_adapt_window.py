"""Adapting the window on synthetic speakers.

The toy network is first trained on static features. Training then
continues twice from the same point: once with the front-end frozen, once
with the window learnable. Validation cross-entropy is compared at the end.
Takes about 20 seconds.
"""

from lmfcc import KernelSet, MfccConfig
from lmfcc.constraints import Mode
from lmfcc.network import ToyEmbedNet
from lmfcc.trainer import SynthDataset, TrainConfig, adapt, pretrain

seed = 0
ks = KernelSet.initial(MfccConfig())
train, val = SynthDataset(10, 50, seed=seed).prepare(ks.config, val_per_speaker=10)
net = pretrain(train, ToyEmbedNet.create(ks.config.num_ceps, 10, seed=seed), ks, 100, seed=seed)

frozen = adapt(train, val, net, ks, TrainConfig("none", steps=200, seed=seed))
learnt = adapt(train, val, net, ks, TrainConfig("window", Mode.NONE, steps=200, seed=seed))

print("step  frozen  window")
for a, b in zip(frozen.trace, learnt.trace):
    if a.step % 50 == 0:
        print(f"{a.step:4d}  {a.val_ce:.3f}   {b.val_ce:.3f}")
w = learnt.kernels.window
print(f"window moved by {abs(w - ks.window).max():.3f} (max abs), "
      f"endpoints {w[0]:.3f} / {w[-1]:.3f}")
