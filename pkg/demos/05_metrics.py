"""Verification metrics from cosine scores.

Embeddings from the toy network (untrained here, so the numbers are poor)
are scored pairwise; EER, minDCF and the DET curve follow.
"""

import itertools

from lmfcc import KernelSet, MfccConfig
from lmfcc.metrics import TrialScores, det_points, eer, min_dcf
from lmfcc.network import ToyEmbedNet, forward_utterance, score_cosine
from lmfcc.trainer import SynthDataset, _features

ks = KernelSet.initial(MfccConfig())
train, _ = SynthDataset(5, 6, seed=3).prepare(ks.config, val_per_speaker=1)
net = ToyEmbedNet.create(ks.config.num_ceps, 5, seed=3)
emb = [(u.label, forward_utterance(_features(u, ks), net)[1]) for u in train]

genuine, impostor = [], []
for (la, ea), (lb, eb) in itertools.combinations(emb, 2):
    (genuine if la == lb else impostor).append(score_cosine(ea, eb))
ts = TrialScores(genuine, impostor)
print(f"{len(genuine)} target and {len(impostor)} non-target trials")
print(f"EER {eer(ts):.3%}, minDCF(p=0.001) {min_dcf(ts):.3f}")
pts = det_points(ts)
print("DET (p_fa, p_miss) every 50th point:", [(round(f, 3), round(m, 3)) for f, m in pts[::50]])
