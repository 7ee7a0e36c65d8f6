"""Toy speaker-embedding network with hand-written backprop.

frame layers C->64->64 (ReLU), mean+std pooling, embedding 128->64,
ReLU, classifier 64->S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

HIDDEN = 64
EMBED = 64
PARAM_NAMES = ("w1", "b1", "w2", "b2", "we", "be", "wc", "bc")


def glorot(rng, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, (fan_in, fan_out))


@dataclass
class ToyEmbedNet:
    params: dict

    @classmethod
    def create(cls, num_inputs: int, num_speakers: int, seed: int = 0) -> "ToyEmbedNet":
        rng = np.random.default_rng(seed)
        p = {
            "w1": glorot(rng, num_inputs, HIDDEN), "b1": np.zeros(HIDDEN),
            "w2": glorot(rng, HIDDEN, HIDDEN), "b2": np.zeros(HIDDEN),
            "we": glorot(rng, 2 * HIDDEN, EMBED), "be": np.zeros(EMBED),
            "wc": glorot(rng, EMBED, num_speakers), "bc": np.zeros(num_speakers),
        }
        return cls(p)

    @property
    def num_speakers(self) -> int:
        return self.params["bc"].shape[0]

    def copy(self) -> "ToyEmbedNet":
        return ToyEmbedNet({k: v.copy() for k, v in self.params.items()})


def forward_utterance(features, net: ToyEmbedNet, return_cache: bool = False):
    """Logits and embedding for one ``T x C`` feature matrix (T >= 2)."""
    X = np.asarray(getattr(features, "values", features), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("need at least two frames for statistics pooling")
    p = net.params
    a1 = X @ p["w1"] + p["b1"]
    h1 = np.maximum(a1, 0.0)
    a2 = h1 @ p["w2"] + p["b2"]
    h2 = np.maximum(a2, 0.0)
    mu = h2.mean(axis=0)
    std = h2.std(axis=0)
    pooled = np.concatenate([mu, std])
    emb = pooled @ p["we"] + p["be"]
    r = np.maximum(emb, 0.0)
    logits = r @ p["wc"] + p["bc"]
    if not return_cache:
        return logits, emb
    cache = dict(X=X, a1=a1, h1=h1, a2=a2, h2=h2, mu=mu, std=std, pooled=pooled,
                 emb=emb, r=r)
    return logits, emb, cache


def softmax(logits):
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def cross_entropy(logits, label: int) -> float:
    z = logits - logits.max()
    return float(np.log(np.exp(z).sum()) - z[label])


def backward_utterance(g_logits, cache, net: ToyEmbedNet):
    """Parameter gradients and the gradient w.r.t. the input features."""
    p = net.params
    g = {}
    g["wc"] = np.outer(cache["r"], g_logits)
    g["bc"] = g_logits.copy()
    g_emb = (p["wc"] @ g_logits) * (cache["emb"] > 0)
    g["we"] = np.outer(cache["pooled"], g_emb)
    g["be"] = g_emb
    g_pooled = p["we"] @ g_emb
    g_mu, g_std = g_pooled[:HIDDEN], g_pooled[HIDDEN:]

    h2, mu, std = cache["h2"], cache["mu"], cache["std"]
    T = h2.shape[0]
    # d std / d h2 = (h2 - mu) / (T * std); zero where the column is constant
    inv_std = np.divide(1.0, std, out=np.zeros_like(std), where=std > 1e-12)
    g_h2 = (g_mu / T)[None, :] + (h2 - mu) * (g_std * inv_std / T)[None, :]

    g_a2 = g_h2 * (cache["a2"] > 0)
    g["w2"] = cache["h1"].T @ g_a2
    g["b2"] = g_a2.sum(axis=0)
    g_a1 = (g_a2 @ p["w2"].T) * (cache["a1"] > 0)
    g["w1"] = cache["X"].T @ g_a1
    g["b1"] = g_a1.sum(axis=0)
    g_X = g_a1 @ p["w1"].T
    return g, g_X


def score_cosine(e1, e2) -> float:
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    n1, n2 = np.linalg.norm(e1), np.linalg.norm(e2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine score undefined for a zero embedding")
    return float(np.clip(np.dot(e1, e2) / (n1 * n2), -1.0, 1.0))
