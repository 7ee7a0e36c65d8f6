"""Desk-scale adaptation of one front-end kernel jointly with a toy network.

Phase 1 (``pretrain``) fits the network on features from frozen static
kernels. Phase 2 (``adapt``) keeps training the network while one kernel is
also updated, optionally with a penalty in the loss or a projection after
each step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import constraints
from .audio_io import Waveform
from .autodiff import backward_cascade, forward_taped
from .constraints import Mode
from .errors import ConfigError, DataError, NonFiniteKernelError, NonFiniteLossError
from .kernels import KernelSet, forward_frames
from .network import (ToyEmbedNet, backward_utterance, cross_entropy,
                      forward_utterance, softmax)
from .pipeline import prepare_frames


@dataclass
class TrainConfig:
    component: str = "none"
    mode: Mode = Mode.NONE
    lam: float = 0.1
    learning_rate: float = 1e-3
    steps: int = 200
    seed: int = 0
    batch_size: int = 8
    eval_every: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # rescale F @ F.T to the kernel's previous norm in KERNEL mode
    dft_keep_scale: bool = True

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.component not in constraints.COMPONENTS + ("none",):
            raise ConfigError(f"unknown component {self.component!r}")
        if self.component == "none" and self.mode is not Mode.NONE:
            raise ConfigError("a constraint mode needs an adapted component")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if self.steps < 0 or self.batch_size < 1 or self.eval_every < 1:
            raise ConfigError("steps >= 0, batch_size >= 1, eval_every >= 1 required")

    @property
    def adapted_tensors(self) -> tuple[str, ...]:
        if self.component == "none":
            return ()
        return constraints.component_tensors(self.component)


# -- synthetic speakers -----------------------------------------------------

@dataclass
class Utterance:
    """Frames of one utterance after pre-emphasis, framing and SAD."""

    frames: np.ndarray
    label: int
    key: int


@dataclass
class SynthDataset:
    """Speakers defined by three resonance frequencies in [300, 3400] Hz.

    Each utterance sums the three sinusoids with fresh random phases and adds
    white noise 20 dB below the tone power.
    """

    num_speakers: int = 10
    utts_per_speaker: int = 50
    duration_s: float = 1.0
    sample_rate_hz: int = 16000
    seed: int = 0
    freqs: np.ndarray = field(init=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.freqs = rng.uniform(300.0, 3400.0, (self.num_speakers, 3))
        self._rng_seed = rng.integers(2**63)

    def waveforms(self):
        """Yield ``(Waveform, speaker, index)`` in a fixed order."""
        rng = np.random.default_rng(self._rng_seed)
        n = int(round(self.duration_s * self.sample_rate_hz))
        t = np.arange(n) / self.sample_rate_hz
        amp = 0.25
        noise_std = amp * math.sqrt(3 / 2) * 0.1  # tone power 3*amp^2/2, -20 dB
        for spk in range(self.num_speakers):
            for u in range(self.utts_per_speaker):
                phases = rng.uniform(0.0, 2 * np.pi, 3)
                x = amp * np.sin(2 * np.pi * self.freqs[spk][:, None] * t + phases[:, None]).sum(0)
                x += noise_std * rng.standard_normal(n)
                yield Waveform(np.clip(x, -1.0, 1.0), self.sample_rate_hz), spk, u

    def prepare(self, cfg, val_per_speaker: int = 10):
        """Split into train/validation utterances (disjoint, same speakers)."""
        train, val = [], []
        for key, (w, spk, u) in enumerate(self.waveforms()):
            utt = Utterance(prepare_frames(w, cfg, apply_sad=True), spk, key)
            (val if u < val_per_speaker else train).append(utt)
        return train, val


# -- optimiser --------------------------------------------------------------

class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict) -> dict:
        """Return updated copies of the parameters that have gradients."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        out = {}
        for name, g in grads.items():
            m = self.m.get(name, 0.0)
            v = self.v.get(name, 0.0)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            out[name] = params[name] - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return out


def make_optimizer(cfg: TrainConfig) -> Adam:
    return Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)


# -- loss and gradients -----------------------------------------------------

def _features(utt: Utterance, ks: KernelSet, cache=None):
    if cache is not None and utt.key in cache:
        return cache[utt.key]
    c = forward_frames(utt.frames, ks)
    c = c - c.mean(axis=0)
    if cache is not None:
        cache[utt.key] = c
    return c


def batch_loss_and_grads(batch, net: ToyEmbedNet, ks: KernelSet, cfg: TrainConfig,
                         feature_cache=None):
    """Cross-entropy averaged over the batch, with network and kernel grads.

    Kernel gradients are returned only for the adapted component and include
    the penalty term when ``cfg.mode`` is LOSS. Returns
    ``(loss, ce, reg, net_grads, kernel_grads)``.
    """
    if not batch:
        raise DataError("empty batch")
    scale = 1.0 / len(batch)
    net_grads = {k: np.zeros_like(v) for k, v in net.params.items()}
    names = cfg.adapted_tensors
    k_grads = {n: np.zeros_like(getattr(ks, n)) for n in names}
    ce = 0.0
    for utt in batch:
        if names:
            c, tape = forward_taped(utt.frames, ks)
            X = c - c.mean(axis=0)
        else:
            X = _features(utt, ks, feature_cache)
        logits, _, cache = forward_utterance(X, net, return_cache=True)
        ce += scale * cross_entropy(logits, utt.label)
        g_logits = softmax(logits)
        g_logits[utt.label] -= 1.0
        g, g_X = backward_utterance(scale * g_logits, cache, net)
        for k in net_grads:
            net_grads[k] += g[k]
        if names:
            # CMN Jacobian is the per-column centring projection
            g_c = g_X - g_X.mean(axis=0)
            kg, _ = backward_cascade(g_c, tape, ks, wrt=cfg.component)
            for n in names:
                k_grads[n] += getattr(kg, n)

    reg = constraints.regularizer(ks, cfg.component) if names else None
    loss = ce
    if names and cfg.mode is Mode.LOSS:
        loss = ce + cfg.lam * reg
        for n, rg in constraints.regularizer_grads(ks, cfg.component).items():
            k_grads[n] += cfg.lam * rg
    return loss, ce, reg, net_grads, k_grads


@dataclass
class StepResult:
    loss: float
    ce: float
    reg: float | None
    net: ToyEmbedNet
    kernels: KernelSet


def train_step(batch, net: ToyEmbedNet, ks: KernelSet, cfg: TrainConfig,
               optimizer: Adam, step: int = 0, feature_cache=None) -> StepResult:
    loss, ce, reg, net_grads, k_grads = batch_loss_and_grads(batch, net, ks, cfg,
                                                              feature_cache)
    if not math.isfinite(loss):
        raise NonFiniteLossError(step, loss)
    params = {f"net.{k}": v for k, v in net.params.items()}
    params.update({f"ks.{k}": getattr(ks, k) for k in k_grads})
    grads = {f"net.{k}": v for k, v in net_grads.items()}
    grads.update({f"ks.{k}": v for k, v in k_grads.items()})
    new = optimizer.step(params, grads)
    new_net = ToyEmbedNet({k: new[f"net.{k}"] for k in net.params})
    new_ks = ks
    if k_grads:
        updated = {k: new[f"ks.{k}"] for k in k_grads}
        if cfg.mode is Mode.KERNEL:
            with np.errstate(over="ignore", invalid="ignore"):
                updated = constraints.project_tensors(ks.with_tensors(**updated),
                                                      cfg.component, cfg.dft_keep_scale)
        for k, v in updated.items():
            if not np.all(np.isfinite(v)):
                raise NonFiniteKernelError(step, k)
        new_ks = ks.with_tensors(**updated)
    return StepResult(loss, ce, reg, new_net, new_ks)


def validation_ce(utts, net: ToyEmbedNet, ks: KernelSet, feature_cache=None) -> float:
    total = 0.0
    for utt in utts:
        logits, _ = forward_utterance(_features(utt, ks, feature_cache), net)
        total += cross_entropy(logits, utt.label)
    return total / len(utts)


# -- training loops ---------------------------------------------------------

@dataclass
class TraceRow:
    step: int
    train_ce: float | None
    val_ce: float
    reg_value: float | None


@dataclass
class AdaptResult:
    trace: list
    net: ToyEmbedNet
    kernels: KernelSet


def _batches(n_items, cfg: TrainConfig):
    rng = np.random.default_rng(cfg.seed)
    while True:
        yield rng.choice(n_items, size=min(cfg.batch_size, n_items), replace=False)


def pretrain(train, net: ToyEmbedNet, ks: KernelSet, steps: int, seed: int = 0,
             learning_rate: float = 1e-3, batch_size: int = 8) -> ToyEmbedNet:
    """Fit the network alone on features from fixed kernels."""
    cfg = TrainConfig(component="none", steps=steps, seed=seed,
                      learning_rate=learning_rate, batch_size=batch_size)
    opt = make_optimizer(cfg)
    cache = {}
    batches = _batches(len(train), cfg)
    for step in range(steps):
        batch = [train[i] for i in next(batches)]
        net = train_step(batch, net, ks, cfg, opt, step, cache).net
    return net


def adapt(train, val, net: ToyEmbedNet, ks: KernelSet, cfg: TrainConfig) -> AdaptResult:
    """Run ``cfg.steps`` joint updates; validation CE every ``eval_every`` steps."""
    if not train or not val:
        raise DataError("adapt needs non-empty train and validation sets")
    if {u.key for u in train} & {u.key for u in val}:
        raise DataError("train and validation utterances overlap")
    frozen = not cfg.adapted_tensors
    train_cache = {} if frozen else None
    val_cache = {} if frozen else None
    opt = make_optimizer(cfg)

    def reg_now(k):
        return constraints.regularizer(k, cfg.component) if not frozen else None

    trace = [TraceRow(0, None, validation_ce(val, net, ks, val_cache), reg_now(ks))]
    batches = _batches(len(train), cfg)
    for step in range(1, cfg.steps + 1):
        batch = [train[i] for i in next(batches)]
        res = train_step(batch, net, ks, cfg, opt, step, train_cache)
        net, ks = res.net, res.kernels
        if step % cfg.eval_every == 0 or step == cfg.steps:
            trace.append(TraceRow(step, res.ce, validation_ce(val, net, ks, val_cache),
                                  reg_now(ks)))
    return AdaptResult(trace, net, ks)


def write_trace(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "train_ce", "val_ce", "reg_value"])
        for row in trace:
            w.writerow([row.step,
                        "" if row.train_ce is None else repr(row.train_ce),
                        repr(row.val_ce),
                        "" if row.reg_value is None else repr(row.reg_value)])
