import csv
import math

import numpy as np
import pytest

from lmfcc import constraints as C
from lmfcc.constraints import Mode
from lmfcc.errors import ConfigError, DataError, NonFiniteLossError
from lmfcc.kernels import KernelSet, MfccConfig
from lmfcc.network import ToyEmbedNet, cross_entropy, forward_utterance
from lmfcc.trainer import (Adam, SynthDataset, TrainConfig, Utterance, adapt,
                           batch_loss_and_grads, make_optimizer, pretrain,
                           train_step, validation_ce, write_trace)

from oracles import central_difference

SMALL = MfccConfig.small()


def tiny_kernels():
    ks = KernelSet.initial(SMALL)
    r = np.random.default_rng(0)
    # bump the DCT off orthonormality so the loss terms are not at a stationary point
    return ks.with_tensors(dct=ks.dct + 0.05 * r.standard_normal(ks.dct.shape),
                           melbank=ks.melbank + 0.05)


def tiny_batch(seed=0, n=3, speakers=3):
    r = np.random.default_rng(seed)
    return [Utterance(r.uniform(-1, 1, (6, SMALL.frame_len)), k % speakers, k) for k in range(n)]


@pytest.fixture(scope="module")
def synth_small():
    ds = SynthDataset(num_speakers=3, utts_per_speaker=6, duration_s=0.3, seed=5)
    return ds.prepare(MfccConfig(), val_per_speaker=2)


class TestConfig:
    def test_single_component(self):
        with pytest.raises(ConfigError):
            TrainConfig(component="none", mode=Mode.LOSS)
        with pytest.raises(ConfigError):
            TrainConfig(component="gain")

    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.lam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps) == (0.1, 1e-3, 0.9, 0.999, 1e-8)
        assert cfg.batch_size == 8


class TestSynthDataset:
    def test_deterministic(self):
        a = list(SynthDataset(2, 2, duration_s=0.1, seed=3).waveforms())
        b = list(SynthDataset(2, 2, duration_s=0.1, seed=3).waveforms())
        assert all(x[0].samples.tobytes() == y[0].samples.tobytes() for x, y in zip(a, b))

    def test_frequencies(self):
        ds = SynthDataset(20, 1, seed=0)
        assert ds.freqs.shape == (20, 3)
        assert ds.freqs.min() >= 300 and ds.freqs.max() <= 3400

    def test_noise_level(self):
        ds = SynthDataset(1, 1, duration_s=1.0, seed=1)
        w, _, _ = next(ds.waveforms())
        t = np.arange(16000) / 16000
        # least-squares fit of the three tones; residual is the noise
        basis = np.concatenate([np.sin(2 * np.pi * f * t)[:, None] for f in ds.freqs[0]]
                               + [np.cos(2 * np.pi * f * t)[:, None] for f in ds.freqs[0]], axis=1)
        coef, *_ = np.linalg.lstsq(basis, w.samples, rcond=None)
        tone = basis @ coef
        snr_db = 10 * np.log10(np.mean(tone**2) / np.mean((w.samples - tone) ** 2))
        assert snr_db == pytest.approx(20.0, abs=0.5)

    def test_split_disjoint(self, synth_small):
        train, val = synth_small
        assert len(train) == 12 and len(val) == 6
        assert not {u.key for u in train} & {u.key for u in val}
        assert {u.label for u in val} == {0, 1, 2}


class TestLossAndGradients:
    @pytest.mark.parametrize("component", ["window", "dft", "melbank", "dct"])
    @pytest.mark.parametrize("mode", [Mode.NONE, Mode.LOSS])
    def test_kernel_gradient_fd(self, component, mode):
        ks = tiny_kernels()
        net = ToyEmbedNet.create(SMALL.num_ceps, 3, seed=1)
        batch = tiny_batch()
        cfg = TrainConfig(component=component, mode=mode, lam=0.1)
        loss, ce, reg, _, k_grads = batch_loss_and_grads(batch, net, ks, cfg)
        for name in C.component_tensors(component):
            def f(theta, name=name):
                return batch_loss_and_grads(batch, net, ks.with_tensors(**{name: theta}), cfg)[0]
            num = central_difference(f, getattr(ks, name), rel_step=1e-6)
            np.testing.assert_allclose(k_grads[name], num, rtol=1e-4, atol=1e-6)

    def test_loss_composition(self):
        ks = tiny_kernels()
        net = ToyEmbedNet.create(SMALL.num_ceps, 3, seed=1)
        batch = tiny_batch()
        plain = batch_loss_and_grads(batch, net, ks, TrainConfig(component="dct"))
        reg = batch_loss_and_grads(batch, net, ks, TrainConfig(component="dct", mode=Mode.LOSS, lam=0.1))
        assert plain[0] == plain[1]
        assert reg[0] == pytest.approx(plain[1] + 0.1 * C.reg_dct(ks.dct), rel=1e-14)
        g_diff = reg[4]["dct"] - plain[4]["dct"]
        np.testing.assert_allclose(g_diff, 0.1 * C.reg_dct_grad(ks.dct), rtol=1e-10, atol=1e-14)

    def test_net_gradient_fd(self):
        ks = tiny_kernels()
        net = ToyEmbedNet.create(SMALL.num_ceps, 3, seed=2)
        batch = tiny_batch(1)
        cfg = TrainConfig(component="none")
        _, _, _, g, _ = batch_loss_and_grads(batch, net, ks, cfg)

        def f(theta):
            p = dict(net.params)
            p["w1"] = theta
            return batch_loss_and_grads(batch, ToyEmbedNet(p), ks, cfg)[0]
        np.testing.assert_allclose(g["w1"], central_difference(f, net.params["w1"], 1e-6), rtol=1e-5, atol=1e-7)

    def test_empty_batch(self):
        with pytest.raises(DataError):
            batch_loss_and_grads([], ToyEmbedNet.create(4, 3), tiny_kernels(), TrainConfig())


class TestTrainStep:
    def test_plain_ce(self):
        ks = tiny_kernels()
        net = ToyEmbedNet.create(SMALL.num_ceps, 3, seed=1)
        batch = tiny_batch()
        res = train_step(batch, net, ks, TrainConfig(lam=5.0), make_optimizer(TrainConfig()))
        ce = 0.0
        for u in batch:
            c = ks_features(u, ks)
            ce += cross_entropy(forward_utterance(c, net)[0], u.label) / len(batch)
        assert res.loss == pytest.approx(ce, rel=1e-12)
        assert res.kernels is ks

    def test_initial_ce_near_log_s(self):
        ks = tiny_kernels()
        net = ToyEmbedNet.create(SMALL.num_ceps, 5, seed=1)
        net.params["wc"][:] = 0.0
        batch = [Utterance(u.frames, 0, u.key) for u in tiny_batch(n=4)]
        res = train_step(batch, net, ks, TrainConfig(), make_optimizer(TrainConfig()))
        assert res.ce == pytest.approx(math.log(5), rel=1e-12)

    def test_kernel_mode_melbank_positive(self):
        ks = tiny_kernels()
        ks = ks.with_tensors(melbank=ks.melbank - 0.3)
        cfg = TrainConfig(component="melbank", mode=Mode.KERNEL)
        res = train_step(tiny_batch(), ToyEmbedNet.create(4, 3), ks, cfg, make_optimizer(cfg))
        assert np.all(res.kernels.melbank > 0)

    def test_frozen_kernels_untouched(self):
        ks = tiny_kernels()
        before = {k: v.tobytes() for k, v in ks.tensors().items()}
        cfg = TrainConfig(component="melbank", mode=Mode.KERNEL)
        res = train_step(tiny_batch(), ToyEmbedNet.create(4, 3), ks, cfg, make_optimizer(cfg))
        for name, raw in before.items():
            assert getattr(ks, name).tobytes() == raw
            if name != "melbank":
                assert getattr(res.kernels, name).tobytes() == raw

    def test_non_finite(self):
        cfg = TrainConfig(component="dct", mode=Mode.LOSS, lam=math.inf)
        with pytest.raises(NonFiniteLossError) as info:
            train_step(tiny_batch(), ToyEmbedNet.create(4, 3), tiny_kernels(), cfg, make_optimizer(cfg), step=7)
        assert info.value.step == 7


def ks_features(utt, ks):
    from lmfcc.kernels import forward_frames
    c = forward_frames(utt.frames, ks)
    return c - c.mean(axis=0)


class TestAdam:
    def test_first_step_is_lr_sign(self):
        opt = Adam(lr=0.01)
        out = opt.step({"a": np.array([1.0, 1.0])}, {"a": np.array([3.0, -0.5])})
        np.testing.assert_allclose(out["a"], [0.99, 1.01], rtol=1e-6)

    def test_bias_correction(self):
        opt = Adam(lr=1.0, eps=0.0)
        p = {"a": np.zeros(1)}
        for _ in range(3):
            p = opt.step(p, {"a": np.array([2.0])})
        np.testing.assert_allclose(p["a"], [-3.0], rtol=1e-12)


class TestAdapt:
    def test_zero_steps(self, synth_small):
        train, val = synth_small
        ks = KernelSet.initial()
        net = ToyEmbedNet.create(30, 3)
        res = adapt(train, val, net, ks, TrainConfig(component="window", steps=0))
        assert len(res.trace) == 1 and res.trace[0].step == 0
        assert res.trace[0].val_ce == pytest.approx(validation_ce(val, net, ks))

    def test_deterministic_and_trace(self, synth_small, tmp_path):
        train, val = synth_small
        ks = KernelSet.initial()
        net = pretrain(train, ToyEmbedNet.create(30, 3, seed=1), ks, 5, seed=1)
        cfg = TrainConfig(component="dct", mode=Mode.KERNEL, steps=12, seed=4, batch_size=4)
        a = adapt(train, val, net, ks, cfg)
        b = adapt(train, val, net, ks, cfg)
        assert [r.step for r in a.trace] == [0, 10, 12]
        assert a.trace == b.trace
        assert a.kernels.dct.tobytes() == b.kernels.dct.tobytes()
        write_trace(a.trace, tmp_path / "t.csv")
        rows = list(csv.reader(open(tmp_path / "t.csv")))
        assert rows[0] == ["step", "train_ce", "val_ce", "reg_value"]
        assert rows[1][1] == "" and float(rows[2][2]) == a.trace[1].val_ce

    def test_overlap_rejected(self, synth_small):
        train, _ = synth_small
        with pytest.raises(DataError):
            adapt(train, train[:2], ToyEmbedNet.create(30, 3), KernelSet.initial(), TrainConfig())

    def test_adapt_does_not_mutate_inputs(self, synth_small):
        train, val = synth_small
        ks = KernelSet.initial()
        net = ToyEmbedNet.create(30, 3)
        snap = {k: v.tobytes() for k, v in net.params.items()}
        adapt(train, val, net, ks, TrainConfig(component="window", steps=3, batch_size=2))
        assert {k: v.tobytes() for k, v in net.params.items()} == snap
        assert ks.window.tobytes() == KernelSet.initial().window.tobytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_literal_dft_projection_fails_loudly(synth_small):
    from lmfcc.errors import NumericalError
    train, val = synth_small
    cfg = TrainConfig(component="dft", mode=Mode.KERNEL, steps=20, batch_size=2,
                      dft_keep_scale=False)
    with pytest.raises(NumericalError):
        adapt(train, val, ToyEmbedNet.create(30, 3), KernelSet.initial(), cfg)
