import struct

import numpy as np
import pytest

from lmfcc import audio_io as io
from lmfcc import errors
from lmfcc.kernels import KernelSet, MfccConfig
from lmfcc.pipeline import FeatureMatrix


def raw_wav(path, ints, channels=1, bits=16, tag=1, rate=16000):
    data = np.asarray(ints, dtype="<i2").tobytes()
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    return path


class TestReadWav:
    def test_scaling(self, tmp_path):
        w = io.read_wav(raw_wav(tmp_path / "a.wav", [32767, 0, -32768]))
        assert w.samples.tolist() == [0.999969482421875, 0.0, -1.0]
        assert w.sample_rate_hz == 16000

    def test_roundtrip_with_writer(self, tmp_path, rng):
        x = np.round(rng.uniform(-1, 1, 100) * 32768) / 32768
        x = np.clip(x, -1, 32767 / 32768)
        io.write_wav(tmp_path / "b.wav", x, 8000)
        w = io.read_wav(tmp_path / "b.wav")
        np.testing.assert_array_equal(w.samples, x)
        assert w.sample_rate_hz == 8000

    def test_deterministic(self, tmp_path):
        p = raw_wav(tmp_path / "a.wav", [1, 2, 3])
        np.testing.assert_array_equal(io.read_wav(p).samples, io.read_wav(p).samples)

    def test_missing(self, tmp_path):
        with pytest.raises(errors.MissingFileError):
            io.read_wav(tmp_path / "nope.wav")

    def test_not_pcm16(self, tmp_path):
        with pytest.raises(errors.UnsupportedEncodingError):
            io.read_wav(raw_wav(tmp_path / "f.wav", [0, 0], tag=3, bits=32))
        with pytest.raises(errors.UnsupportedEncodingError):
            io.read_wav(raw_wav(tmp_path / "g.wav", [0, 0], bits=8))

    def test_multichannel(self, tmp_path):
        with pytest.raises(errors.MultiChannelError):
            io.read_wav(raw_wav(tmp_path / "s.wav", [0, 0, 0, 0], channels=2))

    def test_truncated(self, tmp_path):
        p = raw_wav(tmp_path / "t.wav", [1, 2, 3])
        (tmp_path / "t2.wav").write_bytes(p.read_bytes()[:30])
        with pytest.raises(errors.TruncatedHeaderError):
            io.read_wav(tmp_path / "t2.wav")
        (tmp_path / "t3.wav").write_bytes(b"RIFF")
        with pytest.raises(errors.TruncatedHeaderError):
            io.read_wav(tmp_path / "t3.wav")

    def test_errors_are_distinct(self):
        kinds = {errors.MissingFileError, errors.UnsupportedEncodingError,
                 errors.MultiChannelError, errors.TruncatedHeaderError}
        assert len(kinds) == 4
        assert all(issubclass(k, errors.DataError) for k in kinds)


class TestKernelContainer:
    def test_roundtrip_bit_exact(self, tmp_path, default_kernels):
        io.write_kernels(default_kernels, tmp_path / "k.lmfc")
        back = io.read_kernels(tmp_path / "k.lmfc")
        for name, arr in default_kernels.tensors().items():
            assert getattr(back, name).tobytes() == arr.tobytes()
        assert back.config == default_kernels.config

    def test_layout(self, tmp_path):
        io.write_tensors({"ab": np.array([[1.0, 2.0, 3.0]])}, tmp_path / "x")
        raw = (tmp_path / "x").read_bytes()
        expected = (b"LMFC" + struct.pack("<III", 1, 1, 2) + b"ab"
                    + struct.pack("<III", 2, 1, 3) + struct.pack("<3d", 1, 2, 3))
        assert raw == expected

    def test_accepts_consistent_dims(self, tmp_path):
        t = np.arange(30 * 257, dtype=float).reshape(30, 257)
        io.write_tensors({"melbank": t}, tmp_path / "m")
        np.testing.assert_array_equal(io.read_tensors(tmp_path / "m")["melbank"], t)

    def test_missing_tensor(self, tmp_path, default_kernels):
        t = dict(default_kernels.tensors())
        del t["dct"]
        io.write_tensors(t, tmp_path / "k")
        with pytest.raises(errors.MissingTensorError, match="missing tensor"):
            io.read_kernels(tmp_path / "k")

    def test_bad_magic(self, tmp_path):
        (tmp_path / "k").write_bytes(b"XXXX" + bytes(8))
        with pytest.raises(errors.BadMagicError):
            io.read_tensors(tmp_path / "k")

    def test_version(self, tmp_path):
        (tmp_path / "k").write_bytes(b"LMFC" + struct.pack("<II", 9, 0))
        with pytest.raises(errors.VersionMismatchError):
            io.read_tensors(tmp_path / "k")

    def test_length_mismatch(self, tmp_path):
        io.write_tensors({"a": np.ones((2, 3))}, tmp_path / "k")
        raw = (tmp_path / "k").read_bytes()
        (tmp_path / "short").write_bytes(raw[:-8])
        with pytest.raises(errors.TensorLengthError):
            io.read_tensors(tmp_path / "short")
        (tmp_path / "long").write_bytes(raw + bytes(8))
        with pytest.raises(errors.TensorLengthError):
            io.read_tensors(tmp_path / "long")

    def test_without_config_tensor(self, tmp_path):
        ks = KernelSet.initial(MfccConfig.small())
        io.write_tensors(ks.tensors(), tmp_path / "k")
        back = io.read_kernels(tmp_path / "k")
        assert back.config.fft_size == 16 and back.config.num_filters == 4


class TestFeatures:
    def test_shape(self, tmp_path):
        io.write_features(FeatureMatrix(np.arange(6.0).reshape(2, 3)), tmp_path / "f.csv")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert len(lines) == 2 and all(len(l.split(",")) == 3 for l in lines)

    def test_precision_roundtrip(self, tmp_path, rng):
        v = rng.standard_normal((4, 5))
        io.write_features(v, tmp_path / "f.csv")
        np.testing.assert_array_equal(io.read_features(tmp_path / "f.csv"), v)
        field = (tmp_path / "f.csv").read_text().split(",")[0]
        assert len(field.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) >= 17

    def test_empty(self, tmp_path):
        io.write_features(FeatureMatrix(np.zeros((0, 30))), tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == ""

    def test_nan(self, tmp_path):
        v = np.zeros((2, 3))
        v[1, 2] = np.nan
        with pytest.raises(errors.DataError, match="row 1, column 2"):
            io.write_features(v, tmp_path / "n.csv")


class TestWaveform:
    def test_invariants(self):
        with pytest.raises(errors.DataError):
            io.Waveform(np.array([]), 16000)
        with pytest.raises(errors.DataError):
            io.Waveform(np.array([1.5]), 16000)
        with pytest.raises(errors.DataError):
            io.Waveform(np.array([0.5]), 0)
