"""WAV ingestion plus kernel-container and feature-CSV serialisation.

Kernel container layout (all integers little-endian u32, values IEEE f64):

    b"LMFC" | version | tensor count
    per tensor: name length | UTF-8 name | ndim | dims... | values (row-major)
"""

from __future__ import annotations

import os
import struct
import wave
from dataclasses import dataclass

import numpy as np

from .errors import (BadMagicError, ContainerError, DataError, MissingFileError,
                     MissingTensorError, MultiChannelError, TensorLengthError,
                     TruncatedHeaderError, UnsupportedEncodingError,
                     VersionMismatchError)

MAGIC = b"LMFC"
FORMAT_VERSION = 1
CONFIG_TENSOR = "config"


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate_hz: int
    check_range: bool = True

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.samples.size == 0:
            raise DataError("waveform is empty")
        if self.sample_rate_hz <= 0:
            raise DataError("sample rate must be positive")
        if self.check_range and np.any(np.abs(self.samples) > 1.0):
            raise DataError("waveform samples must lie in [-1, 1]")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


# -- WAV --------------------------------------------------------------------

def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        yield cid, pos + 8, size
        pos += 8 + size + (size & 1)


def read_wav(path) -> Waveform:
    """Read a mono 16-bit PCM RIFF/WAVE file; samples are scaled by 1/32768."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as exc:
        raise MissingFileError(f"no such file: {path}") from exc
    if len(data) < 12:
        raise TruncatedHeaderError(f"{path}: file too short for a RIFF header")
    if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedEncodingError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pcm = None
    for cid, start, size in _chunks(data):
        if cid == b"fmt ":
            if size < 16 or start + 16 > len(data):
                raise TruncatedHeaderError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", data, start)
        elif cid == b"data":
            pcm = data[start:start + size]
            if len(pcm) < size:
                raise TruncatedHeaderError(f"{path}: data chunk shorter than declared")
    if fmt is None or pcm is None:
        raise TruncatedHeaderError(f"{path}: missing fmt or data chunk")

    tag, channels, rate, _, _, bits = fmt
    # 0xFFFE is WAVE_FORMAT_EXTENSIBLE; we only accept plain PCM
    if tag != 1 or bits != 16:
        raise UnsupportedEncodingError(
            f"{path}: only 16-bit PCM is supported (format tag {tag}, {bits} bits)"
        )
    if channels != 1:
        raise MultiChannelError(f"{path}: expected mono, got {channels} channels")
    if len(pcm) % 2:
        pcm = pcm[:-1]
    ints = np.frombuffer(pcm, dtype="<i2")
    return Waveform(ints.astype(np.float64) / 32768.0, rate)


def write_wav(path, samples, sample_rate_hz: int) -> None:
    """Write mono PCM16; samples are rounded from ``s * 32768`` and clipped."""
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate_hz))
        wf.writeframes(ints.tobytes())


# -- kernel container -------------------------------------------------------

def write_tensors(tensors: dict, path) -> None:
    out = bytearray(MAGIC)
    out += struct.pack("<II", FORMAT_VERSION, len(tensors))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        encoded = name.encode("utf-8")
        out += struct.pack("<I", len(encoded)) + encoded
        out += struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
        out += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def read_tensors(path) -> dict[str, np.ndarray]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as exc:
        raise MissingFileError(f"no such file: {path}") from exc

    def take(fmt, pos):
        n = struct.calcsize(fmt)
        if pos + n > len(data):
            raise TensorLengthError(f"{path}: container truncated at byte {pos}")
        return struct.unpack_from(fmt, data, pos), pos + n

    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    (version, count), pos = take("<II", 4)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {FORMAT_VERSION}")

    tensors = {}
    for _ in range(count):
        (nlen,), pos = take("<I", pos)
        if pos + nlen > len(data):
            raise TensorLengthError(f"{path}: truncated tensor name")
        name = data[pos:pos + nlen].decode("utf-8")
        pos += nlen
        if name in tensors:
            raise ContainerError(f"{path}: duplicate tensor {name!r}")
        (ndim,), pos = take("<I", pos)
        dims, pos = take(f"<{ndim}I", pos)
        size = int(np.prod(dims, dtype=np.int64))
        nbytes = 8 * size
        if pos + nbytes > len(data):
            raise TensorLengthError(
                f"{path}: tensor {name!r} declares dims {list(dims)} but data is short"
            )
        tensors[name] = np.frombuffer(data, dtype="<f8", count=size,
                                      offset=pos).reshape(dims).astype(np.float64)
        pos += nbytes
    if pos != len(data):
        raise TensorLengthError(f"{path}: {len(data) - pos} trailing bytes after last tensor")
    return tensors


def write_kernels(ks, path) -> None:
    tensors = dict(ks.tensors())
    tensors[CONFIG_TENSOR] = ks.config.as_vector()
    write_tensors(tensors, path)


def read_kernels(path):
    from .kernels import KernelSet, MfccConfig

    tensors = read_tensors(path)
    missing = [n for n in KernelSet.TENSOR_NAMES if n not in tensors]
    if missing:
        raise MissingTensorError(f"{path}: missing tensor {', '.join(missing)}")
    if CONFIG_TENSOR in tensors:
        cfg = MfccConfig.from_vector(tensors[CONFIG_TENSOR])
    else:
        M = tensors["window"].shape[0]
        N = tensors["dft_real"].shape[0]
        C, B = tensors["melbank"].shape
        cfg = MfccConfig(frame_len=M, fft_size=N, num_bins=B, num_filters=C, num_ceps=C)
    return KernelSet(config=cfg, **{n: tensors[n] for n in KernelSet.TENSOR_NAMES})


# -- features ---------------------------------------------------------------

def write_features(fm, path) -> None:
    """One frame per line, 17 significant digits per value."""
    values = np.asarray(getattr(fm, "values", fm), dtype=np.float64)
    if values.size:
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            r, c = bad[0]
            raise DataError(f"non-finite feature at row {r}, column {c}")
    with open(path, "w") as fh:
        for row in values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_features(path) -> np.ndarray:
    with open(path) as fh:
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=np.float64)
