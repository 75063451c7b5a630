"""PCM WAV input/output and the in-memory waveform type.

Reading accepts 8/16/24/32-bit integer PCM and 32/64-bit IEEE float, mono
or stereo; stereo is averaged down to mono. Writing always produces 16-bit
PCM mono, hard-clipping to [-1, 1] first.
"""
import struct
import wave
from dataclasses import dataclass

import numpy as np

from .errors import EmptyAudio, IoFailure, MalformedContainer, UnsupportedEncoding

__all__ = ["Waveform", "read_wav", "write_wav"]

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


@dataclass
class Waveform:
    """Mono signal with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        self.sample_rate_hz = int(self.sample_rate_hz)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.sample_rate_hz


def _iter_chunks(data, start):
    pos = start
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            # Tolerate a truncated trailing data chunk, which some writers emit.
            if cid != b"data":
                raise MalformedContainer(f"chunk {cid!r} truncated")
        yield cid, body
        pos += 8 + size + (size & 1)


def _decode(body, fmt_code, bits, channels):
    width = bits // 8
    frame = width * channels
    n = len(body) // frame
    body = body[:n * frame]
    if fmt_code == _IEEE_FLOAT:
        if bits == 32:
            x = np.frombuffer(body, dtype="<f4").astype(np.float64)
        elif bits == 64:
            x = np.frombuffer(body, dtype="<f8").astype(np.float64)
        else:
            raise UnsupportedEncoding(f"{bits}-bit float samples")
        x = np.clip(x, -1.0, 1.0)
    elif bits == 8:
        x = (np.frombuffer(body, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 16:
        x = np.frombuffer(body, dtype="<i2") / 32768.0
    elif bits == 24:
        raw = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        x = ints / float(1 << 23)
    elif bits == 32:
        x = np.frombuffer(body, dtype="<i4") / float(1 << 31)
    else:
        raise UnsupportedEncoding(f"{bits}-bit integer PCM")
    return x.reshape(n, channels)


def read_wav(path):
    """Read a WAV file into a mono :class:`Waveform`.

    Integer samples are divided by the magnitude of the most negative code
    (e.g. 32768 for 16-bit). Multi-channel frames are averaged.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer(f"{path}: not a RIFF/WAVE file")

    fmt = None
    body = None
    for cid, chunk in _iter_chunks(data, 12):
        if cid == b"fmt ":
            if len(chunk) < 16:
                raise MalformedContainer(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", chunk, 0)
            if fmt[0] == _EXTENSIBLE:
                if len(chunk) < 26:
                    raise MalformedContainer(f"{path}: extensible fmt chunk too short")
                sub = struct.unpack_from("<H", chunk, 24)[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            body = chunk
    if fmt is None:
        raise MalformedContainer(f"{path}: missing fmt chunk")
    if body is None:
        raise MalformedContainer(f"{path}: missing data chunk")

    fmt_code, channels, rate, _, _, bits = fmt
    if fmt_code not in (_PCM, _IEEE_FLOAT):
        raise UnsupportedEncoding(f"{path}: format code {fmt_code:#06x}")
    if channels < 1 or rate == 0 or bits == 0 or bits % 8:
        raise MalformedContainer(f"{path}: bad fmt fields (channels={channels}, rate={rate}, bits={bits})")
    if channels > 2:
        raise UnsupportedEncoding(f"{path}: {channels} channels (only mono/stereo)")

    frames = _decode(body, fmt_code, bits, channels)
    if frames.shape[0] == 0:
        raise EmptyAudio(f"{path}: no samples")
    samples = frames[:, 0] if channels == 1 else frames.mean(axis=1)
    return Waveform(samples, rate)


def quantize16(samples):
    """Clip to [-1, 1] and map to the nearest int16 code."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    q = np.round(x * 32768.0)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(path, w):
    """Write ``w`` as 16-bit PCM mono."""
    if len(w) == 0:
        raise EmptyAudio("refusing to write an empty waveform")
    codes = quantize16(w.samples)
    try:
        with open(path, "wb") as raw, wave.open(raw, "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(w.sample_rate_hz)
            fh.writeframes(codes.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
