"""Short-time Fourier analysis and overlap-add resynthesis.

The FFT is an iterative radix-2 decimation-in-time transform vectorized
over leading axes, so a whole frame matrix is transformed in one call.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio_io import Waveform
from .errors import NonPowerOfTwoLength, ShapeMismatch, SignalTooShort

__all__ = ["FrameParams", "Spectrogram", "fft", "stft", "istft", "hann_periodic"]

ENVELOPE_FLOOR = 1e-8


@lru_cache(maxsize=None)
def _bit_reverse_permutation(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=None)
def _twiddles(size, inverse):
    sign = 1.0 if inverse else -1.0
    tw = np.exp(sign * 2j * np.pi * np.arange(size // 2) / size)
    tw.setflags(write=False)
    return tw


def fft(x, inverse=False):
    """Radix-2 FFT along the last axis.

    The forward transform is unnormalized; the inverse is scaled by ``1/N``.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1] if x.ndim else 0
    if n < 1 or n & (n - 1):
        raise NonPowerOfTwoLength(f"FFT length must be a power of two, got {n}")
    lead = x.shape[:-1]
    y = x[..., _bit_reverse_permutation(n)]
    size = 2
    while size <= n:
        half = size // 2
        y = y.reshape(lead + (n // size, size))
        even = y[..., :half]
        odd = y[..., half:] * _twiddles(size, inverse)
        y = np.concatenate([even + odd, even - odd], axis=-1)
        size *= 2
    y = y.reshape(lead + (n,))
    if inverse:
        y = y / n
    return y


def hann_periodic(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _next_pow2(n):
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True)
class FrameParams:
    """Frame length and shift in milliseconds.

    Sample counts depend on the sample rate, so they are derived on demand
    by :meth:`lengths`.
    """

    frame_ms: float = 40.0
    hop_ms: float = 10.0

    def __post_init__(self):
        if not (self.frame_ms > 0 and self.hop_ms > 0):
            raise ValueError("frame_ms and hop_ms must be positive")

    def lengths(self, sample_rate_hz):
        """Return ``(frame_len, hop_len, fft_size)`` in samples."""
        frame_len = int(np.floor(self.frame_ms * sample_rate_hz / 1000.0 + 0.5))
        hop_len = int(np.floor(self.hop_ms * sample_rate_hz / 1000.0 + 0.5))
        if frame_len < 1 or hop_len < 1:
            raise ValueError(f"frame/hop shorter than one sample at {sample_rate_hz} Hz")
        if hop_len > frame_len:
            raise ValueError(f"hop ({hop_len}) longer than frame ({frame_len})")
        return frame_len, hop_len, _next_pow2(frame_len)


@dataclass
class Spectrogram:
    """One-sided STFT as magnitude and phase, each ``C x M``."""

    magnitude: np.ndarray
    phase: np.ndarray
    params: FrameParams
    sample_rate_hz: int

    def __post_init__(self):
        if self.magnitude.shape != self.phase.shape or self.magnitude.ndim != 2:
            raise ShapeMismatch(
                f"magnitude {self.magnitude.shape} and phase {self.phase.shape} must be equal 2-D shapes")

    @property
    def shape(self):
        return self.magnitude.shape

    @property
    def n_channels(self):
        return self.magnitude.shape[0]

    @property
    def n_frames(self):
        return self.magnitude.shape[1]

    def lengths(self):
        return self.params.lengths(self.sample_rate_hz)

    def complex(self):
        return self.magnitude * np.exp(1j * self.phase)


def stft(w, p=FrameParams()):
    frame_len, hop_len, fft_size = p.lengths(w.sample_rate_hz)
    x = w.samples
    if x.shape[0] < frame_len:
        raise SignalTooShort(f"signal has {x.shape[0]} samples, frame needs {frame_len}")
    n_frames = 1 + (x.shape[0] - frame_len) // hop_len
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop_len][:n_frames]
    padded = np.zeros((n_frames, fft_size))
    padded[:, :frame_len] = frames * hann_periodic(frame_len)
    spec = fft(padded)[:, :fft_size // 2 + 1].T
    return Spectrogram(np.abs(spec), np.angle(spec), p, w.sample_rate_hz)


def istft(s):
    """Weighted overlap-add inverse of :func:`stft`.

    Output length is ``frame_len + (M - 1) * hop_len``. Samples where the
    summed squared window vanishes (the very first sample) come out as 0.
    """
    frame_len, hop_len, fft_size = s.lengths()
    n_bins = fft_size // 2 + 1
    if s.n_channels != n_bins:
        raise ShapeMismatch(f"expected {n_bins} channels for fft size {fft_size}, got {s.n_channels}")
    half = s.complex().T
    # Conjugate-symmetric extension: bins N/2+1 .. N-1 mirror bins N/2-1 .. 1.
    full = np.concatenate([half, np.conj(half[:, -2:0:-1])], axis=1)
    frames = fft(full, inverse=True).real[:, :frame_len]
    win = hann_periodic(frame_len)
    n_frames = frames.shape[0]
    length = frame_len + (n_frames - 1) * hop_len
    out = np.zeros(length)
    env = np.zeros(length)
    frames = frames * win
    win_sq = win * win
    for m in range(n_frames):
        start = m * hop_len
        out[start:start + frame_len] += frames[m]
        env[start:start + frame_len] += win_sq
    return Waveform(out / np.maximum(env, ENVELOPE_FLOOR), s.sample_rate_hz)
