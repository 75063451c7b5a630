"""
Short-time analysis and resynthesis
===================================

A second of noise goes through the STFT and back. Away from the edges the
reconstruction is exact up to rounding.
"""

# %%
import numpy as np

from patchsep.audio_io import Waveform
from patchsep.spectral import FrameParams, istft, stft

rng = np.random.default_rng(0)
w = Waveform(rng.uniform(-0.5, 0.5, 8000), 8000)
params = FrameParams(frame_ms=40, hop_ms=10)
print("frame, hop, fft size:", params.lengths(w.sample_rate_hz))

# %%
S = stft(w, params)
print("spectrogram channels x frames:", S.shape)

# %%
# The first and last frame_len samples are not fully covered by the windows.
out = istft(S)
edge = params.lengths(8000)[0]
a, b = out.samples[edge:-edge], w.samples[edge:-edge]
print("interior relative error: %.2e" % (np.linalg.norm(a - b) / np.linalg.norm(b)))
