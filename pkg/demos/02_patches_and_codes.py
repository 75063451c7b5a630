"""
Patches and bottleneck codes
============================

Log-magnitude features are cut into 30 x 5 patches, an autoencoder is
trained on them for a few epochs, and each patch gets a 6-D code.
"""

# %%
import numpy as np

from patchsep.audio_io import Waveform
from patchsep.autoenc import TrainConfig, encode, init_model, train
from patchsep.evalkit import tone_complex
from patchsep.patching import PatchGridSpec, extract_patches, overlap_add, to_features
from patchsep.spectral import FrameParams, stft

tones = tone_complex([250, 375, 500, 2200], 2.0, 8000, amplitude=0.5)
noise = 0.02 * np.random.default_rng(1).standard_normal(len(tones))
S = stft(Waveform(tones.samples + noise, 8000), FrameParams())
F, norm = to_features(S.magnitude)
print("features in [%.1f, %.1f], shape %s" % (F.min(), F.max(), F.shape))

# %%
grid = PatchGridSpec(30, 5, *F.shape)
patches = extract_patches(F, grid, norm)
print("patches:", len(patches), "of dimension", grid.dim)

# Putting the patches back with averaging gives the matrix again.
print("identity error:", np.abs(overlap_add(patches.vectors, patches.origins, grid) - F).max())

# %%
model = init_model((150, 50, 18, 6, 18, 50, 150), seed=0)
model, log = train(model, patches, TrainConfig(epochs=10, seed=1),
                   on_epoch=lambda e, loss: print("epoch", e, "loss %.5f" % loss))

# %%
codes = encode(model, patches.vectors)
print("codes:", codes.shape)
print("per-dimension spread:", np.round(codes.std(axis=0), 3))
