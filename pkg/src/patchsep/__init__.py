"""Unsupervised single-channel source separation by clustering the code
layer of a deep autoencoder trained on spectro-temporal patches."""

__version__ = "0.1.0"

from .audio_io import Waveform, read_wav, write_wav
from .autoenc import (
    AutoencoderModel,
    TrainConfig,
    encode,
    export_weight_windows,
    forward,
    init_model,
    load_model,
    loss_and_grad,
    reconstruct,
    save_model,
    train,
)
from .cluster import Clustering, KMeansConfig, assign, kmeans
from .errors import PatchSepError
from .evalkit import best_permutation_score, make_mixture, snr_db
from .patching import (
    NormStats,
    PatchGridSpec,
    PatchSet,
    extract_patches,
    from_features,
    overlap_add,
    to_features,
)
from .separation import MaskSet, SeparationConfig, apply_masks, build_masks, cluster_magnitudes, separate
from .spectral import FrameParams, Spectrogram, fft, istft, stft
