"""Clustering-based separation pipeline.

Mixture STFT -> log features -> patches -> autoencoder -> code vectors ->
k-means -> per-cluster patch reconstructions -> masks -> masked
resynthesis with the mixture phase, one waveform per cluster.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .autoenc import DEFAULT_HIDDEN, TrainConfig, encode, init_model, reconstruct, train
from .cluster import KMeansConfig, kmeans
from .errors import DimensionMismatch, NegativeMagnitude, ShapeMismatch, SignalTooShort
from .patching import (
    PatchGridSpec,
    coverage,
    extract_patches,
    from_features,
    overlap_add,
    to_features,
)
from .spectral import FrameParams, Spectrogram, istft, stft

__all__ = [
    "MaskSet", "SeparationConfig", "SeparationResult",
    "cluster_magnitudes", "build_masks", "apply_masks", "separate", "analyze",
]

log = logging.getLogger(__name__)

MASK_EPS = 1e-10


@dataclass
class MaskSet:
    masks: list
    mode: str = "ratio"

    def __len__(self):
        return len(self.masks)


@dataclass(frozen=True)
class SeparationConfig:
    """Every tunable of the pipeline, with the reference defaults."""

    frame_ms: float = 40.0
    hop_ms: float = 10.0
    h: int = 30
    l: int = 5
    stride_freq: int = 1
    stride_time: int = 1
    hidden: tuple = DEFAULT_HIDDEN
    k: int = 4
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 1234
    mask_mode: str = "ratio"
    kmeans_restarts: int = 10
    kmeans_max_iters: int = 100

    def __post_init__(self):
        if self.mask_mode not in ("ratio", "binary"):
            raise ValueError(f"mask_mode must be 'ratio' or 'binary', got {self.mask_mode!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        # Validate the sub-configs eagerly so bad flags fail before any work.
        self.frame_params()
        self.train_config()
        self.kmeans_config()

    def frame_params(self):
        return FrameParams(self.frame_ms, self.hop_ms)

    def layer_sizes(self):
        d = self.h * self.l
        return (d,) + tuple(self.hidden) + (d,)

    # Seeds are offset so the three random streams never coincide.
    def train_config(self):
        return TrainConfig(optimizer=self.optimizer, learning_rate=self.learning_rate,
                           batch_size=self.batch_size, epochs=self.epochs, seed=self.seed + 1)

    def kmeans_config(self):
        return KMeansConfig(k=self.k, max_iters=self.kmeans_max_iters, seed=self.seed + 2,
                            restarts=self.kmeans_restarts)


@dataclass
class SeparationResult:
    sources: list
    masks: MaskSet
    cluster_energies: list
    artifacts: list = field(default_factory=list)
    spectrogram: Spectrogram = None
    model: object = None
    train_log: object = None
    clustering: object = None
    patches: object = None


def cluster_magnitudes(model, patches, labels, k, recon=None):
    """Magnitude estimate of each cluster from its own patches only.

    Each cluster's reconstructed patches are overlap-added and averaged over
    that cluster's coverage, then mapped back to magnitudes. Cells no patch
    of the cluster touches are 0. ``recon`` may carry precomputed
    reconstructions of all patches.
    """
    labels = np.asarray(labels)
    if labels.shape != (len(patches),):
        raise DimensionMismatch(f"{labels.shape[0]} labels for {len(patches)} patches")
    if recon is None:
        recon = reconstruct(model, patches.vectors)
    out = []
    for q in range(k):
        rows = np.flatnonzero(labels == q)
        if rows.size == 0:
            out.append(np.zeros((patches.spec.C, patches.spec.M)))
            continue
        feats = overlap_add(recon[rows], patches.origins[rows], patches.spec)
        covered = coverage(patches.origins[rows], patches.spec) > 0
        out.append(np.where(covered, from_features(feats, patches.norm), 0.0))
    return out


def build_masks(S, mode="ratio", epsilon=MASK_EPS):
    """Turn per-cluster magnitude estimates into masks over the mixture.

    ``ratio``: ``(S_q + eps/k) / (sum_r S_r + eps)``, summing to one per bin.
    ``binary``: 1 for the largest estimate, lowest cluster index on ties.
    """
    S = np.stack([np.asarray(s, dtype=np.float64) for s in S])
    if np.any(S < 0):
        raise NegativeMagnitude("magnitude estimates must be non-negative")
    k = S.shape[0]
    if mode == "ratio":
        masks = (S + epsilon / k) / (S.sum(axis=0) + epsilon)
    elif mode == "binary":
        masks = (np.argmax(S, axis=0)[None] == np.arange(k)[:, None, None]).astype(np.float64)
    else:
        raise ValueError(f"unknown mask mode {mode!r}")
    return MaskSet(list(masks), mode)


def apply_masks(mix, masks):
    out = []
    for mask in masks.masks:
        if mask.shape != mix.shape:
            raise ShapeMismatch(f"mask {mask.shape} vs spectrogram {mix.shape}")
        out.append(Spectrogram(mask * mix.magnitude, mix.phase, mix.params, mix.sample_rate_hz))
    return out


def analyze(mix, cfg):
    """STFT, features and patches of ``mix`` under ``cfg``."""
    params = cfg.frame_params()
    frame_len, _, _ = params.lengths(mix.sample_rate_hz)
    if len(mix) < frame_len:
        raise SignalTooShort(f"mixture has {len(mix)} samples, one frame needs {frame_len}")
    spec = stft(mix, params)
    if spec.n_frames < cfg.l or spec.n_channels < cfg.h:
        raise SignalTooShort(
            f"spectrogram {spec.shape} is smaller than a {cfg.h}x{cfg.l} patch")
    feats, norm = to_features(spec.magnitude)
    grid = PatchGridSpec(cfg.h, cfg.l, spec.n_channels, spec.n_frames, cfg.stride_freq, cfg.stride_time)
    return spec, extract_patches(feats, grid, norm)


def separate(mix, cfg=SeparationConfig(), model=None, on_epoch=None):
    """Run the whole pipeline on ``mix``.

    A pre-trained ``model`` skips training; otherwise one is initialized
    from ``cfg.seed`` and trained on the mixture's own patches.
    """
    spec, patches = analyze(mix, cfg)
    log.info("spectrogram %s, %d patches of dim %d", spec.shape, len(patches), patches.spec.dim)
    train_log = None
    if model is None:
        model = init_model(cfg.layer_sizes(), cfg.seed)
        model, train_log = train(model, patches, cfg.train_config(), on_epoch=on_epoch)
    elif model.input_size != patches.spec.dim:
        raise DimensionMismatch(
            f"model input size {model.input_size} != patch dimension {patches.spec.dim}")
    codes = encode(model, patches.vectors)
    clustering = kmeans(codes, cfg.kmeans_config())
    S = cluster_magnitudes(model, patches, clustering.labels, cfg.k)
    masks = build_masks(S, cfg.mask_mode)
    sources = [istft(s) for s in apply_masks(spec, masks)]
    return SeparationResult(
        sources=sources,
        masks=masks,
        cluster_energies=[float(s.sum()) for s in S],
        spectrogram=spec,
        model=model,
        train_log=train_log,
        clustering=clustering,
        patches=patches,
    )
