"""Spectro-temporal patches of a feature matrix.

A patch is the ``h x l`` block starting at channel ``i`` and frame ``j``,
unrolled channel-major into a supervector of length ``h*l`` (entry
``(c - i) * l + (m - j)``). Patches are recombined by averaging
overlapping contributions.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, PatchLargerThanMatrix

__all__ = [
    "NormStats", "PatchGridSpec", "PatchSet",
    "to_features", "from_features", "extract_patches", "overlap_add", "coverage",
]


@dataclass(frozen=True)
class NormStats:
    floor: float
    ceil: float

    def __post_init__(self):
        if not self.ceil > self.floor:
            raise ValueError(f"ceil ({self.ceil}) must exceed floor ({self.floor})")


def to_features(X):
    """Log-compress and min-max scale a magnitude matrix to [0, 1]."""
    f = np.log1p(np.asarray(X, dtype=np.float64))
    lo, hi = float(f.min()), float(f.max())
    if hi <= lo:
        return np.zeros_like(f), NormStats(lo, lo + 1.0)
    return (f - lo) / (hi - lo), NormStats(lo, hi)


def from_features(F, norm):
    f = np.asarray(F, dtype=np.float64) * (norm.ceil - norm.floor) + norm.floor
    return np.maximum(np.expm1(f), 0.0)


def _origins(total, size, stride):
    starts = list(range(0, total - size + 1, stride))
    if starts[-1] != total - size:
        starts.append(total - size)
    return np.array(starts, dtype=np.intp)


@dataclass(frozen=True)
class PatchGridSpec:
    h: int
    l: int
    C: int
    M: int
    stride_freq: int = 1
    stride_time: int = 1

    def __post_init__(self):
        if min(self.h, self.l, self.stride_freq, self.stride_time) < 1:
            raise ValueError("patch size and strides must be positive")
        if self.stride_freq > self.h or self.stride_time > self.l:
            # Larger strides would leave cells that no patch covers.
            raise ValueError(f"strides ({self.stride_freq}, {self.stride_time}) must not exceed "
                             f"the patch size ({self.h}, {self.l})")
        if self.h > self.C or self.l > self.M:
            raise PatchLargerThanMatrix(
                f"{self.h}x{self.l} patch does not fit a {self.C}x{self.M} matrix")

    @property
    def dim(self):
        return self.h * self.l

    def freq_origins(self):
        return _origins(self.C, self.h, self.stride_freq)

    def time_origins(self):
        return _origins(self.M, self.l, self.stride_time)

    def origins(self):
        """All ``(i, j)`` origins, frequency-major."""
        ii, jj = np.meshgrid(self.freq_origins(), self.time_origins(), indexing="ij")
        return np.stack([ii.ravel(), jj.ravel()], axis=1)

    @property
    def n_patches(self):
        return len(self.freq_origins()) * len(self.time_origins())


@dataclass
class PatchSet:
    vectors: np.ndarray
    origins: np.ndarray
    spec: PatchGridSpec
    norm: NormStats

    def __len__(self):
        return self.vectors.shape[0]

    def subset(self, rows):
        return PatchSet(self.vectors[rows], self.origins[rows], self.spec, self.norm)


def extract_patches(F, spec, norm=None):
    """Cut ``F`` into every patch on the grid described by ``spec``.

    ``norm`` is carried along so that patch values can later be mapped back
    to magnitudes; it defaults to the identity-like ``NormStats(0, 1)``.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise DimensionMismatch(f"feature matrix must be 2-D, got shape {F.shape}")
    if spec.h > F.shape[0] or spec.l > F.shape[1]:
        raise PatchLargerThanMatrix(f"{spec.h}x{spec.l} patch does not fit {F.shape}")
    if F.shape != (spec.C, spec.M):
        raise DimensionMismatch(f"grid spec is for {(spec.C, spec.M)}, matrix is {F.shape}")
    windows = np.lib.stride_tricks.sliding_window_view(F, (spec.h, spec.l))
    fi, tj = spec.freq_origins(), spec.time_origins()
    vectors = windows[fi][:, tj].reshape(len(fi) * len(tj), spec.dim)
    return PatchSet(np.ascontiguousarray(vectors), spec.origins(), spec,
                    norm if norm is not None else NormStats(0.0, 1.0))


def _check_origins(values, origins, spec):
    values = np.asarray(values, dtype=np.float64)
    origins = np.asarray(origins, dtype=np.intp).reshape(-1, 2)
    if values.ndim != 2 or values.shape[1] != spec.dim:
        raise DimensionMismatch(f"expected N x {spec.dim} values, got {values.shape}")
    if values.shape[0] != origins.shape[0]:
        raise DimensionMismatch(f"{values.shape[0]} value rows but {origins.shape[0]} origins")
    if origins.size and (origins.min() < 0 or origins[:, 0].max() > spec.C - spec.h
                         or origins[:, 1].max() > spec.M - spec.l):
        raise DimensionMismatch("patch origin outside the grid")
    return values, origins


def coverage(origins, spec):
    """Number of patches covering each cell (integer counts)."""
    _, origins = _check_origins(np.zeros((len(origins), spec.dim)), origins, spec)
    counts = np.zeros(spec.C * spec.M, dtype=np.int64)
    for dc in range(spec.h):
        for dm in range(spec.l):
            lin = (origins[:, 0] + dc) * spec.M + origins[:, 1] + dm
            counts += np.bincount(lin, minlength=spec.C * spec.M)
    return counts.reshape(spec.C, spec.M)


def overlap_add(values, origins, spec):
    """Place each supervector back at its origin and average overlaps.

    Cells covered by no patch are 0. Accumulation runs over window offsets
    in a fixed order, so the result does not depend on threading.
    """
    values, origins = _check_origins(values, origins, spec)
    size = spec.C * spec.M
    acc = np.zeros(size)
    base = origins[:, 0] * spec.M + origins[:, 1]
    for dc in range(spec.h):
        for dm in range(spec.l):
            acc += np.bincount(base + (dc * spec.M + dm), weights=values[:, dc * spec.l + dm],
                               minlength=size)
    counts = coverage(origins, spec).ravel()
    out = np.zeros(size)
    covered = counts > 0
    out[covered] = acc[covered] / counts[covered]
    return out.reshape(spec.C, spec.M)
