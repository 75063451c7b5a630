"""Inspection exports: binary PGM images and plain CSV tables."""
import hashlib

import numpy as np

from .errors import IoFailure

__all__ = [
    "export_pgm", "read_pgm", "to_pixels", "write_matrix_csv", "read_matrix_csv",
    "write_patches_csv", "write_clustering_csv", "write_weight_windows_csv", "sha256_of",
]


def to_pixels(matrix, scaling="minmax"):
    """Map a matrix to 8-bit grey levels.

    ``minmax`` stretches [min, max] onto [0, 255] (a constant matrix becomes
    mid-grey 128); ``absolute`` treats values as already in [0, 1].
    """
    m = np.asarray(matrix, dtype=np.float64)
    if scaling == "minmax":
        lo, hi = float(m.min()), float(m.max())
        if hi <= lo:
            return np.full(m.shape, 128, dtype=np.uint8)
        scaled = (m - lo) / (hi - lo) * 255.0
    elif scaling == "absolute":
        scaled = np.clip(m, 0.0, 1.0) * 255.0
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    return np.floor(scaled + 0.5).astype(np.uint8)


def export_pgm(matrix, path, scaling="minmax"):
    """Write ``matrix`` as a P5 PGM; rows are image rows, columns image columns."""
    pixels = to_pixels(matrix, scaling)
    if pixels.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D matrix, got shape {pixels.shape}")
    height, width = pixels.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            fh.write(pixels.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit P5 PGM")
    width, height = (int(v) for v in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(height, width)


def _write_lines(path, lines):
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _row(values):
    return ",".join(repr(float(v)) for v in values)


def write_matrix_csv(matrix, path):
    """One row per matrix row (frequency channel), one column per frame."""
    _write_lines(path, (_row(r) for r in np.asarray(matrix, dtype=np.float64)))


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_patches_csv(patches, path):
    d = patches.spec.dim
    header = "i,j," + ",".join(f"v{n}" for n in range(d))
    rows = (f"{i},{j}," + _row(v) for (i, j), v in zip(patches.origins, patches.vectors))
    _write_lines(path, [header, *rows])


def write_clustering_csv(origins, labels, codes, path):
    header = "index,i,j,label," + ",".join(f"c{n}" for n in range(codes.shape[1]))
    rows = (f"{n},{o[0]},{o[1]},{lab}," + _row(c)
            for n, (o, lab, c) in enumerate(zip(origins, labels, codes)))
    _write_lines(path, [header, *rows])


def write_weight_windows_csv(windows, path):
    """One row per window, values unrolled channel-major."""
    d = windows[0].size if windows else 0
    header = "unit," + ",".join(f"w{n}" for n in range(d))
    _write_lines(path, [header, *(f"{u}," + _row(w.ravel()) for u, w in enumerate(windows))])


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
