"""Seeded k-means (k-means++ seeding, Lloyd iterations, best of restarts)."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, TooFewPoints

__all__ = ["KMeansConfig", "Clustering", "kmeans", "assign", "inertia_of", "lloyd"]


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 4
    max_iters: int = 100
    seed: int = 0
    restarts: int = 10

    def __post_init__(self):
        if self.k < 1 or self.max_iters < 1 or self.restarts < 1:
            raise ValueError("k, max_iters and restarts must all be >= 1")


@dataclass
class Clustering:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int = 0


def _sq_dists(points, centroids):
    # Explicit differences (not the |x|^2 - 2xc + |c|^2 expansion) keep exact ties exact.
    d = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", d, d)


def assign(centroids, points):
    """Label each point with its nearest centroid; ties go to the lowest index."""
    centroids = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if centroids.shape[1] != points.shape[1]:
        raise DimensionMismatch(f"centroids are {centroids.shape[1]}-D, points are {points.shape[1]}-D")
    return np.argmin(_sq_dists(points, centroids), axis=1)


def inertia_of(points, centroids, labels):
    d = points - centroids[labels]
    return float(np.einsum("nd,nd->", d, d))


def _centroids(points, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.stack([np.bincount(labels, weights=points[:, j], minlength=k)
                     for j in range(points.shape[1])], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None], counts


def _kmeanspp(points, k, rng):
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    closest = _sq_dists(points, centers[0][None])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # Every point already coincides with a centre; fall back to a uniform draw.
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(points[idx])
        closest = np.minimum(closest, _sq_dists(points, points[idx][None])[:, 0])
    return np.array(centers)


def lloyd(points, init, max_iters):
    """Lloyd iterations from ``init``.

    Returns ``(centroids, labels, n_iter, history)`` where ``history`` lists
    the inertia after each assignment step. Empty clusters are reseeded to
    the point farthest from its current centroid.
    """
    k = init.shape[0]
    centroids = init.astype(np.float64, copy=True)
    labels = assign(centroids, points)
    history = [inertia_of(points, centroids, labels)]
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        new, counts = _centroids(points, labels, k)
        for q in np.flatnonzero(counts == 0):
            d = np.einsum("nd,nd->n", points - new[labels], points - new[labels])
            # Do not steal the last member of another cluster.
            d[np.bincount(labels, minlength=k)[labels] <= 1] = -1.0
            far = int(np.argmax(d))
            new[q] = points[far]
            labels[far] = q
        centroids = new
        new_labels = assign(centroids, points)
        history.append(inertia_of(points, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return centroids, labels, n_iter, history


def kmeans(points, cfg=KMeansConfig()):
    """Best-of-``restarts`` k-means; deterministic for a given ``cfg.seed``."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, k = points.shape[0], cfg.k
    if n < k:
        raise TooFewPoints(f"{n} points cannot form {k} clusters")
    if np.unique(points, axis=0).shape[0] < k:
        raise DegenerateInput(f"fewer than {k} distinct points")
    rng = np.random.default_rng(cfg.seed)
    best = None
    for _ in range(cfg.restarts):
        init = _kmeanspp(points, k, rng)
        centroids, labels, n_iter, history = lloyd(points, init, cfg.max_iters)
        score = history[-1]
        if best is None or score < best.inertia:
            best = Clustering(centroids, labels, score, n_iter)
    return best
