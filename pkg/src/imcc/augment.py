"""Cluster-center data augmentation.

Training instances are partitioned with k-means; each cluster center becomes
a virtual example whose feature vector is the member mean and whose soft
label vector is the member label mean (so entries lie in [-1, +1]). The
expanded-center matrix maps every instance to its own cluster's center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import nearest_centers, pairwise_sq_dists
from .datasets import Dataset, _freeze
from .errors import ConfigurationError, ValidationError


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster index per instance; every cluster in [0, c) is non-empty."""

    assignment: np.ndarray
    num_clusters: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if assignment.ndim != 1:
            raise ValidationError("assignment must be a 1-D index sequence")
        c = int(self.num_clusters)
        if c < 1:
            raise ValidationError("need at least one cluster")
        if assignment.size and (assignment.min() < 0 or assignment.max() >= c):
            raise ValidationError(f"cluster indices must lie in [0, {c})")
        counts = np.bincount(assignment, minlength=c)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0)
            raise ValidationError(f"clusters {empty.tolist()} are empty")
        object.__setattr__(self, "assignment", _freeze(assignment))
        object.__setattr__(self, "num_clusters", c)

    def counts(self):
        return np.bincount(self.assignment, minlength=self.num_clusters)


@dataclass(frozen=True)
class Augmentation:
    """Virtual examples: centers (c, d), soft labels (c, q) in [-1, +1]."""

    centers: np.ndarray
    soft_labels: np.ndarray
    assignment: ClusterAssignment

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        soft = np.asarray(self.soft_labels, dtype=np.float64)
        c = self.assignment.num_clusters
        if centers.ndim != 2 or centers.shape[0] != c:
            raise ValidationError(f"centers must have {c} rows")
        if soft.ndim != 2 or soft.shape[0] != c:
            raise ValidationError(f"soft_labels must have {c} rows")
        if np.any(np.abs(soft) > 1.0):
            raise ValidationError("soft labels must lie in [-1, +1]")
        object.__setattr__(self, "centers", _freeze(centers))
        object.__setattr__(self, "soft_labels", _freeze(soft))

    @property
    def num_clusters(self):
        return self.assignment.num_clusters


def _cluster_means(values, assignment, c):
    sums = np.zeros((c, values.shape[1]), dtype=np.float64)
    np.add.at(sums, assignment, values)
    counts = np.bincount(assignment, minlength=c).astype(np.float64)
    return sums / counts[:, None]


def _plusplus_init(X, c, rng):
    """k-means++ seeding. If every remaining point coincides with a chosen
    center (duplicate-heavy data), the lowest unchosen index is taken."""
    n = X.shape[0]
    chosen = np.empty(c, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = pairwise_sq_dists(X, X[chosen[0]][None, :])[:, 0]
    for j in range(1, c):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            mask = np.ones(n, dtype=bool)
            mask[chosen[:j]] = False
            idx = int(np.flatnonzero(mask)[0])
        chosen[j] = idx
        d2 = np.minimum(d2, pairwise_sq_dists(X, X[idx][None, :])[:, 0])
    return X[chosen].copy()


def _assign_with_repair(X, centers):
    """Nearest-center assignment (ties -> lowest index) with empty-cluster
    repair: an empty center is reseeded to the point farthest from it; if
    duplicates leave a cluster empty even then, a point is pulled from the
    largest cluster."""
    c = centers.shape[0]
    assignment, _ = nearest_centers(X, centers)
    counts = np.bincount(assignment, minlength=c)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        taken = set()
        for j in empty:
            d2 = pairwise_sq_dists(X, centers[j][None, :])[:, 0]
            for idx in np.argsort(-d2, kind="stable"):
                if int(idx) not in taken:
                    taken.add(int(idx))
                    centers[j] = X[idx]
                    break
        assignment, _ = nearest_centers(X, centers)
        counts = np.bincount(assignment, minlength=c)
        for j in np.flatnonzero(counts == 0):
            donor = int(np.argmax(np.where(counts > 1, counts, -1)))
            members = np.flatnonzero(assignment == donor)
            d2 = pairwise_sq_dists(X[members], centers[donor][None, :])[:, 0]
            pick = members[int(np.argmax(d2))]
            assignment[pick] = j
            counts[donor] -= 1
            counts[j] += 1
    return assignment, centers


def _lloyd(X, centers, max_iter, tol):
    """Lloyd iterations from explicit starting centers.

    Returns (assignment, centers, wcss_trace); the trace records the
    within-cluster sum of squares after every update and is non-increasing.
    On exit the centers are exactly the member means of the assignment.
    """
    centers = np.array(centers, dtype=np.float64)
    c = centers.shape[0]
    assignment = None
    trace = []
    for _ in range(max_iter):
        assignment, centers = _assign_with_repair(X, centers)
        new_centers = _cluster_means(X, assignment, c)
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        trace.append(float(((X - centers[assignment]) ** 2).sum()))
        if shift < tol:
            break
    return assignment, centers, np.array(trace)


def kmeans(
    features,
    c,
    seed,
    max_iter=300,
    tol=1e-6,
    restarts=1,
    init_centers=None,
) -> ClusterAssignment:
    """k-means clustering (k-means++ seeding, Lloyd refinement).

    Deterministic for a fixed seed: seeding draws from numpy's PCG64
    generator, assignment ties go to the lowest cluster index, and restart
    r uses the generator seeded with (seed, r); the restart with the lowest
    within-cluster sum of squares wins. ``init_centers`` bypasses seeding
    (and restarts) for reproducible experiments.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("features must be a 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite entries")
    n = X.shape[0]
    if not 1 <= c <= n:
        raise ConfigurationError(f"cluster count {c} must lie in [1, {n}]")
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    if max_iter < 1:
        raise ConfigurationError("max_iter must be at least 1")
    if restarts < 1:
        raise ConfigurationError("restarts must be at least 1")

    if init_centers is not None:
        init = np.asarray(init_centers, dtype=np.float64)
        if init.shape != (c, X.shape[1]):
            raise ConfigurationError(
                f"init_centers must have shape ({c}, {X.shape[1]})"
            )
        assignment, _, _ = _lloyd(X, init, max_iter, tol)
        return ClusterAssignment(assignment, c)

    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centers0 = _plusplus_init(X, c, rng)
        assignment, _, trace = _lloyd(X, centers0, max_iter, tol)
        wcss = trace[-1]
        if best is None or wcss < best[0]:
            best = (wcss, assignment)
    return ClusterAssignment(best[1], c)


def make_virtual_examples(data: Dataset, assignment: ClusterAssignment) -> Augmentation:
    """Per-cluster feature means and label means as virtual examples."""
    if assignment.assignment.shape[0] != data.num_examples:
        raise ValidationError(
            f"assignment covers {assignment.assignment.shape[0]} instances, "
            f"dataset has {data.num_examples}"
        )
    c = assignment.num_clusters
    idx = assignment.assignment
    centers = _cluster_means(data.features, idx, c)
    soft = _cluster_means(data.labels.astype(np.float64), idx, c)
    return Augmentation(centers, soft, assignment)


def expand_centers(aug: Augmentation) -> np.ndarray:
    """n x d matrix whose row i is the center of instance i's cluster."""
    return aug.centers[aug.assignment.assignment]
