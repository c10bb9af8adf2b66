"""Seeded synthetic two-class Gaussian mixture data.

The random stream layout is frozen so outputs are reproducible across
platforms and releases: every point consumes, in order,

1. one uniform for the class label,
2. one uniform per feature coordinate, mapped through the inverse normal
   CDF (``scipy.special.ndtri``),
3. one uniform for the label flip.

All generators are PCG64 seeded through ``numpy.random.SeedSequence``;
identical seeds give bit-identical datasets. Derived streams (swap values,
schedules, repetitions) use ``subseed`` which hashes an integer path through
SeedSequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "DataPoint",
    "FederatedDataset",
    "MixtureSpec",
    "SampleBatch",
    "fresh_swap_value",
    "partition",
    "sample",
    "subseed",
]


@dataclass(frozen=True)
class DataPoint:
    """One labeled example."""

    x: np.ndarray
    y: float


@dataclass(frozen=True)
class MixtureSpec:
    """Two-class Gaussian mixture with label noise.

    A point draws class 1 with probability ``class_prob``, features from an
    isotropic Gaussian (covariance ``feature_std**2 I``) centered at
    ``mean1`` (class 1) or ``mean0`` (class 0), and then flips its label with
    probability ``flip_prob``.
    """

    mean0: tuple[float, ...] = (1.0, -1.0)
    mean1: tuple[float, ...] = (-1.0, 1.0)
    class_prob: float = 0.5
    flip_prob: float = 0.1
    dimension: int = 2
    feature_std: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.class_prob <= 1.0:
            raise ValueError(f"class_prob must be in [0, 1], got {self.class_prob}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.feature_std <= 0.0:
            raise ValueError(f"feature_std must be positive, got {self.feature_std}")
        if len(self.mean0) != self.dimension or len(self.mean1) != self.dimension:
            raise ValueError("mean0 and mean1 must have length equal to dimension")


@dataclass(frozen=True)
class SampleBatch:
    """A flat batch of points: ``features`` (N, d) and ``labels`` (N,)."""

    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.features.shape[0]

    def point(self, k: int) -> DataPoint:
        return DataPoint(x=self.features[k].copy(), y=float(self.labels[k]))


@dataclass(frozen=True)
class FederatedDataset:
    """m agents holding n points each: ``features`` (m, n, d), ``labels`` (m, n)."""

    features: np.ndarray
    labels: np.ndarray

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def d(self) -> int:
        return self.features.shape[2]

    def point(self, j: int, i: int) -> DataPoint:
        """Point i of agent j (0-based)."""
        return DataPoint(x=self.features[j, i].copy(), y=float(self.labels[j, i]))

    def flatten(self) -> SampleBatch:
        return SampleBatch(features=self.features.reshape(-1, self.d).copy(),
                           labels=self.labels.reshape(-1).copy())

    def with_swapped(self, i: int, j: int, point: DataPoint) -> "FederatedDataset":
        """Copy of the dataset with agent j's point i replaced."""
        if not (0 <= i < self.n and 0 <= j < self.m):
            raise ValueError(f"swap index out of range: i={i} (n={self.n}), j={j} (m={self.m})")
        x = np.asarray(point.x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"swap point has dimension {x.shape}, expected ({self.d},)")
        feats = self.features.copy()
        labs = self.labels.copy()
        feats[j, i] = x
        labs[j, i] = point.y
        return FederatedDataset(features=feats, labels=labs)


def subseed(root: int, *path: int) -> int:
    """Deterministic 64-bit sub-seed for the stream identified by ``path``."""
    ss = np.random.SeedSequence((int(root),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample(spec: MixtureSpec, count: int, seed) -> SampleBatch:
    """Draw ``count`` i.i.d. points; deterministic per seed."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    d = spec.dimension
    rng = _generator(seed)
    # One (2 + d)-uniform row per point, consumed in the documented order.
    u = rng.random((count, d + 2))
    labels = (u[:, 0] < spec.class_prob).astype(np.float64)
    means = np.where(labels[:, None] == 1.0,
                     np.asarray(spec.mean1, dtype=np.float64),
                     np.asarray(spec.mean0, dtype=np.float64))
    # ndtri(0) is -inf; the 2^-53-probability zero draw is clamped away.
    features = means + spec.feature_std * ndtri(np.maximum(u[:, 1:d + 1], 2.0 ** -53))
    flip = u[:, d + 1] < spec.flip_prob
    labels[flip] = 1.0 - labels[flip]
    return SampleBatch(features=features, labels=labels)


def partition(batch: SampleBatch, m: int, n: int) -> FederatedDataset:
    """Row-major split: agent j receives points [j*n, (j+1)*n)."""
    if len(batch) != m * n:
        raise ValueError(f"cannot partition {len(batch)} points into {m} agents x {n} points")
    d = batch.features.shape[1]
    return FederatedDataset(features=batch.features.reshape(m, n, d).copy(),
                            labels=batch.labels.reshape(m, n).copy())


def fresh_swap_value(spec: MixtureSpec, sub_seed) -> DataPoint:
    """One i.i.d. replacement point drawn on its own stream."""
    return sample(spec, 1, sub_seed).point(0)
