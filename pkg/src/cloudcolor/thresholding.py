"""Two- and three-level Otsu thresholding over nearest-neighbor distances.

Otsu operates on a binned view of the continuous distance distribution;
chosen cut positions are mapped back to distance units (the upper edge
of the last bin of a class), while group membership elsewhere compares
raw per-point distances against those thresholds.  The search maximizes
the between-class criterion sum(S_k^2 / W_k) over class index sums S_k
and masses W_k, which ranks cuts identically to the between-class
variance; terms are combined left to right so an independent scalar
reimplementation reproduces results bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import ColorPointCloud
from .errors import DegenerateDistribution, EmptyCloud

DEFAULT_BINS = 1024


@dataclass(frozen=True)
class DistanceDistribution:
    """Per-target nearest-source distances plus their binned histogram.

    `distances` is index-aligned with the target cloud.  When `squared`
    is true the stored values are squared Euclidean distances and every
    threshold derived from this distribution lives in squared units.
    """

    distances: np.ndarray  # (n,) float64 >= 0
    bins: np.ndarray       # (B,) int64 counts
    bin_width: float
    max_distance: float
    squared: bool = False

    @property
    def count(self) -> int:
        return self.distances.shape[0]


@dataclass(frozen=True)
class ThresholdSet:
    """One cut (two_level, t_b) or an ordered pair (three_level, t1 < t2)."""

    kind: str
    t_b: float | None = None
    t1: float | None = None
    t2: float | None = None

    def __post_init__(self):
        if self.kind == "two_level":
            if self.t_b is None or self.t1 is not None or self.t2 is not None:
                raise ValueError("two_level set carries exactly t_b")
        elif self.kind == "three_level":
            if self.t_b is not None or self.t1 is None or self.t2 is None:
                raise ValueError("three_level set carries exactly (t1, t2)")
            if not self.t1 < self.t2:
                raise ValueError("three_level thresholds must satisfy t1 < t2")
        else:
            raise ValueError(f"unknown threshold kind {self.kind!r}")


def distribution_from_distances(distances: np.ndarray, bins: int = DEFAULT_BINS,
                                squared: bool = False) -> DistanceDistribution:
    """Bin already-computed nearest distances over [0, max]."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    distances = np.asarray(distances, dtype=np.float64)
    if distances.size == 0:
        raise EmptyCloud("no distances to bin")
    if squared:
        distances = distances * distances
    max_distance = float(distances.max())
    width = max_distance / bins if max_distance > 0 else 1.0
    which = np.minimum(np.floor(distances / width).astype(np.int64), bins - 1)
    counts = np.bincount(which, minlength=bins).astype(np.int64)
    return DistanceDistribution(distances, counts, width, max_distance, squared)


def build_distance_distribution(target: ColorPointCloud, index, bins: int = DEFAULT_BINS,
                                *, squared: bool = False,
                                workers: int = 1) -> DistanceDistribution:
    """Nearest-source distance of every target point, binned over [0, max]."""
    if len(target) == 0:
        raise EmptyCloud("target cloud is empty")
    _, distances = index.nearest_batch(target.positions, workers=workers)
    return distribution_from_distances(distances, bins, squared)


def _class_stats(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Exact while totals stay below 2^53: counts and index sums are
    # integers, so prefix sums in float64 carry no rounding.
    w = np.cumsum(counts, dtype=np.int64).astype(np.float64)
    s = np.cumsum(counts * np.arange(counts.shape[0], dtype=np.int64),
                  dtype=np.int64).astype(np.float64)
    return w, s


def otsu_two_level(dist: DistanceDistribution) -> ThresholdSet:
    """Single cut maximizing the two-class between-class criterion.

    Ties resolve to the smallest threshold.  Raises DegenerateDistribution
    when fewer than two bins are occupied.
    """
    counts = dist.bins
    if int(np.count_nonzero(counts)) < 2:
        raise DegenerateDistribution("need at least 2 occupied bins")
    w, s = _class_stats(counts)
    w_total, s_total = w[-1], s[-1]
    w1 = w[:-1]
    s1 = s[:-1]
    w2 = w_total - w1
    s2 = s_total - s1
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = s1 * s1 / w1 + s2 * s2 / w2
    crit[(w1 == 0) | (w2 == 0)] = -np.inf
    cut = int(np.argmax(crit))  # first max = smallest threshold
    return ThresholdSet("two_level", t_b=(cut + 1) * dist.bin_width)


def otsu_three_level(dist: DistanceDistribution) -> ThresholdSet:
    """Cut pair (t1 < t2) maximizing the three-class criterion.

    Exhaustive O(B^2) scan over bin-edge pairs; ties resolve to the
    lexicographically smallest pair.  Raises DegenerateDistribution when
    fewer than three bins are occupied.
    """
    counts = dist.bins
    if int(np.count_nonzero(counts)) < 3:
        raise DegenerateDistribution("need at least 3 occupied bins")
    w, s = _class_stats(counts)
    w_total, s_total = w[-1], s[-1]
    wc = w[:-1]  # cumulative stats at each candidate cut
    sc = s[:-1]
    w1 = wc[:, None]
    s1 = sc[:, None]
    w2 = wc[None, :] - w1
    s2 = sc[None, :] - s1
    w3 = w_total - wc[None, :]
    s3 = s_total - sc[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = s1 * s1 / w1 + s2 * s2 / w2 + s3 * s3 / w3
    feasible = (w1 > 0) & (w2 > 0) & (w3 > 0)  # implies cut1 < cut2
    crit = np.where(feasible, crit, -np.inf)
    flat = int(np.argmax(crit))  # row-major first max = lexicographic smallest pair
    cut1, cut2 = divmod(flat, crit.shape[1])
    return ThresholdSet(
        "three_level",
        t1=(cut1 + 1) * dist.bin_width,
        t2=(cut2 + 1) * dist.bin_width,
    )
