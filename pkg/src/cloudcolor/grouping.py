"""Overlap-rate estimation and proximity grouping of target points.

Every target point is labeled Close, Moderate, or Distant from its
nearest-source distance alone.  The overlap rate decides between the
bi-group partition (no Distant group) and the tri-group partition; a
rate at or below the threshold selects bi.  Points sitting exactly on a
threshold go to the nearer (lower) group.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .thresholding import DistanceDistribution, ThresholdSet

DEFAULT_RATE_THRESHOLD = 0.45   # overlap share separating bi from tri
DEFAULT_VOTE_DISTANCE = 0.003   # meters


class GroupLabel(IntEnum):
    CLOSE = 0
    MODERATE = 1
    DISTANT = 2


@dataclass(frozen=True)
class OverlapEstimate:
    """Votes (nearest distance strictly under t_d) and their share."""

    votes: int
    rate: float
    t_d: float


@dataclass(frozen=True)
class GroupAssignment:
    """Per-target labels plus the thresholds that produced them."""

    labels: np.ndarray  # (n,) int8 of GroupLabel values
    kind: str           # "bi" | "tri" | "single"
    thresholds: ThresholdSet | None

    @property
    def group_sizes(self) -> tuple[int, int, int]:
        return (
            int(np.count_nonzero(self.labels == GroupLabel.CLOSE)),
            int(np.count_nonzero(self.labels == GroupLabel.MODERATE)),
            int(np.count_nonzero(self.labels == GroupLabel.DISTANT)),
        )

    def indices_of(self, label: GroupLabel) -> np.ndarray:
        return np.nonzero(self.labels == label)[0]


def estimate_overlap(dist: DistanceDistribution, t_d: float = DEFAULT_VOTE_DISTANCE) -> OverlapEstimate:
    """Fraction of target points whose nearest source lies within t_d."""
    if t_d <= 0:
        raise ValueError("t_d must be positive")
    threshold = t_d * t_d if dist.squared else t_d
    votes = int(np.count_nonzero(dist.distances < threshold))
    return OverlapEstimate(votes, votes / dist.count, t_d)


def choose_partition(overlap: OverlapEstimate, t_r: float = DEFAULT_RATE_THRESHOLD) -> str:
    """"bi" when the rate is at or below t_r, "tri" otherwise."""
    if not 0.0 < t_r < 1.0:
        raise ValueError("t_r must lie in (0, 1)")
    return "bi" if overlap.rate <= t_r else "tri"


def partition(dist: DistanceDistribution, kind: str,
              thresholds: ThresholdSet | None) -> GroupAssignment:
    """Label every target point from its distance and the thresholds."""
    d = dist.distances
    labels = np.zeros(d.shape[0], dtype=np.int8)
    if kind == "single":
        return GroupAssignment(labels, "single", None)
    if kind == "bi":
        if thresholds is None or thresholds.kind != "two_level":
            raise ValueError("bi partition needs a two_level ThresholdSet")
        labels[d > thresholds.t_b] = GroupLabel.MODERATE
        return GroupAssignment(labels, "bi", thresholds)
    if kind == "tri":
        if thresholds is None or thresholds.kind != "three_level":
            raise ValueError("tri partition needs a three_level ThresholdSet")
        labels[d > thresholds.t1] = GroupLabel.MODERATE
        labels[d > thresholds.t2] = GroupLabel.DISTANT
        return GroupAssignment(labels, "tri", thresholds)
    raise ValueError(f"unknown partition kind {kind!r}")
