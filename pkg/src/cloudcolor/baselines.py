"""Classical color-correction baselines: NN, KNN, HM, and AGL.

NN copies each target point's nearest source color; KNN replaces it by
the unweighted mean of the k nearest source colors; HM matches the whole
target channel distribution onto the whole source distribution; AGL is
the global linear stage of moment matching (per-channel mean and
standard deviation transfer).
"""

from __future__ import annotations

import numpy as np

from .cloud import ColorPointCloud
from .colorspace import cumulative, he_map_lut, histogram_of_values, quantize_colors
from .errors import EmptyCloud
from .spatial import SpatialIndex


def _check(source: ColorPointCloud, target: ColorPointCloud) -> None:
    if len(source) == 0 or len(target) == 0:
        raise EmptyCloud("both clouds must be non-empty")


def nn_correct(source_aligned: ColorPointCloud, target: ColorPointCloud,
               *, index: SpatialIndex | None = None,
               workers: int = 1) -> ColorPointCloud:
    """Replace each target color by its nearest source point's color."""
    _check(source_aligned, target)
    if index is None:
        index = SpatialIndex(source_aligned)
    nn_idx, _ = index.nearest_batch(target.positions, workers=workers)
    return target.with_colors(source_aligned.colors[nn_idx])


def knn_correct(source_aligned: ColorPointCloud, target: ColorPointCloud,
                k: int = 8, *, index: SpatialIndex | None = None,
                workers: int = 1) -> ColorPointCloud:
    """Replace each target color by the mean of its k nearest source colors."""
    _check(source_aligned, target)
    if k < 1:
        raise ValueError("k must be >= 1")
    if index is None:
        index = SpatialIndex(source_aligned)
    idx, _ = index.k_nearest_batch(target.positions, k, workers=workers)
    means = source_aligned.colors[idx].astype(np.float64).mean(axis=1)
    return target.with_colors(quantize_colors(means))


def hm_correct(source_aligned: ColorPointCloud, target: ColorPointCloud) -> ColorPointCloud:
    """Per-channel histogram matching of the full target onto the full source."""
    _check(source_aligned, target)
    out = target.colors.copy()
    for c in range(3):
        cdf_t = cumulative(histogram_of_values(target.colors[:, c], c))
        cdf_s = cumulative(histogram_of_values(source_aligned.colors[:, c], c))
        lut = he_map_lut(cdf_t, cdf_s)
        out[:, c] = lut[out[:, c].astype(np.int64)].astype(np.uint8)
    return target.with_colors(out)


def agl_correct(source_aligned: ColorPointCloud, target: ColorPointCloud) -> ColorPointCloud:
    """Per-channel linear map aligning target mean/std to the source's.

    A constant target channel (zero std) degenerates to a pure mean
    shift: every value becomes the rounded source mean.
    """
    _check(source_aligned, target)
    t = target.colors.astype(np.float64)
    s = source_aligned.colors.astype(np.float64)
    mu_t, mu_s = t.mean(axis=0), s.mean(axis=0)
    sd_t, sd_s = t.std(axis=0), s.std(axis=0)
    scale = np.where(sd_t > 0, np.divide(sd_s, sd_t, out=np.zeros(3), where=sd_t > 0), 0.0)
    mapped = (t - mu_t) * scale + mu_s
    return target.with_colors(quantize_colors(mapped))
