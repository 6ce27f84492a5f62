"""Correction kernels (KBI, JKHE, HE) and the grouping-based pipeline.

KBI corrects a point by a bilateral weighted mean of the signed color
differences to its valid (color-similar) nearest source neighbors.
JKHE blends the KBI correction with a histogram-equalization correction
using per-point weights derived from the mean valid-neighbor distance,
so the Moderate point closest to its references reduces exactly to KBI
and the farthest one exactly to HE.  Distant points are corrected by
histogram equalization alone over whole-cloud working sets.

All corrections are computed from a single snapshot of the input colors
and written once, so results never depend on point visitation order or
worker count.  The sequential mode instead lets later groups see the
colors written by earlier groups when rebuilding their histograms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import ColorPointCloud
from .colorspace import (
    ChannelCdf,
    cumulative,
    delta_e_array,
    he_map_lut,
    histogram_of_values,
    quantize_colors,
    rgb_array_to_lab,
)
from .errors import DegenerateDistribution, EmptyCloud, InvalidConfig
from .grouping import (
    DEFAULT_RATE_THRESHOLD,
    DEFAULT_VOTE_DISTANCE,
    GroupAssignment,
    GroupLabel,
    choose_partition,
    estimate_overlap,
    partition,
)
from .metrics import cmd as _metric_cmd
from .metrics import cpsnr as _metric_cpsnr
from .spatial import NeighborSet, SpatialIndex
from .thresholding import (
    DEFAULT_BINS,
    ThresholdSet,
    distribution_from_distances,
    otsu_three_level,
    otsu_two_level,
)

_CHUNK = 131072  # KBI batch rows per pass, keeps (rows, k, 3) scratch bounded


@dataclass(frozen=True)
class KbiParams:
    """Bilateral kernel parameters; all strictly positive."""

    k: int = 8
    sigma_d: float = 1.0
    sigma_c: float = 25.0
    delta_e_max: float = 20.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for name in ("sigma_d", "sigma_c", "delta_e_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ValidNeighborSet:
    """Neighbors surviving the CIELAB filter; never empty (fallback keeps
    the single nearest neighbor when nothing survives)."""

    target_index: int
    indices: np.ndarray
    distances: np.ndarray

    @property
    def d_avg(self) -> float:
        return float(np.mean(self.distances))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ModerateWeighting:
    """Extreme mean-neighbor distances over the Moderate group."""

    d_min: float
    d_max: float

    def weights(self, d_avg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(w1, w2) per point; w2 ramps linearly from d_min to d_max.

        A degenerate range (d_max == d_min) carries no distance signal,
        so every point falls back to pure KBI (w2 = 0).
        """
        d_avg = np.asarray(d_avg, dtype=np.float64)
        if self.d_max == self.d_min:
            w2 = np.zeros_like(d_avg)
        else:
            w2 = (d_avg - self.d_min) / (self.d_max - self.d_min)
        return 1.0 - w2, w2


@dataclass
class PipelineConfig:
    """Knobs for the grouping-based correction pipeline."""

    k: int = 8
    sigma_d: float | str = "auto"  # "auto": mean source nearest-neighbor spacing
    sigma_c: float = 25.0
    delta_e_max: float = 20.0
    t_r: float = DEFAULT_RATE_THRESHOLD
    t_d: float = DEFAULT_VOTE_DISTANCE
    bins: int = DEFAULT_BINS
    force_partition: str | None = None  # None | "bi" | "tri"
    even_weights: bool = False
    kbi_only: bool = False
    jkhe_only: bool = False
    sequential_groups: bool = False
    squared_distances: bool = False
    pooled_cpsnr: bool = False
    workers: int = 1

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidConfig("k must be >= 1")
        if self.sigma_d != "auto" and not float(self.sigma_d) > 0:
            raise InvalidConfig("sigma_d must be positive or 'auto'")
        for name in ("sigma_c", "delta_e_max", "t_d"):
            if not getattr(self, name) > 0:
                raise InvalidConfig(f"{name} must be strictly positive")
        if not 0.0 < self.t_r < 1.0:
            raise InvalidConfig("t_r must lie in (0, 1)")
        if self.bins < 2:
            raise InvalidConfig("bins must be >= 2")
        if self.force_partition not in (None, "bi", "tri"):
            raise InvalidConfig("force_partition must be None, 'bi', or 'tri'")
        if self.kbi_only and self.jkhe_only:
            raise InvalidConfig("kbi_only and jkhe_only are mutually exclusive")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")

    def echo(self, sigma_d_resolved: float) -> dict:
        return {
            "k": self.k,
            "sigma_d": sigma_d_resolved,
            "sigma_c": self.sigma_c,
            "delta_e_max": self.delta_e_max,
            "t_r": self.t_r,
            "t_d": self.t_d,
            "bins": self.bins,
            "force_partition": self.force_partition,
            "even_weights": self.even_weights,
            "kbi_only": self.kbi_only,
            "jkhe_only": self.jkhe_only,
            "sequential_groups": self.sequential_groups,
            "squared_distances": self.squared_distances,
            "pooled_cpsnr": self.pooled_cpsnr,
        }


@dataclass(frozen=True)
class CorrectionReport:
    """What the pipeline did and how the output scored."""

    partition: str
    group_sizes: tuple[int, int, int]
    thresholds: ThresholdSet | None
    overlap_votes: int
    overlap_rate: float
    params: dict
    metrics: dict


def filter_valid_neighbors(target: ColorPointCloud, source: ColorPointCloud,
                           ns: NeighborSet, delta_e_max: float) -> ValidNeighborSet:
    """Drop neighbors whose CIE76 difference to the target color exceeds
    delta_e_max; keep the nearest neighbor when the filter removes all.

    A coincident, identically-colored source point is exact ground truth
    for the target, so when such perfect references exist the valid set
    collapses to them alone; blending in farther references could only
    perturb a color that is already provably correct.  This is also what
    makes the pipeline the identity on perfectly aligned clouds.
    """
    if len(ns) == 0:
        raise ValueError("neighbor set is empty")
    lab_t = rgb_array_to_lab(target.colors[ns.target_index])
    lab_s = rgb_array_to_lab(source.colors[ns.indices])
    de = delta_e_array(lab_s, lab_t)
    perfect = (ns.distances == 0.0) & (de == 0.0)
    if perfect.any():
        keep = perfect
    else:
        keep = de <= delta_e_max
        if not keep.any():
            keep[0] = True
    return ValidNeighborSet(ns.target_index, ns.indices[keep], ns.distances[keep])


def kbi_delta(target: ColorPointCloud, source: ColorPointCloud,
              vn: ValidNeighborSet, params: KbiParams, channel: int) -> float:
    """Bilateral weighted mean of signed channel differences.

    Weights are exp of negated (distance and color) terms; computing them
    relative to the smallest exponent keeps the denominator >= 1 without
    changing the ratio.
    """
    diffs = (source.colors[vn.indices, channel].astype(np.float64)
             - np.float64(target.colors[vn.target_index, channel]))
    a = (vn.distances / params.sigma_d) ** 2 + (diffs / params.sigma_c) ** 2
    w = np.exp(a.min() - a)
    return float(np.sum(w * diffs) / np.sum(w))


def moderate_weighting(d_avgs: np.ndarray) -> ModerateWeighting:
    """Extremes of the per-point mean valid-neighbor distances."""
    d_avgs = np.asarray(d_avgs, dtype=np.float64)
    if d_avgs.size == 0:
        raise ValueError("moderate group is empty")
    return ModerateWeighting(float(d_avgs.min()), float(d_avgs.max()))


def build_he_working_sets(assignment: GroupAssignment, mode: str,
                          nearest_indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Target subset and its nearest-source multiset for an HE stage.

    mode "moderate": Close plus Moderate points; mode "distant": every
    target point.  The source side keeps one entry per target member
    (duplicates preserved).
    """
    if mode == "moderate":
        t_subset = np.nonzero(assignment.labels != GroupLabel.DISTANT)[0]
    elif mode == "distant":
        t_subset = np.arange(assignment.labels.shape[0], dtype=np.int64)
    else:
        raise ValueError(f"unknown working-set mode {mode!r}")
    return t_subset, np.asarray(nearest_indices)[t_subset]


# ---------------------------------------------------------------------------
# batch kernels

def _valid_mask(idx: np.ndarray, dist: np.ndarray, lab_t: np.ndarray,
                lab_s: np.ndarray, delta_e_max: float) -> np.ndarray:
    de = delta_e_array(lab_s[idx], lab_t[:, None, :])
    valid = de <= delta_e_max
    missing = ~valid.any(axis=1)
    valid[missing, 0] = True  # fallback: nearest neighbor survives
    perfect = (dist == 0.0) & (de == 0.0)  # see filter_valid_neighbors
    rows = perfect.any(axis=1)
    valid[rows] = perfect[rows]
    return valid


def _kbi_deltas_batch(tgt_colors: np.ndarray, src_colors: np.ndarray,
                      idx: np.ndarray, dist: np.ndarray, valid: np.ndarray,
                      params: KbiParams) -> np.ndarray:
    out = np.empty((idx.shape[0], 3), dtype=np.float64)
    dist_term = (dist / params.sigma_d) ** 2
    for c in range(3):
        diffs = src_colors[idx, c].astype(np.float64) - tgt_colors[:, None, c].astype(np.float64)
        a = dist_term + (diffs / params.sigma_c) ** 2
        a = np.where(valid, a, np.inf)
        w = np.exp(a.min(axis=1, keepdims=True) - a)  # invalid -> exp(-inf) = 0
        out[:, c] = np.sum(w * diffs, axis=1) / np.sum(w, axis=1)
    return out


class _NeighborCache:
    """k-NN queries, validity masks, and mean distances for a row subset."""

    def __init__(self, target: ColorPointCloud, source: ColorPointCloud,
                 index: SpatialIndex, params: KbiParams, workers: int):
        self.target = target
        self.source = source
        self.index = index
        self.params = params
        self.workers = workers
        self.lab_s = rgb_array_to_lab(source.colors)

    def query(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(idx, dist, valid, d_avg) for the given target rows."""
        idx, dist = self.index.k_nearest_batch(
            self.target.positions[rows], self.params.k, workers=self.workers)
        lab_t = rgb_array_to_lab(self.target.colors[rows])
        valid = _valid_mask(idx, dist, lab_t, self.lab_s, self.params.delta_e_max)
        d_avg = np.sum(dist * valid, axis=1) / np.sum(valid, axis=1)
        return idx, dist, valid, d_avg

    def kbi(self, rows: np.ndarray, idx, dist, valid) -> np.ndarray:
        deltas = np.empty((rows.shape[0], 3), dtype=np.float64)
        for start in range(0, rows.shape[0], _CHUNK):
            sl = slice(start, start + _CHUNK)
            deltas[sl] = _kbi_deltas_batch(
                self.target.colors[rows[sl]], self.source.colors,
                idx[sl], dist[sl], valid[sl], self.params)
        return deltas


def _cdfs_of(colors: np.ndarray, rows: np.ndarray) -> list[ChannelCdf]:
    return [cumulative(histogram_of_values(colors[rows, c], c)) for c in range(3)]


def _he_offsets(luts: list[np.ndarray], colors: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """f_HE per row and channel: mapped value minus current value."""
    out = np.empty((rows.shape[0], 3), dtype=np.float64)
    for c in range(3):
        values = colors[rows, c].astype(np.int64)
        out[:, c] = luts[c][values] - values
    return out


# ---------------------------------------------------------------------------
# public per-group operations

def _require_index(source: ColorPointCloud, index: SpatialIndex | None) -> SpatialIndex:
    return index if index is not None else SpatialIndex(source)


def correct_close(target: ColorPointCloud, source: ColorPointCloud,
                  assignment: GroupAssignment, params: KbiParams,
                  *, index: SpatialIndex | None = None,
                  workers: int = 1) -> np.ndarray:
    """KBI-corrected colors for the Close group; other rows pass through."""
    index = _require_index(source, index)
    cache = _NeighborCache(target, source, index, params, workers)
    out = target.colors.copy()
    rows = assignment.indices_of(GroupLabel.CLOSE)
    if rows.size:
        idx, dist, valid, _ = cache.query(rows)
        deltas = cache.kbi(rows, idx, dist, valid)
        out[rows] = quantize_colors(target.colors[rows].astype(np.float64) + deltas)
    return out


def correct_moderate(target: ColorPointCloud, source: ColorPointCloud,
                     assignment: GroupAssignment, params: KbiParams,
                     *, index: SpatialIndex | None = None,
                     weighting: ModerateWeighting | None = None,
                     cdfs: tuple[list[ChannelCdf], list[ChannelCdf]] | None = None,
                     even_weights: bool = False,
                     workers: int = 1) -> np.ndarray:
    """JKHE-corrected colors for the Moderate group; other rows pass through.

    When not supplied, the equalization CDFs are built over Close plus
    Moderate target points and the multiset of their nearest source
    points, and the weighting from the group's mean neighbor distances.
    """
    index = _require_index(source, index)
    cache = _NeighborCache(target, source, index, params, workers)
    out = target.colors.copy()
    rows = assignment.indices_of(GroupLabel.MODERATE)
    if rows.size == 0:
        return out
    idx, dist, valid, d_avg = cache.query(rows)
    if cdfs is None:
        nn_idx, _ = index.nearest_batch(target.positions, workers=workers)
        t_sub, s_sub = build_he_working_sets(assignment, "moderate", nn_idx)
        cdfs = (_cdfs_of(target.colors, t_sub), _cdfs_of(source.colors, s_sub))
    cdf_t, cdf_s = cdfs
    luts = [he_map_lut(cdf_t[c], cdf_s[c]) for c in range(3)]
    if even_weights:
        w1 = np.full(rows.shape[0], 0.5)
        w2 = np.full(rows.shape[0], 0.5)
    else:
        if weighting is None:
            weighting = moderate_weighting(d_avg)
        w1, w2 = weighting.weights(d_avg)
    f_kbi = cache.kbi(rows, idx, dist, valid)
    f_he = _he_offsets(luts, target.colors, rows)
    blended = (target.colors[rows].astype(np.float64)
               + w1[:, None] * f_kbi + w2[:, None] * f_he)
    out[rows] = quantize_colors(blended)
    return out


def correct_distant(target: ColorPointCloud, source: ColorPointCloud,
                    assignment: GroupAssignment,
                    *, index: SpatialIndex | None = None,
                    cdfs: tuple[list[ChannelCdf], list[ChannelCdf]] | None = None,
                    workers: int = 1) -> np.ndarray:
    """HE-corrected colors for the Distant group; other rows pass through.

    CDFs default to the whole target cloud against the multiset of every
    point's nearest source neighbor.
    """
    index = _require_index(source, index)
    out = target.colors.copy()
    rows = assignment.indices_of(GroupLabel.DISTANT)
    if rows.size == 0:
        return out
    if cdfs is None:
        nn_idx, _ = index.nearest_batch(target.positions, workers=workers)
        t_sub, s_sub = build_he_working_sets(assignment, "distant", nn_idx)
        cdfs = (_cdfs_of(target.colors, t_sub), _cdfs_of(source.colors, s_sub))
    cdf_t, cdf_s = cdfs
    for c in range(3):
        lut = he_map_lut(cdf_t[c], cdf_s[c])
        out[rows, c] = lut[out[rows, c].astype(np.int64)].astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# pipeline

def resolve_sigma_d(source: ColorPointCloud, index: SpatialIndex | None = None,
                    workers: int = 1) -> float:
    """Data-adaptive distance deviation: mean source nearest-neighbor
    spacing (excluding self), or 1.0 when that is degenerate."""
    if len(source) < 2:
        return 1.0
    index = _require_index(source, index)
    _, dist = index.k_nearest_batch(source.positions, 2, workers=workers)
    mean_nn = float(dist[:, 1].mean())
    return mean_nn if mean_nn > 0 else 1.0


def _resolve_thresholds(dist, kind: str) -> tuple[str, ThresholdSet | None]:
    # Degradation chain: tri -> bi -> single as Otsu preconditions fail.
    if kind == "tri":
        try:
            return "tri", otsu_three_level(dist)
        except DegenerateDistribution:
            kind = "bi"
    if kind == "bi":
        try:
            return "bi", otsu_two_level(dist)
        except DegenerateDistribution:
            return "single", None
    raise ValueError(f"unknown partition kind {kind!r}")


def run_pipeline(source: ColorPointCloud, target: ColorPointCloud,
                 config: PipelineConfig | None = None
                 ) -> tuple[ColorPointCloud, CorrectionReport]:
    """Grouping-based hybrid correction of the target against the source.

    Estimates the overlap rate, picks the bi- or tri-group partition,
    thresholds the nearest-distance distribution, corrects each group
    with its kernel, and reports thresholds, group sizes, and metrics.
    Input clouds are never mutated; output point order equals the
    target's.
    """
    config = config if config is not None else PipelineConfig()
    config.validate()
    if len(source) == 0 or len(target) == 0:
        raise EmptyCloud("both clouds must be non-empty")

    index = SpatialIndex(source)
    workers = config.workers
    nn_idx, nn_dist = index.nearest_batch(target.positions, workers=workers)
    dist = distribution_from_distances(nn_dist, config.bins, config.squared_distances)
    overlap = estimate_overlap(dist, config.t_d)
    kind = config.force_partition or choose_partition(overlap, config.t_r)
    kind, thresholds = _resolve_thresholds(dist, kind)
    assignment = partition(dist, kind, thresholds)

    sigma_d = (resolve_sigma_d(source, index, workers)
               if config.sigma_d == "auto" else float(config.sigma_d))
    params = KbiParams(config.k, sigma_d, config.sigma_c, config.delta_e_max)
    cache = _NeighborCache(target, source, index, params, workers)

    labels = assignment.labels
    close_rows = np.nonzero(labels == GroupLabel.CLOSE)[0]
    mod_rows = np.nonzero(labels == GroupLabel.MODERATE)[0]
    dist_rows = np.nonzero(labels == GroupLabel.DISTANT)[0]
    if config.kbi_only:
        close_rows = np.nonzero(labels != GroupLabel.DISTANT)[0]
        mod_rows = np.empty(0, dtype=np.int64)
    elif config.jkhe_only:
        mod_rows = np.nonzero(labels != GroupLabel.DISTANT)[0]
        close_rows = np.empty(0, dtype=np.int64)

    base = target.colors  # original snapshot; every single-pass read uses it
    work = base.copy()

    if close_rows.size:
        idx, d, valid, _ = cache.query(close_rows)
        deltas = cache.kbi(close_rows, idx, d, valid)
        work[close_rows] = quantize_colors(base[close_rows].astype(np.float64) + deltas)

    if mod_rows.size:
        cdf_base = work if config.sequential_groups else base
        t_sub, s_sub = build_he_working_sets(assignment, "moderate", nn_idx)
        cdf_t = _cdfs_of(cdf_base, t_sub)
        cdf_s = _cdfs_of(source.colors, s_sub)
        luts = [he_map_lut(cdf_t[c], cdf_s[c]) for c in range(3)]
        idx, d, valid, d_avg = cache.query(mod_rows)
        if config.even_weights:
            w1 = np.full(mod_rows.shape[0], 0.5)
            w2 = np.full(mod_rows.shape[0], 0.5)
        else:
            w1, w2 = moderate_weighting(d_avg).weights(d_avg)
        f_kbi = cache.kbi(mod_rows, idx, d, valid)
        f_he = _he_offsets(luts, base, mod_rows)
        blended = (base[mod_rows].astype(np.float64)
                   + w1[:, None] * f_kbi + w2[:, None] * f_he)
        work[mod_rows] = quantize_colors(blended)

    if dist_rows.size:
        cdf_base = work if config.sequential_groups else base
        t_sub, s_sub = build_he_working_sets(assignment, "distant", nn_idx)
        cdf_t = _cdfs_of(cdf_base, t_sub)
        cdf_s = _cdfs_of(source.colors, s_sub)
        for c in range(3):
            lut = he_map_lut(cdf_t[c], cdf_s[c])
            work[dist_rows, c] = lut[base[dist_rows, c].astype(np.int64)].astype(np.uint8)

    corrected = target.with_colors(work)
    report = CorrectionReport(
        partition=kind,
        group_sizes=assignment.group_sizes,
        thresholds=thresholds,
        overlap_votes=overlap.votes,
        overlap_rate=overlap.rate,
        params=config.echo(sigma_d),
        metrics={
            "cmd": _metric_cmd(corrected, source),
            "cpsnr": _metric_cpsnr(corrected, source, index,
                                   pooled=config.pooled_cpsnr, workers=workers),
        },
    )
    return corrected, report
