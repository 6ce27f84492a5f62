"""sRGB to CIELAB conversion, CIE76 color difference, and the per-channel
histogram/CDF machinery shared by histogram equalization and matching.

Lab uses the D65 illuminant with the 2-degree observer; the white point
is taken as the exact row sums of the sRGB matrix so (255,255,255) maps
to L=100, a=0, b=0.  The equalization map compares cumulative counts of
two sets with different cardinalities; the comparison is done with
integer cross-multiplication, which equals comparing CDFs normalized to
[0, 1] but never rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud import ColorPointCloud
from .errors import EmptyDistribution, IndexOutOfRange

CHANNEL_NAMES = ("red", "green", "blue")

# IEC 61966-2-1 sRGB -> XYZ (D65), full precision.
_SRGB_TO_XYZ = np.array([
    [0.41239079926595934, 0.357584339383878, 0.1804807884018343],
    [0.21263900587151027, 0.715168678767756, 0.07219231536073371],
    [0.01933081871559182, 0.11919477979462598, 0.9505321522496607],
])
_WHITE = _SRGB_TO_XYZ.sum(axis=1)  # reference white = converted (1, 1, 1)

_DELTA = 6.0 / 29.0
_DELTA_CUBED = _DELTA ** 3


class LabColor(NamedTuple):
    """CIE 1976 L*a*b* triple (D65, 2-degree observer)."""

    L: float
    a: float
    b: float


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA_CUBED, np.cbrt(t), t / (3.0 * _DELTA ** 2) + 4.0 / 29.0)


def rgb_array_to_lab(colors: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (..., 3) in [0, 255] -> CIELAB (..., 3) float64."""
    rgb = np.asarray(colors, dtype=np.float64) / 255.0
    linear = _srgb_to_linear(rgb)
    xyz = linear @ _SRGB_TO_XYZ.T
    f = _lab_f(xyz / _WHITE)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def rgb_to_lab(r: int, g: int, b: int) -> LabColor:
    """Convert one 8-bit sRGB triple to CIELAB."""
    for name, v in (("r", r), ("g", g), ("b", b)):
        if not 0 <= v <= 255:
            raise ValueError(f"channel {name} out of range: {v}")
    lab = rgb_array_to_lab(np.array([r, g, b], dtype=np.float64))
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def delta_e(x: LabColor, y: LabColor) -> float:
    """CIE76 color difference: Euclidean distance in Lab space."""
    return float(np.sqrt((x.L - y.L) ** 2 + (x.a - y.a) ** 2 + (x.b - y.b) ** 2))


def delta_e_array(lab_x: np.ndarray, lab_y: np.ndarray) -> np.ndarray:
    """Elementwise CIE76 difference between two stacks of Lab triples."""
    diff = np.asarray(lab_x, dtype=np.float64) - np.asarray(lab_y, dtype=np.float64)
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class ChannelHistogram:
    """256-bin count histogram of one RGB channel over a point subset."""

    channel: int
    bins: np.ndarray  # (256,) int64

    @property
    def total(self) -> int:
        return int(self.bins.sum())


@dataclass(frozen=True)
class ChannelCdf:
    """Cumulative counts of a ChannelHistogram; cum[255] == total."""

    channel: int
    cum: np.ndarray  # (256,) int64 non-decreasing

    @property
    def total(self) -> int:
        return int(self.cum[-1])


def build_histogram(cloud: ColorPointCloud, subset, channel: int) -> ChannelHistogram:
    """Count channel values over the given point indices.

    `subset` may be None (whole cloud) or an integer index array; repeated
    indices are counted repeatedly, so multisets of reference points work
    unchanged.
    """
    if channel not in (0, 1, 2):
        raise ValueError(f"channel must be 0, 1, or 2, got {channel}")
    values = cloud.colors[:, channel]
    if subset is not None:
        subset = np.asarray(subset, dtype=np.int64)
        if subset.size and (subset.min() < 0 or subset.max() >= cloud.count):
            raise IndexOutOfRange("subset index outside the cloud")
        values = values[subset]
    bins = np.bincount(values, minlength=256).astype(np.int64)
    return ChannelHistogram(channel, bins)


def histogram_of_values(values: np.ndarray, channel: int = 0) -> ChannelHistogram:
    """Histogram of raw 8-bit channel values (no cloud involved)."""
    values = np.asarray(values)
    bins = np.bincount(values.astype(np.int64), minlength=256).astype(np.int64)
    if bins.shape[0] > 256:
        raise ValueError("channel values must be in [0, 255]")
    return ChannelHistogram(channel, bins)


def cumulative(histogram: ChannelHistogram) -> ChannelCdf:
    """Prefix sums of the histogram bins."""
    return ChannelCdf(histogram.channel, np.cumsum(histogram.bins, dtype=np.int64))


def he_map_lut(cdf_target: ChannelCdf, cdf_source: ChannelCdf) -> np.ndarray:
    """Equalization lookup table: value c -> the smallest u whose source
    cumulative share reaches the target cumulative share of c.

    Cross-multiplied integer comparison, exact for any pair of totals.
    """
    nt, ns = cdf_target.total, cdf_source.total
    if nt == 0 or ns == 0:
        raise EmptyDistribution("both cumulative histograms must be non-empty")
    source_scaled = cdf_source.cum * nt  # non-decreasing
    target_scaled = cdf_target.cum * ns
    lut = np.searchsorted(source_scaled, target_scaled, side="left")
    return np.minimum(lut, 255).astype(np.int64)


def he_map(cdf_target: ChannelCdf, cdf_source: ChannelCdf, c: int) -> int:
    """Mapped value u for one channel value c (see he_map_lut)."""
    if not 0 <= c <= 255:
        raise ValueError(f"channel value out of range: {c}")
    return int(he_map_lut(cdf_target, cdf_source)[c])


def quantize_colors(values: np.ndarray) -> np.ndarray:
    """Round half away from zero, clamp to [0, 255], return uint8."""
    values = np.asarray(values, dtype=np.float64)
    rounded = np.trunc(values + np.copysign(0.5, values))
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)
