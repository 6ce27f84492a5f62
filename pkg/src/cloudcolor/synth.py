"""Seeded synthetic point cloud pairs with known injected distortion.

The source cloud samples a gently curved surface patch carrying a
smooth, textured color field.  The target is built from two parts: an
"overlap" part that re-observes a random subset of source points with a
small position jitter (a minority of points gets a several-times larger
jitter, which is what later populates the Moderate proximity group),
and an "extension" part sampling one full field period of fresh surface
beyond the source footprint.  Target colors are the true colors put
through `gain * c + bias + N(0, noise)`, rounded and clamped.

Everything is driven by one numpy Generator seed, so identical specs
produce bitwise identical pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import ColorPointCloud
from .colorspace import quantize_colors
from .errors import InvalidSpec

# Share of overlap points drawn with the larger jitter, and its scale
# relative to the base jitter.  Base-jitter points stay well inside the
# default vote distance (0.003 m); wide-jitter points fall outside it.
_WIDE_JITTER_SHARE = 0.15
_WIDE_JITTER_FACTOR = 6.0


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for one synthetic pair."""

    points: int = 5000
    overlap: float = 0.7       # fraction of target points re-observing source points
    bias: float = 0.0          # added to every channel of every target color
    gain: float = 1.0          # multiplies every target color before the bias
    noise: float = 0.0         # per-channel gaussian sigma, color levels
    seed: int = 0
    spacing: float = 0.004     # mean source sampling spacing, meters
    jitter: float = 0.0006     # per-axis sigma of the base alignment jitter, meters
    texture: float = 1.0       # richness of the color field's variable part

    def validate(self) -> None:
        if self.points < 1:
            raise InvalidSpec("points must be >= 1")
        if not 0.0 <= self.overlap <= 1.0:
            raise InvalidSpec("overlap must lie in [0, 1]")
        if self.gain <= 0:
            raise InvalidSpec("gain must be positive")
        if self.noise < 0:
            raise InvalidSpec("noise must be non-negative")
        if self.spacing <= 0 or self.jitter < 0:
            raise InvalidSpec("spacing must be positive and jitter non-negative")
        if not 0.0 <= self.texture <= 2.0:
            raise InvalidSpec("texture must lie in [0, 2]")
        if abs(self.bias) > 255:
            raise InvalidSpec("bias beyond +-255 leaves no signal")


_TAU = 2.0 * np.pi


def _surface_height(u: np.ndarray, v: np.ndarray, side: float) -> np.ndarray:
    return side * (0.08 * np.sin(_TAU * u) * np.cos(1.9 * v)
                   + 0.03 * np.sin(5.1 * v + 1.0))


def _color_field(u: np.ndarray, v: np.ndarray, texture: float) -> np.ndarray:
    """True surface colors: a constant base plus product-form texture.

    Every variable term is a product of periodic factors with full
    periods over u in (0, 1] and (1, 2], each factor zero-mean.  Two
    consequences: the extension strip carries the same color statistics
    as the source footprint, and any narrow boundary strip of sources is
    unbiased too (its frozen u-factor multiplies a zero-mean v-factor).
    `texture` scales the variable part: low values mimic flat content
    like bare walls, high values richly textured surfaces.
    """
    r = 128.0 + texture * (
        26.0 * np.sin(_TAU * 9.0 * u + 1.7) * np.cos(_TAU * 7.0 * v)
        + 9.0 * np.sin(_TAU * u) * np.sin(_TAU * 2.0 * v + 0.8))
    g = 126.0 + texture * (
        26.0 * np.cos(_TAU * 8.0 * u + 0.6) * np.sin(_TAU * 6.0 * v + 1.0)
        + 9.0 * np.sin(_TAU * 2.0 * u + 0.5) * np.cos(_TAU * v))
    b = 131.0 + texture * (
        26.0 * np.sin(_TAU * 7.0 * u + 2.9) * np.sin(_TAU * 9.0 * v + 0.3)
        + 9.0 * np.cos(_TAU * u + 1.1) * np.sin(_TAU * v))
    return np.stack([r, g, b], axis=-1)


def generate_pair(spec: SynthSpec) -> tuple[ColorPointCloud, ColorPointCloud, dict]:
    """Build (source, target, truth) for the given spec.

    The truth dict records the injected distortion and, under
    "parent_index", which source point each target point re-observes
    (-1 for extension points).
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.points
    side = spec.spacing * float(np.sqrt(n))

    u_src = rng.uniform(0.0, 1.0, n)
    v_src = rng.uniform(0.0, 1.0, n)
    x = u_src * side
    y = v_src * side
    z = _surface_height(u_src, v_src, side)
    src_positions = np.column_stack([x, y, z])
    src_colors = quantize_colors(_color_field(u_src, v_src, spec.texture))
    source = ColorPointCloud(src_positions, src_colors)

    n_overlap = int(round(spec.overlap * n))
    n_ext = n - n_overlap

    parts_pos, parts_col, parts_parent = [], [], []
    if n_overlap:
        parents = rng.choice(n, size=n_overlap, replace=False)
        sigma = np.full(n_overlap, spec.jitter)
        wide = rng.random(n_overlap) < _WIDE_JITTER_SHARE
        sigma[wide] *= _WIDE_JITTER_FACTOR
        offsets = rng.normal(0.0, 1.0, (n_overlap, 3)) * sigma[:, None]
        parts_pos.append(src_positions[parents] + offsets)
        parts_col.append(src_colors[parents].astype(np.float64))
        parts_parent.append(parents.astype(np.int64))
    if n_ext:
        # one full field period, whatever the count: the extension then has
        # the same color statistics as the source footprint
        u_ext = rng.uniform(1.0, 2.0, n_ext)
        v_ext = rng.uniform(0.0, 1.0, n_ext)
        ext_positions = np.column_stack([
            u_ext * side, v_ext * side, _surface_height(u_ext, v_ext, side)])
        parts_pos.append(ext_positions)
        parts_col.append(quantize_colors(_color_field(u_ext, v_ext, spec.texture)).astype(np.float64))
        parts_parent.append(np.full(n_ext, -1, dtype=np.int64))

    tgt_positions = np.concatenate(parts_pos)
    true_colors = np.concatenate(parts_col)
    parent_index = np.concatenate(parts_parent)

    distorted = spec.gain * true_colors + spec.bias
    if spec.noise > 0:
        distorted = distorted + rng.normal(0.0, spec.noise, distorted.shape)
    tgt_colors = quantize_colors(distorted)

    order = rng.permutation(tgt_positions.shape[0])
    target = ColorPointCloud(tgt_positions[order], tgt_colors[order])

    truth = {
        "points": spec.points,
        "overlap": spec.overlap,
        "bias": spec.bias,
        "gain": spec.gain,
        "noise": spec.noise,
        "seed": spec.seed,
        "spacing": spec.spacing,
        "jitter": spec.jitter,
        "texture": spec.texture,
        "source_count": len(source),
        "target_count": len(target),
        "overlap_count": n_overlap,
        "extension_count": n_ext,
        "parent_index": parent_index[order],
    }
    return source, target, truth
