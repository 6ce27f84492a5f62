"""Color point cloud container and rigid transforms.

A cloud is a pair of index-aligned arrays: positions in meters (float64)
and 8-bit RGB colors.  Vertex order is authoritative; every per-point
result elsewhere in the library aligns by index.  Instances are
immutable (the wrapped arrays are marked read-only) so they can be
shared freely between passes and threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTransform

_ORTHO_TOL = 1e-6


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ColorPointCloud:
    """Positions (n, 3) float64 in meters plus colors (n, 3) uint8."""

    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (n, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions contain NaN or Inf")
        col = np.asarray(self.colors)
        if col.shape != pos.shape:
            raise ValueError(f"colors must match positions shape, got {col.shape}")
        if col.dtype != np.uint8:
            if not np.issubdtype(col.dtype, np.integer):
                raise ValueError("colors must be integers")
            if col.size and (col.min() < 0 or col.max() > 255):
                raise ValueError("color channel values must be in [0, 255]")
            col = col.astype(np.uint8)
        object.__setattr__(self, "positions", _as_readonly(pos))
        object.__setattr__(self, "colors", _as_readonly(col))

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def __len__(self) -> int:
        return self.count

    def with_colors(self, colors: np.ndarray) -> "ColorPointCloud":
        """New cloud with the same positions and replaced colors."""
        return ColorPointCloud(self.positions, colors)

    def equal_to(self, other: "ColorPointCloud") -> bool:
        """Bitwise equality of positions and colors."""
        return (
            self.positions.shape == other.positions.shape
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.colors, other.colors)
        )


@dataclass(frozen=True)
class RigidTransform:
    """4x4 row-major rigid transform: orthonormal rotation, +1 determinant."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidTransform(f"expected a 4x4 matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidTransform("matrix contains NaN or Inf")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=_ORTHO_TOL):
            raise InvalidTransform("bottom row must be (0, 0, 0, 1)")
        r = m[:3, :3]
        if not np.allclose(r @ r.T, np.eye(3), atol=_ORTHO_TOL):
            raise InvalidTransform("rotation block is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise InvalidTransform("rotation block determinant must be +1")
        object.__setattr__(self, "matrix", _as_readonly(m))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(4))

    @classmethod
    def from_rotation_translation(cls, rotation: np.ndarray, translation: np.ndarray) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = rotation
        m[:3, 3] = translation
        return cls(m)

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]


def apply_transform(cloud: ColorPointCloud, transform: RigidTransform) -> ColorPointCloud:
    """Map positions through the rigid transform; colors are untouched."""
    moved = cloud.positions @ transform.rotation.T + transform.translation
    return ColorPointCloud(moved, cloud.colors)
