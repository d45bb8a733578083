"""Terrain, obstacles, and the geometric queries the rest of the system relies on.

The world is 2.5D: a gridded heightmap plus vertical cylinder obstacles.
Everything here is immutable after construction and all queries are pure,
so an Environment can be shared freely between threads or processes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter


class OutOfTerrainError(ValueError):
    """Raised when a query point lies outside the heightmap extent."""


@dataclass(frozen=True)
class Terrain:
    """Row-major heightmap. x runs along columns, y along rows."""

    origin: tuple[float, float]
    cell_size: float
    heights: np.ndarray  # shape (rows, cols), meters

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValueError("heights must be a 2D grid with at least 2x2 nodes")
        if not np.all(np.isfinite(h)):
            raise ValueError("heights must be finite")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        object.__setattr__(self, "heights", h)
        h.flags.writeable = False

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) covered by the grid."""
        ox, oy = self.origin
        return (ox, oy,
                ox + (self.cols - 1) * self.cell_size,
                oy + (self.rows - 1) * self.cell_size)


@dataclass(frozen=True)
class Obstacle:
    """Vertical cylinder. Its cross-section at any height in [base, top]
    is the disk (center, radius)."""

    id: str
    center: tuple[float, float]
    radius: float
    base_height: float
    top_height: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"obstacle {self.id}: radius must be positive")
        if not self.top_height > self.base_height:
            raise ValueError(f"obstacle {self.id}: top_height must exceed base_height")

    def spans(self, z: float) -> bool:
        # Closed interval on both ends: boundary altitudes count as blocked.
        return self.base_height <= z <= self.top_height


@dataclass(frozen=True)
class Environment:
    terrain: Terrain
    obstacles: tuple[Obstacle, ...]
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        lo, hi = self.bounds
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("bounds min must be strictly below bounds max on every axis")
        for ob in self.obstacles:
            x, y = ob.center
            if not (lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]):
                raise ValueError(f"obstacle {ob.id} center outside horizontal bounds")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        lo, hi = self.bounds
        return bool(np.all(p >= np.asarray(lo)) and np.all(p <= np.asarray(hi)))

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)


def ground_height(env: Environment, p) -> float:
    """Bilinearly interpolated terrain elevation under the horizontal point p.

    Exact at grid nodes and continuous across cell boundaries. Points outside
    the grid extent raise OutOfTerrainError rather than extrapolating.
    """
    return float(ground_height_batch(env, np.asarray(p, dtype=float)[:2][None, :])[0])


def ground_height_batch(env: Environment, pts: np.ndarray) -> np.ndarray:
    """Vectorized ground_height for an (N, 2)-or-wider array of points."""
    t = env.terrain
    pts = np.asarray(pts, dtype=float)
    gx = (pts[:, 0] - t.origin[0]) / t.cell_size
    gy = (pts[:, 1] - t.origin[1]) / t.cell_size
    eps = 1e-9  # tolerate float fuzz exactly on the border
    if np.any(gx < -eps) or np.any(gx > t.cols - 1 + eps) or \
       np.any(gy < -eps) or np.any(gy > t.rows - 1 + eps):
        raise OutOfTerrainError("point outside terrain extent")
    gx = np.clip(gx, 0.0, t.cols - 1)
    gy = np.clip(gy, 0.0, t.rows - 1)
    i = np.minimum(gy.astype(int), t.rows - 2)
    j = np.minimum(gx.astype(int), t.cols - 2)
    fy = gy - i
    fx = gx - j
    h = t.heights
    return (h[i, j] * (1 - fx) * (1 - fy)
            + h[i, j + 1] * fx * (1 - fy)
            + h[i + 1, j] * (1 - fx) * fy
            + h[i + 1, j + 1] * fx * fy)


def cross_section_at(env: Environment, z: float) -> list[tuple[tuple[float, float], float]]:
    """Disks (center, radius) of every obstacle whose vertical span contains z."""
    return [(ob.center, ob.radius) for ob in env.obstacles if ob.spans(z)]


def detect_obstacles(env: Environment, p, sense_range: float) -> list[Obstacle]:
    """Obstacles whose disk at height p.z lies within sense_range of p.

    Distance is measured from p's horizontal projection to the disk boundary,
    clamped to 0 for points inside the disk; the range test is a closed ball.
    Results are ordered by obstacle id.
    """
    if not sense_range > 0:
        raise ValueError("sense_range must be positive")
    p = np.asarray(p, dtype=float)
    found = []
    for ob in env.obstacles:
        if not ob.spans(p[2]):
            continue
        d = float(np.hypot(p[0] - ob.center[0], p[1] - ob.center[1]))
        if max(d - ob.radius, 0.0) <= sense_range:
            found.append(ob)
    return sorted(found, key=lambda ob: ob.id)


# --- synthetic terrain generators and plain-text file I/O -------------------
#
# The generators stand in for real elevation data, which is not bundled.

def flat_terrain(rows: int, cols: int, cell_size: float, height: float,
                 origin=(0.0, 0.0)) -> Terrain:
    return Terrain(origin=tuple(origin), cell_size=cell_size,
                   heights=np.full((rows, cols), float(height)))


def ramp_terrain(rows: int, cols: int, cell_size: float,
                 start_height: float, end_height: float,
                 origin=(0.0, 0.0)) -> Terrain:
    """Linear slope along +x (columns)."""
    row = np.linspace(start_height, end_height, cols)
    return Terrain(origin=tuple(origin), cell_size=cell_size,
                   heights=np.tile(row, (rows, 1)))


def random_terrain(rows: int, cols: int, cell_size: float,
                   base_height: float, amplitude: float,
                   seed: int, smoothness: float = 3.0,
                   origin=(0.0, 0.0)) -> Terrain:
    """Smoothed random hills: gaussian-filtered white noise rescaled so the
    relief stays within base_height +/- amplitude. Deterministic in seed."""
    rng = np.random.default_rng(seed)
    noise = gaussian_filter(rng.standard_normal((rows, cols)), sigma=smoothness)
    span = np.max(np.abs(noise))
    if span > 0:
        noise = noise / span
    return Terrain(origin=tuple(origin), cell_size=cell_size,
                   heights=base_height + amplitude * noise)


def save_terrain(terrain: Terrain, path) -> None:
    """Header "rows cols origin_x origin_y cell_size", then one row per line."""
    with open(path, "w") as f:
        f.write(f"{terrain.rows} {terrain.cols} "
                f"{terrain.origin[0]!r} {terrain.origin[1]!r} {terrain.cell_size!r}\n")
        np.savetxt(f, terrain.heights, fmt="%.6f")


def load_terrain(path) -> Terrain:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 5:
            raise ValueError(f"{path}: expected 5 header fields, got {len(header)}")
        rows, cols = int(header[0]), int(header[1])
        origin = (float(header[2]), float(header[3]))
        cell_size = float(header[4])
        heights = np.loadtxt(f)
    heights = np.atleast_2d(heights)
    if heights.shape != (rows, cols):
        raise ValueError(f"{path}: header promises {rows}x{cols} grid, "
                         f"file holds {heights.shape[0]}x{heights.shape[1]}")
    return Terrain(origin=origin, cell_size=cell_size, heights=heights)
