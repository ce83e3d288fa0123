"""Seeded synthetic navigation worlds.

A world is a square grid of 1 m cells: boundary walls, a protected free
corridor across the middle, colored box obstacles elsewhere, and a goal
disk near the far end of the corridor. Generation is a pure function of
the config, so identical seeds give byte-identical worlds.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_PALETTE = (
    (0.85, 0.25, 0.20),
    (0.95, 0.60, 0.15),
    (0.80, 0.75, 0.20),
    (0.30, 0.45, 0.85),
    (0.60, 0.30, 0.75),
    (0.20, 0.70, 0.70),
)


@dataclass
class WorldConfig:
    grid_size: int = 16
    obstacle_count: int = 14
    obstacle_palette: tuple = DEFAULT_PALETTE
    corridor_width: float = 2.0
    render_height: int = 98
    render_width: int = 126
    # per-world ambient light multiplier range and per-view sensor noise;
    # nuisance variation the encoder should learn to see through
    ambient_range: tuple = (0.75, 1.15)
    pixel_noise: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.grid_size < 8:
            raise ValueError(f"grid_size must be >= 8, got {self.grid_size}")
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be >= 0")
        if self.render_height <= 0 or self.render_width <= 0:
            raise ValueError("render dimensions must be positive")
        if self.corridor_width <= 0:
            raise ValueError("corridor_width must be positive")
        lo, hi = self.ambient_range
        if not 0.0 < lo <= hi:
            raise ValueError("ambient_range must satisfy 0 < lo <= hi")
        self.ambient_range = (float(lo), float(hi))
        if self.pixel_noise < 0:
            raise ValueError("pixel_noise must be >= 0")
        self.obstacle_palette = tuple(tuple(float(c) for c in rgb) for rgb in self.obstacle_palette)


@dataclass
class SyntheticWorld:
    config: WorldConfig
    occupancy: np.ndarray          # (G, G) uint8, 1 = wall/obstacle; [ix, iy]
    colors: np.ndarray             # (G, G, 3) float32 cell colors
    goal_center: tuple             # (x, y) meters
    goal_radius: float
    start_center: tuple            # (x, y) meters, nominal spawn area
    ambient: float = 1.0           # world-wide illumination multiplier

    @property
    def size_m(self) -> float:
        return float(self.config.grid_size)

    def cell_of(self, x: float, y: float):
        return int(math.floor(x)), int(math.floor(y))

    def in_bounds(self, x: float, y: float) -> bool:
        g = self.config.grid_size
        return 0.0 <= x < g and 0.0 <= y < g

    def is_free(self, x: float, y: float) -> bool:
        if not self.in_bounds(x, y):
            return False
        ix, iy = self.cell_of(x, y)
        return self.occupancy[ix, iy] == 0

    def obstacle_cells(self):
        return np.argwhere(self.occupancy == 1)

    def serialize(self) -> bytes:
        """Canonical byte representation; equal seeds give equal bytes."""
        header = json.dumps(
            {
                "grid_size": self.config.grid_size,
                "goal_center": list(self.goal_center),
                "goal_radius": self.goal_radius,
                "start_center": list(self.start_center),
                "ambient": self.ambient,
            },
            sort_keys=True,
        ).encode()
        return header + self.occupancy.tobytes() + self.colors.tobytes()

    def checksum(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def generate_world(config: WorldConfig) -> SyntheticWorld:
    """Build the occupancy grid, obstacle colors, and start/goal regions."""
    g = config.grid_size
    rng = np.random.default_rng(config.seed)

    occupancy = np.zeros((g, g), dtype=np.uint8)
    occupancy[0, :] = occupancy[-1, :] = 1
    occupancy[:, 0] = occupancy[:, -1] = 1

    colors = np.zeros((g, g, 3), dtype=np.float32)
    colors[occupancy == 1] = (0.55, 0.55, 0.58)  # boundary wall gray

    # Corridor cells along the middle row stay free so a path always exists.
    half_w = max(1, int(round(config.corridor_width / 2)))
    mid = g // 2
    corridor_rows = range(max(1, mid - half_w), min(g - 1, mid + half_w))
    protected = {(ix, iy) for ix in range(1, g - 1) for iy in corridor_rows}

    candidates = [
        (ix, iy)
        for ix in range(1, g - 1)
        for iy in range(1, g - 1)
        if (ix, iy) not in protected
    ]
    rng.shuffle(candidates)
    palette = np.asarray(config.obstacle_palette, dtype=np.float32)
    for k, (ix, iy) in enumerate(candidates[: config.obstacle_count]):
        occupancy[ix, iy] = 1
        colors[ix, iy] = palette[int(rng.integers(len(palette)))]

    goal_center = (g - 2.5, mid + 0.5)
    start_center = (1.5, mid + 0.5)
    lo, hi = config.ambient_range
    return SyntheticWorld(
        config=config,
        occupancy=occupancy,
        colors=colors,
        goal_center=goal_center,
        goal_radius=0.45,
        start_center=start_center,
        ambient=float(rng.uniform(lo, hi)),
    )


def sample_free_pose(world: SyntheticWorld, rng: np.random.Generator, margin: float = 0.3,
                     min_goal_dist: float = 0.0):
    """Uniform free-space pose (x, y, theta), at least ``margin`` from cell edges."""
    g = world.config.grid_size
    gx, gy = world.goal_center
    for _ in range(1000):
        x = rng.uniform(1.0 + margin, g - 1.0 - margin)
        y = rng.uniform(1.0 + margin, g - 1.0 - margin)
        if not world.is_free(x, y):
            continue
        if math.hypot(x - gx, y - gy) < min_goal_dist:
            continue
        fx, fy = x - math.floor(x), y - math.floor(y)
        if margin <= fx <= 1 - margin and margin <= fy <= 1 - margin:
            return x, y, rng.uniform(-math.pi, math.pi)
    raise RuntimeError("could not sample a free pose; world too dense")
