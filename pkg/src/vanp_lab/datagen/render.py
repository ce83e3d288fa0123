"""Egocentric column-raycast renderer.

Each image column casts one ray from the robot pose across the occupancy
grid (fixed-step march; cells are 1 m so a 5 cm step cannot tunnel).
The first occupied cell gives the wall distance and color; a vertical
slice is drawn with height inversely proportional to the perpendicular
distance, over a sky/floor gradient. The goal disk renders as a bright
beacon band when unobstructed. Pure numpy, a few ms per frame.
"""

import numpy as np

from .world import SyntheticWorld

FOV = 1.6  # radians, ~92 degrees
_MARCH_STEP = 0.05
_GOAL_COLOR = np.array([0.15, 0.95, 0.30], dtype=np.float32)


def render_frame(world: SyntheticWorld, pose) -> np.ndarray:
    """Render a (render_height, render_width, 3) float32 view in [0, 1]."""
    cfg = world.config
    h, w = cfg.render_height, cfg.render_width
    x0, y0, theta = float(pose[0]), float(pose[1]), float(pose[2])
    g = cfg.grid_size

    rel = FOV * (0.5 - (np.arange(w) + 0.5) / w)      # left column = +FOV/2
    angles = theta + rel
    dirx, diry = np.cos(angles), np.sin(angles)

    max_range = g * 1.5
    steps = np.arange(_MARCH_STEP, max_range, _MARCH_STEP)
    px = x0 + steps[:, None] * dirx[None, :]          # (S, W)
    py = y0 + steps[:, None] * diry[None, :]
    ix = np.clip(np.floor(px).astype(np.int32), 0, g - 1)
    iy = np.clip(np.floor(py).astype(np.int32), 0, g - 1)
    hit = world.occupancy[ix, iy] == 1                # (S, W)
    first = np.argmax(hit, axis=0)                    # boundary walls guarantee a hit
    cols = np.arange(w)
    dist = steps[first]
    wall_rgb = world.colors[ix[first, cols], iy[first, cols]]

    # goal beacon: closest approach of each ray to the goal disk
    gx, gy = world.goal_center
    t_goal = (gx - x0) * dirx + (gy - y0) * diry
    perp = np.abs((gx - x0) * diry - (gy - y0) * dirx)
    goal_vis = (t_goal > 0.1) & (perp < world.goal_radius) & (t_goal < dist)

    rows = np.arange(h, dtype=np.float32)
    horizon = h / 2.0
    sky_v = 0.72 - 0.18 * rows / h
    floor_v = 0.16 + 0.30 * rows / h
    base_v = np.where(rows < horizon, sky_v, floor_v).astype(np.float32)
    img = np.empty((h, w, 3), dtype=np.float32)
    img[:] = base_v[:, None, None]
    img[rows < horizon, :, 2] += 0.08                 # cool sky tint

    d_perp = np.maximum(dist * np.cos(rel), 0.12)
    half = (0.62 * h) / d_perp                        # slice half-height in px
    top = np.maximum(horizon - half, 0.0)
    bottom = np.minimum(horizon + half, float(h))
    shade = np.clip(1.0 / (1.0 + 0.11 * dist), 0.18, 1.0).astype(np.float32)
    wall_mask = (rows[:, None] >= top[None, :]) & (rows[:, None] < bottom[None, :])
    img = np.where(wall_mask[..., None], wall_rgb[None, :, :] * shade[None, :, None], img)

    if goal_vis.any():
        g_half = np.clip((0.30 * h) / np.maximum(t_goal, 0.25), 2.0, horizon)
        g_top = np.maximum(horizon - g_half, 0.0)
        g_bot = np.minimum(horizon + g_half, float(h))
        g_shade = np.clip(1.0 / (1.0 + 0.08 * t_goal), 0.3, 1.0).astype(np.float32)
        g_mask = goal_vis[None, :] & (rows[:, None] >= g_top[None, :]) & (rows[:, None] < g_bot[None, :])
        img = np.where(g_mask[..., None], _GOAL_COLOR[None, None, :] * g_shade[None, :, None], img)

    img *= world.ambient
    if cfg.pixel_noise > 0:
        # deterministic per (world, view): rendering stays a pure function
        key = (cfg.seed * 1_000_003
               + int(round(x0 * 128)) * 8191
               + int(round(y0 * 128)) * 131
               + int(round(theta * 128))) & 0x7FFFFFFF
        noise_rng = np.random.default_rng(key)
        img += noise_rng.normal(0.0, cfg.pixel_noise, img.shape).astype(np.float32)

    return np.clip(img, 0.0, 1.0).astype(np.float32)
