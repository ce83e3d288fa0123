"""Scripted expert that drives the synthetic worlds.

A potential-field steering rule (attract to goal, repel from occupied
cells within an influence radius) feeds unicycle kinematics at 4 Hz.
Actions are emitted normalized and clipped to the unit box. Rollouts end
on goal arrival, collision (flagged, never dropped) or the step budget.
"""

import math

import numpy as np

from ..kinematics import DT, normalize_speed, step_pose, wrap_angle
from .records import TrajectoryRecord
from .render import render_frame
from .world import SyntheticWorld

ARRIVE_RADIUS = 0.5
INFLUENCE_RADIUS = 1.8
REPULSE_GAIN = 0.35
HEADING_GAIN = 1.5
MAX_SPEED = 1.0  # m/s, maps to v=+1


def _repulsion(world: SyntheticWorld, x: float, y: float):
    cells = world.obstacle_cells()
    if len(cells) == 0:
        return 0.0, 0.0
    cx = cells[:, 0] + 0.5
    cy = cells[:, 1] + 0.5
    dx = x - cx
    dy = y - cy
    d = np.hypot(dx, dy)
    near = (d < INFLUENCE_RADIUS) & (d > 1e-6)
    if not near.any():
        return 0.0, 0.0
    mag = REPULSE_GAIN * (1.0 / d[near] - 1.0 / INFLUENCE_RADIUS) / d[near] ** 2
    return float((mag * dx[near] / d[near]).sum()), float((mag * dy[near] / d[near]).sum())


def expert_action(world: SyntheticWorld, pose, goal_xy):
    """Normalized (v, omega) the expert would apply at ``pose``."""
    x, y, theta = pose
    gx, gy = goal_xy[0], goal_xy[1]
    to_gx, to_gy = gx - x, gy - y
    dist = math.hypot(to_gx, to_gy)
    if dist < 1e-9:
        return -1.0, 0.0
    fx = to_gx / dist
    fy = to_gy / dist
    rx, ry = _repulsion(world, x, y)
    fx, fy = fx + rx, fy + ry
    err = wrap_angle(math.atan2(fy, fx) - theta)
    omega = max(-1.0, min(1.0, HEADING_GAIN * err))
    speed = MAX_SPEED * max(0.0, math.cos(err)) * min(1.0, dist / 1.0)
    # don't drive into a cell the next step would enter blind
    probe = 2.0 * speed * DT
    if speed > 0 and not world.is_free(x + probe * math.cos(theta),
                                       y + probe * math.sin(theta)):
        speed = 0.0
    v = max(-1.0, min(1.0, normalize_speed(speed)))
    return v, omega


def rollout_expert(world: SyntheticWorld, start_pose, goal_pose, max_steps: int,
                   record_id: str = "rollout") -> TrajectoryRecord:
    """Drive from ``start_pose`` toward ``goal_pose``; returns a full record."""
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    x, y, theta = float(start_pose[0]), float(start_pose[1]), float(start_pose[2])
    goal_xy = (float(goal_pose[0]), float(goal_pose[1]))
    if not world.is_free(x, y):
        raise ValueError(f"start pose ({x:.2f}, {y:.2f}) collides with the world")
    if not world.is_free(*goal_xy):
        raise ValueError(f"goal ({goal_xy[0]:.2f}, {goal_xy[1]:.2f}) is not in free space")

    frames, actions, poses, times = [], [], [], []
    flags = []
    step = 0
    while True:
        dist = math.hypot(goal_xy[0] - x, goal_xy[1] - y)
        if dist < ARRIVE_RADIUS:
            flags.append("complete")
            break
        if step >= max_steps:
            flags.append("incomplete")
            break
        v, w = expert_action(world, (x, y, theta), goal_xy)
        frames.append(render_frame(world, (x, y, theta)))
        actions.append((v, w))
        poses.append((x, y, theta))
        times.append(step * DT)
        x, y, theta = step_pose(x, y, theta, v, w)
        step += 1
        if not world.is_free(x, y):
            flags.append("collision")
            break

    n = len(frames)
    h, w_px = world.config.render_height, world.config.render_width
    record = TrajectoryRecord(
        record_id=record_id,
        frames=(np.stack(frames) if n else np.zeros((0, h, w_px, 3), dtype=np.float32)),
        actions=np.asarray(actions, dtype=np.float64).reshape(n, 2),
        poses=np.asarray(poses, dtype=np.float64).reshape(n, 3),
        timestamps=np.asarray(times, dtype=np.float64),
        flags=tuple(flags),
    )
    record.validate()
    return record


def rollout_static(world: SyntheticWorld, pose, steps: int,
                   record_id: str = "static") -> TrajectoryRecord:
    """Change-free record: the robot holds ``pose`` and emits zero motion.

    These degenerate sequences are kept (flagged "static") because they
    exercise the representation-collapse failure mode.
    """
    x, y = float(pose[0]), float(pose[1])
    if not world.is_free(x, y):
        raise ValueError(f"static pose ({x:.2f}, {y:.2f}) collides with the world")
    frame = render_frame(world, pose)
    record = TrajectoryRecord(
        record_id=record_id,
        frames=np.repeat(frame[None], steps, axis=0),
        actions=np.tile(np.array([-1.0, 0.0]), (steps, 1)),
        poses=np.tile(np.asarray(pose, dtype=np.float64), (steps, 1)),
        timestamps=np.arange(steps, dtype=np.float64) * DT,
        flags=("static",),
    )
    record.validate()
    return record
