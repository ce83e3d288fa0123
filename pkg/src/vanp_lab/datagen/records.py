"""Trajectory and training-window containers."""

import logging
from dataclasses import dataclass

import numpy as np

from ..kinematics import DT, local_polar, world_to_local

logger = logging.getLogger(__name__)

TAU_P = 6
TAU_F = 20


@dataclass
class TrajectoryRecord:
    """One rendered egocentric rollout.

    frames: (T, H, W, 3) float32 in [0, 1]; actions: (T, 2) normalized
    (v, omega); poses: (T, 3) world (x, y, theta); timestamps: (T,)
    seconds at 4 Hz. ``flags`` carries rollout outcomes ("complete",
    "collision", "incomplete", "static").
    """

    record_id: str
    frames: np.ndarray
    actions: np.ndarray
    poses: np.ndarray
    timestamps: np.ndarray
    flags: tuple = ()

    def __len__(self) -> int:
        return len(self.frames)

    def validate(self) -> None:
        n = len(self.frames)
        if not (len(self.actions) == len(self.poses) == len(self.timestamps) == n):
            raise ValueError(
                f"record '{self.record_id}': field lengths differ "
                f"({n}, {len(self.actions)}, {len(self.poses)}, {len(self.timestamps)})"
            )
        if n and (np.abs(self.actions) > 1.0 + 1e-12).any():
            raise ValueError(f"record '{self.record_id}': actions outside [-1, 1]")
        if n > 1:
            gaps = np.diff(self.timestamps)
            if np.abs(gaps - DT).max() > 1e-9:
                raise ValueError(
                    f"record '{self.record_id}': timestamps not on a {DT}s grid"
                )


@dataclass
class SampleWindow:
    """One training tuple sliced from a record.

    ``goal_image`` is the frame ``tau_f`` steps ahead of the last history
    frame; ``local_goal_polar`` and ``future_waypoints`` are expressed in
    the robot frame at the window's anchor time.
    """

    past_images: np.ndarray      # (tau_p, H, W, 3)
    future_actions: np.ndarray   # (tau_f, 2)
    goal_image: np.ndarray       # (H, W, 3)
    local_goal_polar: np.ndarray  # (2,) range [m], bearing (-pi, pi]
    future_waypoints: np.ndarray  # (tau_f, 2) local frame
    t_index: int
    record_id: str = ""
    static: bool = False


def slice_windows(record: TrajectoryRecord, tau_p: int = TAU_P, tau_f: int = TAU_F,
                  stride: int = 1):
    """All valid windows of a record; empty (with a logged count) if too short."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if tau_p < 1 or tau_f < 1:
        raise ValueError("tau_p and tau_f must be >= 1")
    n = len(record)
    if n < tau_p + tau_f:
        logger.warning(
            "record '%s' has %d steps < tau_p+tau_f=%d: skipped 1 record, 0 windows",
            record.record_id, n, tau_p + tau_f,
        )
        return []

    windows = []
    for t in range(tau_p - 1, n - tau_f, stride):
        pose_ref = record.poses[t]
        goal_pose = record.poses[t + tau_f]
        waypoints = np.array(
            [world_to_local(pose_ref, record.poses[t + k][:2]) for k in range(1, tau_f + 1)],
            dtype=np.float64,
        )
        span = record.poses[t - tau_p + 1 : t + tau_f + 1]
        static = bool(np.max(np.abs(span - span[0])) < 1e-12)
        windows.append(
            SampleWindow(
                past_images=record.frames[t - tau_p + 1 : t + 1],
                future_actions=record.actions[t : t + tau_f],
                goal_image=record.frames[t + tau_f],
                local_goal_polar=np.array(local_polar(pose_ref, goal_pose[:2]),
                                          dtype=np.float64),
                future_waypoints=waypoints,
                t_index=t,
                record_id=record.record_id,
                static=static,
            )
        )
    return windows
