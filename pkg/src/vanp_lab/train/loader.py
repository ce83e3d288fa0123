"""Deterministic window batching.

Shuffle order is keyed on (seed, epoch) and augmentation draws on
(epoch, sample index), so a resumed run sees exactly the byte stream an
uninterrupted run would have seen, with no loader state to checkpoint.
"""

import numpy as np
import torch

from ..datagen.augment import AugmentationConfig, apply_augmentation


def collate_windows(windows):
    """Stack SampleWindows into torch tensors (frames channel-first)."""
    past = np.stack([w.past_images for w in windows])          # (B, T, H, W, 3)
    goal = np.stack([w.goal_image for w in windows])           # (B, H, W, 3)
    return {
        "past": torch.from_numpy(past.transpose(0, 1, 4, 2, 3).copy()).float(),
        "goal": torch.from_numpy(goal.transpose(0, 3, 1, 2).copy()).float(),
        "actions": torch.from_numpy(np.stack([w.future_actions for w in windows])).float(),
        "polar": torch.from_numpy(np.stack([w.local_goal_polar for w in windows])).float(),
        "waypoints": torch.from_numpy(np.stack([w.future_waypoints for w in windows])).float(),
    }


class WindowBatcher:
    def __init__(self, windows, batch_size: int, seed: int = 0,
                 augmentation: AugmentationConfig = None, min_batch: int = 2):
        if batch_size < min_batch:
            raise ValueError(f"batch_size must be >= {min_batch}")
        if not windows:
            raise ValueError("no windows to batch")
        self.windows = list(windows)
        self.batch_size = batch_size
        self.seed = seed
        self.augmentation = augmentation
        self.min_batch = min_batch

    def steps_per_epoch(self) -> int:
        n_full = len(self.windows) // self.batch_size
        rem = len(self.windows) % self.batch_size
        return n_full + (1 if rem >= self.min_batch else 0)

    def batches(self, epoch: int):
        rng = np.random.default_rng((self.seed & 0x7FFFFFFF, epoch))
        order = rng.permutation(len(self.windows))
        for start in range(0, len(order), self.batch_size):
            idx = order[start:start + self.batch_size]
            if len(idx) < self.min_batch:
                continue
            picked = []
            for i in idx:
                w = self.windows[i]
                if self.augmentation is not None and self.augmentation.any_enabled:
                    w = apply_augmentation(w, self.augmentation,
                                           draw_seed=epoch * 1_000_003 + int(i))
                picked.append(w)
            yield collate_windows(picked)
