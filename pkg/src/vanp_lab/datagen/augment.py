"""Image augmentation for training windows.

Crop windows are drawn independently per frame, which is the point: on a
change-free sequence the crops inject the intra-window variation the
pretext loss needs. Labels (actions, polar goal, waypoints) are never
touched. Horizontal flipping is structurally disabled because mirroring
an egocentric frame flips the sign convention of the paired turn rates.
"""

from dataclasses import dataclass, field

import numpy as np

from .records import SampleWindow


@dataclass
class CropSpec:
    enabled: bool = True
    scale_range: tuple = (0.6, 1.0)

    def __post_init__(self):
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError(f"scale_range must satisfy 0 < lo <= hi <= 1, got {self.scale_range}")
        self.scale_range = (float(lo), float(hi))


@dataclass
class JitterSpec:
    enabled: bool = True
    max_delta: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.max_delta <= 1.0:
            raise ValueError("max_delta must be in [0, 1]")


@dataclass
class AugmentationConfig:
    random_crop: CropSpec = field(default_factory=CropSpec)
    color_jitter: JitterSpec = field(default_factory=JitterSpec)
    gray_scale_prob: float = 0.1
    horizontal_flip: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.horizontal_flip:
            raise ValueError("horizontal_flip is permanently disabled: mirroring "
                             "egocentric frames breaks the paired turn-rate sign")
        if not 0.0 <= self.gray_scale_prob <= 1.0:
            raise ValueError("gray_scale_prob must be in [0, 1]")

    @classmethod
    def disabled(cls, seed: int = 0) -> "AugmentationConfig":
        return cls(random_crop=CropSpec(enabled=False),
                   color_jitter=JitterSpec(enabled=False),
                   gray_scale_prob=0.0, seed=seed)

    @property
    def any_enabled(self) -> bool:
        return self.random_crop.enabled or self.color_jitter.enabled or self.gray_scale_prob > 0


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (H, W, C) with half-pixel-center bilinear sampling."""
    in_h, in_w = img.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return img.astype(np.float32, copy=True)
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)[:, None, None]
    wx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)[None, :, None]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return (top * (1 - wy) + bottom * wy).astype(np.float32)


def _augment_frame(frame: np.ndarray, config: AugmentationConfig,
                   rng: np.random.Generator) -> np.ndarray:
    h, w = frame.shape[:2]
    out = frame
    if config.random_crop.enabled:
        lo, hi = config.random_crop.scale_range
        area = rng.uniform(lo, hi)
        side = float(np.sqrt(area))
        ch = max(1, int(round(h * side)))
        cw = max(1, int(round(w * side)))
        top = int(rng.integers(0, h - ch + 1))
        left = int(rng.integers(0, w - cw + 1))
        out = bilinear_resize(out[top:top + ch, left:left + cw], h, w)
    if config.color_jitter.enabled:
        delta = rng.uniform(-config.color_jitter.max_delta,
                            config.color_jitter.max_delta, size=3).astype(np.float32)
        out = np.clip(out + delta[None, None, :], 0.0, 1.0)
    if config.gray_scale_prob > 0 and rng.random() < config.gray_scale_prob:
        lum = out[..., 0] * 0.299 + out[..., 1] * 0.587 + out[..., 2] * 0.114
        out = np.repeat(lum[..., None], 3, axis=2)
    return np.ascontiguousarray(out, dtype=np.float32)


def apply_augmentation(window: SampleWindow, config: AugmentationConfig,
                       draw_seed: int) -> SampleWindow:
    """Augmented copy of ``window``; identity when everything is disabled.

    The per-frame draws come from a generator keyed on (config.seed,
    draw_seed) so the same window/seed pair always augments identically.
    """
    if not config.any_enabled:
        return window
    rng = np.random.default_rng((config.seed & 0x7FFFFFFF, draw_seed & 0x7FFFFFFF))
    past = np.stack([_augment_frame(f, config, rng) for f in window.past_images])
    goal = _augment_frame(window.goal_image, config, rng)
    return SampleWindow(
        past_images=past,
        future_actions=window.future_actions,
        goal_image=goal,
        local_goal_polar=window.local_goal_polar,
        future_waypoints=window.future_waypoints,
        t_index=window.t_index,
        record_id=window.record_id,
        static=window.static,
    )
