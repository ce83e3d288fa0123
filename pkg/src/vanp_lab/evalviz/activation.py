"""Saliency from the backbone's last convolutional stage.

The map is the channel-mean of absolute activations (no gradients needed,
works on frozen encoders), bilinearly upsampled to the input resolution
and min-max normalized; a constant grid maps to a uniform 0.5. Overlays
blend a blue-to-red ramp over the frame with per-pixel alpha proportional
to saliency, so zero saliency leaves the frame untouched.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..models.backbone import ImageBackbone


@dataclass
class ActivationMap:
    grid: np.ndarray        # (h', w') non-negative channel-mean activations
    upsampled: np.ndarray   # (H, W) in [0, 1]
    source_layer: str


def _find_backbone(model) -> ImageBackbone:
    if isinstance(model, ImageBackbone):
        return model
    backbone = getattr(model, "backbone", None)
    if isinstance(backbone, ImageBackbone):
        return backbone
    raise ValueError(f"{type(model).__name__} has no convolutional stage to visualize")


def _to_chw(image: np.ndarray) -> torch.Tensor:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[-1] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {image.shape}")
    return torch.from_numpy(image.transpose(2, 0, 1).copy())


def activation_map(model, image: np.ndarray) -> ActivationMap:
    """Saliency of one (H, W, 3) frame under ``model``'s backbone."""
    backbone = _find_backbone(model)
    h, w = backbone.config.input_hw
    x = _to_chw(image).unsqueeze(0)
    was_training = backbone.training
    backbone.eval()
    with torch.no_grad():
        _, feats = backbone(x, return_features=True)
    if was_training:
        backbone.train()
    grid = feats[0].abs().mean(dim=0)                      # (h', w')
    up = F.interpolate(grid[None, None], size=(h, w), mode="bilinear",
                       align_corners=False)[0, 0]
    lo, hi = float(up.min()), float(up.max())
    if hi - lo < 1e-12:
        norm = np.full((h, w), 0.5, dtype=np.float32)
    else:
        norm = ((up - lo) / (hi - lo)).numpy().astype(np.float32)
    return ActivationMap(grid=grid.numpy(), upsampled=norm,
                         source_layer="backbone.stages[-1]")


def saliency_colormap(values: np.ndarray) -> np.ndarray:
    """Piecewise-linear blue -> cyan -> yellow -> red ramp over [0, 1]."""
    v = np.clip(np.asarray(values, dtype=np.float32), 0.0, 1.0)
    r = np.clip(3.0 * v - 1.2, 0.0, 1.0)
    g = np.clip(1.5 - np.abs(3.0 * v - 1.5), 0.0, 1.0)
    b = np.clip(1.2 - 3.0 * v, 0.0, 1.0)
    return np.stack((r, g, b), axis=-1)


def overlay_array(image: np.ndarray, amap: ActivationMap, alpha: float = 0.65) -> np.ndarray:
    """Float blend; per-pixel alpha is ``alpha * saliency`` so a zero map is identity."""
    m = amap.upsampled[..., None]
    heat = saliency_colormap(amap.upsampled)
    return np.clip(image * (1.0 - alpha * m) + heat * (alpha * m), 0.0, 1.0)


def _save_png(array01: np.ndarray, out_path) -> Path:
    from PIL import Image

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray((np.clip(array01, 0, 1) * 255.0 + 0.5).astype(np.uint8)).save(out_path)
    return out_path


def render_overlay(image: np.ndarray, amap: ActivationMap, out_path,
                   alpha: float = 0.65) -> Path:
    """Write a lossless PNG of the blended frame; dimensions match the input."""
    return _save_png(overlay_array(image, amap, alpha=alpha), out_path)


def render_overlay_grid(frames, maps_by_encoder: dict, out_path,
                        alpha: float = 0.65) -> Path:
    """Side-by-side comparison: one row per encoder, one column per frame."""
    rows = []
    for name, maps in maps_by_encoder.items():
        if len(maps) != len(frames):
            raise ValueError(f"encoder {name!r} supplied {len(maps)} maps for "
                             f"{len(frames)} frames")
        rows.append(np.concatenate(
            [overlay_array(f, m, alpha=alpha) for f, m in zip(frames, maps)], axis=1))
    return _save_png(np.concatenate(rows, axis=0), out_path)
