"""Per-frame convolutional image encoders.

Three variants share the same interface: a stack of conv stages, global
average pooling of the last stage, and an affine map to the token width.
``tiny`` (~0.3M parameters) is the desk-scale default; the two
residual-network-shaped variants mirror the 18- and 50-layer stage
layouts for scale-up experiments. Normalization is GroupNorm so outputs
are independent of batch composition.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ShapeError

_VARIANTS = ("tiny", "resnet18-shaped", "resnet50-shaped")


@dataclass
class BackboneConfig:
    variant: str = "tiny"
    output_dim: int = 512
    input_hw: tuple = (98, 126)

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if self.output_dim <= 0:
            raise ValueError("output_dim must be positive")
        h, w = self.input_hw
        if h <= 0 or w <= 0:
            raise ValueError("input_hw must be positive")


def init_weights_kaiming(module: nn.Module) -> None:
    """Kaiming-normal weights (zero mean), zero biases, for conv/linear layers."""
    if isinstance(module, (nn.Conv2d, nn.Linear)):
        nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def _gn(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(min(8, channels), channels)


class _BasicBlock(nn.Module):
    expansion = 1

    def __init__(self, in_ch, ch, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, ch, 3, stride=stride, padding=1, bias=False,
                               padding_mode="replicate")
        self.n1 = _gn(ch)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1, bias=False,
                               padding_mode="replicate")
        self.n2 = _gn(ch)
        self.down = None
        if stride != 1 or in_ch != ch:
            self.down = nn.Sequential(nn.Conv2d(in_ch, ch, 1, stride=stride, bias=False), _gn(ch))

    def forward(self, x):
        out = torch.relu(self.n1(self.conv1(x)))
        out = self.n2(self.conv2(out))
        skip = x if self.down is None else self.down(x)
        return torch.relu(out + skip)


class _Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, in_ch, ch, stride=1):
        super().__init__()
        out_ch = ch * self.expansion
        self.conv1 = nn.Conv2d(in_ch, ch, 1, bias=False)
        self.n1 = _gn(ch)
        self.conv2 = nn.Conv2d(ch, ch, 3, stride=stride, padding=1, bias=False,
                               padding_mode="replicate")
        self.n2 = _gn(ch)
        self.conv3 = nn.Conv2d(ch, out_ch, 1, bias=False)
        self.n3 = _gn(out_ch)
        self.down = None
        if stride != 1 or in_ch != out_ch:
            self.down = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False), _gn(out_ch)
            )

    def forward(self, x):
        out = torch.relu(self.n1(self.conv1(x)))
        out = torch.relu(self.n2(self.conv2(out)))
        out = self.n3(self.conv3(out))
        skip = x if self.down is None else self.down(x)
        return torch.relu(out + skip)


class ImageBackbone(nn.Module):
    """Frame encoder: conv stages -> GAP -> affine map to ``output_dim``.

    ``forward(x)`` takes (B, 3, H, W) in [0, 1] and returns (B, output_dim).
    ``forward(x, return_features=True)`` also returns the last conv stage
    activations (B, C, h', w') for saliency rendering.
    """

    def __init__(self, config: BackboneConfig = None):
        super().__init__()
        self.config = config or BackboneConfig()
        variant = self.config.variant
        if variant == "tiny":
            chans = (24, 48, 96, 192)
            self.stages = nn.Sequential(
                nn.Conv2d(3, chans[0], 7, stride=4, padding=3, padding_mode="replicate"), _gn(chans[0]), nn.ReLU(),
                nn.Conv2d(chans[0], chans[1], 3, stride=2, padding=1, padding_mode="replicate"), _gn(chans[1]), nn.ReLU(),
                nn.Conv2d(chans[1], chans[2], 3, stride=2, padding=1, padding_mode="replicate"), _gn(chans[2]), nn.ReLU(),
                nn.Conv2d(chans[2], chans[3], 3, stride=2, padding=1, padding_mode="replicate"), _gn(chans[3]), nn.ReLU(),
            )
            feat_ch = chans[-1]
        else:
            if variant == "resnet18-shaped":
                block, counts = _BasicBlock, (2, 2, 2, 2)
            else:
                block, counts = _Bottleneck, (3, 4, 6, 3)
            widths = (64, 128, 256, 512)
            layers = [
                nn.Conv2d(3, 64, 7, stride=2, padding=3, bias=False, padding_mode="replicate"), _gn(64), nn.ReLU(),
                nn.MaxPool2d(3, stride=2, padding=1),
            ]
            in_ch = 64
            for i, (w, n) in enumerate(zip(widths, counts)):
                for j in range(n):
                    stride = 2 if (j == 0 and i > 0) else 1
                    layers.append(block(in_ch, w, stride=stride))
                    in_ch = w * block.expansion
            self.stages = nn.Sequential(*layers)
            feat_ch = in_ch
        self.feature_channels = feat_ch
        self.fc = nn.Linear(feat_ch, self.config.output_dim)
        self.apply(init_weights_kaiming)

    def _check_input(self, x):
        h, w = self.config.input_hw
        if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] != h or x.shape[3] != w:
            raise ShapeError(("B", 3, h, w), x.shape, what="backbone input")

    def forward(self, x, return_features: bool = False):
        self._check_input(x)
        feats = self.stages(x)
        z = self.fc(feats.mean(dim=(2, 3)))
        if return_features:
            return z, feats
        return z
