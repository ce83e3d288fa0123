"""Downstream trajectory-prediction head.

The policy consumes the observation branch of an ``EncoderStack`` plus a
small MLP over the polar local goal, concatenates the two 512-wide
embeddings, and regresses a tanh-bounded action sequence. ``frozen`` mode
detaches the encoder from optimization entirely; ``finetune`` trains it
jointly.
"""

import torch
from torch import nn

from ..errors import ShapeError
from .backbone import init_weights_kaiming
from .encoder import EncoderStack

MODES = ("frozen", "finetune")


class DownstreamPolicy(nn.Module):
    def __init__(self, encoder: EncoderStack, horizon: int = 20, mode: str = "frozen",
                 controller_hidden: int = 512):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.encoder = encoder
        self.horizon = horizon
        self.mode = mode
        dim = encoder.embed_dim
        self.goal_encoder = nn.Sequential(nn.Linear(2, dim), nn.ReLU(), nn.Linear(dim, dim))
        # observation embeddings arrive at whatever scale pretraining left
        # them; normalize each branch so the head is scale-robust and the
        # tanh does not start saturated
        self.obs_norm = nn.LayerNorm(dim)
        self.goal_norm = nn.LayerNorm(dim)
        self.controller = nn.Sequential(
            nn.Linear(2 * dim, controller_hidden), nn.ReLU(),
            nn.Linear(controller_hidden, controller_hidden), nn.ReLU(),
            nn.Linear(controller_hidden, horizon * 2),
        )
        self.goal_encoder.apply(init_weights_kaiming)
        self.controller.apply(init_weights_kaiming)
        self._apply_mode()

    def _apply_mode(self):
        frozen = self.mode == "frozen"
        for p in self.encoder.observation_parameters():
            p.requires_grad_(not frozen)

    def set_mode(self, mode: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self._apply_mode()

    def trainable_parameters(self):
        return (p for p in self.parameters() if p.requires_grad)

    def forward(self, past_images, local_goal_polar):
        """(B, T, 3, H, W) frames + (B, 2) polar goal -> (B, horizon, 2) in [-1, 1]."""
        if local_goal_polar.ndim != 2 or local_goal_polar.shape[-1] != 2:
            raise ShapeError(("B", 2), local_goal_polar.shape, what="local goal")
        if self.mode == "frozen":
            with torch.no_grad():
                z_obs = self.encoder.encode_observations(past_images)
        else:
            z_obs = self.encoder.encode_observations(past_images)
        z_goal = self.goal_encoder(local_goal_polar)
        raw = self.controller(torch.cat((self.obs_norm(z_obs), self.goal_norm(z_goal)),
                                        dim=-1))
        return torch.tanh(raw).view(-1, self.horizon, 2)
