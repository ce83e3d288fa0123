"""The pretrainable encoder stack.

Three branches produce fixed-width embeddings:

* visual history: per-frame backbone features -> observation Transformer
  -> context-token output Z_img (512),
* future actions: affine token embedding -> action Transformer ->
  context-token output Z_act (512),
* goal image: the same backbone applied once -> Z_goal (512).

Each branch has its own 3-layer projection head mapping 512 -> 1024 for
the loss; the 512-wide context outputs are what downstream consumes.
With ``goal_wiring="in"`` the goal's backbone token is appended to the
observation Transformer input as one extra sequence token.
"""

from dataclasses import dataclass, field

import torch
from torch import nn

from ..errors import ShapeError
from .backbone import BackboneConfig, ImageBackbone, init_weights_kaiming
from .transformer import ContextTransformer, TransformerConfig

_BRANCHES = ("img", "act", "goal")
_WIRINGS = ("out", "in")


@dataclass
class EncoderConfig:
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    obs_transformer: TransformerConfig = field(default_factory=TransformerConfig)
    act_transformer: TransformerConfig = field(default_factory=TransformerConfig)
    projector_hidden: int = 1024
    projector_out: int = 1024
    # LayerNorm between projector layers tames the initial scale mismatch
    # between the image/action/goal branches (different networks start at
    # wildly different output ranges, which otherwise lets the invariance
    # pull flatten the batch before the variance hinge can push back).
    # Per-sample normalization, so a collapsed batch stays expressible.
    projector_norm: bool = True
    goal_wiring: str = "out"

    def __post_init__(self):
        if self.goal_wiring not in _WIRINGS:
            raise ValueError(f"goal_wiring must be one of {_WIRINGS}, got {self.goal_wiring!r}")
        for name in ("obs_transformer", "act_transformer"):
            if getattr(self, name).token_dim != self.backbone.output_dim:
                raise ValueError(f"{name} token_dim must equal backbone output_dim")


def _projector(in_dim, hidden, out_dim, use_norm=True):
    norm = nn.LayerNorm if use_norm else (lambda d: nn.Identity())
    return nn.Sequential(
        nn.Linear(in_dim, hidden), norm(hidden), nn.ReLU(),
        nn.Linear(hidden, hidden), norm(hidden), nn.ReLU(),
        nn.Linear(hidden, out_dim),
    )


class EncoderStack(nn.Module):
    def __init__(self, config: EncoderConfig = None):
        super().__init__()
        self.config = config or EncoderConfig()
        cfg = self.config
        dim = cfg.backbone.output_dim
        self.backbone = ImageBackbone(cfg.backbone)
        self.obs_transformer = ContextTransformer(cfg.obs_transformer)
        self.action_embed = nn.Linear(2, dim)
        self.act_transformer = ContextTransformer(cfg.act_transformer)
        self.img_projector = _projector(dim, cfg.projector_hidden, cfg.projector_out,
                                        cfg.projector_norm)
        self.act_projector = _projector(dim, cfg.projector_hidden, cfg.projector_out,
                                        cfg.projector_norm)
        self.goal_projector = _projector(dim, cfg.projector_hidden, cfg.projector_out,
                                         cfg.projector_norm)
        for head in (self.action_embed, self.img_projector, self.act_projector,
                     self.goal_projector):
            head.apply(init_weights_kaiming)

    @property
    def embed_dim(self) -> int:
        return self.config.backbone.output_dim

    def frame_tokens(self, frames):
        """(B, T, 3, H, W) -> (B, T, embed_dim) per-frame backbone features."""
        if frames.ndim != 5:
            raise ShapeError(("B", "T", 3, *self.config.backbone.input_hw), frames.shape,
                             what="frame stack")
        b, t = frames.shape[:2]
        flat = self.backbone(frames.reshape(b * t, *frames.shape[2:]))
        return flat.view(b, t, -1)

    def encode_observations(self, past_images, goal_images=None):
        """Context summary of the visual history; (B, T, 3, H, W) -> (B, 512).

        ``goal_images`` is consulted only under goal_wiring="in", where the
        goal's backbone token joins the sequence.
        """
        tokens = self.frame_tokens(past_images)
        if self.config.goal_wiring == "in":
            if goal_images is None:
                raise ValueError("goal_wiring='in' requires goal_images")
            goal_tok = self.backbone(goal_images).unsqueeze(1)
            tokens = torch.cat((tokens, goal_tok), dim=1)
        return self.obs_transformer(tokens)

    def encode_actions(self, future_actions):
        """Context summary of the action sequence; (B, T, 2) -> (B, 512)."""
        if future_actions.ndim != 3 or future_actions.shape[-1] != 2:
            raise ShapeError(("B", "T", 2), future_actions.shape, what="actions")
        if future_actions.abs().max() > 1.0 + 1e-6:
            raise ValueError(
                f"action components must lie in [-1, 1], max abs is "
                f"{float(future_actions.abs().max()):.4f}"
            )
        return self.act_transformer(self.action_embed(future_actions))

    def encode_goal(self, goal_images):
        """Shared-backbone goal embedding; (B, 3, H, W) -> (B, 512)."""
        return self.backbone(goal_images)

    def project(self, z, which: str):
        """Branch-specific projection head, 512 -> 1024."""
        if which not in _BRANCHES:
            raise ValueError(f"unknown branch {which!r}, expected one of {_BRANCHES}")
        head = {"img": self.img_projector, "act": self.act_projector,
                "goal": self.goal_projector}[which]
        return head(z)

    def forward(self, past_images, future_actions, goal_images):
        """All branch embeddings and projections for one batch."""
        z_img = self.encode_observations(past_images, goal_images=goal_images)
        z_act = self.encode_actions(future_actions)
        z_goal = self.encode_goal(goal_images)
        return {
            "z_img": z_img,
            "z_act": z_act,
            "z_goal": z_goal,
            "p_img": self.project(z_img, "img"),
            "p_act": self.project(z_act, "act"),
            "p_goal": self.project(z_goal, "goal"),
        }

    def observation_parameters(self):
        """Parameters of the downstream-relevant branch (backbone + obs Transformer)."""
        yield from self.backbone.parameters()
        yield from self.obs_transformer.parameters()
