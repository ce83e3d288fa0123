"""Sequence encoder with a learned context token.

A small pre-norm Transformer encoder. One extra learned token is
prepended to the input sequence and its final-layer representation is the
sequence summary. Positional embeddings (when enabled) are added to the
sequence tokens only, never to the context token.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ShapeError
from .backbone import init_weights_kaiming


@dataclass
class TransformerConfig:
    layers: int = 4
    heads: int = 4
    token_dim: int = 512
    context_tokens: int = 1
    positional: str = "learned"  # "learned" | "none"
    dropout: float = 0.0
    ffn_dim: int = 512
    max_tokens: int = 32
    # Normalizing the final context output rescales the residual stream to
    # unit rms and crushes the absolute batch spread the collapse monitor
    # watches; leave it off so healthy and collapsed regimes are separable.
    final_norm: bool = False

    def __post_init__(self):
        if self.token_dim % self.heads != 0:
            raise ValueError(f"token_dim {self.token_dim} not divisible by heads {self.heads}")
        if self.context_tokens != 1:
            raise ValueError("exactly one context token is supported")
        if self.positional not in ("learned", "none"):
            raise ValueError(f"positional must be 'learned' or 'none', got {self.positional!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


class _EncoderBlock(nn.Module):
    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        d = cfg.token_dim
        self.heads = cfg.heads
        self.scale = (d // cfg.heads) ** -0.5
        self.ln1 = nn.LayerNorm(d)
        self.qkv = nn.Linear(d, 3 * d)
        self.attn_out = nn.Linear(d, d)
        self.ln2 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(
            nn.Linear(d, cfg.ffn_dim), nn.GELU(), nn.Linear(cfg.ffn_dim, d)
        )
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x):
        b, t, d = x.shape
        q, k, v = self.qkv(self.ln1(x)).chunk(3, dim=-1)
        q = q.view(b, t, self.heads, -1).transpose(1, 2)
        k = k.view(b, t, self.heads, -1).transpose(1, 2)
        v = v.view(b, t, self.heads, -1).transpose(1, 2)
        attn = torch.softmax((q @ k.transpose(-1, -2)) * self.scale, dim=-1)
        mixed = (attn @ v).transpose(1, 2).reshape(b, t, d)
        x = x + self.drop(self.attn_out(mixed))
        return x + self.drop(self.ffn(self.ln2(x)))


class ContextTransformer(nn.Module):
    """Transformer encoder whose context-token output summarizes the sequence."""

    def __init__(self, config: TransformerConfig = None):
        super().__init__()
        self.config = config or TransformerConfig()
        d = self.config.token_dim
        self.context_token = nn.Parameter(torch.empty(1, 1, d))
        nn.init.normal_(self.context_token, std=0.02)
        if self.config.positional == "learned":
            self.positional = nn.Parameter(torch.empty(1, self.config.max_tokens, d))
            nn.init.normal_(self.positional, std=0.02)
        else:
            self.positional = None
        self.blocks = nn.ModuleList(
            _EncoderBlock(self.config) for _ in range(self.config.layers)
        )
        self.final_norm = nn.LayerNorm(d) if self.config.final_norm else nn.Identity()
        self.apply(init_weights_kaiming)

    def forward(self, tokens, return_sequence: bool = False):
        """tokens: (B, T, token_dim) -> context summary (B, token_dim)."""
        d = self.config.token_dim
        if tokens.ndim != 3 or tokens.shape[-1] != d:
            raise ShapeError(("B", "T", d), tokens.shape, what="transformer tokens")
        b, t, _ = tokens.shape
        if self.positional is not None:
            if t > self.config.max_tokens:
                raise ValueError(
                    f"sequence length {t} exceeds positional table {self.config.max_tokens}"
                )
            tokens = tokens + self.positional[:, :t]
        x = torch.cat((self.context_token.expand(b, -1, -1), tokens), dim=1)
        for block in self.blocks:
            x = block(x)
        x = self.final_norm(x)
        if return_sequence:
            return x[:, 0], x[:, 1:]
        return x[:, 0]
