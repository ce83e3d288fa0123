"""Optimizer construction."""

import torch


def make_adamw(params, lr: float, weight_decay: float) -> torch.optim.AdamW:
    """Decoupled-weight-decay Adam; fused kernels when the build supports them."""
    params = list(params)
    try:
        return torch.optim.AdamW(params, lr=lr, weight_decay=weight_decay, fused=True)
    except (RuntimeError, ValueError, TypeError):
        return torch.optim.AdamW(params, lr=lr, weight_decay=weight_decay)
