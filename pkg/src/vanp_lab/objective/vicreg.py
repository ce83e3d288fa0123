"""Joint-embedding objective: invariance, variance and covariance terms.

The pretext loss ties the visual-history embedding to the future-action
embedding and the goal embedding. Each pairing is scored with three terms:

* invariance ``s``  — mean squared distance between the two batches,
* variance ``v``    — hinge on the per-dimension batch std (collapse guard),
* covariance ``c``  — squared off-diagonal entries of the batch covariance.

The pair score is ``mu1*s + mu2*(v1+v2) + mu3*(c1+c2)`` and the composite
loss blends the goal pair and the action pair with a single weight
``lam``: ``lam * pair(img, goal) + (1 - lam) * pair(img, act)``.

All functions are differentiable torch ops and dtype-preserving, so tests
can run them in float64 against the loop oracle in ``oracle.py``.
"""

from dataclasses import dataclass, field

import torch
from torch import Tensor


@dataclass
class VicregCoefficients:
    """Weights and numerical knobs for one invariance/variance/covariance pair.

    ``per_dim_invariance`` divides the invariance term by the embedding
    width so the value stays scale-comparable across dimensionalities;
    setting it False restores the plain per-sample squared distance.
    """

    mu1: float = 25.0
    mu2: float = 25.0
    mu3: float = 1.0
    gamma: float = 1.0
    eps: float = 1e-4
    per_dim_invariance: bool = True

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0 or self.mu3 < 0:
            raise ValueError("term weights must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        # eps=0 is allowed so closed-form fixtures can be evaluated exactly;
        # keep it positive for training (the hinge gradient blows up at collapse).
        if self.eps < 0:
            raise ValueError("eps must be >= 0")


@dataclass
class VanpLossConfig:
    """Composite-loss configuration.

    ``lam`` is the weight on the goal pair; 1 - lam goes to the action
    pair. lam=0 is the actions-only setting, lam=1 goal-only.
    """

    lam: float = 0.5
    coeffs: VicregCoefficients = field(default_factory=VicregCoefficients)

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")


@dataclass
class LossBreakdown:
    """Every raw term of one composite-loss evaluation, as 0-d tensors."""

    s_ig: Tensor
    v_i: Tensor
    v_g: Tensor
    c_i: Tensor
    c_g: Tensor
    s_ia: Tensor
    v_a: Tensor
    c_a: Tensor
    vicreg_ig: Tensor
    vicreg_ia: Tensor
    total: Tensor

    CSV_FIELDS = (
        "step", "total", "vicreg_ig", "vicreg_ia",
        "s_ig", "v_i", "v_g", "c_i", "c_g", "s_ia", "v_a", "c_a",
    )

    def to_floats(self) -> dict:
        return {
            name: float(getattr(self, name).detach())
            for name in (
                "total", "vicreg_ig", "vicreg_ia",
                "s_ig", "v_i", "v_g", "c_i", "c_g", "s_ia", "v_a", "c_a",
            )
        }

    def csv_row(self, step: int) -> str:
        vals = self.to_floats()
        return ",".join([str(step)] + [f"{vals[k]:.9g}" for k in self.CSV_FIELDS[1:]])


def _check_batch(z: Tensor, what: str, min_rows: int = 2) -> None:
    if z.ndim != 2:
        raise ValueError(f"{what} must be 2-d (batch x dim), got shape {tuple(z.shape)}")
    if z.shape[0] < min_rows:
        raise ValueError(
            f"{what} needs a batch of at least {min_rows} rows, got {z.shape[0]}"
        )


def invariance_term(z1: Tensor, z2: Tensor, per_dim: bool = True) -> Tensor:
    """Mean squared distance between paired rows of two embedding batches.

    With ``per_dim`` the sum of squares is divided by n*d, otherwise by n.
    """
    _check_batch(z1, "z1", min_rows=1)
    _check_batch(z2, "z2", min_rows=1)
    if z1.shape != z2.shape:
        raise ValueError(f"shape mismatch: {tuple(z1.shape)} vs {tuple(z2.shape)}")
    sq = (z1 - z2).pow(2)
    if per_dim:
        return sq.mean()
    return sq.sum(dim=1).mean()


def variance_term(z: Tensor, gamma: float = 1.0, eps: float = 1e-4) -> Tensor:
    """Hinge penalty on per-dimension batch std falling below ``gamma``.

    Uses the unbiased (n-1) variance; ``eps`` sits inside the sqrt.
    """
    _check_batch(z, "z")
    std = torch.sqrt(z.var(dim=0, unbiased=True) + eps)
    return torch.clamp(gamma - std, min=0.0).mean()


def covariance_term(z: Tensor) -> Tensor:
    """Mean squared off-diagonal of the (n-1)-normalized batch covariance."""
    _check_batch(z, "z")
    n, d = z.shape
    zc = z - z.mean(dim=0)
    cov = (zc.T @ zc) / (n - 1)
    off_diag_sq = cov.pow(2).sum() - torch.diagonal(cov).pow(2).sum()
    return off_diag_sq / d


def vicreg_loss(z1: Tensor, z2: Tensor, coeffs: VicregCoefficients):
    """Weighted three-term pair loss.

    Returns:
        (total, terms) where ``terms`` is a dict holding the raw s, v1,
        v2, c1, c2 tensors before weighting.
    """
    if z1.shape != z2.shape:
        raise ValueError(f"shape mismatch: {tuple(z1.shape)} vs {tuple(z2.shape)}")
    s = invariance_term(z1, z2, per_dim=coeffs.per_dim_invariance)
    v1 = variance_term(z1, coeffs.gamma, coeffs.eps)
    v2 = variance_term(z2, coeffs.gamma, coeffs.eps)
    c1 = covariance_term(z1)
    c2 = covariance_term(z2)
    total = coeffs.mu1 * s + coeffs.mu2 * (v1 + v2) + coeffs.mu3 * (c1 + c2)
    return total, {"s": s, "v1": v1, "v2": v2, "c1": c1, "c2": c2}


def vanp_loss(zi: Tensor, zg: Tensor, za: Tensor, config: VanpLossConfig) -> LossBreakdown:
    """Composite loss over the image, goal and action embedding batches.

    ``total`` is computed as ``lam * vicreg_ig + (1 - lam) * vicreg_ia``
    in that exact floating-point form, so the lam=0 and lam=1 endpoints
    are bitwise equal to the surviving pair loss.
    """
    for name, z in (("image", zi), ("goal", zg), ("action", za)):
        if z.shape != zi.shape:
            raise ValueError(
                f"{name} branch shape {tuple(z.shape)} differs from image branch "
                f"{tuple(zi.shape)}"
            )
    vicreg_ig, terms_ig = vicreg_loss(zi, zg, config.coeffs)
    vicreg_ia, terms_ia = vicreg_loss(zi, za, config.coeffs)
    lam = config.lam
    total = lam * vicreg_ig + (1.0 - lam) * vicreg_ia
    return LossBreakdown(
        s_ig=terms_ig["s"],
        v_i=terms_ig["v1"],
        v_g=terms_ig["v2"],
        c_i=terms_ig["c1"],
        c_g=terms_ig["c2"],
        s_ia=terms_ia["s"],
        v_a=terms_ia["v2"],
        c_a=terms_ia["c2"],
        vicreg_ig=vicreg_ig,
        vicreg_ia=vicreg_ia,
        total=total,
    )
