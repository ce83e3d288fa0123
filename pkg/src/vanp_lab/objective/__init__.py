from .oracle import oracle_vicreg
from .vicreg import (
    LossBreakdown,
    VanpLossConfig,
    VicregCoefficients,
    covariance_term,
    invariance_term,
    vanp_loss,
    variance_term,
    vicreg_loss,
)

__all__ = [
    "LossBreakdown",
    "VanpLossConfig",
    "VicregCoefficients",
    "covariance_term",
    "invariance_term",
    "oracle_vicreg",
    "vanp_loss",
    "variance_term",
    "vicreg_loss",
]
