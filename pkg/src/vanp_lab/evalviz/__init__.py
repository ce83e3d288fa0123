from .ablations import AblationSpec, default_ablation_specs, pretrain_config_for, run_ablations
from .activation import (
    ActivationMap,
    activation_map,
    overlay_array,
    render_overlay,
    render_overlay_grid,
    saliency_colormap,
)
from .benchmark import run_benchmark
from .tables import (
    ABLATION_ORDER,
    CSV_FIELDS,
    MetricsTable,
    REFERENCE_ABLATIONS,
    REFERENCE_BENCHMARK,
)

__all__ = [
    "ABLATION_ORDER",
    "AblationSpec",
    "ActivationMap",
    "CSV_FIELDS",
    "MetricsTable",
    "REFERENCE_ABLATIONS",
    "REFERENCE_BENCHMARK",
    "activation_map",
    "default_ablation_specs",
    "overlay_array",
    "pretrain_config_for",
    "render_overlay",
    "render_overlay_grid",
    "run_ablations",
    "run_benchmark",
    "saliency_colormap",
]
