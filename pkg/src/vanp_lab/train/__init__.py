from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .downstream import (
    DownstreamConfig,
    DownstreamResult,
    evaluate_policy,
    split_records,
    train_downstream,
    trajectory_mse,
    write_metrics_csv,
)
from .loader import WindowBatcher, collate_windows
from .pretrain import (
    CheckpointHandle,
    CollapseMonitor,
    CollapseMonitorConfig,
    PretrainConfig,
    build_encoder,
    compute_pretrain_loss,
    load_encoder,
    pretrain,
)

__all__ = [
    "CHECKPOINT_VERSION",
    "CheckpointHandle",
    "CollapseMonitor",
    "CollapseMonitorConfig",
    "DownstreamConfig",
    "DownstreamResult",
    "PretrainConfig",
    "WindowBatcher",
    "build_encoder",
    "collate_windows",
    "compute_pretrain_loss",
    "evaluate_policy",
    "load_checkpoint",
    "load_encoder",
    "pretrain",
    "save_checkpoint",
    "split_records",
    "train_downstream",
    "trajectory_mse",
    "write_metrics_csv",
]
