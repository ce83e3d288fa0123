from .augment import AugmentationConfig, CropSpec, JitterSpec, apply_augmentation, bilinear_resize
from .expert import expert_action, rollout_expert, rollout_static
from .records import SampleWindow, TrajectoryRecord, slice_windows
from .render import render_frame
from .storage import (
    Manifest,
    load_manifest,
    load_windows,
    read_dataset,
    write_dataset,
)
from .world import SyntheticWorld, WorldConfig, generate_world, sample_free_pose

__all__ = [
    "AugmentationConfig",
    "CropSpec",
    "JitterSpec",
    "Manifest",
    "SampleWindow",
    "SyntheticWorld",
    "TrajectoryRecord",
    "WorldConfig",
    "apply_augmentation",
    "bilinear_resize",
    "expert_action",
    "generate_world",
    "load_manifest",
    "load_windows",
    "read_dataset",
    "render_frame",
    "rollout_expert",
    "rollout_static",
    "sample_free_pose",
    "slice_windows",
    "write_dataset",
]
