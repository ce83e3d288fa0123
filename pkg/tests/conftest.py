import logging

import numpy as np
import pytest
import torch

from vanp_lab.datagen import (
    WorldConfig,
    generate_world,
    rollout_expert,
    rollout_static,
    sample_free_pose,
    slice_windows,
    write_dataset,
)
from vanp_lab.models.backbone import BackboneConfig
from vanp_lab.models.encoder import EncoderConfig
from vanp_lab.models.transformer import TransformerConfig

logging.getLogger("vanp_lab").setLevel(logging.ERROR)
torch.set_num_threads(2)


def small_encoder_config(dim: int = 64) -> EncoderConfig:
    """Narrow stack for unit tests; the 512-wide contract is tested separately."""
    return EncoderConfig(
        backbone=BackboneConfig(output_dim=dim),
        obs_transformer=TransformerConfig(layers=2, heads=4, token_dim=dim, ffn_dim=dim),
        act_transformer=TransformerConfig(layers=2, heads=4, token_dim=dim, ffn_dim=dim),
        projector_hidden=dim,
        projector_out=2 * dim,
    )


def make_records(n_expert: int = 4, n_static: int = 0, seed: int = 0, max_steps: int = 60):
    records = []
    for i in range(n_expert):
        world = generate_world(WorldConfig(seed=seed + i, obstacle_count=8))
        rng = np.random.default_rng((seed, i))
        start = sample_free_pose(world, rng, min_goal_dist=0.55 * world.config.grid_size)
        records.append(rollout_expert(world, start, world.goal_center,
                                      max_steps=max_steps, record_id=f"rec{i:03d}"))
    for i in range(n_static):
        world = generate_world(WorldConfig(seed=seed + 100 + i))
        rng = np.random.default_rng((seed, 100 + i))
        records.append(rollout_static(world, sample_free_pose(world, rng), steps=28,
                                      record_id=f"static{i:03d}"))
    return records


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    """A small persisted dataset shared by IO/training/CLI tests."""
    root = tmp_path_factory.mktemp("dataset")
    write_dataset(make_records(n_expert=5, n_static=1, seed=3), root)
    return root


@pytest.fixture(scope="session")
def sample_windows():
    windows = []
    for record in make_records(n_expert=3, seed=11):
        windows.extend(slice_windows(record))
    return windows
