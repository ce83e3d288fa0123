"""One-call dataset synthesis shared by the CLI and the test harness."""

from dataclasses import replace

import numpy as np

from .expert import rollout_expert, rollout_static
from .world import WorldConfig, generate_world, sample_free_pose


def synthesize_records(world_config: WorldConfig, n_records: int, n_static: int = 0,
                       max_steps: int = 120, seed: int = 0, static_steps: int = 30,
                       vary_obstacles: bool = True):
    """Expert rollouts (one world per record) plus optional change-free records.

    With ``vary_obstacles`` each record's world also cycles through a band
    of obstacle densities around the configured count, so the corpus spans
    sparse and cluttered scenes.
    """
    records = []
    for i in range(n_records):
        count = world_config.obstacle_count
        if vary_obstacles:
            count = max(0, count - 6 + (i * 5) % 13)
        world = generate_world(replace(world_config, seed=world_config.seed + i,
                                       obstacle_count=count))
        rng = np.random.default_rng((seed & 0x7FFFFFFF, i))
        # spawn far from the goal so rollouts are long enough to slice
        start = sample_free_pose(world, rng,
                                 min_goal_dist=0.55 * world_config.grid_size)
        records.append(rollout_expert(world, start, world.goal_center,
                                      max_steps=max_steps, record_id=f"rec{i:04d}"))
    for i in range(n_static):
        world = generate_world(replace(world_config, seed=world_config.seed + 10_000 + i))
        rng = np.random.default_rng((seed & 0x7FFFFFFF, 10_000 + i))
        pose = sample_free_pose(world, rng)
        records.append(rollout_static(world, pose, steps=static_steps,
                                      record_id=f"static{i:04d}"))
    return records
