"""Downstream trajectory-regression training and evaluation.

The policy head predicts a normalized action sequence; the loss is the
MSE between the unicycle-integrated prediction and the recorded local
waypoints over the full 5 s horizon. Evaluation reports the MSE at 3 s
(12 steps) and 5 s (20 steps) on a held-out split, where the split is by
record id so no rollout leaks between train and eval.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import ConfigError
from ..kinematics import HZ, integrate_unicycle
from ..models.encoder import EncoderStack
from ..models.policy import DownstreamPolicy
from .checkpoint import save_checkpoint
from .loader import WindowBatcher, collate_windows
from .optim import make_adamw

MODES = ("frozen", "finetune", "end_to_end_random")


@dataclass
class DownstreamConfig:
    epochs: int = 50
    mode: str = "frozen"
    batch_size: int = 32
    lr: float = 5e-4
    weight_decay: float = 0.01
    seed: int = 0
    holdout_fraction: float = 0.2
    horizons_s: tuple = (3.0, 5.0)
    max_steps: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must be in (0, 1)")
        self.horizons_s = tuple(float(h) for h in self.horizons_s)

    @property
    def effective_epochs(self) -> int:
        # training an encoder from scratch gets double the budget
        return self.epochs * 2 if self.mode == "end_to_end_random" else self.epochs

    def horizon_steps(self, tau_f: int) -> dict:
        steps = {h: int(round(h * HZ)) for h in self.horizons_s}
        bad = {h: s for h, s in steps.items() if s > tau_f}
        if bad:
            raise ValueError(f"horizons {bad} exceed the window future length {tau_f}")
        return steps


def split_records(record_ids, holdout_fraction: float, seed: int):
    """Deterministic by-record split; returns (train_ids, eval_ids) as sets."""
    unique = sorted(set(record_ids))
    if len(unique) < 2:
        raise ValueError("need at least 2 records to build a held-out split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    n_eval = max(1, int(round(holdout_fraction * len(unique))))
    eval_ids = {unique[i] for i in order[:n_eval]}
    return set(unique) - eval_ids, eval_ids


def trajectory_mse(pred_actions: torch.Tensor, waypoints: torch.Tensor,
                   steps: int) -> torch.Tensor:
    """Mean squared error between integrated prediction and ground truth."""
    traj = integrate_unicycle(pred_actions)
    return (traj[:, :steps] - waypoints[:, :steps]).pow(2).mean()


@dataclass
class DownstreamResult:
    run_id: str
    encoder_name: str
    weights_label: str
    mode: str
    mse_by_horizon: dict      # {3.0: mse, 5.0: mse}
    checkpoint_path: str
    steps: int

    def metrics_rows(self):
        return [
            {"run_id": self.run_id, "encoder": self.encoder_name,
             "weights": self.weights_label, "mode": self.mode,
             "horizon_s": h, "mse": m}
            for h, m in sorted(self.mse_by_horizon.items())
        ]


def evaluate_policy(policy: DownstreamPolicy, windows, config: DownstreamConfig,
                    n_frames: int) -> dict:
    tau_f = windows[0].future_waypoints.shape[0]
    steps_by_h = config.horizon_steps(tau_f)
    sq_sums = {h: 0.0 for h in steps_by_h}
    counts = {h: 0 for h in steps_by_h}
    policy.eval()
    with torch.no_grad():
        for start in range(0, len(windows), config.batch_size):
            batch = collate_windows(windows[start:start + config.batch_size])
            pred = policy(batch["past"][:, -n_frames:], batch["polar"])
            traj = integrate_unicycle(pred)
            for h, s in steps_by_h.items():
                err = (traj[:, :s] - batch["waypoints"][:, :s]).pow(2)
                sq_sums[h] += float(err.sum())
                counts[h] += err.numel()
    policy.train()
    return {h: sq_sums[h] / counts[h] for h in steps_by_h}


def train_downstream(windows, encoder: EncoderStack, config: DownstreamConfig,
                     out_dir, encoder_name: str = "encoder",
                     weights_label: str = "pretrained", run_id: str = "downstream",
                     n_frames: int = None) -> DownstreamResult:
    """Fit goal encoder + controller (and optionally the encoder) on windows.

    ``encoder`` is used as-is: pass a freshly seeded stack for the
    random-init arms. ``n_frames`` limits how many trailing history
    frames the policy sees (1 = single-frame pathway).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not windows:
        raise ValueError("no windows supplied")
    tau_f = windows[0].future_waypoints.shape[0]
    config.horizon_steps(tau_f)  # validate horizons up front

    train_ids, eval_ids = split_records([w.record_id for w in windows],
                                        config.holdout_fraction, config.seed)
    train_windows = [w for w in windows if w.record_id in train_ids]
    eval_windows = [w for w in windows if w.record_id in eval_ids]
    if not train_windows or not eval_windows:
        raise ValueError("record split produced an empty train or eval set")

    n_frames = n_frames or windows[0].past_images.shape[0]
    policy_mode = "finetune" if config.mode == "end_to_end_random" else config.mode
    torch.manual_seed(config.seed)
    policy = DownstreamPolicy(encoder, horizon=tau_f, mode=policy_mode)
    opt = make_adamw(policy.trainable_parameters(), config.lr, config.weight_decay)
    batcher = WindowBatcher(train_windows, config.batch_size, seed=config.seed,
                            min_batch=1)

    step = 0
    done = False
    for epoch in range(config.effective_epochs):
        if done:
            break
        for batch in batcher.batches(epoch):
            pred = policy(batch["past"][:, -n_frames:], batch["polar"])
            loss = trajectory_mse(pred, batch["waypoints"], tau_f)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            step += 1
            if config.max_steps and step >= config.max_steps:
                done = True
                break

    mse = evaluate_policy(policy, eval_windows, config, n_frames)
    ckpt_path = out_dir / "policy.pt"
    from ..config import to_plain_dict

    save_checkpoint(
        {
            "kind": "policy",
            "config": to_plain_dict(config),
            "params": policy.state_dict(),
            "optimizer": opt.state_dict(),
            "epoch": config.effective_epochs,
            "step": step,
            "torch_rng": torch.get_rng_state(),
            "metrics": {str(h): m for h, m in mse.items()},
        },
        ckpt_path,
    )
    return DownstreamResult(
        run_id=run_id,
        encoder_name=encoder_name,
        weights_label=weights_label,
        mode=config.mode,
        mse_by_horizon=mse,
        checkpoint_path=str(ckpt_path),
        steps=step,
    )


def write_metrics_csv(results, path):
    """train-module metrics interface: run_id, encoder, weights, mode, horizon_s, mse."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("run_id,encoder,weights,mode,horizon_s,mse\n")
        for result in results:
            for row in result.metrics_rows():
                f.write(f"{row['run_id']},{row['encoder']},{row['weights']},"
                        f"{row['mode']},{row['horizon_s']:g},{row['mse']:.9g}\n")
    return path
