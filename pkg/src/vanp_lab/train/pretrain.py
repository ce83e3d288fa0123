"""Pretext-task training loop.

Minimizes the composite joint-embedding loss over training windows,
logging every step's loss breakdown to CSV and tracking the batch spread
of the visual-history embedding so representation collapse is observable
and checkpointed, not silent.

Data order and augmentation draws are keyed on (seed, epoch), so a run
resumed from an epoch-boundary checkpoint replays exactly the batches an
uninterrupted run would have seen.
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import torch

from ..datagen.augment import AugmentationConfig
from ..errors import ConfigError, TrainingDiverged
from ..models.encoder import EncoderConfig, EncoderStack
from ..objective.vicreg import LossBreakdown, VanpLossConfig, vanp_loss
from .checkpoint import load_checkpoint, save_checkpoint
from .loader import WindowBatcher
from .optim import make_adamw

_LOSS_SPACES = ("projection", "context")


@dataclass
class CollapseMonitorConfig:
    window: int = 5          # measure every N steps
    threshold: float = 0.05  # flag when mean per-dim std drops below this
    batch_size: int = 32     # fixed monitoring batch drawn once from the dataset


class CollapseMonitor:
    """Mean per-dimension std of the history embedding over a fixed batch.

    Measuring on a dedicated, un-augmented monitoring batch keeps the
    signal comparable across steps instead of tracking the noise of
    whatever small batch was just trained on.
    """

    def __init__(self, config: CollapseMonitorConfig = None, monitor_batch=None):
        self.config = config or CollapseMonitorConfig()
        self.monitor_batch = monitor_batch  # collated tensors or None
        self.history = []   # (step, mean_std)
        self.events = []    # steps where the spread fell below threshold

    @classmethod
    def from_windows(cls, windows, config: CollapseMonitorConfig = None):
        from .loader import collate_windows

        config = config or CollapseMonitorConfig()
        stride = max(1, len(windows) // config.batch_size)
        picked = windows[::stride][: config.batch_size]
        return cls(config, collate_windows(picked) if len(picked) >= 2 else None)

    def measure(self, encoder) -> float:
        if self.monitor_batch is None:
            return float("nan")
        was_training = encoder.training
        encoder.eval()
        with torch.no_grad():
            z = encoder.encode_observations(self.monitor_batch["past"],
                                            goal_images=self.monitor_batch["goal"])
        if was_training:
            encoder.train()
        return float(z.std(dim=0, unbiased=True).mean())

    def update(self, step: int, encoder) -> float:
        if step % self.config.window != 0:
            return float("nan")
        spread = self.measure(encoder)
        if spread != spread:  # no monitoring batch
            return spread
        self.history.append((step, spread))
        if spread < self.config.threshold:
            self.events.append(step)
        return spread

    @property
    def collapsed(self) -> bool:
        return bool(self.events)


@dataclass
class PretrainConfig:
    epochs: int = 40                 # published run used 200
    batch_size: int = 64             # published run used 2048
    lr: float = 5e-4
    weight_decay: float = 0.01
    optimizer: str = "adamw"
    seed: int = 0
    loss: VanpLossConfig = field(default_factory=VanpLossConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    goal_wiring: str = "out"
    loss_space: str = "projection"   # "context" scores the 512-wide embeddings instead
    model: EncoderConfig = field(default_factory=EncoderConfig)
    max_steps: int = 0               # 0 = run all epochs
    checkpoint_every_epochs: int = 0  # periodic epoch checkpoints; final always written
    collapse: CollapseMonitorConfig = field(default_factory=CollapseMonitorConfig)
    stop_on_collapse: bool = False   # end the run at the first collapse event

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (variance term needs a batch)")
        if self.optimizer != "adamw":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r} (adamw only)")
        if self.loss_space not in _LOSS_SPACES:
            raise ConfigError(f"loss_space must be one of {_LOSS_SPACES}")
        if self.goal_wiring not in ("out", "in"):
            raise ConfigError("goal_wiring must be 'out' or 'in'")


@dataclass
class CheckpointHandle:
    path: str
    steps: int
    final_loss: float
    log_path: str
    collapse_history: list
    collapsed: bool


def build_encoder(config: PretrainConfig) -> EncoderStack:
    """Seeded encoder construction; goal wiring comes from the run config."""
    torch.manual_seed(config.seed)
    return EncoderStack(replace(config.model, goal_wiring=config.goal_wiring))


def compute_pretrain_loss(encoder: EncoderStack, batch, loss_config: VanpLossConfig,
                          loss_space: str = "projection"):
    """Forward all branches and score them; returns (LossBreakdown, branch outputs)."""
    out = encoder(batch["past"], batch["actions"], batch["goal"])
    if loss_space == "projection":
        return vanp_loss(out["p_img"], out["p_goal"], out["p_act"], loss_config), out
    return vanp_loss(out["z_img"], out["z_goal"], out["z_act"], loss_config), out


def pretrain(windows, config: PretrainConfig, out_dir, resume_from=None) -> CheckpointHandle:
    """Train an EncoderStack on the given windows; returns the final checkpoint.

    ``resume_from`` restores model, optimizer, RNG and progress from an
    epoch-boundary checkpoint and continues to ``config.epochs``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    start_epoch = 0
    step = 0
    monitor = CollapseMonitor.from_windows(windows, config.collapse)
    if resume_from is not None:
        payload = load_checkpoint(resume_from)
        encoder = load_encoder(payload)
        opt = make_adamw(encoder.parameters(), config.lr, config.weight_decay)
        opt.load_state_dict(payload["optimizer"])
        torch.set_rng_state(payload["torch_rng"])
        start_epoch = payload["epoch"]
        step = payload["step"]
        monitor.history = list(payload.get("collapse_history", ()))
        monitor.events = list(payload.get("collapse_events", ()))
    else:
        encoder = build_encoder(config)
        opt = make_adamw(encoder.parameters(), config.lr, config.weight_decay)
    encoder.train()

    aug = config.augmentation if config.augmentation.any_enabled else None
    batcher = WindowBatcher(windows, config.batch_size, seed=config.seed, augmentation=aug)

    log_path = out_dir / "pretrain_log.csv"
    ckpt_path = out_dir / "encoder.pt"
    last_finite = None
    final_loss = math.nan
    mode = "a" if resume_from is not None and log_path.exists() else "w"
    with open(log_path, mode) as log:
        if mode == "w":
            log.write(",".join(LossBreakdown.CSV_FIELDS) + "\n")
        done = False
        for epoch in range(start_epoch, config.epochs):
            if done:
                break
            for batch in batcher.batches(epoch):
                breakdown, out = compute_pretrain_loss(encoder, batch, config.loss,
                                                       config.loss_space)
                total = breakdown.total
                if not torch.isfinite(total):
                    raise TrainingDiverged(step, last_finite)
                opt.zero_grad(set_to_none=True)
                total.backward()
                opt.step()

                monitor.update(step, encoder)
                log.write(breakdown.csv_row(step) + "\n")
                last_finite = breakdown.to_floats()
                final_loss = last_finite["total"]
                step += 1
                if config.max_steps and step >= config.max_steps:
                    done = True
                    break
                if config.stop_on_collapse and monitor.collapsed:
                    done = True
                    break
            if (config.checkpoint_every_epochs
                    and (epoch + 1) % config.checkpoint_every_epochs == 0):
                _save(encoder, opt, config, epoch + 1, step, monitor,
                      out_dir / f"encoder_epoch{epoch + 1}.pt")

    _save(encoder, opt, config, config.epochs, step, monitor, ckpt_path)
    return CheckpointHandle(
        path=str(ckpt_path),
        steps=step,
        final_loss=final_loss,
        log_path=str(log_path),
        collapse_history=list(monitor.history),
        collapsed=monitor.collapsed,
    )


def _save(encoder, opt, config, epoch, step, monitor, path):
    from ..config import to_plain_dict  # local import: config module depends on this one

    save_checkpoint(
        {
            "kind": "encoder",
            "config": to_plain_dict(config),
            "params": encoder.state_dict(),
            "optimizer": opt.state_dict(),
            "epoch": epoch,
            "step": step,
            "torch_rng": torch.get_rng_state(),
            "collapse_history": list(monitor.history),
            "collapse_events": list(monitor.events),
        },
        path,
    )


def load_encoder(ckpt_payload: dict) -> EncoderStack:
    """Rebuild the EncoderStack recorded in a checkpoint payload."""
    from ..config import from_plain_dict

    config = from_plain_dict(PretrainConfig, ckpt_payload["config"])
    encoder = build_encoder(config)
    encoder.load_state_dict(ckpt_payload["params"])
    return encoder
