"""Pretext-signal ablation runner.

Five named configurations vary what supervises the encoder: actions only,
goal only, both with the goal wired into the observation Transformer or
kept loss-side only, and the full recipe with augmentations. Every spec
pretrains with the same seed on the same dataset (the manifest checksum
is recorded) and is evaluated frozen, so the spec is the only variable.
Specs are independent jobs and can run in parallel processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from ..datagen.augment import AugmentationConfig

_CANONICAL = {
    # name: (lam, goal_wiring, augmentation_enabled)
    "Actions": (0.0, "out", False),
    "Goal": (1.0, "out", False),
    "Actions+GoalIn": (0.5, "in", False),
    "Actions+GoalOut": (0.5, "out", False),
    "Augmentations": (0.5, "out", True),
}


@dataclass
class AblationSpec:
    name: str
    lam: float = 0.5
    goal_wiring: str = "out"
    augmentation_enabled: bool = False

    def __post_init__(self):
        if self.name not in _CANONICAL:
            raise ValueError(f"unknown ablation {self.name!r}; expected one of "
                             f"{tuple(_CANONICAL)}")
        lam, wiring, aug = _CANONICAL[self.name]
        if (self.lam, self.goal_wiring, self.augmentation_enabled) != (lam, wiring, aug):
            raise ValueError(
                f"ablation {self.name!r} pins lam={lam}, goal_wiring={wiring!r}, "
                f"augmentation_enabled={aug}"
            )


def default_ablation_specs():
    return [AblationSpec(name, lam, wiring, aug)
            for name, (lam, wiring, aug) in _CANONICAL.items()]


def pretrain_config_for(spec: AblationSpec, base):
    """Specialize a PretrainConfig for one ablation row (seed untouched)."""
    loss = replace(base.loss, lam=spec.lam)
    aug = base.augmentation if spec.augmentation_enabled else AugmentationConfig.disabled()
    return replace(base, loss=loss, goal_wiring=spec.goal_wiring, augmentation=aug)


def _run_one_spec(job):
    """Worker: pretrain + frozen eval for a single spec. Picklable args/result."""
    from ..config import from_plain_dict
    from ..datagen.storage import load_windows
    from ..train.checkpoint import load_checkpoint
    from ..train.downstream import DownstreamConfig, train_downstream
    from ..train.pretrain import PretrainConfig, load_encoder, pretrain

    spec = AblationSpec(**job["spec"])
    pre_cfg = pretrain_config_for(spec, from_plain_dict(PretrainConfig, job["pretrain"]))
    down_cfg = replace(from_plain_dict(DownstreamConfig, job["downstream"]), mode="frozen")
    spec_dir = Path(job["out_dir"])
    try:
        windows = load_windows(job["dataset_root"])
        handle = pretrain(windows, pre_cfg, spec_dir / "pretrain")
        encoder = load_encoder(load_checkpoint(handle.path))
        result = train_downstream(
            windows, encoder, down_cfg, spec_dir / "downstream",
            encoder_name=spec.name, weights_label="pretrained", run_id=job["run_id"],
        )
        return {
            "name": spec.name, "status": "ok", "collapsed": handle.collapsed,
            "mse": {str(h): m for h, m in result.mse_by_horizon.items()},
        }
    except Exception as exc:  # isolate per-spec failures; table stays rectangular
        return {"name": spec.name, "status": "failed",
                "error": f"{type(exc).__name__}: {exc}"}


def run_ablations(dataset_root, specs, pretrain_config, downstream_config, out_dir,
                  run_id="ablate", jobs: int = 1):
    """Returns a MetricsTable with one frozen-eval row set per spec, in order."""
    from ..config import to_plain_dict
    from ..datagen.storage import load_manifest
    from .tables import REFERENCE_ABLATIONS, MetricsTable

    out_dir = Path(out_dir)
    manifest = load_manifest(dataset_root)
    job_list = [
        {
            "spec": to_plain_dict(spec),
            "pretrain": to_plain_dict(pretrain_config),
            "downstream": to_plain_dict(downstream_config),
            "dataset_root": str(dataset_root),
            "out_dir": str(out_dir / spec.name.replace("+", "_")),
            "run_id": run_id,
        }
        for spec in specs
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one_spec, job_list))
    else:
        outcomes = [_run_one_spec(job) for job in job_list]

    table = MetricsTable()
    table.annotations["dataset_checksum"] = manifest.dataset_checksum()
    table.annotations["reference"] = REFERENCE_ABLATIONS
    for outcome in outcomes:
        name = outcome["name"]
        if outcome["status"] == "ok":
            table.annotations[f"collapsed::{name}"] = outcome["collapsed"]
            for h_str, mse in sorted(outcome["mse"].items(), key=lambda kv: float(kv[0])):
                table.add(run_id, name, "frozen", "multi", float(h_str), mse, "ok")
        else:
            table.annotations[f"error::{name}"] = outcome["error"]
            for h in downstream_config.horizons_s:
                table.add(run_id, name, "frozen", "multi", h, None, "failed")
    return table
