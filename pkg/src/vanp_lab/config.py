"""Layered run configuration.

A run resolves its config in three layers: dataclass defaults, then an
optional YAML file, then dotted-path command-line overrides
(``--pretrain.lr 1e-3``). Unknown keys are rejected at every layer, and
each command writes its fully resolved config next to its outputs so any
result can be reproduced from the artifacts alone.
"""

import dataclasses
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .datagen.world import WorldConfig
from .errors import ConfigError
from .evalviz.ablations import AblationSpec, default_ablation_specs
from .train.downstream import DownstreamConfig
from .train.pretrain import PretrainConfig

OUTPUT_ROOT_ENV = "VANP_LAB_CACHE"


def to_plain_dict(obj):
    """Dataclass tree -> plain dict/list/scalar tree (YAML- and json-safe)."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_plain_dict(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_plain_dict(v) for k, v in obj.items()}
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


def from_plain_dict(cls, data, path=""):
    """Build a dataclass from a plain dict, rejecting unknown keys."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or cls.__name__}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key '{path + key}'")
        kwargs[key] = _coerce(hints.get(key), value, path + key)
    return cls(**kwargs)


def _coerce(hint, value, path):
    if hint is None:
        return value
    if dataclasses.is_dataclass(hint):
        return from_plain_dict(hint, value, path + ".")
    origin = typing.get_origin(hint)
    if origin in (list, tuple):
        args = typing.get_args(hint)
        elem = args[0] if args and args[0] is not Ellipsis else None
        if elem is not None and dataclasses.is_dataclass(elem):
            return [from_plain_dict(elem, v, f"{path}[{i}].") for i, v in enumerate(value)]
        return list(value) if origin is list else tuple(value)
    try:
        if hint is float and not isinstance(value, float):
            return float(value)
        if hint is int and not isinstance(value, (int, bool)):
            return int(value)
        if hint is bool and isinstance(value, str):
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{path}': cannot interpret {value!r} "
                          f"as {hint.__name__}") from exc
    return value


@dataclass
class RunConfig:
    """Merged view of everything one invocation needs."""

    seed: int = 0
    output_root: str = ""            # empty -> $VANP_LAB_CACHE or ./runs
    dataset: str = ""                # dataset root for train/eval/ablate/viz
    checkpoint: str = ""             # encoder checkpoint for train/eval/viz
    records: int = 24                # expert rollouts for gen-data
    static_records: int = 0          # additional change-free records
    rollout_max_steps: int = 120
    viz_frames: int = 4              # frames per encoder row in overlay grids
    world: WorldConfig = field(default_factory=WorldConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    downstream: DownstreamConfig = field(default_factory=DownstreamConfig)
    ablations: typing.List[AblationSpec] = field(default_factory=default_ablation_specs)

    def resolved_output_root(self) -> Path:
        root = self.output_root or os.environ.get(OUTPUT_ROOT_ENV, "") or "runs"
        return Path(root)


def _set_by_path(tree: dict, dotted: str, value):
    parts = dotted.split(".")
    node = tree
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config key '{dotted}'")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config key '{dotted}'")
    node[leaf] = value


def _merge(base: dict, update: dict, path=""):
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown config key '{path + key}'")
        if isinstance(value, dict) and isinstance(base[key], dict):
            _merge(base[key], value, path + key + ".")
        else:
            base[key] = value


def load_run_config(config_path=None, overrides=None) -> RunConfig:
    """defaults <- YAML file <- dotted overrides; validates every key."""
    tree = to_plain_dict(RunConfig())
    if config_path:
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        loaded = yaml.safe_load(config_path.read_text()) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {config_path} must contain a mapping")
        _merge(tree, loaded)
    for dotted, raw in (overrides or {}).items():
        _set_by_path(tree, dotted, yaml.safe_load(raw) if isinstance(raw, str) else raw)
    return from_plain_dict(RunConfig, tree)


def write_resolved_config(config: RunConfig, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "resolved_config.yaml"
    path.write_text(yaml.safe_dump(to_plain_dict(config), sort_keys=True))
    return path
