"""Single command-line entry point.

Subcommands map one-to-one onto the library operations:

    gen-data   synthesize a dataset of expert rollouts
    pretrain   self-supervised encoder pretraining
    train      one downstream training run
    eval       the full downstream benchmark grid
    ablate     the five-row pretext-signal ablation
    viz        activation-map overlays

Every flag of the form ``--dotted.path value`` overrides the matching
resolved-config key (unknown keys are rejected); ``--config file.yaml``
layers a config file under those overrides. Each command writes its
resolved config beside its outputs. Exit code 0 on success, nonzero with
an ``error:`` line on failure.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_run_config, write_resolved_config
from .errors import VanpLabError

COMMANDS = ("gen-data", "pretrain", "train", "eval", "ablate", "viz")


def _parse_overrides(tokens):
    overrides = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise VanpLabError(f"unexpected argument {tok!r} (expected --key value)")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise VanpLabError(f"missing value for override --{key}")
            value = tokens[i + 1]
            i += 2
        overrides[key] = value
    return overrides


def _load_config(args, extra) -> RunConfig:
    return load_run_config(args.config, _parse_overrides(extra))


def _out_dir(config: RunConfig, sub: str) -> Path:
    path = config.resolved_output_root() / sub
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_gen_data(args, extra) -> int:
    from .datagen.storage import write_dataset
    from .datagen.synthesize import synthesize_records

    config = _load_config(args, extra)
    out = Path(config.dataset) if config.dataset else _out_dir(config, "dataset")
    records = synthesize_records(config.world, config.records, config.static_records,
                                 max_steps=config.rollout_max_steps, seed=config.seed)
    manifest = write_dataset(records, out)
    write_resolved_config(config, out)
    print(f"wrote {len(manifest.records)} records to {out} "
          f"(checksum {manifest.dataset_checksum()[:12]})")
    return 0


def cmd_pretrain(args, extra) -> int:
    from .datagen.storage import load_windows
    from .train.pretrain import pretrain

    config = _load_config(args, extra)
    if not config.dataset:
        raise VanpLabError("pretrain needs --dataset pointing at a generated dataset")
    out = _out_dir(config, "pretrain")
    write_resolved_config(config, out)
    windows = load_windows(config.dataset)
    handle = pretrain(windows, config.pretrain, out,
                      resume_from=args.resume or None)
    print(f"pretrained {handle.steps} steps, final loss {handle.final_loss:.6g}, "
          f"collapsed={handle.collapsed}")
    print(f"checkpoint: {handle.path}")
    return 0


def cmd_train(args, extra) -> int:
    from .datagen.storage import load_windows
    from .train.checkpoint import load_checkpoint
    from .train.downstream import train_downstream, write_metrics_csv
    from .train.pretrain import build_encoder, load_encoder

    config = _load_config(args, extra)
    if not config.dataset:
        raise VanpLabError("train needs --dataset pointing at a generated dataset")
    out = _out_dir(config, "train")
    write_resolved_config(config, out)
    windows = load_windows(config.dataset)
    if config.checkpoint and config.checkpoint != "random":
        encoder = load_encoder(load_checkpoint(config.checkpoint))
        name, weights = "vanp", "pretrained"
    else:
        encoder = build_encoder(replace(config.pretrain, seed=config.downstream.seed))
        name, weights = "random-init", "random"
    result = train_downstream(windows, encoder, config.downstream, out,
                              encoder_name=name, weights_label=weights, run_id="train")
    path = write_metrics_csv([result], out / "metrics.csv")
    for row in result.metrics_rows():
        print(f"{row['encoder']} {row['mode']} {row['horizon_s']:g}s mse={row['mse']:.6g}")
    print(f"metrics: {path}")
    return 0


def cmd_eval(args, extra) -> int:
    from .evalviz.benchmark import run_benchmark

    config = _load_config(args, extra)
    if not config.dataset:
        raise VanpLabError("eval needs --dataset pointing at a generated dataset")
    out = _out_dir(config, "eval")
    write_resolved_config(config, out)
    encoders = []
    if config.checkpoint:
        encoders.append(("vanp", config.checkpoint))
    table = run_benchmark(encoders, config.dataset, config.pretrain, config.downstream,
                          out, jobs=args.jobs)
    csv_path = table.write_csv(out / "benchmark.csv")
    table.write_annotations(out / "benchmark_annotations.json")
    _write_eval_metrics(table, out / "metrics.csv")
    print(f"benchmark rows: {len(table.rows)} -> {csv_path}")
    return 0


def _write_eval_metrics(table, path):
    """train-module metrics interface view of a benchmark table."""
    with open(path, "w") as f:
        f.write("run_id,encoder,weights,mode,horizon_s,mse\n")
        for row in table.rows:
            if row["status"] != "ok":
                continue
            weights = table.annotations.get(f"weights::{row['spec']}", "pretrained")
            f.write(f"{row['run_id']},{row['spec']},{weights},{row['mode']},"
                    f"{row['horizon_s']:g},{row['mse']:.9g}\n")


def cmd_ablate(args, extra) -> int:
    from .evalviz.ablations import run_ablations

    config = _load_config(args, extra)
    if not config.dataset:
        raise VanpLabError("ablate needs --dataset pointing at a generated dataset")
    out = _out_dir(config, "ablate")
    write_resolved_config(config, out)
    table = run_ablations(config.dataset, config.ablations, config.pretrain,
                          config.downstream, out, jobs=args.jobs)
    csv_path = table.write_csv(out / "ablations.csv")
    table.write_annotations(out / "ablations_annotations.json")
    for cell in table.cells():
        print(f"{cell['spec']}: " + ", ".join(
            f"{k.replace('mse_', '')} mse={v:.6g}" for k, v in sorted(cell.items())
            if k.startswith("mse_")) + f" [{cell['status']}]")
    print(f"ablations: {csv_path}")
    return 0


def cmd_viz(args, extra) -> int:
    from .datagen.storage import read_dataset
    from .evalviz.activation import activation_map, render_overlay, render_overlay_grid
    from .train.checkpoint import load_checkpoint
    from .train.pretrain import build_encoder, load_encoder

    config = _load_config(args, extra)
    if not config.dataset:
        raise VanpLabError("viz needs --dataset pointing at a generated dataset")
    out = _out_dir(config, "viz")
    write_resolved_config(config, out)

    frames = []
    for record in read_dataset(config.dataset):
        for frame in record.frames[:: max(1, len(record) // 2)]:
            frames.append((f"{record.record_id}_t{len(frames)}", frame))
            if len(frames) >= config.viz_frames:
                break
        if len(frames) >= config.viz_frames:
            break
    if not frames:
        raise VanpLabError("dataset has no frames to visualize")

    encoders = {}
    if config.checkpoint:
        encoders["vanp"] = load_encoder(load_checkpoint(config.checkpoint))
    encoders["random-init"] = build_encoder(replace(config.pretrain, seed=config.seed))

    maps_by_encoder = {}
    for name, encoder in encoders.items():
        maps = []
        for frame_id, frame in frames:
            amap = activation_map(encoder, frame)
            render_overlay(frame, amap, out / f"{name}_{frame_id}.png")
            maps.append(amap)
        maps_by_encoder[name] = maps
    grid_path = render_overlay_grid([f for _, f in frames], maps_by_encoder,
                                    out / "overlay_grid.png")
    print(f"wrote {len(frames) * len(encoders)} overlays and {grid_path}")
    return 0


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "viz": cmd_viz,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vanp-lab",
        description="Desk-scale vision-action pretraining for visual navigation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, description=f"{name} (plus --dotted.key value overrides)")
        p.add_argument("--config", default=None, help="YAML config file")
        if name in ("eval", "ablate"):
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel cell jobs (default 1)")
        if name == "pretrain":
            p.add_argument("--resume", default=None,
                           help="checkpoint to resume pretraining from")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return _HANDLERS[args.command](args, extra)
    except (VanpLabError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # keep a structured last line even for surprises
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
