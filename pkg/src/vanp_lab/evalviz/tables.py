"""Benchmark/ablation result tables.

Tables are long-format: one row per (cell, horizon). Failed cells stay in
the table with status "failed" so emitted CSVs are always rectangular.
Published reference numbers ride along as annotations for context; they
are never pass/fail targets because the desk dataset is synthetic.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

CSV_FIELDS = ("run_id", "spec", "mode", "frames", "horizon_s", "mse", "status")

# Downstream trajectory MSE reported for the original large-scale training
# runs (frozen/fine-tuned x single/multi-frame, 3 s and 5 s horizons).
REFERENCE_BENCHMARK = {
    ("end-to-end", "random", "single", "finetune", 3.0): 0.116,
    ("end-to-end", "random", "single", "finetune", 5.0): 0.307,
    ("end-to-end", "random", "multi", "finetune", 3.0): 0.113,
    ("end-to-end", "random", "multi", "finetune", 5.0): 0.320,
    ("vanp", "pretrained", "single", "frozen", 3.0): 0.144,
    ("vanp", "pretrained", "single", "frozen", 5.0): 0.374,
    ("vanp", "pretrained", "single", "finetune", 3.0): 0.103,
    ("vanp", "pretrained", "single", "finetune", 5.0): 0.272,
    ("vanp", "pretrained", "multi", "frozen", 3.0): 0.133,
    ("vanp", "pretrained", "multi", "frozen", 5.0): 0.342,
    ("vanp", "pretrained", "multi", "finetune", 3.0): 0.114,
    ("vanp", "pretrained", "multi", "finetune", 5.0): 0.319,
}

# Published 3 s / 5 s MSE per pretext-signal ablation, in table order.
REFERENCE_ABLATIONS = {
    "Actions": {3.0: 0.167, 5.0: 0.499},
    "Goal": {3.0: 0.160, 5.0: 0.392},
    "Actions+GoalIn": {3.0: 0.155, 5.0: 0.386},
    "Actions+GoalOut": {3.0: 0.144, 5.0: 0.383},
    "Augmentations": {3.0: 0.133, 5.0: 0.342},
}

ABLATION_ORDER = tuple(REFERENCE_ABLATIONS)


@dataclass
class MetricsTable:
    rows: list = field(default_factory=list)       # dicts keyed by CSV_FIELDS
    annotations: dict = field(default_factory=dict)

    def add(self, run_id, spec, mode, frames, horizon_s, mse, status="ok"):
        self.rows.append({
            "run_id": run_id, "spec": spec, "mode": mode, "frames": frames,
            "horizon_s": float(horizon_s),
            "mse": float(mse) if mse is not None else math.nan,
            "status": status,
        })

    def cells(self):
        """Collapse horizons: one entry per (spec, mode, frames) with a column per horizon."""
        grouped = {}
        for row in self.rows:
            key = (row["spec"], row["mode"], row["frames"])
            cell = grouped.setdefault(key, {"spec": row["spec"], "mode": row["mode"],
                                            "frames": row["frames"], "status": row["status"]})
            cell[f"mse_{row['horizon_s']:g}s"] = row["mse"]
            if row["status"] != "ok":
                cell["status"] = row["status"]
        return list(grouped.values())

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(",".join(CSV_FIELDS) + "\n")
            for row in self.rows:
                mse = "" if math.isnan(row["mse"]) else f"{row['mse']:.9g}"
                f.write(f"{row['run_id']},{row['spec']},{row['mode']},{row['frames']},"
                        f"{row['horizon_s']:g},{mse},{row['status']}\n")
        return path

    def write_annotations(self, path) -> Path:
        import json

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        serializable = {
            "__".join(map(str, k)) if isinstance(k, tuple) else str(k): v
            for k, v in self.annotations.items()
        }
        path.write_text(json.dumps(serializable, indent=1, sort_keys=True))
        return path
