"""On-disk dataset layout.

    <root>/manifest.json                   version, image dims, hz, checksums
    <root>/records/<id>/frames.npy         float32, shape [T, H, W, 3]
    <root>/records/<id>/actions.csv        t,v,omega
    <root>/records/<id>/poses.csv          t,x,y,theta

Records are the unit of storage; training windows are re-sliced at load
time so the past/future horizons can change without regenerating data.
Numeric text uses the %.17g format (shortest exact float64 round-trip,
always >= 9 significant digits of precision). Each record carries a
sha256 over its three files; loads verify it and fail naming the record.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DatasetIntegrityError
from ..kinematics import HZ
from .records import TrajectoryRecord, slice_windows

MANIFEST_VERSION = 1


@dataclass
class Manifest:
    version: int
    image_height: int
    image_width: int
    channels: int
    hz: float
    frame_layout: str            # "height-major [T, H, W, C] float32 npy"
    records: list                # [{id, length, flags, checksum}]

    @property
    def record_ids(self):
        return [r["id"] for r in self.records]

    def dataset_checksum(self) -> str:
        blob = json.dumps([(r["id"], r["checksum"]) for r in self.records]).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "image_height": self.image_height,
            "image_width": self.image_width,
            "channels": self.channels,
            "hz": self.hz,
            "frame_layout": self.frame_layout,
            "records": self.records,
        }


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _record_dir(root: Path, record_id: str) -> Path:
    return Path(root) / "records" / record_id


def _record_checksum(rec_dir: Path) -> str:
    digest = hashlib.sha256()
    for name in ("frames.npy", "actions.csv", "poses.csv"):
        digest.update((rec_dir / name).read_bytes())
    return digest.hexdigest()


def write_dataset(records, root) -> Manifest:
    """Persist an iterable of TrajectoryRecord under ``root``; returns the manifest."""
    root = Path(root)
    (root / "records").mkdir(parents=True, exist_ok=True)
    entries = []
    image_hw = None
    for record in records:
        record.validate()
        rec_dir = _record_dir(root, record.record_id)
        rec_dir.mkdir(parents=True, exist_ok=True)
        np.save(rec_dir / "frames.npy", record.frames.astype(np.float32))
        with open(rec_dir / "actions.csv", "w") as f:
            f.write("t,v,omega\n")
            for t, (v, w) in zip(record.timestamps, record.actions):
                f.write(f"{_fmt(t)},{_fmt(v)},{_fmt(w)}\n")
        with open(rec_dir / "poses.csv", "w") as f:
            f.write("t,x,y,theta\n")
            for t, (x, y, th) in zip(record.timestamps, record.poses):
                f.write(f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(th)}\n")
        entries.append({
            "id": record.record_id,
            "length": len(record),
            "flags": list(record.flags),
            "checksum": _record_checksum(rec_dir),
        })
        if len(record):
            image_hw = record.frames.shape[1:3]

    if image_hw is None:
        image_hw = (98, 126)
    manifest = Manifest(
        version=MANIFEST_VERSION,
        image_height=int(image_hw[0]),
        image_width=int(image_hw[1]),
        channels=3,
        hz=HZ,
        frame_layout="height-major [T, H, W, C] float32 npy",
        records=entries,
    )
    with open(root / "manifest.json", "w") as f:
        json.dump(manifest.to_dict(), f, indent=1, sort_keys=True)
    return manifest


def load_manifest(root) -> Manifest:
    path = Path(root) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json under {root}")
    data = json.loads(path.read_text())
    if data.get("version") != MANIFEST_VERSION:
        raise DatasetIntegrityError(
            "<manifest>", f"version {data.get('version')} unsupported (expected {MANIFEST_VERSION})"
        )
    return Manifest(**data)


def _read_csv_columns(path: Path, expected_header: str):
    lines = path.read_text().splitlines()
    if not lines or lines[0] != expected_header:
        raise ValueError(f"{path.name}: expected header {expected_header!r}")
    rows = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(expected_header.split(",")))


def read_record(root, entry) -> TrajectoryRecord:
    record_id = entry["id"]
    rec_dir = _record_dir(Path(root), record_id)
    try:
        actual = _record_checksum(rec_dir)
    except FileNotFoundError as exc:
        raise DatasetIntegrityError(record_id, f"missing file: {exc.filename}") from exc
    if actual != entry["checksum"]:
        raise DatasetIntegrityError(
            record_id, f"checksum mismatch (manifest {entry['checksum'][:12]}..., "
                       f"files {actual[:12]}...)"
        )
    frames = np.load(rec_dir / "frames.npy")
    acts = _read_csv_columns(rec_dir / "actions.csv", "t,v,omega")
    poses = _read_csv_columns(rec_dir / "poses.csv", "t,x,y,theta")
    record = TrajectoryRecord(
        record_id=record_id,
        frames=frames,
        actions=acts[:, 1:3],
        poses=poses[:, 1:4],
        timestamps=acts[:, 0],
        flags=tuple(entry.get("flags", ())),
    )
    record.validate()
    return record


def read_dataset(root):
    """Iterate TrajectoryRecords under ``root``, verifying checksums."""
    manifest = load_manifest(root)
    for entry in manifest.records:
        yield read_record(root, entry)


def load_windows(root, tau_p: int = 6, tau_f: int = 20, stride: int = 1):
    """Re-slice every stored record into SampleWindows at the given horizons."""
    windows = []
    for record in read_dataset(root):
        windows.extend(slice_windows(record, tau_p=tau_p, tau_f=tau_f, stride=stride))
    return windows
