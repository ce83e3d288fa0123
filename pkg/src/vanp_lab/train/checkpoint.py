"""Versioned checkpoint container.

A checkpoint is a torch-serialized dict with a format version, a config
echo, parameter blobs keyed by module path (plain ``state_dict`` keys),
optimizer state, the epoch/step counters and the torch RNG state. Writes
are atomic (temp file + rename).
"""

import os
import tempfile

import torch

from ..errors import CheckpointError

CHECKPOINT_VERSION = 1


def save_checkpoint(state: dict, path) -> str:
    payload = dict(state)
    payload["version"] = CHECKPOINT_VERSION
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            torch.save(payload, f)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def load_checkpoint(path) -> dict:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise CheckpointError(f"{path} is not a checkpoint container")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {payload['version']} is not supported "
            f"(this build reads version {CHECKPOINT_VERSION})"
        )
    return payload
