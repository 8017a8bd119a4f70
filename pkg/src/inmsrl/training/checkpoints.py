"""Checkpoint persistence: named float32 tensor archives plus JSON metadata."""
from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import torch


def state_to_arrays(module: torch.nn.Module) -> dict:
    return {
        name: tensor.detach().cpu().numpy().astype("<f4")
        for name, tensor in module.state_dict().items()
    }


def param_hash(module: torch.nn.Module) -> str:
    """SHA-256 over (name, float32 little-endian bytes) in sorted order."""
    digest = hashlib.sha256()
    arrays = state_to_arrays(module)
    for name in sorted(arrays):
        digest.update(name.encode())
        digest.update(arrays[name].tobytes())
    return digest.hexdigest()


def save_checkpoint(base_path, module: torch.nn.Module, metadata: dict) -> Path:
    """Write `<base>.npz` (named float32 tensors) and `<base>.json`."""
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    np.savez(base.with_suffix(".npz"), **state_to_arrays(module))
    doc = dict(metadata)
    doc.setdefault("saved_at", datetime.now(timezone.utc).isoformat())
    doc["param_hash"] = param_hash(module)
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return base.with_suffix(".npz")


def load_checkpoint(base_path, module: torch.nn.Module) -> dict:
    """Load `<base>.npz` into `module`; returns the metadata dict."""
    base = Path(base_path)
    with np.load(base.with_suffix(".npz")) as archive:
        state = {
            name: torch.from_numpy(np.array(archive[name], dtype=np.float32))
            for name in archive.files
        }
    target_state = module.state_dict()
    cast = {
        name: tensor.to(target_state[name].dtype) if name in target_state else tensor
        for name, tensor in state.items()
    }
    module.load_state_dict(cast)
    meta_path = base.with_suffix(".json")
    if meta_path.exists():
        with open(meta_path) as fh:
            return json.load(fh)
    return {}


class MetricsLogger:
    """Append-only JSON-lines metrics log."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")
        self.rows = []

    def log(self, epoch: int, split: str, **components):
        row = {"epoch": epoch, "split": split, **components,
               "timestamp": datetime.now(timezone.utc).isoformat()}
        self.rows.append(row)
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def series(self, split: str, key: str):
        return [r[key] for r in self.rows if r["split"] == split and key in r]
