"""Run configuration: network geometry, corpus paths, and per-regime plans."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from inmsrl import dsp


@dataclass(frozen=True)
class NetConfig:
    """Spectrogram geometry and network sizing shared across regimes."""

    window: int = dsp.DEFAULT_WINDOW
    hop: int = dsp.DEFAULT_HOP
    n_mels: int = dsp.DEFAULT_N_MELS
    sample_rate: int = dsp.DEFAULT_SAMPLE_RATE
    depth: int = 6
    base_channels: int = 16
    direct_base_channels: int = 20  # bottleneck must split 5 ways
    kernel: int = 5
    embed_dim: int = 128  # per instrument; the disentangled space is 5x this

    @property
    def n_bins(self) -> int:
        return self.window // 2 + 1

    @property
    def disentangled_dim(self) -> int:
        return 5 * self.embed_dim


def desk_net_config(**overrides) -> NetConfig:
    """Reduced geometry for CPU-scale runs."""
    cfg = NetConfig(
        hop=1024,
        n_mels=64,
        depth=3,
        base_channels=8,
        direct_base_channels=10,
        kernel=3,
    )
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class RunConfig:
    corpus_dir: str
    out_dir: str
    seed: int = 0
    abx_records: str = None
    net: NetConfig = field(default_factory=NetConfig)
    train: dict = field(default_factory=dict)  # per-regime TrainPlan overrides
    eval: dict = field(default_factory=dict)

    def validate_paths(self):
        corpus = Path(self.corpus_dir)
        if not (corpus / "manifest.json").exists():
            raise FileNotFoundError(f"no manifest.json under {corpus}")
        if self.abx_records and not Path(self.abx_records).exists():
            raise FileNotFoundError(f"ABX records file not found: {self.abx_records}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["net"] = asdict(self.net)
        return doc


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_run_config(path) -> RunConfig:
    """Read a JSON or TOML config file into a RunConfig."""
    path = Path(path)
    if path.suffix == ".toml":
        import tomllib

        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    else:
        with open(path) as fh:
            doc = json.load(fh)
    net = NetConfig(**doc.pop("net", {}))
    known = {"corpus_dir", "out_dir", "seed", "abx_records", "train", "eval"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if "corpus_dir" not in doc or "out_dir" not in doc:
        raise ValueError(f"{path}: config must set corpus_dir and out_dir")
    return RunConfig(net=net, **doc)
