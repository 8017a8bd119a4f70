"""Deterministic synthetic multi-stem corpus generator.

Each piece gets a stable sonic identity so retrieval tasks have signal worth
learning at desk scale:

  - drums: an impulse train at a piece-unique tempo, filtered by a
    piece-specific percussive kernel (decaying noise plus a low thump)
  - bass / piano / guitar / residuals: band-limited harmonic tones at
    piece-unique fundamentals inside instrument registers, shaped by
    piece-specific note envelopes and slow amplitude drift

Regenerating with the same (n_pieces, duration, seed) is byte-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from inmsrl import dsp
from inmsrl.corpus.manifest import INSTRUMENTS, Corpus, PieceManifest, save_manifest

STEM_PEAK = 0.26

# fundamental registers (Hz) per pitched instrument
REGISTERS = {
    "bass": (41.2, 98.0),
    "piano": (220.0, 523.3),
    "guitar": (659.3, 1318.5),
    "residuals": (1661.2, 3135.9),
}
DRUM_IOI_RANGE = (0.28, 0.75)


def _piece_params(n_pieces: int, seed: int):
    """Per-piece parameter table; grids are permuted so identities never collide."""
    rng = np.random.default_rng(seed)
    iois = rng.permutation(np.linspace(*DRUM_IOI_RANGE, n_pieces))
    f0s = {
        inst: rng.permutation(np.geomspace(lo, hi, n_pieces))
        for inst, (lo, hi) in REGISTERS.items()
    }
    table = []
    for i in range(n_pieces):
        params = {
            "id": f"piece_{i:03d}",
            "drums": {
                "ioi_s": float(iois[i]),
                "kernel_decay": float(rng.uniform(25.0, 60.0)),
                "thump_hz": float(rng.uniform(48.0, 80.0)),
                "kernel_seed": int(rng.integers(0, 2**31 - 1)),
            },
        }
        for inst in REGISTERS:
            params[inst] = {
                "f0_hz": float(f0s[inst][i]),
                "rolloff": float(rng.uniform(0.7, 1.8)),
                "note_period_s": float(rng.uniform(0.35, 1.4)),
                "note_decay": float(rng.uniform(1.5, 6.0)),
                "lfo_hz": float(rng.uniform(0.05, 0.22)),
                "lfo_phase": float(rng.uniform(0.0, 2 * np.pi)),
                "phase_seed": int(rng.integers(0, 2**31 - 1)),
            }
        table.append(params)
    return table


def _render_drums(p, n_samples: int, sr: int) -> np.ndarray:
    train = np.zeros(n_samples)
    step = p["ioi_s"]
    k = 0
    while True:
        idx = int(round(k * step * sr))
        if idx >= n_samples:
            break
        train[idx] = 1.0 if k % 2 == 0 else 0.7
        k += 1
    krng = np.random.default_rng(p["kernel_seed"])
    t = np.arange(int(0.09 * sr)) / sr
    kernel = krng.standard_normal(len(t)) * np.exp(-p["kernel_decay"] * t)
    kernel += 1.2 * np.sin(2 * np.pi * p["thump_hz"] * t) * np.exp(-28.0 * t)
    out = fftconvolve(train, kernel)[:n_samples]
    return STEM_PEAK * out / np.max(np.abs(out))


def _render_tone(p, n_samples: int, sr: int) -> np.ndarray:
    t = np.arange(n_samples) / sr
    f0 = p["f0_hz"]
    n_harm = max(1, min(10, int(0.45 * sr / f0)))
    prng = np.random.default_rng(p["phase_seed"])
    tone = np.zeros(n_samples)
    for h in range(1, n_harm + 1):
        tone += h ** (-p["rolloff"]) * np.sin(
            2 * np.pi * f0 * h * t + prng.uniform(0, 2 * np.pi)
        )
    phase = np.mod(t, p["note_period_s"])
    env = (1.0 - np.exp(-phase / 0.006)) * np.exp(-p["note_decay"] * phase)
    drift = 1.0 + 0.3 * np.sin(2 * np.pi * p["lfo_hz"] * t + p["lfo_phase"])
    out = tone * env * drift
    return STEM_PEAK * out / np.max(np.abs(out))


def synth_corpus(
    out_dir,
    n_pieces: int,
    duration_s: float = 60.0,
    seed: int = 0,
    sample_rate: int = dsp.DEFAULT_SAMPLE_RATE,
    force: bool = False,
) -> Corpus:
    """Render a corpus to `out_dir` (stems + manifest + parameter sidecar)."""
    if n_pieces < 2:
        raise ValueError(f"need at least 2 pieces, got {n_pieces}")
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise FileExistsError(f"{out_dir} is not empty (pass force=True to overwrite)")
    out_dir.mkdir(parents=True, exist_ok=True)

    n_samples = int(round(duration_s * sample_rate))
    table = _piece_params(n_pieces, seed)
    pieces = []
    for params in table:
        piece_dir = out_dir / "stems" / params["id"]
        piece_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        for inst in INSTRUMENTS:
            if inst == "drums":
                samples = _render_drums(params["drums"], n_samples, sample_rate)
            else:
                samples = _render_tone(params[inst], n_samples, sample_rate)
            paths[inst] = piece_dir / f"{inst}.wav"
            dsp.save_wav(paths[inst], dsp.Waveform(samples, sample_rate))
        pieces.append(PieceManifest(piece_id=params["id"], stem_paths=paths))

    save_manifest(out_dir, pieces)
    sidecar = {
        "seed": seed,
        "n_pieces": n_pieces,
        "duration_s": duration_s,
        "sample_rate": sample_rate,
        "pieces": table,
    }
    with open(out_dir / "synth_params.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Corpus(pieces, sample_rate=sample_rate)
