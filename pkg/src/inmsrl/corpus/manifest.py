"""Corpus manifests and stem access.

A corpus is an immutable, id-ordered collection of multi-stem pieces backed
by WAV files. Segment reads go through memory-mapped files so training can
touch many pieces without holding whole stems in RAM.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from inmsrl import dsp

INSTRUMENTS = ("drums", "bass", "piano", "guitar", "residuals")


@dataclass(frozen=True)
class PieceManifest:
    piece_id: str
    stem_paths: dict

    def __post_init__(self):
        missing = [inst for inst in INSTRUMENTS if inst not in self.stem_paths]
        if missing:
            raise ValueError(
                f"piece '{self.piece_id}' is missing stems: {', '.join(missing)}"
            )


@dataclass(frozen=True)
class StemSet:
    """Aligned per-instrument waveforms for one (possibly pseudo) segment."""

    stems: dict

    def __post_init__(self):
        if set(self.stems) != set(INSTRUMENTS):
            raise ValueError(f"stem set must cover {INSTRUMENTS}, got {set(self.stems)}")
        lengths = {len(w) for w in self.stems.values()}
        rates = {w.sample_rate for w in self.stems.values()}
        if len(lengths) != 1 or len(rates) != 1:
            raise ValueError(f"stems disagree on length ({lengths}) or rate ({rates})")

    @property
    def sample_rate(self) -> int:
        return next(iter(self.stems.values())).sample_rate

    def __len__(self) -> int:
        return len(next(iter(self.stems.values())))

    def mix(self) -> dsp.Waveform:
        """Sum of all stems, peak-normalized only if it would clip."""
        return mix_down([self.stems[inst] for inst in INSTRUMENTS])


def mix_down(waveforms) -> dsp.Waveform:
    total = np.sum([w.samples for w in waveforms], axis=0)
    peak = np.max(np.abs(total)) if len(total) else 0.0
    if peak > 1.0:
        total = total / peak
    return dsp.Waveform(total, sample_rate=waveforms[0].sample_rate)


class Corpus:
    """Validated, id-ordered collection of pieces with cached segment metadata."""

    def __init__(self, pieces, sample_rate: int = dsp.DEFAULT_SAMPLE_RATE):
        if len(pieces) == 0:
            raise ValueError("corpus contains zero pieces")
        ids = [p.piece_id for p in pieces]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate piece ids: {dupes}")
        self._pieces = {p.piece_id: p for p in sorted(pieces, key=lambda p: p.piece_id)}
        self.sample_rate = sample_rate
        self._lengths = {}
        for p in self._pieces.values():
            counts = set()
            for inst in INSTRUMENTS:
                path = Path(p.stem_paths[inst])
                if not path.exists():
                    raise FileNotFoundError(
                        f"piece '{p.piece_id}' stem '{inst}': no such file {path}"
                    )
                counts.add(dsp.wav_num_samples(path))
            if len(counts) != 1:
                raise ValueError(
                    f"piece '{p.piece_id}' stems have unequal lengths: {sorted(counts)}"
                )
            self._lengths[p.piece_id] = counts.pop()
        self._nonsilent_cache = {}

    def __len__(self) -> int:
        return len(self._pieces)

    @property
    def piece_ids(self):
        return tuple(self._pieces)

    def manifest(self, piece_id: str) -> PieceManifest:
        return self._pieces[piece_id]

    def num_samples(self, piece_id: str) -> int:
        return self._lengths[piece_id]

    def length_s(self, piece_id: str) -> float:
        return self._lengths[piece_id] / self.sample_rate

    def load_stem_segment(
        self, piece_id: str, instrument: str, start_s: float, duration_s: float
    ) -> dsp.Waveform:
        path = self._pieces[piece_id].stem_paths[instrument]
        start = int(round(start_s * self.sample_rate))
        n = int(round(duration_s * self.sample_rate))
        samples = dsp.load_wav_segment(path, start, n)
        return dsp.Waveform(samples, sample_rate=self.sample_rate)

    def load_segment(self, piece_id: str, start_s: float, duration_s: float) -> StemSet:
        return StemSet(
            {
                inst: self.load_stem_segment(piece_id, inst, start_s, duration_s)
                for inst in INSTRUMENTS
            }
        )

    def nonsilent_starts(
        self,
        piece_id: str,
        instrument: str,
        duration_s: float,
        threshold_dbfs: float = -60.0,
    ):
        """Grid-aligned segment starts whose stem is audible, cached per piece."""
        key = (piece_id, instrument, duration_s, threshold_dbfs)
        if key not in self._nonsilent_cache:
            from inmsrl.corpus.segments import is_silent, slice_segments

            refs = slice_segments(piece_id, self.length_s(piece_id), duration_s)
            starts = tuple(
                r.start
                for r in refs
                if not is_silent(
                    self.load_stem_segment(piece_id, instrument, r.start, duration_s),
                    threshold_dbfs,
                )
            )
            self._nonsilent_cache[key] = starts
        return self._nonsilent_cache[key]


def load_manifest(path) -> Corpus:
    """Read a manifest JSON file and return the validated corpus.

    Format: {"pieces": [{"id": str, "stems": {instrument: wav path}}]}.
    Relative stem paths are resolved against the manifest's directory.
    """
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    entries = doc.get("pieces", [])
    if not entries:
        raise ValueError(f"{path}: manifest lists zero pieces")
    pieces = []
    for entry in entries:
        piece_id = entry.get("id")
        if not piece_id:
            raise ValueError(f"{path}: piece entry without an id: {entry}")
        stems = entry.get("stems", {})
        resolved = {
            inst: (path.parent / p if not Path(p).is_absolute() else Path(p))
            for inst, p in stems.items()
        }
        try:
            pieces.append(PieceManifest(piece_id=piece_id, stem_paths=resolved))
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None
    return Corpus(pieces)


def save_manifest(corpus_dir, pieces) -> Path:
    """Write manifest.json with stem paths relative to `corpus_dir`."""
    corpus_dir = Path(corpus_dir)
    doc = {
        "pieces": [
            {
                "id": p.piece_id,
                "stems": {
                    inst: str(Path(p.stem_paths[inst]).relative_to(corpus_dir))
                    for inst in INSTRUMENTS
                },
            }
            for p in sorted(pieces, key=lambda p: p.piece_id)
        ]
    }
    out = corpus_dir / "manifest.json"
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out
