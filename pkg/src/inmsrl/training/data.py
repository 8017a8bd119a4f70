"""Corpus views and tensor assembly for the training loops."""
from __future__ import annotations

import numpy as np
import torch

from inmsrl import dsp
from inmsrl.config import NetConfig
from inmsrl.corpus.manifest import INSTRUMENTS
from inmsrl.corpus.segments import slice_segments


class CorpusView:
    """Restriction of a corpus to a subset of pieces; caches stay shared."""

    def __init__(self, corpus, piece_ids):
        self._corpus = corpus
        self.piece_ids = tuple(piece_ids)
        missing = set(self.piece_ids) - set(corpus.piece_ids)
        if missing:
            raise ValueError(f"view references unknown pieces: {sorted(missing)}")

    def __len__(self):
        return len(self.piece_ids)

    def __getattr__(self, name):
        return getattr(self._corpus, name)


def split_pieces(corpus, val_fraction: float, seed: int):
    """Deterministic piece-level train/validation split."""
    ids = list(corpus.piece_ids)
    rng = np.random.default_rng([seed, 0xC0])
    order = rng.permutation(len(ids))
    n_val = max(1, int(round(val_fraction * len(ids))))
    if n_val >= len(ids):
        raise ValueError(f"validation fraction {val_fraction} leaves no training pieces")
    val_ids = sorted(ids[i] for i in order[:n_val])
    train_ids = sorted(ids[i] for i in order[n_val:])
    return CorpusView(corpus, train_ids), CorpusView(corpus, val_ids)


def segment_dataset(view, instrument: str, duration_s: float):
    """Non-silent grid segments of every piece in the view."""
    refs = []
    for pid in view.piece_ids:
        audible = set(view.nonsilent_starts(pid, instrument, duration_s))
        for ref in slice_segments(pid, view.length_s(pid), duration_s):
            if ref.start in audible:
                refs.append(ref)
    return refs


class SpectroPipeline:
    """STFT/mel assembly from segment references into torch batches."""

    def __init__(self, net: NetConfig):
        self.net = net

    def mag(self, wave) -> np.ndarray:
        return dsp.stft(wave, window=self.net.window, hop=self.net.hop).magnitude()

    def _stack(self, mags) -> torch.Tensor:
        arr = np.stack([np.ascontiguousarray(m.T) for m in mags])[:, None]
        return torch.as_tensor(arr, dtype=torch.float32)

    def mix_batch(self, corpus, specs) -> torch.Tensor:
        """(B, 1, bins, frames) magnitudes of each segment's stem mix."""
        return self._stack([self.mag(spec.load_mix(corpus)) for spec in specs])

    def stem_batch(self, corpus, specs, instrument: str) -> torch.Tensor:
        """(B, 1, bins, frames) magnitudes of one stem per segment."""
        return self._stack(
            [self.mag(spec.load_stem(corpus, instrument)) for spec in specs]
        )

    def mss_batch(self, corpus, refs, instrument: str):
        """(mix, stem) magnitude tensors for separation training."""
        mixes, stems = [], []
        for ref in refs:
            stem_set = corpus.load_segment(ref.piece_id, ref.start, ref.duration)
            mixes.append(self.mag(stem_set.mix()))
            stems.append(self.mag(stem_set.stems[instrument]))
        return self._stack(mixes), self._stack(stems)

    def stemset_mix_tensor(self, stem_set) -> torch.Tensor:
        return self._stack([self.mag(stem_set.mix())])

    def wave_tensor(self, wave) -> torch.Tensor:
        return self._stack([self.mag(wave)])


def combination_batch(pipeline, corpus, view, rng, batch_size: int, duration_s: float):
    """Random segments with a random non-silent stem subset mixed as input.

    Returns (mix tensor, patterns, stem_sets) so callers can build per-stem
    targets for reconstruction or regression.
    """
    from inmsrl.corpus.manifest import mix_down
    from inmsrl.corpus.triplets import COMBINATION_PATTERNS

    mixes, patterns, stem_sets = [], [], []
    ids = view.piece_ids
    for _ in range(batch_size):
        pid = ids[int(rng.integers(0, len(ids)))]
        n_slots = int(view.length_s(pid) // duration_s)
        start = float(int(rng.integers(0, n_slots)) * duration_s)
        stem_set = corpus.load_segment(pid, start, duration_s)
        pattern = COMBINATION_PATTERNS[int(rng.integers(0, len(COMBINATION_PATTERNS)))]
        mix = mix_down([stem_set.stems[i] for i in INSTRUMENTS if i in pattern])
        mixes.append(pipeline.mag(mix))
        patterns.append(pattern)
        stem_sets.append(stem_set)
    return pipeline._stack(mixes), patterns, stem_sets
