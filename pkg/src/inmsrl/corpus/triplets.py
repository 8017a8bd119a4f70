"""Triplet construction: same-song, pseudo-piece, and preference-derived.

Triplets are held symbolically (per-instrument source references) so that
streams can be regenerated cheaply every mini-batch; audio is materialised
only when a training loop asks for it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from inmsrl import dsp
from inmsrl.corpus.manifest import INSTRUMENTS, Corpus, StemSet

PROVENANCES = ("s4", "pseudo_basic", "pseudo_additional", "abx")


@dataclass(frozen=True)
class SegmentSpec:
    """Per-instrument (piece_id, start_s) sources for one segment.

    A source of None stands for silence, used by preference triplets that
    carry only the target instrument's audio.
    """

    sources: dict
    duration: float

    def __post_init__(self):
        if set(self.sources) != set(INSTRUMENTS):
            raise ValueError(f"sources must cover {INSTRUMENTS}")

    @classmethod
    def normal(cls, piece_id: str, start: float, duration: float) -> "SegmentSpec":
        return cls({inst: (piece_id, start) for inst in INSTRUMENTS}, duration)

    @classmethod
    def pseudo(
        cls,
        target_instrument: str,
        target_source,
        nontarget_source,
        duration: float,
    ) -> "SegmentSpec":
        sources = {
            inst: (target_source if inst == target_instrument else nontarget_source)
            for inst in INSTRUMENTS
        }
        return cls(sources, duration)

    def source_piece(self, instrument: str):
        src = self.sources[instrument]
        return None if src is None else src[0]

    def materialize(self, corpus: Corpus) -> StemSet:
        return StemSet({inst: self.load_stem(corpus, inst) for inst in INSTRUMENTS})

    def load_stem(self, corpus: Corpus, instrument: str) -> dsp.Waveform:
        src = self.sources[instrument]
        if src is None:
            n = int(round(self.duration * corpus.sample_rate))
            return dsp.Waveform(np.zeros(n), corpus.sample_rate)
        return corpus.load_stem_segment(src[0], instrument, src[1], self.duration)

    def load_mix(self, corpus: Corpus) -> dsp.Waveform:
        return self.materialize(corpus).mix()


@dataclass(frozen=True)
class Triplet:
    anchor: SegmentSpec
    positive: SegmentSpec
    negative: SegmentSpec
    target_instrument: str
    provenance: str

    def __post_init__(self):
        if self.target_instrument not in INSTRUMENTS:
            raise ValueError(f"unknown instrument {self.target_instrument!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


# -----------------------------
# Pattern enumeration
# -----------------------------

def all_combination_patterns():
    """The 31 non-empty instrument subsets, in a fixed canonical order."""
    patterns = []
    for bits in range(1, 32):
        patterns.append(
            frozenset(inst for i, inst in enumerate(INSTRUMENTS) if bits >> i & 1)
        )
    return tuple(patterns)


COMBINATION_PATTERNS = all_combination_patterns()


def sample_combination_input(stem_set: StemSet, rng: np.random.Generator):
    """Uniformly draw one of the 31 non-silent stem subsets and mix it."""
    pattern = COMBINATION_PATTERNS[int(rng.integers(0, len(COMBINATION_PATTERNS)))]
    from inmsrl.corpus.manifest import mix_down

    mix = mix_down([stem_set.stems[inst] for inst in INSTRUMENTS if inst in pattern])
    return mix, pattern


# -----------------------------
# Segment draws
# -----------------------------

def _draw_nonsilent_start(
    corpus: Corpus,
    piece_id: str,
    instrument: str,
    duration: float,
    rng: np.random.Generator,
    exclude=(),
):
    starts = [
        s
        for s in corpus.nonsilent_starts(piece_id, instrument, duration)
        if s not in exclude
    ]
    if not starts:
        raise ValueError(
            f"piece '{piece_id}' has no eligible non-silent '{instrument}' "
            f"segment of {duration}s"
        )
    return starts[int(rng.integers(0, len(starts)))]


def _draw_any_start(corpus: Corpus, piece_id: str, duration: float, rng):
    n_slots = int(corpus.length_s(piece_id) // duration)
    if n_slots < 1:
        raise ValueError(f"piece '{piece_id}' shorter than one {duration}s segment")
    return float(int(rng.integers(0, n_slots)) * duration)


def sample_s4_triplet(
    corpus: Corpus, target_instrument: str, duration: float, rng: np.random.Generator
) -> Triplet:
    """Same-song positive, other-song negative; all audible in the target stem."""
    if len(corpus) < 2:
        raise ValueError("same-song triplets need at least 2 pieces")
    ids = corpus.piece_ids
    anchor_piece = ids[int(rng.integers(0, len(ids)))]
    anchor_start = _draw_nonsilent_start(corpus, anchor_piece, target_instrument, duration, rng)
    positive_start = _draw_nonsilent_start(
        corpus, anchor_piece, target_instrument, duration, rng, exclude=(anchor_start,)
    )
    others = [i for i in ids if i != anchor_piece]
    negative_piece = others[int(rng.integers(0, len(others)))]
    negative_start = _draw_nonsilent_start(corpus, negative_piece, target_instrument, duration, rng)
    return Triplet(
        anchor=SegmentSpec.normal(anchor_piece, anchor_start, duration),
        positive=SegmentSpec.normal(anchor_piece, positive_start, duration),
        negative=SegmentSpec.normal(negative_piece, negative_start, duration),
        target_instrument=target_instrument,
        provenance="s4",
    )


def make_pseudo_piece(
    corpus: Corpus,
    target_instrument: str,
    target_piece: str,
    nontarget_piece: str,
    duration: float,
    rng: np.random.Generator,
) -> StemSet:
    """Segment whose target stem and remaining stems come from different pieces."""
    target_start = _draw_nonsilent_start(corpus, target_piece, target_instrument, duration, rng)
    nontarget_start = _draw_any_start(corpus, nontarget_piece, duration, rng)
    spec = SegmentSpec.pseudo(
        target_instrument,
        (target_piece, target_start),
        (nontarget_piece, nontarget_start),
        duration,
    )
    return spec.materialize(corpus)


def sample_pseudo_triplet(
    corpus: Corpus, target_instrument: str, duration: float, rng: np.random.Generator
):
    """One basic pseudo triplet plus its swapped additional companion.

    Basic layout: the anchor and positive share the target-stem piece but not
    the segment; the anchor and negative share the non-target source piece;
    the positive's non-target stems come from a third piece.

    The additional triplet reuses the same three segments with positive and
    negative swapped and targets a different instrument.
    """
    if len(corpus) < 3:
        raise ValueError("pseudo triplets need at least 3 distinct pieces")
    ids = list(corpus.piece_ids)
    picks = rng.choice(len(ids), size=3, replace=False)
    target_src, nontarget_src, third_src = (ids[int(i)] for i in picks)

    anchor_t = _draw_nonsilent_start(corpus, target_src, target_instrument, duration, rng)
    positive_t = _draw_nonsilent_start(
        corpus, target_src, target_instrument, duration, rng, exclude=(anchor_t,)
    )
    negative_pool = [i for i in ids if i != target_src]
    negative_piece = negative_pool[int(rng.integers(0, len(negative_pool)))]
    negative_t = _draw_nonsilent_start(corpus, negative_piece, target_instrument, duration, rng)

    anchor = SegmentSpec.pseudo(
        target_instrument,
        (target_src, anchor_t),
        (nontarget_src, _draw_any_start(corpus, nontarget_src, duration, rng)),
        duration,
    )
    positive = SegmentSpec.pseudo(
        target_instrument,
        (target_src, positive_t),
        (third_src, _draw_any_start(corpus, third_src, duration, rng)),
        duration,
    )
    negative = SegmentSpec.pseudo(
        target_instrument,
        (negative_piece, negative_t),
        (nontarget_src, _draw_any_start(corpus, nontarget_src, duration, rng)),
        duration,
    )
    basic = Triplet(anchor, positive, negative, target_instrument, "pseudo_basic")

    other_instruments = [i for i in INSTRUMENTS if i != target_instrument]
    swapped_target = other_instruments[int(rng.integers(0, len(other_instruments)))]
    additional = Triplet(
        anchor=anchor,
        positive=negative,
        negative=positive,
        target_instrument=swapped_target,
        provenance="pseudo_additional",
    )
    return basic, additional


# -----------------------------
# Preference triplets
# -----------------------------

def build_paft_triplets(
    abx_records,
    target_instrument: str,
    corpus: Corpus,
    regime: str,
    rng: np.random.Generator,
):
    """Turn majority-labelled ABX records into training triplets.

    regime "clean" keeps only the target instrument's audio (other stems are
    silent); regime "pseudo" wraps each stimulus in a pseudo piece whose
    non-target stems follow the basic-triplet source layout.

    Returns (triplets, n_tied_excluded).
    """
    if regime not in ("clean", "pseudo"):
        raise ValueError(f"unknown regime {regime!r}")
    triplets = []
    n_tied = 0
    for rec in abx_records:
        if rec.instrument != target_instrument:
            continue
        if rec.votes_a == rec.votes_b:
            n_tied += 1
            continue
        pos_ref, neg_ref = (rec.a, rec.b) if rec.votes_a > rec.votes_b else (rec.b, rec.a)
        duration = rec.x.duration

        if regime == "clean":
            make = lambda ref: SegmentSpec(
                {
                    inst: ((ref.piece_id, ref.start) if inst == target_instrument else None)
                    for inst in INSTRUMENTS
                },
                duration,
            )
            anchor, positive, negative = make(rec.x), make(pos_ref), make(neg_ref)
        else:
            stimulus_pieces = {rec.x.piece_id, pos_ref.piece_id, neg_ref.piece_id}
            pool = [p for p in corpus.piece_ids if p not in stimulus_pieces]
            if len(pool) < 2:
                pool = list(corpus.piece_ids)
            picks = rng.choice(len(pool), size=2, replace=False)
            shared_src, third_src = pool[int(picks[0])], pool[int(picks[1])]
            wrap = lambda ref, src: SegmentSpec.pseudo(
                target_instrument,
                (ref.piece_id, ref.start),
                (src, _draw_any_start(corpus, src, duration, rng)),
                duration,
            )
            anchor = wrap(rec.x, shared_src)
            positive = wrap(pos_ref, third_src)
            negative = wrap(neg_ref, shared_src)

        triplets.append(
            Triplet(anchor, positive, negative, target_instrument, "abx")
        )
    return triplets, n_tied
