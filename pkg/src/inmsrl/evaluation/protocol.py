"""Retrieval test-set constructions: pseudo test pieces and the labelled
visualization set."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from inmsrl.corpus.manifest import INSTRUMENTS, Corpus, StemSet

N_TARGETS = 10
N_NONTARGETS_PER_TARGET = 3


@dataclass(frozen=True)
class PseudoTestPiece:
    """One entry of the 40-piece dual-labelled retrieval test set."""

    piece_id: str
    kind: str  # "pseudo" | "normal"
    target_source: str
    nontarget_source: str
    target_label: str
    nontarget_label: str

    def load_segment(self, corpus: Corpus, target_instrument: str, start: float, duration: float) -> StemSet:
        stems = {}
        for inst in INSTRUMENTS:
            src = self.target_source if inst == target_instrument else self.nontarget_source
            stems[inst] = corpus.load_stem_segment(src, inst, start, duration)
        return StemSet(stems)


def build_mes_pseudo_set(
    corpus: Corpus,
    target_instrument: str,
    seed: int,
    allow_nontarget_reuse: bool = False,
):
    """Select 10 target pieces plus 3 non-target partners each.

    Returns 40 test pieces: 30 pseudo (target stem from the target piece,
    everything else from the partner) and the 10 target pieces themselves.
    Non-target partners never overlap the targets; with reuse disabled they
    are also pairwise distinct, which needs a corpus of at least 40 pieces.
    """
    del target_instrument  # construction is purely structural
    needed = N_TARGETS + (
        N_NONTARGETS_PER_TARGET if allow_nontarget_reuse else N_TARGETS * N_NONTARGETS_PER_TARGET
    )
    if len(corpus) < needed:
        raise ValueError(
            f"corpus has {len(corpus)} pieces; this construction needs >= {needed}"
        )
    rng = np.random.default_rng(seed)
    ids = list(corpus.piece_ids)
    targets = [ids[int(i)] for i in rng.choice(len(ids), size=N_TARGETS, replace=False)]
    pool = [p for p in ids if p not in targets]

    pieces = []
    if allow_nontarget_reuse:
        partner_lists = [
            [pool[int(i)] for i in rng.choice(len(pool), size=N_NONTARGETS_PER_TARGET, replace=False)]
            for _ in targets
        ]
    else:
        flat = [
            pool[int(i)]
            for i in rng.choice(
                len(pool), size=N_TARGETS * N_NONTARGETS_PER_TARGET, replace=False
            )
        ]
        partner_lists = [
            flat[k * N_NONTARGETS_PER_TARGET : (k + 1) * N_NONTARGETS_PER_TARGET]
            for k in range(N_TARGETS)
        ]

    for target, partners in zip(targets, partner_lists):
        for partner in partners:
            pieces.append(
                PseudoTestPiece(
                    piece_id=f"pseudo__{target}__{partner}",
                    kind="pseudo",
                    target_source=target,
                    nontarget_source=partner,
                    target_label=target,
                    nontarget_label=partner,
                )
            )
        pieces.append(
            PseudoTestPiece(
                piece_id=target,
                kind="normal",
                target_source=target,
                nontarget_source=target,
                target_label=target,
                nontarget_label=target,
            )
        )
    return pieces


def correct_label_sources(test_set, query_piece_id: str):
    """Pieces other than the query that carry the query's target label.

    Returns (pseudo_ids, normal_ids); used to audit the exclusion rule.
    """
    by_id = {p.piece_id: p for p in test_set}
    query = by_id[query_piece_id]
    same = [
        p
        for p in test_set
        if p.piece_id != query_piece_id and p.target_label == query.target_label
    ]
    return (
        sorted(p.piece_id for p in same if p.kind == "pseudo"),
        sorted(p.piece_id for p in same if p.kind == "normal"),
    )


@dataclass(frozen=True)
class VisualizationSegment:
    """One pseudo-segment of the 1,000-point labelled visualization set."""

    target_piece: str  # color label
    nontarget_piece: str  # shape label
    target_start: float
    nontarget_start: float
    segment_index: int
    duration: float

    def load(self, corpus: Corpus, target_instrument: str) -> StemSet:
        stems = {}
        for inst in INSTRUMENTS:
            if inst == target_instrument:
                stems[inst] = corpus.load_stem_segment(
                    self.target_piece, inst, self.target_start, self.duration
                )
            else:
                stems[inst] = corpus.load_stem_segment(
                    self.nontarget_piece, inst, self.nontarget_start, self.duration
                )
        return StemSet(stems)


def build_visualization_set(
    corpus: Corpus,
    target_instrument: str,
    seed: int,
    n_pieces: int = 10,
    segments_per_pair: int = 10,
    duration: float = 10.0,
):
    """All ordered (target, non-target) pairs over `n_pieces` pieces, with
    `segments_per_pair` randomly paired segments each: 1,000 points at the
    defaults. Diagonal pairs reuse one piece for both roles."""
    if len(corpus) < n_pieces:
        raise ValueError(f"corpus has {len(corpus)} pieces, need >= {n_pieces}")
    rng = np.random.default_rng(seed)
    ids = [corpus.piece_ids[int(i)] for i in rng.choice(len(corpus), size=n_pieces, replace=False)]

    # a fixed pool of segment starts per piece, shared across pairs
    pools = {}
    for pid in ids:
        span = corpus.length_s(pid) - duration
        if span < 0:
            raise ValueError(f"piece '{pid}' shorter than {duration}s")
        pools[pid] = rng.uniform(0.0, span, size=segments_per_pair)

    out = []
    k = 0
    for target in ids:
        for nontarget in ids:
            for _ in range(segments_per_pair):
                out.append(
                    VisualizationSegment(
                        target_piece=target,
                        nontarget_piece=nontarget,
                        target_start=float(pools[target][int(rng.integers(segments_per_pair))]),
                        nontarget_start=float(pools[nontarget][int(rng.integers(segments_per_pair))]),
                        segment_index=k,
                        duration=duration,
                    )
                )
                k += 1
    return out
