from inmsrl.corpus.manifest import (
    INSTRUMENTS,
    Corpus,
    PieceManifest,
    StemSet,
    load_manifest,
    mix_down,
    save_manifest,
)
from inmsrl.corpus.segments import SegmentRef, is_silent, slice_segments
from inmsrl.corpus.synth import synth_corpus
from inmsrl.corpus.triplets import (
    COMBINATION_PATTERNS,
    SegmentSpec,
    Triplet,
    all_combination_patterns,
    build_paft_triplets,
    make_pseudo_piece,
    sample_combination_input,
    sample_pseudo_triplet,
    sample_s4_triplet,
)

__all__ = [
    "INSTRUMENTS",
    "Corpus",
    "PieceManifest",
    "StemSet",
    "load_manifest",
    "mix_down",
    "save_manifest",
    "SegmentRef",
    "is_silent",
    "slice_segments",
    "synth_corpus",
    "COMBINATION_PATTERNS",
    "SegmentSpec",
    "Triplet",
    "all_combination_patterns",
    "build_paft_triplets",
    "make_pseudo_piece",
    "sample_combination_input",
    "sample_pseudo_triplet",
    "sample_s4_triplet",
]
