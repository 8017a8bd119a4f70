"""ABX preference records, consensus filtering, and model agreement."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import beta

from inmsrl.corpus.segments import SegmentRef

CONDITIONS = ("All-Diff", "One-Shared")
DEFAULT_MIN_CONSENSUS = 0.75


@dataclass(frozen=True)
class ABXRecord:
    """One "which of A or B sounds more like X?" item with human vote counts."""

    record_id: str
    instrument: str
    condition: str
    x: SegmentRef
    a: SegmentRef
    b: SegmentRef
    votes_a: int
    votes_b: int

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.votes_a < 0 or self.votes_b < 0 or self.votes_a + self.votes_b < 1:
            raise ValueError(
                f"record {self.record_id}: invalid votes ({self.votes_a}, {self.votes_b})"
            )
        if self.condition == "One-Shared":
            shared = (self.a.piece_id == self.x.piece_id) + (
                self.b.piece_id == self.x.piece_id
            )
            if shared != 1:
                raise ValueError(
                    f"record {self.record_id}: One-Shared requires exactly one of "
                    f"A/B from X's piece, found {shared}"
                )

    @property
    def total_votes(self) -> int:
        return self.votes_a + self.votes_b

    @property
    def consensus(self) -> float:
        return max(self.votes_a, self.votes_b) / self.total_votes

    @property
    def majority(self):
        if self.votes_a == self.votes_b:
            return None
        return "A" if self.votes_a > self.votes_b else "B"


def filter_consensus(records, min_consensus: float = DEFAULT_MIN_CONSENSUS):
    """Keep records whose majority share strictly exceeds the threshold."""
    return [r for r in records if r.consensus > min_consensus]


@dataclass(frozen=True)
class AgreementResult:
    accuracy: float
    n_used: int
    n_excluded: int
    ci_low: float
    ci_high: float
    weighted_accuracy: float


def clopper_pearson(k: int, n: int, alpha: float = 0.05):
    """Exact binomial confidence interval."""
    if n == 0:
        raise ValueError("no trials")
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def abx_agreement(
    embeddings,
    records,
    min_consensus: float = DEFAULT_MIN_CONSENSUS,
    condition=None,
    instrument=None,
    subspace=None,
) -> AgreementResult:
    """Fraction of consensus records where the model picks the majority answer.

    `embeddings` maps record_id -> (x_vec, a_vec, b_vec). The model's choice
    is the candidate closer to X in L2, over `subspace` dims when given. The
    weighted variant credits each record by the share of human votes that
    agree with the model's pick.
    """
    pool = [
        r
        for r in records
        if (condition is None or r.condition == condition)
        and (instrument is None or r.instrument == instrument)
    ]
    kept = filter_consensus(pool, min_consensus)
    if not kept:
        raise ValueError("no records left after the consensus filter")

    hits = 0
    agreeing_votes = 0
    total_votes = 0
    for rec in kept:
        x, a, b = (np.asarray(v, dtype=np.float64) for v in embeddings[rec.record_id])
        if subspace is not None:
            lo, hi = subspace
            x, a, b = x[lo:hi], a[lo:hi], b[lo:hi]
        pick = "A" if np.linalg.norm(x - a) < np.linalg.norm(x - b) else "B"
        hits += int(pick == rec.majority)
        agreeing_votes += rec.votes_a if pick == "A" else rec.votes_b
        total_votes += rec.total_votes

    ci_low, ci_high = clopper_pearson(hits, len(kept))
    return AgreementResult(
        accuracy=hits / len(kept),
        n_used=len(kept),
        n_excluded=len(pool) - len(kept),
        ci_low=ci_low,
        ci_high=ci_high,
        weighted_accuracy=agreeing_votes / total_votes,
    )


def abx_split(records, ratio: float = 0.7, seed: int = 0):
    """Disjoint train/test split, stratified by (instrument, condition)."""
    if len(records) < 10:
        raise ValueError(f"need at least 10 records to split, got {len(records)}")
    rng = np.random.default_rng(seed)
    strata = {}
    for rec in records:
        strata.setdefault((rec.instrument, rec.condition), []).append(rec)
    train, test = [], []
    for key in sorted(strata):
        group = strata[key]
        order = rng.permutation(len(group))
        n_train = int(round(ratio * len(group)))
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    return train, test


# -----------------------------
# JSON-lines persistence
# -----------------------------

def _ref_to_json(ref: SegmentRef):
    return {"piece_id": ref.piece_id, "start": ref.start, "duration": ref.duration}


def _ref_from_json(doc):
    return SegmentRef(doc["piece_id"], doc["start"], doc["duration"])


def save_abx_records(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "record_id": rec.record_id,
                        "instrument": rec.instrument,
                        "condition": rec.condition,
                        "x": _ref_to_json(rec.x),
                        "a": _ref_to_json(rec.a),
                        "b": _ref_to_json(rec.b),
                        "votes_a": rec.votes_a,
                        "votes_b": rec.votes_b,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_abx_records(path):
    records = []
    with open(Path(path)) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            records.append(
                ABXRecord(
                    record_id=doc["record_id"],
                    instrument=doc["instrument"],
                    condition=doc["condition"],
                    x=_ref_from_json(doc["x"]),
                    a=_ref_from_json(doc["a"]),
                    b=_ref_from_json(doc["b"]),
                    votes_a=doc["votes_a"],
                    votes_b=doc["votes_b"],
                )
            )
    return records
