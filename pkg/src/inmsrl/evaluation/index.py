"""Embedding indexes, 5-nearest-neighbour retrieval, and CSV export."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

K_NEIGHBOURS = 5


@dataclass(frozen=True)
class EmbeddingRow:
    piece_id: str
    segment_index: int
    instrument: str
    vector: np.ndarray
    target_label: str = None
    color_label: str = None
    shape_label: str = None

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))
        if self.target_label is None:
            object.__setattr__(self, "target_label", self.piece_id)
        if self.color_label is None:
            object.__setattr__(self, "color_label", self.target_label)
        if self.shape_label is None:
            object.__setattr__(self, "shape_label", self.piece_id)


class EmbeddingIndex:
    """Read-only stack of embedding rows for one instrument's retrieval space."""

    def __init__(self, rows):
        rows = list(rows)
        if not rows:
            raise ValueError("embedding index needs at least one row")
        keys = [(r.piece_id, r.segment_index, r.instrument) for r in rows]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise ValueError(f"duplicate (piece, segment, instrument) rows: {dupes[:3]}")
        dims = {(r.instrument, len(r.vector)) for r in rows}
        by_inst = {}
        for inst, d in dims:
            by_inst.setdefault(inst, set()).add(d)
        bad = {i: sorted(ds) for i, ds in by_inst.items() if len(ds) > 1}
        if bad:
            raise ValueError(f"inconsistent vector dimensions per instrument: {bad}")
        self.rows = tuple(rows)
        self._matrices = {}

    def instrument_rows(self, instrument: str):
        idx = [i for i, r in enumerate(self.rows) if r.instrument == instrument]
        if instrument not in self._matrices:
            self._matrices[instrument] = np.stack([self.rows[i].vector for i in idx])
        return idx, self._matrices[instrument]


def _masked(matrix, vector, subspace):
    if subspace is None:
        return matrix, vector
    lo, hi = subspace
    return matrix[:, lo:hi], vector[lo:hi]


def _vote(labels, dists, order):
    top = order[:K_NEIGHBOURS]
    votes = Counter(labels[i] for i in top)
    best = max(votes.values())
    tied = [lab for lab, c in votes.items() if c == best]
    if len(tied) > 1:
        sums = {lab: sum(dists[i] for i in top if labels[i] == lab) for lab in tied}
        lowest = min(sums.values())
        tied = sorted(lab for lab, s in sums.items() if s == lowest)
    return tied[0]


def knn5_predict(
    index: EmbeddingIndex,
    query_vector,
    instrument: str,
    exclude_row=None,
    exclude_piece=None,
    subspace=None,
    label: str = "piece_id",
):
    """Majority label among the 5 nearest rows of `instrument`.

    Ties are broken by the smaller summed distance of each tied label's
    neighbours, then lexicographically.
    """
    row_idx, matrix = index.instrument_rows(instrument)
    matrix, query = _masked(matrix, np.asarray(query_vector, dtype=np.float64), subspace)
    keep = [
        k
        for k, i in enumerate(row_idx)
        if i != exclude_row
        and (exclude_piece is None or index.rows[i].piece_id != exclude_piece)
    ]
    if len(keep) < K_NEIGHBOURS:
        raise ValueError(
            f"need at least {K_NEIGHBOURS} eligible rows, have {len(keep)}"
        )
    dists = np.sqrt(np.sum((matrix[keep] - query) ** 2, axis=1))
    labels = [getattr(index.rows[row_idx[k]], label) for k in keep]
    order = np.argsort(dists, kind="stable")
    return _vote(labels, dists, order)


def mes_normal(index: EmbeddingIndex, instrument: str, subspace=None) -> float:
    """Leave-one-out 5NN music-id accuracy over every row of the instrument."""
    row_idx, _ = index.instrument_rows(instrument)
    hits = 0
    for i in row_idx:
        pred = knn5_predict(
            index, index.rows[i].vector, instrument, exclude_row=i, subspace=subspace
        )
        hits += int(pred == index.rows[i].piece_id)
    return hits / len(row_idx)


def mes_pseudo(index: EmbeddingIndex, instrument: str, subspace=None) -> float:
    """5NN accuracy over target labels, excluding all rows of the query's piece."""
    row_idx, _ = index.instrument_rows(instrument)
    hits = 0
    for i in row_idx:
        row = index.rows[i]
        pred = knn5_predict(
            index,
            row.vector,
            instrument,
            exclude_piece=row.piece_id,
            subspace=subspace,
            label="target_label",
        )
        hits += int(pred == row.target_label)
    return hits / len(row_idx)


# -----------------------------
# CSV export
# -----------------------------

def export_embeddings(rows, path) -> Path:
    """Write rows as CSV; vectors round-trip exactly at float32 precision."""
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to export an empty set of rows")
    dim = len(rows[0].vector)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["piece_id", "segment_index", "instrument", "color_label", "shape_label"]
            + [f"dim_{d}" for d in range(dim)]
        )
        for r in rows:
            vec = np.asarray(r.vector, dtype=np.float32)
            writer.writerow(
                [r.piece_id, r.segment_index, r.instrument, r.color_label, r.shape_label]
                + [format(v, ".9g") for v in vec]
            )
    return path


def import_embeddings(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 5
        for rec in reader:
            rows.append(
                EmbeddingRow(
                    piece_id=rec[0],
                    segment_index=int(rec[1]),
                    instrument=rec[2],
                    color_label=rec[3],
                    shape_label=rec[4],
                    vector=np.array([np.float32(v) for v in rec[5 : 5 + dim]]),
                )
            )
    return rows
