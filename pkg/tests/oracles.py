"""Independent reference implementations used to check the library.

Everything here is deliberately naive (direct sums, O(N^2) scans) and shares
no code with the package under test.
"""
from __future__ import annotations

from collections import Counter

import numpy as np


def direct_dft(frame: np.ndarray) -> np.ndarray:
    """O(N^2) DFT of one real frame, first N//2+1 bins."""
    n = len(frame)
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    basis = np.exp(-2j * np.pi * k * t / n)
    return basis @ frame


def hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def triplet_hinge(a, p, n, margin) -> float:
    """Direct evaluation: max(0, ||a-p|| - ||a-n|| + margin)."""
    d_ap = float(np.sqrt(np.sum((np.asarray(a) - np.asarray(p)) ** 2)))
    d_an = float(np.sqrt(np.sum((np.asarray(a) - np.asarray(n)) ** 2)))
    return max(0.0, d_ap - d_an + margin)


def knn5_majority(query_vec, vectors, piece_ids, exclude_row=None):
    """Brute-force 5NN vote with the library's documented tie-breaking.

    Majority piece id among the 5 nearest rows; ties broken by the smaller
    summed distance of the tied ids' neighbors, then lexicographically.
    """
    dists = np.sqrt(np.sum((vectors - np.asarray(query_vec)) ** 2, axis=1))
    order = [i for i in np.argsort(dists, kind="stable") if i != exclude_row]
    top = order[:5]
    votes = Counter(piece_ids[i] for i in top)
    best_count = max(votes.values())
    tied = [pid for pid, c in votes.items() if c == best_count]
    if len(tied) == 1:
        return tied[0]
    sums = {pid: sum(dists[i] for i in top if piece_ids[i] == pid) for pid in tied}
    best_sum = min(sums.values())
    tied = sorted(pid for pid, s in sums.items() if s == best_sum)
    return tied[0]


def leave_one_out_accuracy(vectors, piece_ids) -> float:
    """O(N^2) re-implementation of the normal retrieval score."""
    hits = 0
    for i in range(len(vectors)):
        pred = knn5_majority(vectors[i], vectors, piece_ids, exclude_row=i)
        hits += int(pred == piece_ids[i])
    return hits / len(vectors)


def finite_difference_grad(loss_fn, params, picks, rel_step=1e-4):
    """Central differences of `loss_fn()` w.r.t. selected parameter scalars.

    `picks` is a list of (tensor, flat_index). Tensors are perturbed in place
    and restored. Returns one gradient estimate per pick.
    """
    grads = []
    for tensor, flat in picks:
        view = tensor.detach().reshape(-1)
        orig = view[flat].item()
        h = rel_step * max(1.0, abs(orig))
        view[flat] = orig + h
        up = float(loss_fn())
        view[flat] = orig - h
        down = float(loss_fn())
        view[flat] = orig
        grads.append((up - down) / (2.0 * h))
    return grads
