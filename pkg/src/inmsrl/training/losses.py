"""Loss functions shared by every training regime."""
from __future__ import annotations

import torch


def triplet_loss(anchor, positive, negative, margin: float = 1.0) -> torch.Tensor:
    """Hinge on the L2 distance gap: max(0, d(a,p) - d(a,n) + margin).

    Accepts (D,) or (B, D) tensors; batches are averaged.
    """
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    a, p, n = (t if t.dim() > 1 else t.unsqueeze(0) for t in (anchor, positive, negative))
    if not (a.shape == p.shape == n.shape):
        raise ValueError(
            f"embedding shapes differ: {tuple(a.shape)}, {tuple(p.shape)}, {tuple(n.shape)}"
        )
    d_ap = torch.linalg.vector_norm(a - p, dim=-1)
    d_an = torch.linalg.vector_norm(a - n, dim=-1)
    return torch.clamp(d_ap - d_an + margin, min=0.0).mean()


def l1_loss(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return torch.mean(torch.abs(x - y))


def mse_loss(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean squared difference."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return torch.mean((x - y) ** 2)
