"""Training plans, per-regime defaults, and the early-stopping rule."""
from __future__ import annotations

from dataclasses import dataclass, replace

REGIMES = (
    "mss",
    "clean",
    "cascade",
    "cascade_ft",
    "cascade_paft",
    "direct_pretrain",
    "direct_multitask",
    "paft",
)

# learning rates: extractor stages 5e-5, end-to-end fine-tuning 1e-5,
# preference fine-tuning 5e-5, direct family 1e-4; the separation stage
# has no published rate and uses a conventional Adam default
DEFAULT_LR = {
    "mss": 1e-3,
    "clean": 5e-5,
    "cascade": 5e-5,
    "cascade_ft": 1e-5,
    "cascade_paft": 5e-5,
    "direct_pretrain": 1e-4,
    "direct_multitask": 1e-4,
    "paft": 5e-5,
}

VALIDATION_FRACTION = 270 / 1200  # validation/train piece proportion


@dataclass(frozen=True)
class TrainPlan:
    regime: str
    lr: float
    max_epochs: int = 400
    patience: int = 100
    paft_epochs: int = 100
    lambda_sep: float = 1.0
    lambda_rec: float = 1.0
    seed: int = 0
    margin: float = 1.0
    batch_size: int = 16
    steps_per_epoch: int = None  # None: one pass over the segment dataset
    triplets_per_epoch: int = 64
    recon_batch_size: int = 4
    val_fraction: float = VALIDATION_FRACTION
    segment_s: float = 3.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.patience > self.max_epochs:
            raise ValueError(
                f"patience ({self.patience}) exceeds max_epochs ({self.max_epochs})"
            )
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


def default_plan(regime: str, **overrides) -> TrainPlan:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    plan = TrainPlan(regime=regime, lr=DEFAULT_LR[regime])
    return replace(plan, **overrides) if overrides else plan


def early_stopper(history, patience: int):
    """Decide whether training should stop given per-epoch validation losses.

    Returns (stop, best_epoch). Stops once the first minimum is `patience`
    epochs behind the current one; ties keep the earliest epoch.
    """
    if len(history) == 0:
        raise ValueError("empty validation history")
    if patience < 1:
        raise ValueError(f"patience must be >= 1, got {patience}")
    best_epoch = int(min(range(len(history)), key=lambda i: (history[i], i)))
    current = len(history) - 1
    return current - best_epoch >= patience, best_epoch
