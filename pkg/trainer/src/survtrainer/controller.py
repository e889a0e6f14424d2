"""Validation-loss schedule controller: halve the learning rate after
``lr_patience`` epochs without improvement, stop after ``stop_patience``."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class PlateauController:
    lr_patience: int = 5
    stop_patience: int = 10
    min_delta: float = 0.0

    best: float = field(default=float("inf"), init=False)
    streak: int = field(default=0, init=False)
    halvings: list[int] = field(default_factory=list, init=False)
    stopped_at: int | None = field(default=None, init=False)
    _epoch: int = field(default=0, init=False)

    def __post_init__(self):
        if not self.stop_patience > self.lr_patience:
            raise ValueError(
                f"stop_patience ({self.stop_patience}) must exceed "
                f"lr_patience ({self.lr_patience})"
            )

    def update(self, val_loss: float) -> tuple[bool, bool]:
        """Feed one epoch's validation loss; returns (halve_lr, stop)."""
        self._epoch += 1
        if val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.streak = 0
            return False, False
        self.streak += 1
        if self.streak >= self.stop_patience:
            self.stopped_at = self._epoch
            return False, True
        if self.streak % self.lr_patience == 0:
            self.halvings.append(self._epoch)
            return True, False
        return False, False
