"""Feature-space augmentation: Gaussian jitter and mixup interpolation.

Jitter is the feature-vector analog of the usual moderate image transforms;
"heavy" style augmentation is jitter with a larger sigma combined with
mixup. All functions are pure over an explicit RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("none", "moderate", "mixup", "moderate+mixup")


@dataclass(frozen=True)
class AugmentConfig:
    mode: str = "none"
    jitter_sigma: float = 0.1
    mixup_alpha: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"augment mode must be one of {MODES}, got {self.mode!r}")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if self.mixup_alpha <= 0:
            raise ValueError("mixup_alpha must be > 0")

    @property
    def uses_jitter(self) -> bool:
        return self.mode in ("moderate", "moderate+mixup")

    @property
    def uses_mixup(self) -> bool:
        return self.mode in ("mixup", "moderate+mixup")


def jitter(x: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """x + Normal(0, sigma^2) noise per coordinate; sigma=0 returns x unchanged."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0.0:
        return x
    return x + rng.normal(0.0, sigma, size=x.shape)


def mixup(x_i: np.ndarray, y_i: np.ndarray, x_j: np.ndarray, y_j: np.ndarray,
          lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Convex combination of two samples and their (soft) labels."""
    x_i, x_j = np.asarray(x_i, dtype=np.float64), np.asarray(x_j, dtype=np.float64)
    y_i, y_j = np.asarray(y_i, dtype=np.float64), np.asarray(y_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise ValueError(f"feature shapes differ: {x_i.shape} vs {x_j.shape}")
    if y_i.shape != y_j.shape:
        raise ValueError(f"label shapes differ: {y_i.shape} vs {y_j.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must be in [0, 1]")
    return lam * x_i + (1.0 - lam) * x_j, lam * y_i + (1.0 - lam) * y_j


def mixup_batch(bx: np.ndarray, by: np.ndarray, alpha: float,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Mix each batch row with a permuted partner, one Beta(alpha, alpha) lam per batch."""
    lam = float(rng.beta(alpha, alpha))
    partner = rng.permutation(len(bx))
    return mixup(bx, by, bx[partner], by[partner], lam)


def apply_augment(bx: np.ndarray, by: np.ndarray, config: AugmentConfig,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Apply the configured augmentation to one training batch (jitter, then mixup)."""
    if config.uses_jitter:
        bx = jitter(bx, config.jitter_sigma, rng)
    if config.uses_mixup:
        bx, by = mixup_batch(bx, by, config.mixup_alpha, rng)
    return bx, by
