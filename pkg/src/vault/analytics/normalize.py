"""Per-dimension normalization transforms (same-shape output)."""

from __future__ import annotations

import numpy as np

from vault.errors import ValidationError

MODES = ("minmax", "zscore")


def normalize_values(values, mode: str = "minmax") -> np.ndarray:
    """Normalize each dimension independently.

    ``minmax`` maps every dimension to [0, 1]; ``zscore`` to mean 0 and
    (population) standard deviation 1. Constant dimensions map to 0.
    """
    if mode not in MODES:
        raise ValidationError(f"unknown normalization mode {mode!r}; one of {MODES}")
    X = np.asarray(values, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got ndim={X.ndim}")
    if mode == "minmax":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        safe = np.where(span == 0, 1.0, span)
        out = (X - lo) / safe
        out[:, span == 0] = 0.0
    else:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        safe = np.where(sd == 0, 1.0, sd)
        out = (X - mu) / safe
        out[:, sd == 0] = 0.0
    return out.astype(np.float32)
