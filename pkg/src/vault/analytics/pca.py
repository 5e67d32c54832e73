"""Principal component analysis via SVD of the mean-centered data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vault.errors import ValidationError


@dataclass
class PcaResult:
    components: np.ndarray  # D x K, orthonormal columns
    explained_variance: np.ndarray  # K, non-negative, descending
    projected: np.ndarray  # N x K scores
    mean: np.ndarray  # D


def pca_fit(data, k: int) -> PcaResult:
    """Fit the top-``k`` principal components.

    Equivalent to the eigendecomposition of the sample covariance
    (denominator N-1). Deterministic sign convention: each component's
    largest-magnitude entry is positive.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got ndim={X.ndim}")
    n, d = X.shape
    if n < 2:
        raise ValidationError("PCA needs at least 2 items")
    if not 1 <= k <= min(n - 1, d):
        raise ValidationError(f"k={k} out of range [1, {min(n - 1, d)}]")
    if not np.all(np.isfinite(X)):
        raise ValidationError("input contains non-finite values")

    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k].T.copy()
    variance = (s[:k] ** 2) / (n - 1)

    for j in range(k):
        pivot = np.argmax(np.abs(components[:, j]))
        if components[pivot, j] < 0:
            components[:, j] = -components[:, j]

    projected = centered @ components
    return PcaResult(components=components, explained_variance=variance,
                     projected=projected, mean=mean)
