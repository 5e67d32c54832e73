"""Exact t-SNE: perplexity-calibrated affinities and 2-D gradient descent.

This is the classic O(N^2) formulation for desk-scale data: per-point
Gaussian precisions found by binary search so the conditional
distribution's perplexity (2^entropy) matches the target, symmetrized and
normalized joint affinities, and gradient descent on the KL divergence to
a Student-t low-dimensional kernel with momentum, adaptive per-component
gains, and early exaggeration.

Stepping is incremental (``tsne_step`` advances any number of iterations)
so a caller can interleave snapshots, pause, or stop between blocks.
Given the same seed, results are bit-identical across runs on a platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vault.errors import ValidationError

METRICS = ("euclidean", "cosine")

MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
MOMENTUM_SWITCH_ITER = 250
GAIN_MIN = 0.01
INIT_SCALE = 1e-4
KL_RECORD_EVERY = 10
PERPLEXITY_TOL = 1e-5
_Q_FLOOR = 1e-12


@dataclass
class TsneParams:
    perplexity: float = 30.0
    iterations: int = 1000
    exaggeration_iters: int = 250
    exaggeration_factor: float = 4.0
    learning_rate: float = 200.0
    update_every: int = 10
    distance_metric: str = "euclidean"
    seed: int = 0

    def validate(self, num_items: int) -> None:
        if self.perplexity <= 0:
            raise ValidationError("perplexity must be positive")
        if self.perplexity >= (num_items - 1) / 3:
            raise ValidationError(
                f"perplexity {self.perplexity} too large for {num_items} items "
                f"(needs perplexity < (N-1)/3)")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.update_every < 1:
            raise ValidationError("update_every must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning rate must be positive")
        if self.distance_metric not in METRICS:
            raise ValidationError(f"unknown metric {self.distance_metric!r}; one of {METRICS}")


@dataclass
class TsneState:
    P: np.ndarray  # N x N joint affinities, symmetric, sum 1, zero diagonal
    Y: np.ndarray  # N x 2 embedding
    gains: np.ndarray  # N x 2
    velocity: np.ndarray  # N x 2
    iteration: int
    params: TsneParams
    kl_history: list = field(default_factory=list)  # (iteration, kl) pairs
    # Reused N x N scratch buffers for the descent (performance only).
    buffers: dict = field(default_factory=dict, repr=False, compare=False)


def pairwise_dissimilarities(data, metric: str = "euclidean") -> np.ndarray:
    """Zero-diagonal dissimilarity matrix: squared L2 or cosine distance."""
    X = np.asarray(data, dtype=np.float64)
    if metric == "euclidean":
        sq = np.sum(X * X, axis=1)
        d = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(d, 0.0, out=d)
    elif metric == "cosine":
        norms = np.linalg.norm(X, axis=1)
        safe = np.where(norms == 0, 1.0, norms)
        unit = X / safe[:, None]
        d = 1.0 - unit @ unit.T
        np.clip(d, 0.0, 2.0, out=d)
    else:
        raise ValidationError(f"unknown metric {metric!r}; one of {METRICS}")
    np.fill_diagonal(d, 0.0)
    return d


def _entropy_and_probs(d: np.ndarray, beta: float) -> tuple:
    """Natural-log entropy and probabilities of p_j ~ exp(-beta * d_j)."""
    shifted = d - d.min()  # shift-invariant; keeps exp() in range
    w = np.exp(-beta * shifted)
    total = w.sum()
    h = np.log(total) + beta * float(shifted @ w) / total
    return h, w / total


def row_beta_search(d: np.ndarray, perplexity: float,
                    tol: float = PERPLEXITY_TOL, max_iter: int = 200) -> tuple:
    """Find beta so that 2^H(p(beta)) == perplexity within ``tol``.

    ``d`` holds one row of dissimilarities to all *other* points. Rows of
    identical dissimilarities (duplicates included) yield the uniform
    distribution for any beta; the search then stops at the iteration cap
    and returns the uniform row.
    """
    d = np.asarray(d, dtype=np.float64)
    spread = d.max() - d.min()
    if spread <= 1e-12 * max(1.0, abs(d.max())):
        # Duplicates and equidistant rows: uniform for any beta. Searching
        # would only amplify float noise into spurious tie-breaks.
        return np.inf if d.max() == 0 else 0.0, np.full(d.shape, 1.0 / d.size)
    target = np.log(perplexity)  # 2^H_bits == e^H_nats
    beta, lo, hi = 1.0, 0.0, np.inf
    h, probs = _entropy_and_probs(d, beta)
    for _ in range(max_iter):
        if abs(np.exp(h) - perplexity) <= tol:
            break
        if h > target:  # entropy too high: sharpen
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = (beta + lo) / 2.0
        h, probs = _entropy_and_probs(d, beta)
    return beta, probs


def compute_affinities(data, perplexity: float, metric: str = "euclidean") -> np.ndarray:
    """Symmetric joint affinities P: non-negative, zero diagonal, sum 1."""
    X = np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValidationError("affinities need at least 2 points")
    if not 0 < perplexity <= n - 1:
        raise ValidationError(f"perplexity {perplexity} invalid for {n} points")
    d = pairwise_dissimilarities(X, metric)
    cond = np.zeros((n, n))
    others = ~np.eye(n, dtype=bool)
    for i in range(n):
        _, probs = row_beta_search(d[i, others[i]], perplexity)
        cond[i, others[i]] = probs
    joint = (cond + cond.T) / (2.0 * n)
    return joint


def _student_t_kernel(Y: np.ndarray) -> tuple:
    """(num, Q): unnormalized Student-t weights and the normalized joint Q."""
    sq = np.sum(Y * Y, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T)
    num = 1.0 / (1.0 + np.maximum(d2, 0.0))
    np.fill_diagonal(num, 0.0)
    return num, num / num.sum()


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], _Q_FLOOR))))


def kl_and_grad(P: np.ndarray, Y: np.ndarray) -> tuple:
    """KL(P || Q(Y)) and its exact analytic gradient with respect to Y."""
    num, Q = _student_t_kernel(Y)
    W = (P - Q) * num
    grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
    return kl_divergence(P, Q), grad


def tsne_init(data, params: TsneParams) -> TsneState:
    """Affinities plus a seeded small-Gaussian embedding init."""
    X = np.asarray(data, dtype=np.float64)
    params.validate(X.shape[0])
    P = compute_affinities(X, params.perplexity, params.distance_metric)
    rng = np.random.default_rng(params.seed)
    Y = rng.normal(0.0, INIT_SCALE, size=(X.shape[0], 2)).astype(np.float32)
    return TsneState(
        P=P.astype(np.float32),
        Y=Y,
        gains=np.ones_like(Y),
        velocity=np.zeros_like(Y),
        iteration=0,
        params=params,
    )


def _scratch(state: TsneState) -> dict:
    n = state.Y.shape[0]
    buffers = state.buffers
    if not buffers or buffers["num"].shape[0] != n:
        buffers["num"] = np.empty((n, n), dtype=np.float32)
        buffers["w"] = np.empty((n, n), dtype=np.float32)
    return buffers


def _kernel_into(Y: np.ndarray, out: np.ndarray) -> float:
    """Fill ``out`` with the Student-t weights of Y in place; returns their sum."""
    np.dot(Y, Y.T, out=out)
    sq = np.einsum("ij,ij->i", Y, Y)
    out *= -2.0
    out += sq[:, None]
    out += sq[None, :]
    np.maximum(out, 0.0, out=out)
    out += 1.0
    np.reciprocal(out, out=out)
    np.fill_diagonal(out, 0.0)
    return float(out.sum(dtype=np.float64))


def descent_gradient(P: np.ndarray, Y: np.ndarray, factor: float = 1.0,
                     buffers: dict | None = None) -> np.ndarray:
    """The fused float32 gradient used by the descent loop.

    Numerically equivalent (to float32 precision) to the float64 reference
    :func:`kl_and_grad`, but with in-place scratch reuse: the descent is
    memory-bound, and avoiding the N^2 temporaries roughly triples its
    throughput.
    """
    Y = np.ascontiguousarray(Y, dtype=np.float32)
    P = np.ascontiguousarray(P, dtype=np.float32)
    if buffers is None:
        buffers = {"num": np.empty(P.shape, np.float32), "w": np.empty(P.shape, np.float32)}
    num, w = buffers["num"], buffers["w"]
    total = _kernel_into(Y, num)
    np.multiply(P, np.float32(factor), out=w)
    q = _q_scratch(buffers, num)
    np.multiply(num, np.float32(-1.0 / total), out=q)
    w += q  # w = factor*P - Q
    w *= num
    grad = w @ Y
    grad *= -1.0
    grad += w.sum(axis=1)[:, None] * Y
    grad *= 4.0
    return grad


def _q_scratch(buffers: dict, num: np.ndarray) -> np.ndarray:
    q = buffers.get("q")
    if q is None or q.shape != num.shape:
        q = buffers["q"] = np.empty_like(num)
    return q


def tsne_step(state: TsneState, k: int = 1,
              learning_rate: float | None = None,
              exaggeration_factor: float | None = None) -> np.ndarray:
    """Advance ``k`` gradient descent iterations; returns an embedding snapshot.

    ``learning_rate`` and ``exaggeration_factor`` override the stored
    parameters for these iterations (they are hot-swappable mid-run).
    KL against the true (un-exaggerated) P is recorded every
    ``KL_RECORD_EVERY`` iterations and at the final one.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    params = state.params
    lr = np.float32(params.learning_rate if learning_rate is None else learning_rate)
    exaggeration = (params.exaggeration_factor if exaggeration_factor is None
                    else exaggeration_factor)
    buffers = _scratch(state)
    for _ in range(k):
        state.iteration += 1
        it = state.iteration
        factor = exaggeration if it <= params.exaggeration_iters else 1.0
        grad = descent_gradient(state.P, state.Y, factor, buffers)
        if not np.all(np.isfinite(grad)):
            raise ValidationError(f"non-finite gradient at iteration {it}")
        momentum = np.float32(MOMENTUM_EARLY if it < MOMENTUM_SWITCH_ITER
                              else MOMENTUM_LATE)
        same_sign = np.sign(grad) == np.sign(state.velocity)
        state.gains = np.where(same_sign, state.gains * np.float32(0.8),
                               state.gains + np.float32(0.2))
        np.maximum(state.gains, np.float32(GAIN_MIN), out=state.gains)
        state.velocity = momentum * state.velocity - lr * (state.gains * grad)
        state.Y += state.velocity
        state.Y -= state.Y.mean(axis=0)
        if it % KL_RECORD_EVERY == 0 or it == params.iterations:
            total = _kernel_into(state.Y, buffers["num"])
            q = _q_scratch(buffers, buffers["num"])
            np.multiply(buffers["num"], np.float32(1.0 / total), out=q)
            state.kl_history.append((it, kl_divergence(state.P.astype(np.float64), q)))
    return state.Y.copy()
