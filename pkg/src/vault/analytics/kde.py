"""Kernel density estimation on a grid, and mean-shift clustering on top.

The KDE discretizes 2-D points onto a regular grid of square cells: each
point splats a truncated Gaussian (radius ``3*sigma``) normalized so every
point contributes exactly unit mass, hence ``sum(density) * cell_area ==
num_points``. Mean-shift then hill-climbs each point on the density field
using bilinearly interpolated gradients, and merges converged positions
within ``0.5*sigma`` into modes; points sharing a mode form a cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from vault.colors import palette_color
from vault.core.payloads import Cluster, ClusterPayload
from vault.errors import ValidationError

TRUNCATION_SIGMAS = 3.0
ASCENT_STOP_FACTOR = 0.01  # stop when displacement < 0.01 * sigma
ASCENT_MAX_STEPS = 200
MODE_MERGE_FACTOR = 0.5  # merge converged positions within 0.5 * sigma
DEFAULT_RESOLUTION = 256


@dataclass
class KdeGrid:
    width: int  # cells along x
    height: int  # cells along y
    bounds: tuple  # (xmin, xmax, ymin, ymax) of the covered area
    density: np.ndarray  # (height, width), row i = y cell, col j = x cell
    sigma: float

    @property
    def cell_size(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / self.width

    def cell_centers(self) -> tuple:
        """(x centers, y centers) along each axis."""
        xmin, _, ymin, _ = self.bounds
        cell = self.cell_size
        xs = xmin + (np.arange(self.width) + 0.5) * cell
        ys = ymin + (np.arange(self.height) + 0.5) * cell
        return xs, ys

    def total_mass(self) -> float:
        return float(self.density.sum() * self.cell_size**2)


def _check_inputs(points, sigma, resolution) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError(f"expected N x 2 points, got shape {pts.shape}")
    if pts.shape[0] < 1:
        raise ValidationError("need at least one point")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points contain non-finite values")
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    if resolution < 8:
        raise ValidationError(f"resolution must be >= 8, got {resolution}")
    return pts


def kde_grid(points, sigma: float, resolution: int = DEFAULT_RESOLUTION) -> KdeGrid:
    """Density grid over the data bounding box padded by ``3*sigma``.

    ``resolution`` is the cell count along the longest padded side; cells
    are square, so the shorter side gets proportionally fewer. Zero-extent
    data (all points coincident) degenerates to a single cell holding all
    mass.
    """
    pts = _check_inputs(points, sigma, resolution)
    n = pts.shape[0]
    pad = TRUNCATION_SIGMAS * sigma
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)

    if np.all(hi == lo):
        bounds = (lo[0] - pad, lo[0] + pad, lo[1] - pad, lo[1] + pad)
        area = (2 * pad) ** 2
        density = np.full((1, 1), n / area)
        return KdeGrid(1, 1, bounds, density, sigma)

    xmin, ymin = lo - pad
    ext = (hi + pad) - (lo - pad)
    cell = ext.max() / resolution
    width = max(1, math.ceil(ext[0] / cell - 1e-9))
    height = max(1, math.ceil(ext[1] / cell - 1e-9))
    bounds = (xmin, xmin + width * cell, ymin, ymin + height * cell)

    density = np.zeros((height, width))
    xs = xmin + (np.arange(width) + 0.5) * cell
    ys = ymin + (np.arange(height) + 0.5) * cell
    radius = TRUNCATION_SIGMAS * sigma
    inv_two_sq = 1.0 / (2.0 * sigma * sigma)
    area = cell * cell
    for px, py in pts:
        jlo = max(0, int((px - radius - xmin) // cell))
        jhi = min(width, int((px + radius - xmin) // cell) + 1)
        ilo = max(0, int((py - radius - ymin) // cell))
        ihi = min(height, int((py + radius - ymin) // cell) + 1)
        dx2 = (xs[jlo:jhi] - px) ** 2
        dy2 = (ys[ilo:ihi] - py) ** 2
        r2 = dy2[:, None] + dx2[None, :]
        w = np.where(r2 <= radius * radius, np.exp(-r2 * inv_two_sq), 0.0)
        total = w.sum()
        if total <= 0.0:
            # Kernel falls between cell centers: deposit on the nearest cell.
            j = min(width - 1, max(0, int((px - xmin) // cell)))
            i = min(height - 1, max(0, int((py - ymin) // cell)))
            density[i, j] += 1.0 / area
            continue
        density[ilo:ihi, jlo:jhi] += w / (total * area)
    return KdeGrid(width, height, bounds, density, sigma)


def _bilinear(field: np.ndarray, grid: KdeGrid, xy: np.ndarray) -> np.ndarray:
    """Sample a cell-centered field at positions ``xy`` (N x 2)."""
    xmin, _, ymin, _ = grid.bounds
    cell = grid.cell_size
    u = (xy[:, 0] - xmin) / cell - 0.5
    v = (xy[:, 1] - ymin) / cell - 0.5
    u = np.clip(u, 0.0, grid.width - 1.0)
    v = np.clip(v, 0.0, grid.height - 1.0)
    j0 = np.clip(np.floor(u).astype(int), 0, max(grid.width - 2, 0))
    i0 = np.clip(np.floor(v).astype(int), 0, max(grid.height - 2, 0))
    j1 = np.minimum(j0 + 1, grid.width - 1)
    i1 = np.minimum(i0 + 1, grid.height - 1)
    fu = u - j0
    fv = v - i0
    return (field[i0, j0] * (1 - fu) * (1 - fv)
            + field[i0, j1] * fu * (1 - fv)
            + field[i1, j0] * (1 - fu) * fv
            + field[i1, j1] * fu * fv)


def mean_shift_cluster(points, sigma: float,
                       resolution: int = DEFAULT_RESOLUTION) -> ClusterPayload:
    """Cluster 2-D points by gradient ascent on the KDE grid.

    The per-step shift is the classic density-normalized gradient
    ``sigma^2 * grad(rho) / rho`` (capped at one sigma), evaluated with
    bilinear interpolation. Output clusters partition the input indices;
    colors cycle through the qualitative palette, largest cluster first.
    """
    pts = _check_inputs(points, sigma, resolution)
    grid = kde_grid(pts, sigma, resolution)
    if grid.width == 1 and grid.height == 1:
        positions = pts.copy()
    else:
        cell = grid.cell_size
        gy, gx = np.gradient(grid.density, cell)
        positions = pts.copy()
        active = np.ones(len(pts), dtype=bool)
        stop = ASCENT_STOP_FACTOR * sigma
        tiny = grid.density.max() * 1e-12 + 1e-300
        for _ in range(ASCENT_MAX_STEPS):
            if not active.any():
                break
            cur = positions[active]
            rho = np.maximum(_bilinear(grid.density, grid, cur), tiny)
            shift = np.stack([_bilinear(gx, grid, cur),
                              _bilinear(gy, grid, cur)], axis=1)
            shift *= (sigma * sigma / rho)[:, None]
            norms = np.linalg.norm(shift, axis=1)
            too_big = norms > sigma
            if too_big.any():
                shift[too_big] *= (sigma / norms[too_big])[:, None]
                norms[too_big] = sigma
            cur = cur + shift
            cur[:, 0] = np.clip(cur[:, 0], grid.bounds[0], grid.bounds[1])
            cur[:, 1] = np.clip(cur[:, 1], grid.bounds[2], grid.bounds[3])
            positions[active] = cur
            still = norms >= stop
            active[np.flatnonzero(active)[~still]] = False

    merge_radius = MODE_MERGE_FACTOR * sigma
    modes: list[np.ndarray] = []
    assignment = np.empty(len(pts), dtype=int)
    for idx, pos in enumerate(positions):
        for m, mode in enumerate(modes):
            if np.linalg.norm(pos - mode) < merge_radius:
                assignment[idx] = m
                break
        else:
            assignment[idx] = len(modes)
            modes.append(pos)

    order = sorted(range(len(modes)),
                   key=lambda m: (-(assignment == m).sum(), m))
    clusters = []
    for rank, m in enumerate(order):
        members = np.flatnonzero(assignment == m)
        clusters.append(Cluster(name=f"cluster {rank + 1}",
                                color=palette_color(rank),
                                member_indices=members))
    return ClusterPayload(clusters)
