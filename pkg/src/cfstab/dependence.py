"""Dependence statistic in the characteristic-function domain.

Two blocks are called (epsilon, T)-dependent when the supremum over the
product of two 1-norm balls of radius T of

    |joint c.f.(t1, t2) - marginal c.f.(t1) * marginal c.f.(t2)|

is at most epsilon. The statistic here is that supremum restricted to the
grid lattice; it is zero (to rounding) for independent inputs in analytic
mode and O(n^{-1/2}) for independent samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charfn import DEFAULT_CHUNK, GridSpec, grid_points
from .errors import DimensionTooLarge

MAX_MUTUAL_DIM = 8


@dataclass(frozen=True)
class DependenceEstimate:
    """Grid supremum of the joint-minus-product gap and where it is attained."""

    epsilon: float
    radius: float
    argmax_t1: np.ndarray
    argmax_t2: np.ndarray
    grid: GridSpec
    n: int


def _as_block(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _gap_estimate(gap: np.ndarray, pts1, pts2, grid: GridSpec, n: int) -> DependenceEstimate:
    idx = int(np.argmax(gap))
    i, k = divmod(idx, gap.shape[1])
    return DependenceEstimate(
        float(gap[i, k]), grid.radius, pts1[i].copy(), pts2[k].copy(), grid, n
    )


def joint_and_marginals(x, y, pts1, pts2, chunk: int = DEFAULT_CHUNK):
    """Single pass over rows accumulating the joint c.f. and both marginals."""
    n = x.shape[0]
    joint = np.zeros((pts1.shape[0], pts2.shape[0]), dtype=complex)
    m1 = np.zeros(pts1.shape[0], dtype=complex)
    m2 = np.zeros(pts2.shape[0], dtype=complex)
    for start in range(0, n, chunk):
        e1 = np.exp(1j * (x[start : start + chunk] @ pts1.T))
        e2 = np.exp(1j * (y[start : start + chunk] @ pts2.T))
        joint += e1.T @ e2
        m1 += e1.sum(axis=0)
        m2 += e2.sum(axis=0)
    return joint / n, m1 / n, m2 / n


def estimate_dependence(x, y, grid: GridSpec, chunk: int = DEFAULT_CHUNK) -> DependenceEstimate:
    """Empirical dependence statistic between two row-aligned sample blocks."""
    xb, yb = _as_block(x), _as_block(y)
    if xb.shape[0] != yb.shape[0]:
        raise ValueError("blocks must be row-aligned (same number of samples)")
    pts1 = grid_points(grid.with_dim(xb.shape[1]))
    pts2 = grid_points(grid.with_dim(yb.shape[1]))
    joint, m1, m2 = joint_and_marginals(xb, yb, pts1, pts2, chunk)
    gap = np.abs(joint - np.outer(m1, m2))
    return _gap_estimate(gap, pts1, pts2, grid, xb.shape[0])


def prefix_dependence(x, y, grid: GridSpec, prefixes, chunk: int = DEFAULT_CHUNK):
    """Dependence estimates at several row-prefix sample sizes in one pass.

    ``prefixes`` must be increasing and bounded by the block length; useful
    for convergence-rate studies without re-reading the rows.
    """
    xb, yb = _as_block(x), _as_block(y)
    if xb.shape[0] != yb.shape[0]:
        raise ValueError("blocks must be row-aligned (same number of samples)")
    cuts = [int(p) for p in prefixes]
    if cuts != sorted(cuts) or cuts[-1] > xb.shape[0] or cuts[0] < 1:
        raise ValueError("prefixes must be increasing and within the block length")
    pts1 = grid_points(grid.with_dim(xb.shape[1]))
    pts2 = grid_points(grid.with_dim(yb.shape[1]))
    joint = np.zeros((pts1.shape[0], pts2.shape[0]), dtype=complex)
    m1 = np.zeros(pts1.shape[0], dtype=complex)
    m2 = np.zeros(pts2.shape[0], dtype=complex)
    out = []
    done = 0
    for cut in cuts:
        for start in range(done, cut, chunk):
            stop = min(start + chunk, cut)
            e1 = np.exp(1j * (xb[start:stop] @ pts1.T))
            e2 = np.exp(1j * (yb[start:stop] @ pts2.T))
            joint += e1.T @ e2
            m1 += e1.sum(axis=0)
            m2 += e2.sum(axis=0)
        done = cut
        gap = np.abs(joint / cut - np.outer(m1 / cut, m2 / cut))
        out.append(_gap_estimate(gap, pts1, pts2, grid, cut))
    return out


def analytic_dependence(joint_fn, marginal1_fn, marginal2_fn, grid: GridSpec,
                        dim1: int, dim2: int) -> DependenceEstimate:
    """Dependence statistic from closed-form c.f.s instead of samples."""
    pts1 = grid_points(grid.with_dim(dim1))
    pts2 = grid_points(grid.with_dim(dim2))
    joint = np.asarray(joint_fn(pts1, pts2), dtype=complex)
    m1 = np.asarray(marginal1_fn(pts1), dtype=complex)
    m2 = np.asarray(marginal2_fn(pts2), dtype=complex)
    gap = np.abs(joint - np.outer(m1, m2))
    return _gap_estimate(gap, pts1, pts2, grid, 0)


def pairwise_dependence_matrix(samples, grid: GridSpec, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Symmetric matrix of coordinate-pair dependence statistics, zero diagonal."""
    x = _as_block(samples)
    d = x.shape[1]
    if d < 2:
        raise ValueError("need at least two coordinates")
    pts = grid_points(grid.with_dim(1))
    g = pts.shape[0]
    n = x.shape[0]
    joints = np.zeros((d, d, g, g), dtype=complex)
    margs = np.zeros((d, g), dtype=complex)
    for start in range(0, n, chunk):
        es = [
            np.exp(1j * (x[start : start + chunk, c : c + 1] @ pts.T)) for c in range(d)
        ]
        for i in range(d):
            margs[i] += es[i].sum(axis=0)
            for k in range(i + 1, d):
                joints[i, k] += es[i].T @ es[k]
    margs /= n
    out = np.zeros((d, d))
    for i in range(d):
        for k in range(i + 1, d):
            gap = np.abs(joints[i, k] / n - np.outer(margs[i], margs[k]))
            out[i, k] = out[k, i] = float(gap.max())
    return out


def mutual_dependence(samples, grid: GridSpec, chunk: int = DEFAULT_CHUNK,
                      points_per_axis_multi: int = 13) -> float:
    """Maximum dependence statistic over all bipartitions of the coordinates.

    Singleton-versus-rest bipartitions embed every coordinate pair (set the
    other lattice coordinates to zero), so this never falls below the largest
    pairwise statistic on the same grid template.

    Sides with two or more coordinates use at most ``points_per_axis_multi``
    lattice points per axis; the pair count is quadratic in grid size and the
    full 1-d resolution is unaffordable there.
    """
    x = _as_block(samples)
    d = x.shape[1]
    if d < 2:
        raise ValueError("need at least two coordinates")
    if d > MAX_MUTUAL_DIM:
        raise DimensionTooLarge(f"bipartition enumeration capped at d = {MAX_MUTUAL_DIM}")
    multi = min(grid.points_per_axis, points_per_axis_multi)
    if multi % 2 == 0:
        multi += 1
    best = 0.0
    # subsets containing coordinate 0, excluding the full set
    for code in range(0, 2 ** (d - 1) - 1):
        left = [0] + [c + 1 for c in range(d - 1) if code & (1 << c)]
        right = [c for c in range(d) if c not in left]
        pts_left = grid_points(
            grid.with_dim(len(left)) if len(left) == 1
            else GridSpec(grid.radius, multi, len(left))
        )
        pts_right = grid_points(
            grid.with_dim(len(right)) if len(right) == 1
            else GridSpec(grid.radius, multi, len(right))
        )
        joint, m1, m2 = joint_and_marginals(x[:, left], x[:, right], pts_left, pts_right, chunk)
        gap = np.abs(joint - np.outer(m1, m2))
        best = max(best, float(gap.max()))
    return best
