"""Characteristic functions: empirical, closed-form, Gaussian; grids; deficits.

Grid suprema over an axis-aligned lattice clipped to the 1-norm ball stand in
for true suprema over R^d; ``GridSpec.refine`` doubles the resolution while
keeping the old lattice an exact subset, so refinement studies compare
suprema over nested point sets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import GridMismatch, ModulusTooSmall, NoClosedForm, NotSymmetric
from .models import SourceSpec, TwoSumSystem

DEFAULT_CHUNK = 16384
MODULUS_FLOOR = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Lattice over [-radius, radius]^dim clipped to the 1-norm ball.

    ``points_per_axis`` must be odd so the origin is a lattice point; axis
    values are exact integer multiples of radius/half so refined lattices
    contain coarse ones bit-exactly.
    """

    radius: float
    points_per_axis: int
    dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("grid radius must be positive")
        if self.points_per_axis < 3 or self.points_per_axis % 2 == 0:
            raise ValueError("points_per_axis must be odd and >= 3")
        if self.dim < 1:
            raise ValueError("grid dim must be >= 1")

    def with_dim(self, dim: int) -> "GridSpec":
        return replace(self, dim=int(dim))

    def refine(self) -> "GridSpec":
        return replace(self, points_per_axis=2 * self.points_per_axis - 1)


@lru_cache(maxsize=128)
def _cached_points(radius: float, points_per_axis: int, dim: int) -> np.ndarray:
    half = (points_per_axis - 1) // 2
    axis = np.arange(-half, half + 1) * (radius / half)
    mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
    pts = mesh.reshape(-1, dim)
    keep = np.abs(pts).sum(axis=1) <= radius * (1.0 + 1e-12)
    out = pts[keep]
    out.setflags(write=False)
    return out

def grid_points(spec: GridSpec) -> np.ndarray:
    """Lattice points of the grid, ordered lexicographically by axis index."""
    return _cached_points(spec.radius, spec.points_per_axis, spec.dim)


@dataclass(frozen=True)
class CFGrid:
    """Characteristic-function values cached over one grid."""

    spec: GridSpec
    points: np.ndarray
    values: np.ndarray


def empirical_cf(samples, t) -> complex:
    """(1/n) sum_i exp(j t.x_i); exactly 1 at t = 0."""
    x = np.asarray(samples, dtype=float)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != tv.shape[0]:
        raise ValueError(f"dimension mismatch: samples d={x.shape[1]}, t d={tv.shape[0]}")
    return complex(np.exp(1j * (x @ tv)).mean())


def _lattice_step(points: np.ndarray) -> float | None:
    """Step of a symmetric 1-d lattice k*h, k = -half..half, else None."""
    if points.ndim != 2 or points.shape[1] != 1 or points.shape[0] % 2 == 0:
        return None
    col = points[:, 0]
    half = (col.size - 1) // 2
    if col[half] != 0.0 or col.size < 3:
        return None
    h = col[half + 1]
    if h <= 0 or not np.array_equal(col, np.arange(-half, half + 1) * h):
        return None
    return float(h)


def unit_phases(samples_1d: np.ndarray, points: np.ndarray) -> np.ndarray:
    """exp(j x t) for a column of samples over 1-d points.

    Symmetric lattices need one exponential per sample; the remaining powers
    are cumulative products (error growth half * eps, negligible here).
    """
    h = _lattice_step(points)
    if h is None:
        return np.exp(1j * np.outer(samples_1d, points[:, 0]))
    half = (points.shape[0] - 1) // 2
    out = np.empty((samples_1d.size, points.shape[0]), dtype=complex)
    base = np.exp(1j * h * samples_1d)
    out[:, half] = 1.0
    for k in range(1, half + 1):
        out[:, half + k] = out[:, half + k - 1] * base
    out[:, :half] = np.conj(out[:, half + 1 :][:, ::-1])
    return out


def empirical_cf_values(samples, points, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Empirical c.f. over many points, chunked over rows in a fixed order."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    pts = np.asarray(points, dtype=float)
    n = x.shape[0]
    acc = np.zeros(pts.shape[0], dtype=complex)
    if x.shape[1] == 1 and _lattice_step(pts) is not None:
        for start in range(0, n, chunk):
            acc += unit_phases(x[start : start + chunk, 0], pts).sum(axis=0)
        return acc / n
    for start in range(0, n, chunk):
        acc += np.exp(1j * (x[start : start + chunk] @ pts.T)).sum(axis=0)
    return acc / n


def gaussian_cf(mean, cov, t) -> complex:
    return complex(gaussian_cf_values(mean, cov, np.atleast_2d(np.asarray(t, dtype=float)))[0])


def gaussian_cf_values(mean, cov, points) -> np.ndarray:
    """exp(j t.m - t.Q t / 2) for points stacked in rows."""
    m = np.atleast_1d(np.asarray(mean, dtype=float))
    q = np.atleast_2d(np.asarray(cov, dtype=float))
    if float(np.max(np.abs(q - q.T))) > 1e-10:
        raise NotSymmetric("covariance must be symmetric")
    pts = np.asarray(points, dtype=float)
    quad = np.einsum("ij,jk,ik->i", pts, q, pts)
    return np.exp(1j * (pts @ m) - 0.5 * quad)


def _scalar_cf(source: SourceSpec, t: np.ndarray) -> np.ndarray:
    fam = source.family
    if fam == "gaussian":
        m, v = source.params
        return np.exp(1j * t * m - 0.5 * v * t * t)
    if fam == "uniform":
        lo, hi = source.params
        theta = 0.5 * (hi - lo) * t
        return np.exp(1j * t * 0.5 * (lo + hi)) * np.sinc(theta / np.pi)
    if fam == "laplace":
        loc, b = source.params
        return np.exp(1j * t * loc) / (1.0 + (b * t) ** 2)
    if fam == "rademacher":
        return np.cos(t).astype(complex)
    if fam == "gaussian-mixture":
        w, m, v = (np.asarray(p, dtype=float) for p in source.params)
        tt = t[..., None]
        return (w * np.exp(1j * tt * m - 0.5 * v * tt * tt)).sum(axis=-1)
    raise NoClosedForm(f"no catalogued closed form for family {fam!r}")


def analytic_cf(source: SourceSpec, t) -> complex:
    return complex(source_cf_values(source, np.atleast_2d(np.asarray(t, dtype=float)))[0])


def source_cf_values(source: SourceSpec, points) -> np.ndarray:
    """Closed-form c.f. of a d-dimensional block of the source.

    Coordinates are i.i.d. under the scalar family, so the block c.f. is the
    coordinate product; an intra-vector transform pulls the argument back.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if source.transform is not None:
        pts = pts @ source.transform
    out = np.ones(pts.shape[0], dtype=complex)
    for c in range(pts.shape[1]):
        out = out * _scalar_cf(source, pts[:, c])
    return out


def second_cf(value: complex, floor: float = MODULUS_FLOOR) -> complex:
    """Principal-branch complex logarithm of a c.f. value.

    Raises ModulusTooSmall below ``floor``; no unwrapping along paths.
    """
    z = complex(value)
    if abs(z) < floor:
        raise ModulusTooSmall(f"|value| = {abs(z):.3e} below floor {floor:.0e}")
    return complex(np.log(z))


def second_cf_values(values, floor: float = MODULUS_FLOOR) -> np.ndarray:
    z = np.asarray(values, dtype=complex)
    mods = np.abs(z)
    if mods.size and float(mods.min()) < floor:
        raise ModulusTooSmall(
            f"min |value| = {float(mods.min()):.3e} below floor {floor:.0e}"
        )
    return np.log(z)


def empirical_grid(samples, spec: GridSpec, chunk: int = DEFAULT_CHUNK) -> CFGrid:
    pts = grid_points(spec)
    return CFGrid(spec, pts, empirical_cf_values(samples, pts, chunk))


def analytic_grid(cf_fn, spec: GridSpec) -> CFGrid:
    pts = grid_points(spec)
    return CFGrid(spec, pts, np.asarray(cf_fn(pts), dtype=complex))


def gaussian_grid(mean, cov, spec: GridSpec) -> CFGrid:
    pts = grid_points(spec)
    return CFGrid(spec, pts, gaussian_cf_values(mean, cov, pts))


def cf_sup_distance(a: CFGrid, b: CFGrid) -> tuple[float, np.ndarray]:
    """Max absolute gap between two grids of c.f. values and where it occurs."""
    if a.spec != b.spec or a.values.shape != b.values.shape:
        raise GridMismatch(f"grids differ: {a.spec} vs {b.spec}")
    gap = np.abs(a.values - b.values)
    idx = int(np.argmax(gap))
    return float(gap[idx]), a.points[idx].copy()


def gaussianity_deficit(samples, spec: GridSpec, chunk: int = DEFAULT_CHUNK) -> float:
    """Sup over the grid of |empirical c.f. - moment-matched Gaussian c.f.|."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    mean = x.mean(axis=0)
    centered = x - mean
    ddof = 1 if x.shape[0] > 1 else 0
    cov = (centered.T @ centered) / max(x.shape[0] - ddof, 1)
    pts = grid_points(spec.with_dim(x.shape[1]))
    emp = empirical_cf_values(x, pts, chunk)
    gau = gaussian_cf_values(mean, cov, pts)
    return float(np.max(np.abs(emp - gau)))


def gaussianity_deficit_analytic(cf_fn, mean, cov, spec: GridSpec) -> float:
    pts = grid_points(spec)
    vals = np.asarray(cf_fn(pts), dtype=complex)
    gau = gaussian_cf_values(mean, cov, pts)
    return float(np.max(np.abs(vals - gau)))


def source_gaussianity_deficit(source: SourceSpec, spec: GridSpec) -> float:
    """Closed-form distance of a source block to its moment-matched Gaussian."""
    d = spec.dim
    return gaussianity_deficit_analytic(
        lambda pts: source_cf_values(source, pts),
        source.vector_mean(d),
        source.vector_cov(d),
        spec,
    )


# ---------------------------------------------------------------------------
# closed-form c.f.s of system aggregates sum_l W_l x_l, contamination-aware
# ---------------------------------------------------------------------------

def _latent_coeff(system: TwoSumSystem, weights) -> np.ndarray | None:
    if system.contamination == 0.0 or len(weights) < 2:
        return None
    parts = [w for w in weights[:2] if w is not None]
    if not parts:
        return None
    coeff = np.add.reduce(parts)
    if float(np.max(np.abs(coeff))) == 0.0:
        return None
    return coeff


def _latent_factor(lam: float, args: np.ndarray) -> np.ndarray:
    # shared latent is standard normal, mixed in with per-row probability lam
    return (1.0 - lam) + lam * np.exp(-0.5 * (args * args).sum(axis=-1))


def aggregate_cf(system: TwoSumSystem, weights):
    """Closed-form c.f. of sum_l W_l x_l; ``weights[l] = None`` drops block l.

    Accounts for the shared contamination latent entering the first two
    blocks, which contributes a Gaussian mixture factor.
    """
    lam = system.contamination
    latent = _latent_coeff(system, weights)

    def fn(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.ones(pts.shape[0], dtype=complex)
        for src, w in zip(system.sources, weights):
            if w is not None:
                out = out * source_cf_values(src, pts @ w)
        if latent is not None:
            out = out * _latent_factor(lam, pts @ latent)
        return out

    return fn


def joint_aggregate_cf(system: TwoSumSystem, weights1, weights2):
    """Closed-form joint c.f. of two aggregates over a product grid.

    Returns a callable mapping (pts1, pts2) to the G1 x G2 array of values of
    E exp(j t1.U1 + j t2.U2).
    """
    lam = system.contamination
    lat1 = _latent_coeff(system, weights1)
    lat2 = _latent_coeff(system, weights2)

    def fn(pts1: np.ndarray, pts2: np.ndarray) -> np.ndarray:
        p1 = np.asarray(pts1, dtype=float)
        p2 = np.asarray(pts2, dtype=float)
        if p1.ndim == 1:
            p1 = p1[:, None]
        if p2.ndim == 1:
            p2 = p2[:, None]
        g1, g2 = p1.shape[0], p2.shape[0]
        out = np.ones((g1, g2), dtype=complex)
        d = system.dim
        for src, w1, w2 in zip(system.sources, weights1, weights2):
            u = p1 @ w1 if w1 is not None else np.zeros((g1, d))
            v = p2 @ w2 if w2 is not None else np.zeros((g2, d))
            args = (u[:, None, :] + v[None, :, :]).reshape(-1, d)
            out = out * source_cf_values(src, args).reshape(g1, g2)
        if lam > 0.0 and (lat1 is not None or lat2 is not None):
            u = p1 @ lat1 if lat1 is not None else np.zeros((g1, d))
            v = p2 @ lat2 if lat2 is not None else np.zeros((g2, d))
            args = u[:, None, :] + v[None, :, :]
            out = out * _latent_factor(lam, args)
        return out

    return fn


def s1_weights(system: TwoSumSystem) -> tuple:
    return tuple(system.a)


def s2_weights(system: TwoSumSystem) -> tuple:
    return tuple(system.b)


def block_weights(system: TwoSumSystem, l: int) -> tuple:
    return tuple(system.a[k] if k == l else None for k in range(system.block_count))


def class_weights(system: TwoSumSystem, class_index: int) -> tuple:
    members = set(system.classes[class_index])
    return tuple(
        system.a[k] if k in members else None for k in range(system.block_count)
    )


def block_output_cf(system: TwoSumSystem, l: int):
    """Closed-form c.f. of the mixed block A_l x_l."""
    return aggregate_cf(system, block_weights(system, l))


def class_sum_cf(system: TwoSumSystem, class_index: int):
    return aggregate_cf(system, class_weights(system, class_index))
