"""Explicit stability constants and the measured quantities they bound.

The bound side evaluates closed-form expressions in the measured dependence
level, the dimension and block count, the modulus floor p, and the working
radius. The measured side computes Gaussianity deficits of class sums,
covariance residuals, the second-c.f. additivity residual, and projection
Kolmogorov distances from the same sample set, so each report pairs every
bound with the quantity it is supposed to dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import charfn, dependence, linalg, models
from .charfn import GridSpec, grid_points
from .errors import FloorCollapsed, InvalidFloor, SingularMatrix

P_FLOOR_MIN = 1e-6


def t_prime(coupling, radius: float) -> float:
    """Working radius derived from distinct coupling matrices.

    Equals (radius / 4) * min(1, min_l 1/||C_l^{-1}||, min_{l != m}
    1/||(I - C_m C_l^{-1})^{-1}||) in the column-sum induced norm. Coupling
    matrices must be pairwise distinct (use class representatives); a
    coincident pair makes I - C_m C_l^{-1} singular.
    """
    mats = [linalg.as_matrix(c) for c in coupling]
    d = mats[0].shape[0]
    eye = np.eye(d)
    terms = [1.0]
    for c in mats:
        terms.append(1.0 / linalg.induced_norm_1(linalg.invert(c)))
    for l, cl in enumerate(mats):
        cl_inv = linalg.invert(cl)
        for m, cm in enumerate(mats):
            if m == l:
                continue
            try:
                gap_inv = linalg.invert(eye - cm @ cl_inv)
            except SingularMatrix as exc:
                raise SingularMatrix(
                    f"coupling matrices {l} and {m} coincide; merge classes first"
                ) from exc
            terms.append(1.0 / linalg.induced_norm_1(gap_inv))
    return radius / 4.0 * min(terms)


@dataclass(frozen=True)
class BoundConstants:
    """Closed-form right-hand sides evaluated at one dependence level."""

    c_eps: float
    cov_bound: float
    log_resid_bound: float
    kolm_bound: float | None  # defined only when epsilon^2 <= 1/2


def bound_constants(epsilon: float, dim: int, blocks: int, p: float,
                    working_radius: float) -> BoundConstants:
    if not 0.0 < p <= 1.0:
        raise InvalidFloor(f"floor constant p = {p} outside (0, 1]")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    d, big_l = int(dim), int(blocks)
    pw = p ** (2 * big_l)
    c_eps = 1440.0 * d * d * (d + 1) * epsilon / pw
    cov_bound = 721.0 * big_l * d * d * (d + 1) * epsilon / (working_radius**2 * pw)
    log_resid_bound = 1.5 * epsilon / pw
    if epsilon == 0.0:
        kolm = 0.0
    elif epsilon**2 <= 0.5:
        kolm = (60.0 / math.pi) * (
            2.0 * epsilon * math.log(1.0 / epsilon)
            + epsilon / math.sqrt(2.0 * math.pi)
            + 2.0 * epsilon**2
        )
    else:
        kolm = None
    return BoundConstants(c_eps, cov_bound, log_resid_bound, kolm)


def cf_floor(block_cfs, coupling, working_radius: float, points_per_axis: int,
             dim: int, minimum: float = P_FLOOR_MIN) -> float:
    """Smallest c.f. modulus of any mixed block over the working ball.

    Scans every block's c.f. at the lattice points t and at the coupled
    points C_l t; raises FloorCollapsed when the minimum drops below
    ``minimum`` (the log-domain machinery is unusable past that point, so
    the caller should shrink the radius).
    """
    pts = grid_points(GridSpec(working_radius, points_per_axis, dim))
    floor = np.inf
    for fn, c in zip(block_cfs, coupling):
        floor = min(floor, float(np.abs(fn(pts)).min()))
        floor = min(floor, float(np.abs(fn(pts @ np.asarray(c, dtype=float).T)).min()))
    if floor < minimum:
        raise FloorCollapsed(
            f"c.f. modulus floor {floor:.3e} below {minimum:.0e} at radius {working_radius}"
        )
    return floor


def covariance_residuals(a_mats, b_mats, block_covs, coupling_reps, class_covs):
    """Both covariance identities as matrices: sum A_l Q_l B_l^T and sum Qhat_c C_c."""
    first = np.add.reduce([
        np.asarray(a, float) @ np.asarray(q, float) @ np.asarray(b, float).T
        for a, q, b in zip(a_mats, block_covs, b_mats)
    ])
    second = np.add.reduce([
        np.asarray(q, float) @ np.asarray(c, float)
        for q, c in zip(class_covs, coupling_reps)
    ])
    return first, second


def log_residual_check_analytic(block_cfs, coupling, working_radius: float,
                                points_per_axis: int, dim: int,
                                floor: float = charfn.MODULUS_FLOOR) -> float:
    """Max over grid pairs of |sum_l g_l(t1 + C_l t2) - g_l(t1) - g_l(C_l t2)|.

    g_l is the principal-branch log of block l's c.f.; the sum telescopes to
    zero for independent blocks, so its size tracks the dependence level.
    """
    pts = grid_points(GridSpec(working_radius, points_per_axis, dim))
    g = pts.shape[0]
    total = np.zeros((g, g), dtype=complex)
    for fn, c in zip(block_cfs, coupling):
        coupled = pts @ np.asarray(c, dtype=float).T
        combined = (pts[:, None, :] + coupled[None, :, :]).reshape(-1, dim)
        g_combined = charfn.second_cf_values(fn(combined), floor).reshape(g, g)
        g_first = charfn.second_cf_values(fn(pts), floor)
        g_second = charfn.second_cf_values(fn(coupled), floor)
        total += g_combined - g_first[:, None] - g_second[None, :]
    return float(np.abs(total).max())


def _block_phase_stats(block: np.ndarray, pts: np.ndarray, coupled: np.ndarray,
                       chunk: int):
    """Per-block c.f. values at pts, at coupled points, and at every pairwise
    sum, using exp(j y (t1 + t2)) = exp(j y t1) exp(j y t2) so the combined
    values cost one small matrix product instead of a quadratic point set."""
    n = block.shape[0]
    g1, g2 = pts.shape[0], coupled.shape[0]
    cf1 = np.zeros(g1, dtype=complex)
    cf2 = np.zeros(g2, dtype=complex)
    cfc = np.zeros((g1, g2), dtype=complex)
    one_d = block.shape[1] == 1
    for start in range(0, n, chunk):
        rows = block[start : start + chunk]
        if one_d:
            e1 = charfn.unit_phases(rows[:, 0], pts)
            e2 = charfn.unit_phases(rows[:, 0], coupled) if charfn._lattice_step(coupled) is not None \
                else np.exp(1j * (rows @ coupled.T))
        else:
            e1 = np.exp(1j * (rows @ pts.T))
            e2 = np.exp(1j * (rows @ coupled.T))
        cf1 += e1.sum(axis=0)
        cf2 += e2.sum(axis=0)
        cfc += e1.T @ e2
    return cf1 / n, cf2 / n, cfc / n


def log_residual_check(y_blocks, coupling, working_radius: float,
                       points_per_axis: int, dim: int,
                       floor: float = charfn.MODULUS_FLOOR,
                       chunk: int = charfn.DEFAULT_CHUNK) -> float:
    """Empirical counterpart of ``log_residual_check_analytic`` on mixed blocks."""
    pts = grid_points(GridSpec(working_radius, points_per_axis, dim))
    total = np.zeros((pts.shape[0], pts.shape[0]), dtype=complex)
    for block, c in zip(y_blocks, coupling):
        coupled = pts @ np.asarray(c, dtype=float).T
        cf1, cf2, cfc = _block_phase_stats(np.asarray(block, float), pts, coupled, chunk)
        g_combined = charfn.second_cf_values(cfc, floor)
        g_first = charfn.second_cf_values(cf1, floor)
        g_second = charfn.second_cf_values(cf2, floor)
        total += g_combined - g_first[:, None] - g_second[None, :]
    return float(np.abs(total).max())


def _empirical_floor_and_residual(y_blocks, coupling, working_radius: float,
                                  points_per_axis: int, dim: int,
                                  minimum: float = P_FLOOR_MIN,
                                  floor: float = charfn.MODULUS_FLOOR,
                                  chunk: int = charfn.DEFAULT_CHUNK):
    """One pass per block giving both the modulus floor p and the max log
    residual over the working grid (they read the same c.f. values)."""
    pts = grid_points(GridSpec(working_radius, points_per_axis, dim))
    stats = []
    p = np.inf
    for block, c in zip(y_blocks, coupling):
        coupled = pts @ np.asarray(c, dtype=float).T
        cf1, cf2, cfc = _block_phase_stats(np.asarray(block, float), pts, coupled, chunk)
        p = min(p, float(np.abs(cf1).min()), float(np.abs(cf2).min()))
        stats.append((cf1, cf2, cfc))
    if p < minimum:
        raise FloorCollapsed(
            f"c.f. modulus floor {p:.3e} below {minimum:.0e} at radius {working_radius}"
        )
    total = np.zeros((pts.shape[0], pts.shape[0]), dtype=complex)
    for cf1, cf2, cfc in stats:
        total += (
            charfn.second_cf_values(cfc, floor)
            - charfn.second_cf_values(cf1, floor)[:, None]
            - charfn.second_cf_values(cf2, floor)[None, :]
        )
    return p, float(np.abs(total).max())


def empirical_kolmogorov(samples, reference_mean: float, reference_sd: float) -> float:
    """Exact sup distance between the sample d.f. and a Gaussian d.f."""
    if reference_sd <= 0:
        raise ValueError("reference sd must be positive")
    z = np.sort((np.asarray(samples, dtype=float).ravel() - reference_mean) / reference_sd)
    n = z.size
    if n < 1:
        raise ValueError("need at least one sample")
    cdf = ndtr(z)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - cdf), np.abs((i - 1) / n - cdf))))


@dataclass(frozen=True)
class ProjectionCheck:
    """Kolmogorov distance of a standardized unit projection, or the
    constant-variable verdict when the projection has no variance."""

    constant: bool
    kolmogorov: float | None


def projection_gaussianity(samples, direction) -> ProjectionCheck:
    """Distance of a median-centered, sd-standardized projection to N(0, 1)."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    t = linalg.as_vector(direction)
    if abs(float(np.sqrt(t @ t)) - 1.0) > 1e-8:
        raise ValueError("projection direction must have unit 2-norm")
    proj = x @ t
    var = float(proj.var(ddof=1)) if proj.size > 1 else 0.0
    if var < 1e-10:
        return ProjectionCheck(True, None)
    z = (proj - float(np.median(proj))) / math.sqrt(var)
    return ProjectionCheck(False, empirical_kolmogorov(z, 0.0, 1.0))


@dataclass(frozen=True)
class MeasuredQuantities:
    class_deficits: tuple
    sum_residual_max: float
    coupling_residual_max: float
    log_residual_max: float
    projection_kolmogorov: tuple


@dataclass(frozen=True)
class BoundReport:
    """Bound constants paired with the measured quantities they dominate."""

    radius: float
    t_prime: float
    p_floor: float
    epsilon: float
    c_eps: float
    cov_bound: float
    log_resid_bound: float
    kolm_bound: float | None
    measured: MeasuredQuantities
    ratios: dict


def _ratios(report_epsilon, measured: MeasuredQuantities, consts: BoundConstants) -> dict:
    out = {}
    if report_epsilon > 0 and measured.class_deficits:
        out["max_deficit_over_epsilon"] = max(measured.class_deficits) / report_epsilon
    if consts.cov_bound > 0:
        out["coupling_residual_over_bound"] = (
            measured.coupling_residual_max / consts.cov_bound
        )
    if consts.log_resid_bound > 0:
        out["log_residual_over_bound"] = (
            measured.log_residual_max / consts.log_resid_bound
        )
    return out


def verify_stability(system: models.TwoSumSystem, n: int, seed: int, grid: GridSpec,
                     analytic: bool = False, working_points: int | None = None,
                     chunk: int = charfn.DEFAULT_CHUNK) -> BoundReport:
    """Full pipeline: measure dependence, evaluate constants, measure deficits.

    Analytic mode replaces every empirical c.f. and covariance with its
    closed form (n and seed are then ignored); this is the exactness path
    where independent systems must produce zeros throughout.

    ``working_points`` is the per-axis resolution of the working-ball grid
    used for the modulus floor and the log residual; it defaults to the main
    grid's resolution in one dimension and to 13 above (the pairwise log
    residual is quadratic in the working grid size).
    """
    dim = system.dim
    blocks = system.block_count
    reps = system.class_representatives()
    radius = grid.radius
    work = t_prime(reps, radius)
    if working_points is None:
        working_points = grid.points_per_axis if dim == 1 else 13

    if analytic:
        dep = dependence.analytic_dependence(
            charfn.joint_aggregate_cf(system, charfn.s1_weights(system), charfn.s2_weights(system)),
            charfn.aggregate_cf(system, charfn.s1_weights(system)),
            charfn.aggregate_cf(system, charfn.s2_weights(system)),
            grid, dim, dim,
        )
        block_cfs = [charfn.block_output_cf(system, l) for l in range(blocks)]
        block_covs = [models.block_x_moments(system, l)[1] for l in range(blocks)]
        class_stats = [models.class_moments(system, c) for c in range(len(system.classes))]
        deficits = tuple(
            charfn.gaussianity_deficit_analytic(
                charfn.class_sum_cf(system, c), mean, cov, grid.with_dim(dim)
            )
            for c, (mean, cov) in enumerate(class_stats)
        )
        class_covs = [cov for _, cov in class_stats]
        projections: tuple = ()
    else:
        ss = models.sample_system(system, n, seed)
        dep = dependence.estimate_dependence(ss.s1, ss.s2, grid, chunk)
        block_covs = [np.cov(x, rowvar=False).reshape(dim, dim) for x in ss.x]
        deficits = tuple(
            charfn.gaussianity_deficit(z, grid.with_dim(dim), chunk) for z in ss.class_sums
        )
        class_covs = [np.cov(z, rowvar=False).reshape(dim, dim) for z in ss.class_sums]
        e1 = np.zeros(dim)
        e1[0] = 1.0
        projections = tuple(
            projection_gaussianity(z, e1).kolmogorov for z in ss.class_sums
        )

    if analytic:
        p = cf_floor(block_cfs, system.coupling, work, working_points, dim)
        log_max = log_residual_check_analytic(
            block_cfs, system.coupling, work, working_points, dim
        )
    else:
        p, log_max = _empirical_floor_and_residual(
            ss.y, system.coupling, work, working_points, dim, chunk=chunk
        )
    consts = bound_constants(dep.epsilon, dim, blocks, p, work)
    first, second = covariance_residuals(
        system.a, system.b, block_covs, reps, class_covs
    )
    measured = MeasuredQuantities(
        class_deficits=deficits,
        sum_residual_max=float(np.max(np.abs(first))),
        coupling_residual_max=float(np.max(np.abs(second))),
        log_residual_max=log_max,
        projection_kolmogorov=projections,
    )
    return BoundReport(
        radius=radius,
        t_prime=work,
        p_floor=p,
        epsilon=dep.epsilon,
        c_eps=consts.c_eps,
        cov_bound=consts.cov_bound,
        log_resid_bound=consts.log_resid_bound,
        kolm_bound=consts.kolm_bound,
        measured=measured,
        ratios=_ratios(dep.epsilon, measured, consts),
    )
