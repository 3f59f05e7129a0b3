import numpy as np
import pytest

from cfstab import charfn, models
from cfstab.charfn import GridSpec, grid_points
from cfstab.errors import GridMismatch, ModulusTooSmall, NotSymmetric
from oracles import dense_scan_sup


def test_grid_contains_origin_and_respects_ball():
    spec = GridSpec(3.0, 13, 2)
    pts = grid_points(spec)
    assert any(np.all(p == 0.0) for p in pts)
    assert np.all(np.abs(pts).sum(axis=1) <= 3.0 * (1 + 1e-12))
    # interior lattice of the full square is filtered out
    assert pts.shape[0] < 13**2


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(0.0, 5, 1)
    with pytest.raises(ValueError):
        GridSpec(1.0, 4, 1)
    with pytest.raises(ValueError):
        GridSpec(1.0, 1, 1)


def test_refined_grid_contains_base_lattice_bit_exactly():
    for dim in (1, 2):
        spec = GridSpec(np.pi / 2, 9, dim)
        base = {tuple(p) for p in grid_points(spec)}
        fine = {tuple(p) for p in grid_points(spec.refine())}
        assert base <= fine


def test_empirical_cf_is_one_at_origin():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1001, 3))
    assert charfn.empirical_cf(x, np.zeros(3)) == 1.0 + 0.0j


def test_empirical_cf_single_sample():
    value = charfn.empirical_cf(np.array([[1.0]]), np.array([np.pi]))
    assert value == pytest.approx(-1.0 + 0.0j, abs=1e-12)


def test_empirical_cf_rademacher_matches_cosine():
    system = models.sum_difference_system(models.rademacher(), models.rademacher())
    x = models.sample_system(system, 100_000, 3).x[0]
    assert abs(charfn.empirical_cf(x, np.array([1.0])) - np.cos(1.0)) < 0.02


def test_gaussian_cf_values():
    assert charfn.gaussian_cf([0.0], [[1.0]], [1.0]) == pytest.approx(np.exp(-0.5))
    assert charfn.gaussian_cf([2.0], [[3.0]], [0.0]) == 1.0
    assert charfn.gaussian_cf([1.0], [[0.0]], [np.pi / 2]) == pytest.approx(1j, abs=1e-12)
    with pytest.raises(NotSymmetric):
        charfn.gaussian_cf([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]], [1.0, 1.0])


def test_analytic_cf_closed_forms():
    assert charfn.analytic_cf(models.rademacher(), [np.pi]) == pytest.approx(-1.0)
    assert charfn.analytic_cf(models.uniform(-1.0, 1.0), [1e-12]) == pytest.approx(1.0)
    assert charfn.analytic_cf(models.laplace(0.0, 1.0), [1.0]) == pytest.approx(0.5)
    mix = models.gaussian_mixture((0.5, 0.5), (0.0, 0.0), (1.0, 4.0))
    t = 0.7
    expected = 0.5 * np.exp(-0.5 * t * t) + 0.5 * np.exp(-2.0 * t * t)
    assert charfn.analytic_cf(mix, [t]) == pytest.approx(expected)


def test_analytic_cf_matches_sampling_for_every_family():
    # empirical c.f. converges to the closed form at any fixed point
    specs = [
        models.gaussian(0.5, 2.0),
        models.uniform(-1.0, 2.0),
        models.laplace(0.3, 0.8),
        models.rademacher(),
        models.gaussian_mixture((0.4, 0.6), (-1.0, 0.5), (0.3, 1.5)),
    ]
    t = np.array([0.9])
    for l, spec in enumerate(specs):
        draw = models.draw_source(spec, 1, 200_000, models.substream(17, 1, l))
        emp = charfn.empirical_cf(draw, t)
        ana = charfn.analytic_cf(spec, t)
        assert abs(emp - ana) < 0.01, spec.family


def test_transform_pullback():
    t_mat = np.array([[1.0, 0.0], [0.5, 1.0]])
    spec = models.SourceSpec("laplace", (0.0, 1.0), transform=t_mat)
    pts = np.array([[0.7, -0.4]])
    pulled = pts @ t_mat
    expected = (1.0 / (1.0 + pulled[0, 0] ** 2)) * (1.0 / (1.0 + pulled[0, 1] ** 2))
    assert charfn.source_cf_values(spec, pts)[0] == pytest.approx(expected)


def test_second_cf_values_and_branch():
    assert charfn.second_cf(1.0 + 0.0j) == 0.0
    assert charfn.second_cf(np.exp(-0.5)) == pytest.approx(-0.5)
    assert charfn.second_cf(-1.0 + 0.0j) == pytest.approx(1j * np.pi)
    with pytest.raises(ModulusTooSmall):
        charfn.second_cf(1e-9 + 0.0j)


def test_second_cf_of_gaussian_cf_quadratic_real_part():
    mean = np.array([0.3])
    cov = np.array([[1.7]])
    for t in (0.2, 0.9, 1.5):
        value = charfn.second_cf(charfn.gaussian_cf(mean, cov, [t]))
        assert value.real == pytest.approx(-0.5 * 1.7 * t * t, abs=1e-12)


def test_cf_sup_distance_identical_grids():
    spec = GridSpec(5.0, 41, 1)
    g = charfn.gaussian_grid([0.0], [[1.0]], spec)
    dist, _ = charfn.cf_sup_distance(g, g)
    assert dist == 0.0


def test_cf_sup_distance_grid_mismatch():
    a = charfn.gaussian_grid([0.0], [[1.0]], GridSpec(5.0, 41, 1))
    b = charfn.gaussian_grid([0.0], [[1.0]], GridSpec(5.0, 43, 1))
    with pytest.raises(GridMismatch):
        charfn.cf_sup_distance(a, b)


def test_rademacher_vs_gaussian_sup_distance_matches_scan():
    # dense-scan oracle for sup_t |cos t - exp(-t^2/2)| on [-5, 5]
    oracle, argmax = dense_scan_sup(
        np.cos, lambda t: np.exp(-0.5 * t * t), -5.0, 5.0
    )
    spec = GridSpec(5.0, 201, 1)
    a = charfn.analytic_grid(lambda p: charfn.source_cf_values(models.rademacher(), p), spec)
    b = charfn.gaussian_grid([0.0], [[1.0]], spec)
    dist, at = charfn.cf_sup_distance(a, b)
    assert abs(dist - oracle) < 0.005
    assert abs(abs(at[0]) - abs(argmax)) < 0.1
    assert abs(abs(argmax) - np.pi) < 0.05


def test_uniform_vs_matched_gaussian_argmax_past_four():
    spec = GridSpec(8.0, 321, 1)
    a = charfn.analytic_grid(
        lambda p: charfn.source_cf_values(models.uniform(-1.0, 1.0), p), spec
    )
    b = charfn.gaussian_grid([0.0], [[1.0 / 3.0]], spec)
    dist, at = charfn.cf_sup_distance(a, b)
    assert dist > 0.2
    assert abs(at[0]) > 4.0


def test_gaussianity_deficit_zero_for_gaussian_analytic():
    spec = GridSpec(5.0, 41, 1)
    deficit = charfn.source_gaussianity_deficit(models.gaussian(0.3, 2.0), spec)
    assert deficit < 1e-12


def test_gaussianity_deficit_rademacher_matches_scan():
    oracle, _ = dense_scan_sup(np.cos, lambda t: np.exp(-0.5 * t * t), -5.0, 5.0)
    deficit = charfn.source_gaussianity_deficit(models.rademacher(), GridSpec(5.0, 201, 1))
    assert abs(deficit - oracle) < 0.005


def test_gaussianity_deficit_empirical_gaussian_small():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((100_000, 1))
    assert charfn.gaussianity_deficit(x, GridSpec(5.0, 41, 1)) < 0.03


def test_empirical_matches_analytic_on_grid_across_seeds():
    # < 0.05 at n = 1e4 in at least 99 of 100 seeds, per family
    spec = GridSpec(5.0, 41, 1)
    pts = grid_points(spec)
    families = [
        models.gaussian(0.0, 1.0),
        models.uniform(-2.0, 1.0),
        models.laplace(0.0, 1.0),
        models.rademacher(),
        models.gaussian_mixture((0.5, 0.5), (-1.0, 1.0), (0.5, 0.5)),
    ]
    for spec_idx, family in enumerate(families):
        ana = charfn.source_cf_values(family, pts)
        hits = 0
        for seed in range(100):
            draw = models.draw_source(
                family, 1, 10_000, models.substream(1000 + seed, 1, spec_idx)
            )
            emp = charfn.empirical_cf_values(draw, pts)
            if np.max(np.abs(emp - ana)) < 0.05:
                hits += 1
        assert hits >= 99, family.family


def test_empirical_cf_modulus_bounded():
    rng = np.random.default_rng(9)
    x = rng.laplace(size=(50_000, 2))
    vals = charfn.empirical_cf_values(x, grid_points(GridSpec(4.0, 9, 2)))
    assert np.max(np.abs(vals)) <= 1.0 + 1e-12


def test_conjugate_symmetry_is_exact():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((10_000, 2))
    pts = rng.standard_normal((50, 2))
    plus = charfn.empirical_cf_values(x, pts)
    minus = charfn.empirical_cf_values(x, -pts)
    assert np.array_equal(minus, np.conj(plus))


def test_lattice_fast_path_matches_direct_evaluation():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((5_000, 1))
    pts = grid_points(GridSpec(3.0, 41, 1))
    fast = charfn.empirical_cf_values(x, pts)
    direct = np.exp(1j * np.outer(x[:, 0], pts[:, 0])).mean(axis=0)
    assert np.max(np.abs(fast - direct)) < 5e-14


def test_empirical_grid_origin_value_exact():
    rng = np.random.default_rng(2)
    grid = charfn.empirical_grid(rng.standard_normal((777, 1)), GridSpec(2.0, 21, 1))
    origin = np.flatnonzero(np.all(grid.points == 0.0, axis=1))[0]
    assert grid.values[origin] == 1.0 + 0.0j


def test_system_joint_cf_factorizes_for_independent_blocks():
    system = models.sum_difference_system(models.laplace(0, 1), models.rademacher())
    pts1 = grid_points(GridSpec(2.0, 9, 1))
    pts2 = grid_points(GridSpec(2.0, 9, 1))
    joint = charfn.joint_aggregate_cf(
        system, charfn.s1_weights(system), charfn.s2_weights(system)
    )(pts1, pts2)
    # independent blocks: joint is the product of per-block c.f.s of A_l t1 + B_l t2
    direct = np.ones((9, 9), dtype=complex)
    for l, src in enumerate(system.sources):
        args = pts1[:, None, :] @ system.a[l] + pts2[None, :, :] @ system.b[l]
        direct *= charfn.source_cf_values(src, args.reshape(-1, 1)).reshape(9, 9)
    np.testing.assert_allclose(joint, direct, atol=1e-14)


def test_contaminated_marginal_cf_matches_sampling():
    base = models.scalar_coefficient_system(
        (1.0, 1.0), (1.0, -0.5),
        (models.gaussian(0.0, 0.25), models.gaussian(0.0, 0.5)),
    )
    system = models.contaminate(base, 0.3)
    ss = models.sample_system(system, 300_000, 6)
    pts = grid_points(GridSpec(3.0, 21, 1))
    ana = charfn.aggregate_cf(system, charfn.s1_weights(system))(pts)
    emp = charfn.empirical_cf_values(ss.s1, pts)
    assert np.max(np.abs(ana - emp)) < 0.01
