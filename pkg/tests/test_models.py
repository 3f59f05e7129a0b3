import numpy as np
import pytest

from cfstab import models
from cfstab.charfn import GridSpec
from cfstab.dependence import estimate_dependence
from cfstab.errors import SingularMatrix


def kb_gaussian(var1=1.0, var2=1.0, dim=1):
    return models.sum_difference_system(
        models.gaussian(0.0, var1), models.gaussian(0.0, var2), dim
    )


# excess kurtosis + 2 enters the variance of the sample variance
_VAR_OF_VAR_FACTOR = {
    "gaussian": 2.0,
    "uniform": 1.8 - 1.0,
    "laplace": 6.0 - 1.0,
    "rademacher": 1.0 - 1.0 + 1e-12,  # variance estimator is 1 - mean^2, tiny spread
}


def test_coupling_sum_difference():
    system = kb_gaussian(dim=2)
    np.testing.assert_allclose(system.coupling[0], np.eye(2), atol=0)
    np.testing.assert_allclose(system.coupling[1], -np.eye(2), atol=0)


def test_coupling_equal_mixings_is_identity():
    a = np.array([[2.0, 1.0], [0.0, 3.0]])
    system = models.TwoSumSystem(
        (a, 2 * a), (a, 2 * a),
        (models.gaussian(0, 1), models.gaussian(0, 1)),
    )
    for c in system.coupling:
        np.testing.assert_allclose(c, np.eye(2), atol=1e-14)


def test_coupling_is_transpose_for_identity_first_mixing():
    b = np.array([[1.0, 1.0], [0.0, 1.0]])
    system = models.TwoSumSystem(
        (np.eye(2),), (b,), (models.gaussian(0, 1),)
    )
    np.testing.assert_allclose(system.coupling[0], b.T, atol=1e-14)


def test_partition_distinct_and_merged():
    assert kb_gaussian().classes == ((0,), (1,))
    all_same = models.scalar_coefficient_system(
        (1.0, 1.0, 1.0), (1.0, 1.0, 1.0),
        tuple(models.gaussian(0, 1) for _ in range(3)),
    )
    assert all_same.classes == ((0, 1, 2),)


def test_partition_merges_below_tolerance():
    eye = np.eye(2)
    coupling = (eye, eye + 1e-12 * np.ones((2, 2)))
    assert models.partition_classes(coupling, tol=1e-9) == ((0, 1),)
    assert models.partition_classes(coupling, tol=1e-13) == ((0,), (1,))


def test_requires_invertible_mixings():
    with pytest.raises(SingularMatrix):
        models.TwoSumSystem(
            (np.array([[1.0, 2.0], [2.0, 4.0]]),),
            (np.eye(2),),
            (models.gaussian(0, 1),),
        )


def test_single_row_block_identities():
    system = kb_gaussian(dim=3)
    ss = models.sample_system(system, 1, 5)
    np.testing.assert_allclose(ss.s1, ss.y[0] + ss.y[1], rtol=0, atol=0)
    np.testing.assert_allclose(ss.s2, ss.y[0] - ss.y[1], rtol=1e-12, atol=1e-12)


def test_rademacher_support():
    system = models.sum_difference_system(models.rademacher(), models.rademacher())
    ss = models.sample_system(system, 500, 9)
    assert set(np.unique(ss.x[0])) <= {-1.0, 1.0}


def test_gaussian_empirical_variance_converges():
    system = kb_gaussian()
    ss = models.sample_system(system, 1_000_000, 3)
    for x in ss.x:
        assert abs(x.var() - 1.0) < 0.01


def test_block_identities_exact():
    a = np.array([[1.0, 0.5], [0.0, 2.0]])
    b = np.array([[1.0, 0.0], [1.0, 1.0]])
    system = models.TwoSumSystem(
        (a, b), (b, a),
        (models.laplace(0.0, 1.0), models.uniform(-1.0, 2.0)),
    )
    ss = models.sample_system(system, 2000, 17)
    for x, y, mat in zip(ss.x, ss.y, system.a):
        np.testing.assert_allclose(y, x @ mat.T, rtol=0, atol=0)
    np.testing.assert_allclose(ss.s1, ss.y[0] + ss.y[1], rtol=1e-12, atol=1e-12)
    s2_direct = ss.x[0] @ system.b[0].T + ss.x[1] @ system.b[1].T
    np.testing.assert_allclose(ss.s2, s2_direct, rtol=0, atol=1e-10)
    for cls, z in zip(system.classes, ss.class_sums):
        np.testing.assert_allclose(z, sum(ss.y[k] for k in cls), rtol=0, atol=0)


def test_sampling_is_deterministic():
    system = kb_gaussian(dim=2)
    a = models.sample_system(system, 5000, 123)
    b = models.sample_system(system, 5000, 123)
    for xa, xb in zip(a.x, b.x):
        assert np.array_equal(xa, xb)
    assert np.array_equal(a.s1, b.s1)
    assert np.array_equal(a.s2, b.s2)


def test_adding_a_block_preserves_other_streams():
    two = kb_gaussian()
    three = models.scalar_coefficient_system(
        (1.0, 1.0, 1.0), (1.0, -1.0, 2.0),
        (models.gaussian(0, 1), models.gaussian(0, 1), models.laplace(0, 1)),
    )
    a = models.sample_system(two, 1000, 77)
    b = models.sample_system(three, 1000, 77)
    assert np.array_equal(a.x[0], b.x[0])
    assert np.array_equal(a.x[1], b.x[1])


def test_family_moments_within_five_standard_errors():
    n = 100_000
    cases = [
        models.gaussian(0.3, 2.0),
        models.uniform(-1.0, 3.0),
        models.laplace(-0.5, 0.7),
        models.rademacher(),
        models.gaussian_mixture((0.3, 0.7), (-1.0, 1.0), (0.5, 2.0)),
    ]
    rng_index = 0
    for spec in cases:
        draw = models.draw_source(spec, 1, n, models.substream(99, 1, rng_index))[:, 0]
        rng_index += 1
        mu, var = spec.mean(), spec.variance()
        se_mean = np.sqrt(var / n)
        assert abs(draw.mean() - mu) < 5 * se_mean, spec.family
        centered = draw - mu
        fourth = (centered**4).mean()
        se_var = np.sqrt(max(fourth - var**2, 1e-12) / n)
        assert abs(draw.var() - var) < 5 * se_var, spec.family


def test_mixture_moments_formula():
    spec = models.gaussian_mixture((0.25, 0.75), (2.0, -2.0), (1.0, 4.0))
    w, m, v = (np.array(p) for p in spec.params)
    assert spec.mean() == pytest.approx(float(w @ m))
    assert spec.variance() == pytest.approx(float(w @ (v + m**2) - (w @ m) ** 2))


def test_transform_shapes_covariance():
    t = np.array([[1.0, 0.0], [1.0, 1.0]])
    spec = models.SourceSpec("gaussian", (0.0, 2.0), transform=t)
    np.testing.assert_allclose(spec.vector_cov(2), 2.0 * t @ t.T)
    draw = models.draw_source(spec, 2, 200_000, models.substream(5, 1, 0))
    np.testing.assert_allclose(np.cov(draw, rowvar=False), 2.0 * t @ t.T, atol=0.05)


def test_contaminate_zero_is_bit_exact():
    base = kb_gaussian()
    same = models.contaminate(base, 0.0)
    a = models.sample_system(base, 20_000, 31)
    b = models.sample_system(same, 20_000, 31)
    assert np.array_equal(a.s1, b.s1)
    assert np.array_equal(a.s2, b.s2)


def test_contaminate_leaves_base_draws_alone():
    base = kb_gaussian()
    dirty = models.contaminate(base, 0.5)
    a = models.sample_system(base, 10_000, 13)
    b = models.sample_system(dirty, 10_000, 13)
    # the latent is additive on top of bit-identical base draws
    mask_rows = np.any(a.x[0] != b.x[0], axis=1)
    bump0 = b.x[0] - a.x[0]
    bump1 = b.x[1] - a.x[1]
    np.testing.assert_allclose(bump0, bump1, rtol=0, atol=0)
    assert 0.4 < mask_rows.mean() < 0.6


def test_full_contamination_creates_measurable_dependence():
    system = models.contaminate(
        models.sum_difference_system(models.laplace(0, 1.0), models.laplace(0, 1.0)),
        1.0,
    )
    ss = models.sample_system(system, 100_000, 21)
    est = estimate_dependence(ss.s1, ss.s2, GridSpec(3.0, 21, 1))
    assert est.epsilon > 0.05


def test_contamination_sweep_monotone_dependence():
    # scaled-pair system where the shared latent does not cancel from either sum
    base = models.scalar_coefficient_system(
        (1.0, 1.0), (1.0, -0.5),
        (models.gaussian(0.0, 0.25), models.gaussian(0.0, 0.5)),
    )
    grid = GridSpec(3.0, 21, 1)
    eps = []
    for lam in (0.0, 0.1, 0.2, 0.4):
        ss = models.sample_system(models.contaminate(base, lam), 100_000, 4)
        eps.append(estimate_dependence(ss.s1, ss.s2, grid).epsilon)
    noise = 0.01
    assert all(b >= a - noise for a, b in zip(eps, eps[1:])), eps


def test_class_moments_match_empirical():
    base = models.scalar_coefficient_system(
        (1.0, 1.0), (1.0, -0.5),
        (models.gaussian(0.0, 0.25), models.gaussian(0.0, 0.5)),
    )
    system = models.contaminate(base, 0.3)
    ss = models.sample_system(system, 400_000, 8)
    for c, z in enumerate(ss.class_sums):
        mean, cov = models.class_moments(system, c)
        np.testing.assert_allclose(z.mean(axis=0), mean, atol=0.02)
        np.testing.assert_allclose(np.cov(z, rowvar=False).reshape(1, 1), cov, atol=0.02)
    for l in range(2):
        _, cov_x = models.block_x_moments(system, l)
        np.testing.assert_allclose(
            np.cov(ss.x[l], rowvar=False).reshape(1, 1), cov_x, atol=0.02
        )


def test_contamination_validation():
    with pytest.raises(ValueError):
        models.contaminate(
            models.TwoSumSystem((np.eye(1),), (np.eye(1),), (models.gaussian(0, 1),)),
            0.5,
        )
    with pytest.raises(ValueError):
        models.sum_difference_system(
            models.gaussian(0, 1), models.gaussian(0, 1), contamination=1.5
        )
