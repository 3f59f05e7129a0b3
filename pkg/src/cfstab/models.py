"""Source catalogue, two-sum mixture systems, and seeded sampling.

A ``TwoSumSystem`` holds L independent d-dimensional source blocks and two
sets of invertible mixing matrices producing the sums

    s1 = sum_l A_l x_l,    s2 = sum_l B_l x_l.

Each block's coupling matrix ``(B_l A_l^{-1})^T`` decides its equivalence
class; blocks sharing a coupling matrix are summed into one class block.

Sampling is reproducible by contract: a documented platform-independent
64-bit generator (PCG64) with one derived substream per block, so adding or
contaminating a block never perturbs another block's draws.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import linalg

FAMILIES = ("gaussian", "uniform", "laplace", "rademacher", "gaussian-mixture")

# substream tags mixed into the seed; distinct per purpose so streams never collide
_SOURCE_TAG = 1
_LATENT_TAG = 2
_MIX_TAG = 3


@dataclass(frozen=True)
class SourceSpec:
    """Scalar distribution applied i.i.d. per coordinate of a vector block.

    ``params`` layout by family:
      gaussian (mean, variance); uniform (lo, hi); laplace (location, scale);
      rademacher (); gaussian-mixture (weights, means, variances) as tuples.

    ``transform``, when present, is an invertible d x d matrix applied to the
    coordinate-wise draw, introducing linear intra-vector correlation.
    """

    family: str
    params: tuple = ()
    transform: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown source family {self.family!r}")
        if self.family == "gaussian":
            _, v = self.params
            if v <= 0:
                raise ValueError("gaussian variance must be positive")
        elif self.family == "uniform":
            lo, hi = self.params
            if not hi > lo:
                raise ValueError("uniform needs hi > lo")
        elif self.family == "laplace":
            _, b = self.params
            if b <= 0:
                raise ValueError("laplace scale must be positive")
        elif self.family == "gaussian-mixture":
            w, m, v = (np.asarray(p, dtype=float) for p in self.params)
            if not (len(w) == len(m) == len(v)) or len(w) == 0:
                raise ValueError("mixture components must align")
            if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("mixture weights must be positive and sum to 1")
            if np.any(v <= 0):
                raise ValueError("mixture variances must be positive")
        if self.transform is not None:
            t = linalg.as_matrix(self.transform)
            linalg.invert(t)  # raises SingularMatrix if not invertible
            object.__setattr__(self, "transform", t)

    def mean(self) -> float:
        """Mean of one coordinate before the transform."""
        if self.family == "gaussian":
            return float(self.params[0])
        if self.family == "uniform":
            lo, hi = self.params
            return (lo + hi) / 2.0
        if self.family == "laplace":
            return float(self.params[0])
        if self.family == "rademacher":
            return 0.0
        w, m, _ = (np.asarray(p, dtype=float) for p in self.params)
        return float(w @ m)

    def variance(self) -> float:
        """Variance of one coordinate before the transform."""
        if self.family == "gaussian":
            return float(self.params[1])
        if self.family == "uniform":
            lo, hi = self.params
            return (hi - lo) ** 2 / 12.0
        if self.family == "laplace":
            return 2.0 * float(self.params[1]) ** 2
        if self.family == "rademacher":
            return 1.0
        w, m, v = (np.asarray(p, dtype=float) for p in self.params)
        return float(w @ (v + m**2) - (w @ m) ** 2)

    def vector_mean(self, dim: int) -> np.ndarray:
        mu = np.full(dim, self.mean())
        if self.transform is not None:
            mu = self.transform @ mu
        return mu

    def vector_cov(self, dim: int) -> np.ndarray:
        cov = self.variance() * np.eye(dim)
        if self.transform is not None:
            cov = self.transform @ cov @ self.transform.T
        return cov


def gaussian(mean: float, variance: float) -> SourceSpec:
    return SourceSpec("gaussian", (float(mean), float(variance)))


def uniform(lo: float, hi: float) -> SourceSpec:
    return SourceSpec("uniform", (float(lo), float(hi)))


def laplace(location: float, scale: float) -> SourceSpec:
    return SourceSpec("laplace", (float(location), float(scale)))


def rademacher() -> SourceSpec:
    return SourceSpec("rademacher", ())


def gaussian_mixture(weights, means, variances) -> SourceSpec:
    return SourceSpec(
        "gaussian-mixture",
        (tuple(float(w) for w in weights),
         tuple(float(m) for m in means),
         tuple(float(v) for v in variances)),
    )


def substream(seed: int, tag: int, index: int) -> np.random.Generator:
    """Derived generator for one block; independent streams by construction."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((int(seed), int(tag), int(index))))
    )


def draw_source(source: SourceSpec, dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    fam = source.family
    if fam == "gaussian":
        m, v = source.params
        u = rng.standard_normal((count, dim)) * np.sqrt(v) + m
    elif fam == "uniform":
        lo, hi = source.params
        u = rng.uniform(lo, hi, size=(count, dim))
    elif fam == "laplace":
        loc, b = source.params
        u = rng.laplace(loc, b, size=(count, dim))
    elif fam == "rademacher":
        u = rng.integers(0, 2, size=(count, dim)) * 2.0 - 1.0
    else:
        w, m, v = (np.asarray(p, dtype=float) for p in source.params)
        edges = np.cumsum(w)
        comp = np.searchsorted(edges, rng.random((count, dim)), side="right")
        comp = np.minimum(comp, len(w) - 1)
        u = rng.standard_normal((count, dim)) * np.sqrt(v[comp]) + m[comp]
    if source.transform is not None:
        u = u @ source.transform.T
    return u


def derive_coupling(a_mats, b_mats) -> tuple[np.ndarray, ...]:
    """Coupling matrix (B_l A_l^{-1})^T per block."""
    return tuple((b @ linalg.invert(a)).T for a, b in zip(a_mats, b_mats))


def partition_classes(coupling, tol: float = 1e-9) -> tuple[tuple[int, ...], ...]:
    """Group block indices whose coupling matrices agree entrywise within tol.

    Greedy against the first matching representative; with tolerance-based
    equality this is the deterministic reading of the exact-equality classes.
    """
    classes: list[list[int]] = []
    reps: list[np.ndarray] = []
    for l, c in enumerate(coupling):
        for k, rep in enumerate(reps):
            if c.shape == rep.shape and float(np.max(np.abs(c - rep))) <= tol:
                classes[k].append(l)
                break
        else:
            classes.append([l])
            reps.append(c)
    return tuple(tuple(cls) for cls in classes)


@dataclass(frozen=True)
class TwoSumSystem:
    """L independent source blocks with two invertible mixings per block.

    ``contamination`` in [0, 1] is the per-row probability that one shared
    unit-variance Gaussian latent vector is added to the first two blocks,
    creating a controlled amount of dependence between the two sums. Note the
    latent cancels from any sum whose first two coefficient matrices sum to
    zero, so sum/difference systems stay independent under it.
    """

    a: tuple
    b: tuple
    sources: tuple
    contamination: float = 0.0
    class_tol: float = 1e-9
    coupling: tuple = field(init=False, repr=False)
    classes: tuple = field(init=False)

    def __post_init__(self):
        a = tuple(linalg.as_matrix(m) for m in self.a)
        b = tuple(linalg.as_matrix(m) for m in self.b)
        if not a or len(a) != len(b) or len(a) != len(self.sources):
            raise ValueError("need equally many A matrices, B matrices and sources")
        d = a[0].shape[0]
        for m in (*a, *b):
            if m.shape != (d, d):
                raise ValueError("all mixing matrices must be d x d")
        for m in b:
            linalg.invert(m)  # invertibility check; A is checked via coupling
        if not 0.0 <= self.contamination <= 1.0:
            raise ValueError("contamination must lie in [0, 1]")
        if self.contamination > 0.0 and len(a) < 2:
            raise ValueError("contamination needs at least two blocks")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "coupling", derive_coupling(a, b))
        object.__setattr__(self, "classes", partition_classes(self.coupling, self.class_tol))

    @property
    def block_count(self) -> int:
        return len(self.a)

    @property
    def dim(self) -> int:
        return self.a[0].shape[0]

    def class_representatives(self) -> tuple[np.ndarray, ...]:
        return tuple(self.coupling[cls[0]] for cls in self.classes)


def contaminate(system: TwoSumSystem, lam: float) -> TwoSumSystem:
    """Copy of the system with mixing probability ``lam`` for the shared latent.

    ``lam = 0`` reproduces the original system bit-exactly under the same
    seed because the latent uses its own substream.
    """
    if system.block_count < 2:
        raise ValueError("contamination needs at least two blocks")
    return dataclasses.replace(system, contamination=float(lam))


def scalar_coefficient_system(a_coeffs, b_coeffs, sources, dim: int = 1, **kw) -> TwoSumSystem:
    """System with scalar mixings A_l = a_l I, B_l = b_l I."""
    eye = np.eye(dim)
    return TwoSumSystem(
        tuple(float(c) * eye for c in a_coeffs),
        tuple(float(c) * eye for c in b_coeffs),
        tuple(sources),
        **kw,
    )


def sum_difference_system(source1: SourceSpec, source2: SourceSpec, dim: int = 1, **kw) -> TwoSumSystem:
    """Two blocks mixed into their sum and their difference."""
    return scalar_coefficient_system((1.0, 1.0), (1.0, -1.0), (source1, source2), dim, **kw)


def block_x_moments(system: TwoSumSystem, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean and covariance of source block l, contamination included."""
    d = system.dim
    mean = system.sources[l].vector_mean(d)
    cov = system.sources[l].vector_cov(d)
    if system.contamination > 0.0 and l < 2:
        # mask * latent adds lam * I to the covariance, nothing to the mean
        cov = cov + system.contamination * np.eye(d)
    return mean, cov


def class_moments(system: TwoSumSystem, class_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean and covariance of one class sum of mixed blocks."""
    d = system.dim
    mean = np.zeros(d)
    cov = np.zeros((d, d))
    members = system.classes[class_index]
    for k in members:
        a = system.a[k]
        mean += a @ system.sources[k].vector_mean(d)
        cov += a @ system.sources[k].vector_cov(d) @ a.T
    lam = system.contamination
    if lam > 0.0:
        parts = [system.a[k] for k in members if k < 2]
        if parts:
            coeff = np.add.reduce(parts)
            cov += lam * (coeff @ coeff.T)
    return mean, cov


@dataclass(frozen=True)
class SampleSet:
    """Seeded Monte-Carlo draw of every block of a system.

    ``x[l]`` are the raw source blocks, ``y[l] = x[l] @ A_l^T`` the mixed
    blocks, ``class_sums[c]`` the per-class sums of y blocks, and ``s1``,
    ``s2`` the two system sums; all arrays are n x d.
    """

    n: int
    seed: int
    x: tuple
    y: tuple
    class_sums: tuple
    s1: np.ndarray
    s2: np.ndarray


def sample_system(system: TwoSumSystem, n: int, seed: int) -> SampleSet:
    if n < 1:
        raise ValueError("need n >= 1")
    d = system.dim
    xs = [
        draw_source(src, d, n, substream(seed, _SOURCE_TAG, l))
        for l, src in enumerate(system.sources)
    ]
    lam = system.contamination
    if lam > 0.0:
        rng = substream(seed, _LATENT_TAG, 0)
        mask = rng.random(n) < lam
        latent = rng.standard_normal((n, d))
        bump = latent * mask[:, None]
        xs[0] = xs[0] + bump
        xs[1] = xs[1] + bump
    ys = [x @ a.T for x, a in zip(xs, system.a)]
    class_sums = tuple(
        np.add.reduce([ys[k] for k in cls]) for cls in system.classes
    )
    s1 = np.add.reduce(ys)
    s2 = np.add.reduce([y @ c for y, c in zip(ys, system.coupling)])
    return SampleSet(n, int(seed), tuple(xs), tuple(ys), class_sums, s1, s2)
