"""Independent reference computations used by the test suite.

Everything here deliberately avoids the library's own grid machinery:
dense scans, quadrature, and closed forms only.
"""

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc, erfcx, ndtr


def dense_scan_sup(fn_a, fn_b, lo: float, hi: float, count: int = 2_000_001):
    """Max of |fn_a - fn_b| over a dense 1-d scan; returns (value, argmax)."""
    t = np.linspace(lo, hi, count)
    gap = np.abs(fn_a(t) - fn_b(t))
    i = int(np.argmax(gap))
    return float(gap[i]), float(t[i])


def uniform_vs_gaussian_kolmogorov(count: int = 4_000_001) -> float:
    """sup_x |F(x) - Phi(x)| for the variance-one uniform law by dense scan."""
    a = np.sqrt(3.0)
    x = np.linspace(-a - 2.0, a + 2.0, count)
    f = np.clip((x + a) / (2.0 * a), 0.0, 1.0)
    return float(np.max(np.abs(f - ndtr(x))))


def standardized_uniform_cf(t: np.ndarray) -> np.ndarray:
    """c.f. of the uniform law with variance one: sin(sqrt(3) t) / (sqrt(3) t)."""
    return np.sinc(np.sqrt(3.0) * np.asarray(t, dtype=float) / np.pi)


def laplace_gauss_pdf(x, b: float, sigma: float) -> np.ndarray:
    """Density of Laplace(0, b) + N(0, sigma^2), numerically stable."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pre = sigma**2 / (2.0 * b * b)

    def half(xs):
        u = (xs / sigma + sigma / b) / np.sqrt(2.0)
        out = np.empty_like(xs)
        pos = u >= 0
        out[pos] = erfcx(u[pos]) * np.exp(-(xs[pos] ** 2) / (2.0 * sigma**2))
        out[~pos] = np.exp(xs[~pos] / b + pre) * erfc(u[~pos])
        return out

    return (half(x) + half(-x)) / (4.0 * b)


def laplace_gauss_entropy(b: float, sigma: float) -> float:
    """Differential entropy of Laplace(0, b) + N(0, sigma^2) by quadrature."""

    def integrand(x):
        f = laplace_gauss_pdf(x, b, sigma)[0]
        return -f * np.log(f) if f > 0 else 0.0

    lim = 15.0 * np.sqrt(2.0 * b * b + sigma * sigma)
    value, _ = quad(integrand, -lim, lim, limit=500)
    return float(value)


def spearman(a, b) -> float:
    """Rank correlation without scipy.stats, as a cross-check oracle."""
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra @ rb) / np.sqrt((ra @ ra) * (rb @ rb)))
