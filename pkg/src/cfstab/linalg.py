"""Small dense real linear algebra for dimensions up to ~16.

Elimination and the eigensolver are written out by hand so the numerical
contracts (pivot floor, symmetry tolerance, sweep limit) are explicit and
testable; numpy is used as the array container only. Everything here is a
pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NotPositiveDefinite,
    NotSymmetric,
    SingularMatrix,
)

PIVOT_FLOOR = 1e-12
SYMMETRY_TOL = 1e-10
SPD_FLOOR = 1e-12
_SWEEP_LIMIT = 60


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def as_vector(v) -> np.ndarray:
    a = np.array(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def _require_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")


def invert(m) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting.

    Raises SingularMatrix as soon as a pivot magnitude falls below
    ``PIVOT_FLOOR`` (1e-12).
    """
    a = as_matrix(m)
    _require_square(a)
    d = a.shape[0]
    aug = np.hstack([a, np.eye(d)])
    for col in range(d):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < PIVOT_FLOOR:
            raise SingularMatrix(
                f"pivot {abs(aug[pivot, col]):.3e} below {PIVOT_FLOOR:.0e} in column {col}"
            )
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] = aug[col] / aug[col, col]
        for row in range(d):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, d:]


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` are sorted descending; column k of ``eigenvectors``
    pairs with ``eigenvalues[k]`` and the columns are orthonormal.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def sym_eigen(q) -> SymEigen:
    """Cyclic Jacobi eigensolver for symmetric matrices.

    Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
    norm drops below 1e-14 of the matrix scale. Raises NotSymmetric when the
    input deviates from symmetry by more than ``SYMMETRY_TOL``, NoConvergence
    after the sweep limit (not reachable for sane inputs at this size).
    """
    a = as_matrix(q)
    _require_square(a)
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL:
        raise NotSymmetric(
            f"asymmetry {float(np.max(np.abs(a - a.T))):.3e} above {SYMMETRY_TOL:.0e}"
        )
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return SymEigen(a.diagonal().copy(), v)

    stop = 1e-14 * max(1.0, float(np.sqrt((a * a).sum())))
    converged = False
    for _ in range(_SWEEP_LIMIT):
        off = math.sqrt(float((a * a).sum() - (a.diagonal() ** 2).sum()))
        if off <= stop:
            converged = True
            break
        for p in range(d - 1):
            for r in range(p + 1, d):
                apr = a[p, r]
                if abs(apr) <= stop / (d * d):
                    continue
                app, arr = a[p, p], a[r, r]
                tau = (arr - app) / (2.0 * apr)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                cp, cr = a[:, p].copy(), a[:, r].copy()
                a[:, p] = c * cp - s * cr
                a[:, r] = s * cp + c * cr
                rp, rr = a[p, :].copy(), a[r, :].copy()
                a[p, :] = c * rp - s * rr
                a[r, :] = s * rp + c * rr
                # exact values for the rotated 2x2 block
                a[p, p] = app - t * apr
                a[r, r] = arr + t * apr
                a[p, r] = 0.0
                a[r, p] = 0.0
                vp, vr = v[:, p].copy(), v[:, r].copy()
                v[:, p] = c * vp - s * vr
                v[:, r] = s * vp + c * vr
    else:
        converged = math.sqrt(float((a * a).sum() - (a.diagonal() ** 2).sum())) <= stop
    if not converged:
        raise NoConvergence(f"Jacobi sweeps exceeded {_SWEEP_LIMIT}")

    lam = a.diagonal().copy()
    order = np.argsort(lam, kind="stable")[::-1]
    return SymEigen(lam[order], v[:, order])


def sym_power(q, alpha: float) -> np.ndarray:
    """Symmetric matrix power through the eigendecomposition.

    Negative or non-integer exponents require the matrix to be positive
    definite (smallest eigenvalue above ``SPD_FLOOR``).
    """
    eig = sym_eigen(q)
    lam = eig.eigenvalues
    needs_spd = alpha < 0 or not float(alpha).is_integer()
    if needs_spd and (lam.size == 0 or float(lam.min()) <= SPD_FLOOR):
        raise NotPositiveDefinite(
            f"min eigenvalue {float(lam.min()):.3e} not above {SPD_FLOOR:.0e} "
            f"for exponent {alpha}"
        )
    powered = lam ** float(alpha)
    return (eig.eigenvectors * powered) @ eig.eigenvectors.T


def induced_norm_1(a) -> float:
    """Maximum over columns of the column absolute sum."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.abs(m).sum(axis=0).max())


def is_orthogonal(v, tol: float) -> bool:
    m = as_matrix(v)
    _require_square(m)
    return float(np.max(np.abs(m.T @ m - np.eye(m.shape[0])))) <= tol


def is_scaled_permutation(m, tol: float) -> bool:
    """True when every row and every column has exactly one entry above tol."""
    a = as_matrix(m)
    _require_square(a)
    hits = np.abs(a) > tol
    return bool(np.all(hits.sum(axis=0) == 1) and np.all(hits.sum(axis=1) == 1))
