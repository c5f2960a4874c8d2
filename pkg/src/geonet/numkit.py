"""Numeric substrate: shape-checked dense products, a symmetric eigensolver and seeded RNG.

Matrices are plain 2-D ``numpy.float64`` arrays. Randomness flows through
``numpy.random.Generator`` backed by PCG64, which yields the same stream on
every platform for a given seed. Gaussian draws use numpy's ziggurat sampler.
"""

from __future__ import annotations

import numpy as np

EIGEN_MAX_SWEEPS = 100
EIGEN_OFF_TOL = 1e-10
SYMMETRY_TOL = 1e-9
# Cyclic Jacobi costs O(n^3) per sweep with ~10 sweeps; above this size the
# LAPACK driver is used instead.
JACOBI_MAX_DIM = 64


class ShapeError(ValueError):
    """Raised when operand dimensions do not line up."""


class NotSymmetricError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def make_rng(seed: int | None = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rng_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    if not lo < hi:
        raise ValueError(f"uniform range requires lo < hi, got [{lo}, {hi})")
    return rng.uniform(lo, hi, size)


def rng_gaussian(rng: np.random.Generator, mean: float, std: float, size=None):
    if not std >= 0:
        raise ValueError(f"std must be >= 0, got {std}")
    # std == 0 still consumes a draw, so stream positions don't depend on std
    return rng.normal(mean, std, size)


def _normalize_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _off_norm(a: np.ndarray) -> float:
    # summed directly; |A|^2 - |diag A|^2 cancels down to ~sqrt(eps) * |A|
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def _jacobi(c: np.ndarray, max_sweeps: int, tol: float):
    a = c.copy()
    n = a.shape[0]
    vt = np.eye(n)  # rows are eigenvectors
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= tol * scale:
            return np.diag(a).copy(), vt.T
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # theta**2 would overflow; t ~ 1/(2 theta)
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                rp = a[p].copy()
                rq = a[q].copy()
                a[p] = cs * rp - sn * rq
                a[q] = sn * rp + cs * rq
                a[:, p] = a[p]
                a[:, q] = a[q]
                a[p, p] = rp[p] - t * apq
                a[q, q] = rq[q] + t * apq
                a[p, q] = a[q, p] = 0.0
                vp = vt[p].copy()
                vt[p] = cs * vp - sn * vt[q]
                vt[q] = sn * vp + cs * vt[q]
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", _off_norm(a))


def sym_eigen(c, method: str = "auto", max_sweeps: int = EIGEN_MAX_SWEEPS, tol: float = EIGEN_OFF_TOL):
    """Eigendecomposition of a real symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted descending
    and eigenvectors as orthonormal columns, each flipped so that its
    largest-magnitude entry is positive.

    ``method`` is ``"jacobi"`` (cyclic Jacobi rotations), ``"lapack"``
    (``numpy.linalg.eigh``) or ``"auto"``, which picks Jacobi up to
    ``JACOBI_MAX_DIM`` rows.
    """
    c = as_matrix(c, "c")
    n, m = c.shape
    if n != m:
        raise ShapeError(f"eigendecomposition needs a square matrix, got {n}x{m}")
    asym = np.max(np.abs(c - c.T)) if n else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetricError(f"matrix is not symmetric (max |c - c^T| = {asym:.3e})")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    c = 0.5 * (c + c.T)
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        vals, vecs = _jacobi(c, max_sweeps, tol)
    elif method == "lapack":
        vals, vecs = np.linalg.eigh(c)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(-vals, kind="stable")
    return vals[order], _normalize_signs(vecs[:, order])
