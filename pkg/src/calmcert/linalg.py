"""Dense linear algebra kernel: factorizations, numerical rank, subspaces.

Everything downstream (cones, certificates) reduces to the operations here.
Matrices are plain 2-D float64 ndarrays; subspaces always carry orthonormal
bases so that membership is a single projection residual.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package.

    rank:   singular values below rank * sigma_max are treated as zero
    orth:   orthogonality / symmetry slack
    member: set-membership slack (boundary classification)
    kkt:    optimality residual target
    """

    rank: float = 1e-9
    orth: float = 1e-8
    member: float = 1e-7
    kkt: float = 1e-10

    def __post_init__(self):
        for name in ("rank", "orth", "member", "kkt"):
            v = getattr(self, name)
            if not (v > 0.0 and np.isfinite(v)):
                raise ValueError(f"tolerance {name!r} must be strictly positive")
        if self.rank >= 1.0:
            raise ValueError("tolerance 'rank' must be < 1")


DEFAULT_TOL = Tolerances()


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


class Subspace:
    """Linear subspace of R^n stored as an orthonormal basis (n x k)."""

    def __init__(self, ambient_dim, basis=None):
        self.ambient_dim = int(ambient_dim)
        if basis is None:
            basis = np.zeros((self.ambient_dim, 0))
        basis = np.asarray(basis, dtype=float)
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if basis.shape[0] != self.ambient_dim:
            raise ValueError("basis rows do not match ambient dimension")
        self.basis = _reorthonormalize(basis)

    @property
    def dim(self):
        return self.basis.shape[1]

    @classmethod
    def full(cls, n):
        return cls(n, np.eye(n))

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def span_of(cls, vectors, tol=DEFAULT_TOL):
        """Subspace spanned by the given vectors (rows or a single vector)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(v.shape[1], _orth_columns(v.T, tol.rank))

    def project(self, w):
        w = np.asarray(w, dtype=float)
        return self.basis @ (self.basis.T @ w)

    def residual(self, w):
        w = np.asarray(w, dtype=float)
        return float(np.linalg.norm(w - self.project(w)))

    def contains(self, w, tol):
        return self.residual(w) <= tol * max(1.0, float(np.linalg.norm(w)))

    def complement(self):
        """Orthogonal complement as a Subspace."""
        n = self.ambient_dim
        if self.dim == 0:
            return Subspace.full(n)
        if self.dim == n:
            return Subspace.zero(n)
        u, s, _ = np.linalg.svd(self.basis, full_matrices=True)
        return Subspace(n, u[:, self.dim:])

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def _reorthonormalize(basis):
    """QR re-orthonormalization; drops numerically dependent columns."""
    if basis.shape[1] == 0:
        return basis
    q, r = np.linalg.qr(basis)
    keep = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(np.diag(r)).max())
    return q[:, keep]


def _orth_columns(a, tol_rank):
    """Orthonormal basis of the column space of a at relative rank tolerance."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0))
    r = int(np.sum(s > tol_rank * s[0]))
    return u[:, :r]


def svd(a):
    """Full SVD a = U diag(sigma) V^T with U, V orthogonal, sigma nonincreasing."""
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    return u, s, vt.T


def sym_eig(s, tol=DEFAULT_TOL):
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing."""
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise ValueError("sym_eig requires a square matrix")
    scale = max(1.0, float(np.abs(s).max()))
    if np.abs(s - s.T).max() > tol.orth * scale:
        raise ValueError("sym_eig requires a symmetric matrix")
    lam, q = np.linalg.eigh(0.5 * (s + s.T))
    order = np.argsort(lam)[::-1]
    return q[:, order], lam[order]


def null_space(a, tol=DEFAULT_TOL):
    """Orthonormal basis of {w : ||A w|| <= rank_tol * sigma_max * ||w||}."""
    a = _as_matrix(a)
    n = a.shape[1]
    if a.size == 0:
        return Subspace.full(n)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return Subspace.full(n)
    r = int(np.sum(s > tol.rank * smax))
    return Subspace(n, vt[r:].T)


def range_space(a, tol=DEFAULT_TOL):
    """Orthonormal basis of the column space at the relative rank tolerance."""
    a = _as_matrix(a)
    return Subspace(a.shape[0], _orth_columns(a, tol.rank))


def intersect_subspaces(p, q, tol=DEFAULT_TOL):
    """P cap Q via the null space of stacked orthogonal-complement projectors."""
    if p.ambient_dim != q.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    n = p.ambient_dim
    if p.dim == 0 or q.dim == 0:
        return Subspace.zero(n)
    stack = np.vstack([
        np.eye(n) - p.basis @ p.basis.T,
        np.eye(n) - q.basis @ q.basis.T,
    ])
    return null_space(stack, tol)
