"""Subspaces, tolerances and the dense primitives everything else is built on."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels as K


class NotNonnegativeError(ValueError):
    """A matrix or relation that should be nonnegative has a negative eigenvalue."""


@dataclass(frozen=True)
class Tol:
    """Tolerance policy shared by every decision in the package.

    Decision layers are separated by about two orders of magnitude so a
    borderline call in one layer does not cascade into the next.
    """

    rank_rel: float = 1e-9
    psd_tol: float = 1e-8
    sub_eq_tol: float = 1e-7
    conv_eps: float = 1e-8
    snap_tol: float = 1e-6
    blowup_cap: float = 1e12
    n_max_doublings: int = 40

    def __post_init__(self):
        for name in ("rank_rel", "psd_tol", "sub_eq_tol", "conv_eps",
                     "snap_tol", "blowup_cap", "n_max_doublings"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")
        if not self.rank_rel < self.sub_eq_tol < 1:
            raise ValueError("need rank_rel < sub_eq_tol < 1")
        if not self.snap_tol < 1 < self.blowup_cap:
            raise ValueError("need snap_tol < 1 < blowup_cap")

    def override(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


DEFAULT_TOL = Tol()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of R^n held as an orthonormal basis (columns).

    Bases are not unique, so comparisons always go through projectors.
    """

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def distance(self, other: "Subspace") -> float:
        """Frobenius distance between the two orthogonal projectors."""
        _check_same_ambient(self, other)
        return K.proj_dist(self.basis, other.basis)

    def same_as(self, other: "Subspace", tol: Tol = DEFAULT_TOL) -> bool:
        return self.distance(other) < tol.sub_eq_tol

    def project(self, v):
        return self.projector @ v

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def span(cls, *vectors, n=None, tol: Tol = DEFAULT_TOL) -> "Subspace":
        if not vectors:
            return cls.zero(n)
        return orthonormalize(np.column_stack(vectors), tol)


def _check_same_ambient(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(
            f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def orthonormalize(vectors, tol: Tol = DEFAULT_TOL, scale: float = 0.0) -> Subspace:
    """Orthonormal basis of the column span of ``vectors``.

    Singular values below ``rank_rel * max(s_max, scale)`` are discarded.
    Pass ``scale=1`` when the columns come from an orthonormal basis, so
    numerical noise in an otherwise-zero block is not promoted to rank.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return Subspace(K.range_basis(v, tol.rank_rel, scale))


def complement(s: Subspace, tol: Tol = DEFAULT_TOL) -> Subspace:
    return Subspace(K.complement_basis(s.basis, tol.rank_rel))


def subspace_sum(s1: Subspace, s2: Subspace, tol: Tol = DEFAULT_TOL) -> Subspace:
    _check_same_ambient(s1, s2)
    return orthonormalize(np.hstack([s1.basis, s2.basis]), tol, scale=1.0)


def intersect(s1: Subspace, s2: Subspace, tol: Tol = DEFAULT_TOL) -> Subspace:
    _check_same_ambient(s1, s2)
    return complement(subspace_sum(complement(s1, tol), complement(s2, tol), tol), tol)


def contains(s1: Subspace, s2: Subspace, tol: Tol = DEFAULT_TOL) -> bool:
    """True when every basis vector of ``s2`` lies in ``s1`` up to ``sub_eq_tol``."""
    _check_same_ambient(s1, s2)
    if s2.dim == 0:
        return True
    resid = s2.basis - s1.basis @ (s1.basis.T @ s2.basis)
    return bool(np.max(np.linalg.norm(resid, axis=0)) < tol.sub_eq_tol)


def image(m, s: Subspace, tol: Tol = DEFAULT_TOL) -> Subspace:
    """The subspace ``m(s)``."""
    m = np.asarray(m, dtype=float)
    return orthonormalize(m @ s.basis, tol)


def kernel_in(m, s: Subspace, tol: Tol = DEFAULT_TOL, scale: float = 1.0) -> Subspace:
    """Vectors of ``s`` annihilated by ``m``."""
    m = np.asarray(m, dtype=float)
    if s.dim == 0:
        return s
    ns = K.null_space(m @ s.basis, tol.rank_rel, scale)
    return Subspace(s.basis @ ns)


def pseudoinverse(m, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse with a relative singular-value cut at ``rank_rel``."""
    return K.pinv(np.asarray(m, dtype=float), tol.rank_rel)


def psd_sqrt(m, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    """Symmetric nonnegative square root of a symmetric PSD matrix.

    Eigenvalues in ``[-psd_tol, 0)`` are treated as zero; anything more
    negative raises :class:`NotNonnegativeError`.  Positive eigenvalues up to
    ``rank_rel`` times the largest one are also treated as zero.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("psd_sqrt needs a square matrix")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > 10 * tol.rank_rel * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"matrix is not symmetric (asymmetry {asym:.3g})")
    # rounding puts zero eigenvalues near eps*|M|; their square roots would be ~1e-8
    root, wmin = K.psd_sqrt(m, tol.rank_rel)
    if wmin < -tol.psd_tol * max(1.0, np.max(np.abs(m))):
        raise NotNonnegativeError(f"eigenvalue {wmin:.3g} below -psd_tol")
    return root


def sym_eig(m):
    """Eigen-decomposition of the symmetric part of ``m`` (ascending)."""
    return K.sym_eig(np.asarray(m, dtype=float))


def canonical_signs(v: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first entry of non-negligible size is positive."""
    v = v.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        big = np.flatnonzero(np.abs(col) > max(atol, 1e-6 * np.max(np.abs(col), initial=0.0)))
        if big.size and col[big[0]] < 0:
            v[:, j] = -col
    return v
