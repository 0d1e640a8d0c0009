"""Exact Euclidean projections onto simple closed convex sets.

Every set exposes ``project`` and ``distance``. Sets are immutable once
built; :class:`AffineSubspace` factorizes its constraint matrix in the
constructor and reuses the factor for every projection.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "ConvexSet",
    "AffineSubspace",
    "NonnegativeOrthant",
    "Box",
    "SecondOrderCone",
    "ZeroCone",
    "FreeSpace",
    "ProductSet",
    "RelaxedProjector",
    "RankDeficientError",
    "project",
    "distance",
    "relaxed_apply",
    "project_product",
]


class RankDeficientError(ValueError):
    """Raised when an affine constraint matrix does not have full row rank."""


class ConvexSet:
    """Base class for nonempty closed convex subsets of R^n."""

    dim: int

    def project(self, x: np.ndarray) -> np.ndarray:
        """Return the closest point of the set to ``x``."""
        return self._project(self._check(x))

    def distance(self, x: np.ndarray) -> float:
        x = self._check(x)
        return float(np.linalg.norm(self._project(x) - x))

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return self.distance(x) <= tol

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"{type(self).__name__} has dimension {self.dim}, got point of shape {x.shape}"
            )
        return x

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.dim})"


class NonnegativeOrthant(ConvexSet):
    def __init__(self, dim: int):
        self.dim = int(dim)

    def _project(self, x):
        return np.maximum(x, 0.0)

    def distance(self, x):
        return float(np.linalg.norm(np.minimum(self._check(x), 0.0)))


class ZeroCone(ConvexSet):
    """The singleton ``{0}``."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def _project(self, x):
        return np.zeros_like(x)


class FreeSpace(ConvexSet):
    """All of R^n."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def _project(self, x):
        return x.copy()


class Box(ConvexSet):
    """Componentwise bounds ``lower <= x <= upper``."""

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float)).copy()
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float)).copy()
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("empty box: lower > upper in some coordinate")
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False
        self.dim = self.lower.size

    def _project(self, x):
        return np.clip(x, self.lower, self.upper)


class SecondOrderCone(ConvexSet):
    """``{(t, u) : ||u||_2 <= t}`` with the scalar ``t`` stored first."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("second-order cone needs dimension >= 1")
        self.dim = int(dim)

    def _project(self, x):
        t, u = x[0], x[1:]
        nu = np.linalg.norm(u)
        if nu <= t:
            return x.copy()
        if nu <= -t:
            return np.zeros_like(x)
        scale = 0.5 * (t + nu)
        out = np.empty_like(x)
        out[0] = scale
        out[1:] = (scale / nu) * u
        return out


class ProductSet(ConvexSet):
    """Cartesian product of sets, each acting on a contiguous block of coordinates."""

    def __init__(self, components: Sequence[ConvexSet]):
        flat: list[ConvexSet] = []
        for c in components:
            if isinstance(c, ProductSet):
                flat.extend(c.components)
            elif c.dim > 0:
                flat.append(c)
        self.components = tuple(flat)
        self.offsets = tuple(np.cumsum([0] + [c.dim for c in flat]).tolist())
        self.dim = self.offsets[-1]

    def blocks(self, x: np.ndarray):
        for c, lo, hi in zip(self.components, self.offsets[:-1], self.offsets[1:]):
            yield c, x[lo:hi]

    def _project(self, x):
        if not self.components:
            return x.copy()
        return np.concatenate([c._project(xi) for c, xi in self.blocks(x)])

    def distance(self, x):
        x = self._check(x)
        return float(np.sqrt(sum(c.distance(xi) ** 2 for c, xi in self.blocks(x))))

    def __repr__(self):
        return " x ".join(repr(c) for c in self.components) or "ProductSet()"


def _fro_norm(A) -> float:
    if sp.issparse(A):
        return float(spla.norm(A))
    return float(np.linalg.norm(A))


class AffineSubspace(ConvexSet):
    """The set ``{z : A z = b}`` for a full-row-rank ``A`` (dense or scipy.sparse).

    Projection uses the normal equations ``z = x - A^T (A A^T)^{-1} (A x - b)``
    with a factor of ``A A^T`` computed once. If that factor is numerically
    singular the indefinite KKT system ``[I A^T; A 0]`` is factorized instead,
    and if that fails too the set is rejected with :class:`RankDeficientError`.

    The attribute ``solves`` counts linear solves against the factor; it is a
    diagnostic counter only.

    Args:
        A: constraint matrix, shape ``(m, n)``.
        b: right-hand side, shape ``(m,)``.
        pivot_tol: relative pivot threshold. KKT pivots are compared with
            ``pivot_tol * max(||A||_F, 1)``, pivots of ``A A^T`` (squared
            Cholesky diagonal) with the square of that scale.
    """

    def __init__(self, A, b, pivot_tol: float = 1e-12):
        self.sparse = sp.issparse(A)
        self.A = sp.csr_matrix(A, dtype=float) if self.sparse else np.array(A, dtype=float, ndmin=2)
        self.b = np.asarray(b, dtype=float).reshape(-1).copy()
        m, n = self.A.shape
        if self.b.shape != (m,):
            raise ValueError(f"rhs has length {self.b.size}, expected {m}")
        if not self.sparse:
            self.A.flags.writeable = False
        self.b.flags.writeable = False
        self.dim = n
        self.m = m
        self.solves = 0
        self._scale = _fro_norm(self.A)
        # pivots of A A^T scale like ||A||^2; partial pivoting on the KKT
        # matrix pivots on entries of A, which scale like ||A||
        self._tol = pivot_tol * max(self._scale, 1.0)
        self._tol_normal = pivot_tol * max(self._scale, 1.0) ** 2
        if not self._factor_normal():
            if not self._factor_kkt():
                raise RankDeficientError(
                    f"constraint matrix ({m}x{n}) is rank deficient at pivot tolerance {self._tol:.3g}"
                )

    # -- factorization ---------------------------------------------------
    def _factor_normal(self) -> bool:
        A = self.A
        AAt = A @ A.T
        try:
            if self.sparse:
                lu = spla.splu(sp.csc_matrix(AAt))
                piv = np.abs(lu.U.diagonal())
                self._normal = lu.solve
            else:
                c, lower = la.cho_factor(AAt)
                piv = np.diag(c) ** 2
                self._normal = lambda v, _f=(c, lower): la.cho_solve(_f, v)
        except (la.LinAlgError, RuntimeError):
            return False
        if self.m and piv.min() <= self._tol_normal:
            return False
        self.method = "normal"
        return True

    def _factor_kkt(self) -> bool:
        m, n = self.A.shape
        K = sp.bmat([[sp.identity(n), self.A.T], [self.A, None]], format="csc")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if self.sparse:
                    lu = spla.splu(K)
                    piv = np.abs(lu.U.diagonal())
                    self._kkt = lu.solve
                else:
                    f = la.lu_factor(K.toarray())
                    piv = np.abs(np.diag(f[0]))
                    self._kkt = lambda v, _f=f: la.lu_solve(_f, v)
        except (la.LinAlgError, RuntimeError):
            return False
        if piv.min() <= self._tol:
            return False
        self.method = "kkt"
        return True

    # -- projection ------------------------------------------------------
    def _project(self, x):
        self.solves += 1
        if self.method == "normal":
            return x - self.A.T @ self._normal(self.A @ x - self.b)
        return self._kkt(np.concatenate([x, self.b]))[: self.dim]

    def apply_linear(self, v: np.ndarray) -> np.ndarray:
        """Apply the linear part of the projection (projection onto the null space of A)."""
        v = self._check(v)
        self.solves += 1
        if self.method == "normal":
            return v - self.A.T @ self._normal(self.A @ v)
        return self._kkt(np.concatenate([v, np.zeros(self.m)]))[: self.dim]

    def residual(self, z: np.ndarray) -> float:
        """``||A z - b||_2``; needs no factorization."""
        return float(np.linalg.norm(self.A @ self._check(z) - self.b))

    def __repr__(self):
        return f"AffineSubspace({self.m}x{self.dim}, {self.method})"


class RelaxedProjector:
    """``x -> (1 - relaxation) x + relaxation * project(x)`` with relaxation in (0, 2].

    ``relaxation = 1`` is the projection and ``relaxation = 2`` the reflection.
    """

    def __init__(self, set: ConvexSet, relaxation: float = 1.0):
        relaxation = float(relaxation)
        if not 0.0 < relaxation <= 2.0:
            raise ValueError(f"relaxation must lie in (0, 2], got {relaxation}")
        self.set = set
        self.relaxation = relaxation

    @property
    def dim(self) -> int:
        return self.set.dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)[0]

    def apply(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(relaxed image, plain projection)`` of ``x``."""
        x = np.asarray(x, dtype=float)
        px = self.set.project(x)
        a = self.relaxation
        if a == 1.0:
            return px, px
        return x + a * (px - x), px

    def __repr__(self):
        return f"RelaxedProjector({self.set!r}, {self.relaxation})"


def project(set: ConvexSet, x) -> np.ndarray:
    return set.project(x)


def distance(set: ConvexSet, x) -> float:
    return set.distance(x)


def relaxed_apply(rp: RelaxedProjector, x) -> np.ndarray:
    return rp(x)


def project_product(sets: ProductSet, x) -> np.ndarray:
    if not isinstance(sets, ProductSet):
        raise TypeError("project_product expects a ProductSet")
    return sets.project(x)
