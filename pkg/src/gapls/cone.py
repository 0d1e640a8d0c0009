"""Cone programs as two-set feasibility problems.

A cone program ``min c^T x  s.t.  A x + s = b, s in K`` and its dual
``max -b^T y  s.t.  -A^T y = c, y in K*`` are stacked into one search for
``z = (x, s, y)`` in the intersection of

* the affine set ``[A I 0; 0 0 -A^T; c^T 0 b^T] z = (b, c, 0)``, and
* the cone ``R^n x K x K*``.

Any point of the intersection is a primal-dual optimal pair with zero
duality gap, provided strong duality holds. Nothing here detects its failure:
an empty intersection just never converges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .gap import GapOperator
from .linesearch import LineSearchConfig
from .projections import (
    AffineSubspace,
    ConvexSet,
    FreeSpace,
    NonnegativeOrthant,
    ProductSet,
    SecondOrderCone,
    ZeroCone,
)
from .solver import DEFAULT_MAX_ITER, SolveResult, affine_criterion, solve

__all__ = [
    "ConeProgram",
    "EmbeddedFeasibility",
    "PrimalDualSolution",
    "dual_cone",
    "embed",
    "recover",
    "solve_cone_program",
]

_CONES = (ZeroCone, NonnegativeOrthant, SecondOrderCone, FreeSpace)


def _as_product(K) -> ProductSet:
    if isinstance(K, ProductSet):
        return K
    if isinstance(K, ConvexSet):
        return ProductSet([K])
    return ProductSet(list(K))


def dual_cone(K) -> ProductSet:
    """Componentwise dual cone.

    Orthant and second-order cone are self-dual; the zero cone and the free
    space are dual to each other. Boxes and affine sets are not cones and are
    rejected.
    """
    out = []
    for c in _as_product(K).components:
        if isinstance(c, (NonnegativeOrthant, SecondOrderCone)):
            out.append(type(c)(c.dim))
        elif isinstance(c, ZeroCone):
            out.append(FreeSpace(c.dim))
        elif isinstance(c, FreeSpace):
            out.append(ZeroCone(c.dim))
        else:
            raise TypeError(f"no dual cone available for {c!r}")
    return ProductSet(out)


@dataclass(frozen=True)
class ConeProgram:
    """``min c^T x  s.t.  A x + s = b,  s in K`` with ``A`` of shape (m, n)."""

    A: object
    b: np.ndarray
    c: np.ndarray
    K: ProductSet

    def __post_init__(self):
        A = sp.csr_matrix(self.A, dtype=float) if sp.issparse(self.A) else np.array(self.A, dtype=float, ndmin=2)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        K = _as_product(self.K)
        m, n = A.shape
        if b.size != m or c.size != n:
            raise ValueError(f"A is {m}x{n} but b has {b.size} and c has {c.size} entries")
        if K.dim != m:
            raise ValueError(f"cone dimension {K.dim} does not match m={m}")
        for comp in K.components:
            if not isinstance(comp, _CONES):
                raise TypeError(f"{comp!r} is not a supported cone")
        dense = A.toarray() if sp.issparse(A) else A
        if not (np.all(np.isfinite(dense)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("program data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "K", K)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PrimalDualSolution:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    gap: float
    primal_residual: float
    dual_residual: float


@dataclass(frozen=True)
class EmbeddedFeasibility:
    """The affine set and cone of the primal-dual embedding, over ``z = (x, s, y)``.

    The affine set is factorized on first access of :attr:`affine`, so a
    program whose block matrix is rank deficient can still be embedded and
    checked, but not solved.
    """

    program: ConeProgram
    matrix: sp.csr_matrix
    rhs: np.ndarray
    coneset: ProductSet

    @property
    def n(self) -> int:
        return self.program.n

    @property
    def m(self) -> int:
        return self.program.m

    @property
    def dim(self) -> int:
        return self.n + 2 * self.m

    @cached_property
    def affine(self) -> AffineSubspace:
        return AffineSubspace(self.matrix, self.rhs)

    def affine_residual(self, z) -> float:
        return float(np.linalg.norm(self.matrix @ np.asarray(z, dtype=float) - self.rhs))

    def stack(self, x, s, y) -> np.ndarray:
        return np.concatenate([np.asarray(x, float), np.asarray(s, float), np.asarray(y, float)])

    def operator(self, alphas=(1.95, 1.95), alpha: float | None = None) -> GapOperator:
        """GAP operator with the affine set applied first."""
        return GapOperator([self.affine, self.coneset], alphas, alpha)


def embed(p: ConeProgram) -> EmbeddedFeasibility:
    m, n = p.m, p.n
    A = sp.csr_matrix(p.A)
    M = sp.bmat(
        [
            [A, sp.identity(m), sp.csr_matrix((m, m))],
            [sp.csr_matrix((n, n)), sp.csr_matrix((n, m)), -A.T],
            [sp.csr_matrix(p.c.reshape(1, n)), sp.csr_matrix((1, m)), sp.csr_matrix(p.b.reshape(1, m))],
        ],
        format="csr",
    )
    rhs = np.concatenate([p.b, p.c, [0.0]])
    coneset = ProductSet([FreeSpace(n), *p.K.components, *dual_cone(p.K).components])
    return EmbeddedFeasibility(p, M, rhs, coneset)


def recover(e: EmbeddedFeasibility, z) -> PrimalDualSolution:
    """Split ``z`` into ``(x, s, y)`` and report gap and residuals."""
    z = np.asarray(z, dtype=float)
    if z.shape != (e.dim,):
        raise ValueError(f"expected a point of length {e.dim}, got shape {z.shape}")
    p = e.program
    n, m = p.n, p.m
    x, s, y = z[:n].copy(), z[n : n + m].copy(), z[n + m :].copy()
    return PrimalDualSolution(
        x=x,
        s=s,
        y=y,
        gap=float(p.c @ x + p.b @ y),
        primal_residual=float(np.linalg.norm(p.A @ x + s - p.b)),
        dual_residual=float(np.linalg.norm(p.A.T @ y + p.c)),
    )


def solve_cone_program(
    p: ConeProgram,
    alphas=(1.95, 1.95),
    alpha: float | None = None,
    stepper: str = "projected_ls",
    ls_config: LineSearchConfig | None = None,
    tol: float = 1e-9,
    set_tol: float = 1e-12,
    max_iter: int = DEFAULT_MAX_ITER,
    x0=None,
) -> tuple[PrimalDualSolution, SolveResult]:
    """Embed, run GAP from ``x0`` (default zero) and recover the primal-dual pair.

    Terminates when a monitored point has affine residual at most ``tol`` and
    lies within ``set_tol`` of the cone.
    """
    e = embed(p)
    op = e.operator(alphas, alpha)
    z0 = np.zeros(e.dim) if x0 is None else np.asarray(x0, dtype=float)
    crit = affine_criterion(e.affine, e.coneset, tol, set_tol)
    res = solve(op, z0, crit, max_iter, stepper, ls_config)
    return recover(e, res.solution), res
