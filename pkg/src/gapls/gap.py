"""Generalized alternating projections: parameters and the averaged operator.

The operator is ``T = (1 - alpha) Id + alpha S`` with
``S = P_p ... P_2 P_1`` a composition of relaxed projectors. Ordering
convention: ``alphas[0]`` and ``sets[0]`` belong to the set that is applied
FIRST (rightmost factor in S).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .projections import AffineSubspace, ConvexSet, RelaxedProjector

__all__ = [
    "AssumptionError",
    "GapConfig",
    "GapOperator",
    "beta",
    "averagedness_constant",
    "validate",
    "outer_alpha",
    "apply_S",
    "apply_T",
    "IterationState",
]

CASES = ("A1", "A2", "A3")


class AssumptionError(ValueError):
    """No admissible parameter regime matches the requested relaxations."""

    def __init__(self, violations: dict[str, list[str]]):
        self.violations = violations
        lines = [f"{case}: " + "; ".join(v) for case, v in violations.items()]
        super().__init__("no assumption case holds:\n  " + "\n  ".join(lines))


def beta(alphas: Sequence[float]) -> float:
    """Averagedness constant of the composition of relaxed projections.

    Only defined when every relaxation lies strictly inside (0, 2).
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("need at least one relaxation parameter")
    bad = [a for a in alphas if not 0.0 < a < 2.0]
    if bad:
        raise ValueError(f"beta is undefined for relaxations outside (0, 2): {bad}")
    s = sum(a / (2.0 - a) for a in alphas)
    return s / (1.0 + s)


def _violations(alpha: float, alphas: Sequence[float], p: int) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {"A1": [], "A2": [], "A3": []}

    inside = all(0.0 < a < 2.0 for a in alphas)
    if not inside:
        out["A1"].append("every alpha_i must lie in (0, 2)")
    else:
        b = beta(alphas)
        if not 0.0 < alpha < 1.0 / b:
            out["A1"].append(f"alpha={alpha:g} must lie in (0, 1/beta) = (0, {1.0 / b:g})")

    if not 0.0 < alpha < 1.0:
        out["A2"].append(f"alpha={alpha:g} must lie in (0, 1)")
        out["A3"].append(f"alpha={alpha:g} must lie in (0, 1)")
    if not all(0.0 < a <= 2.0 for a in alphas):
        out["A2"].append("every alpha_i must lie in (0, 2]")
    if sum(a == 2.0 for a in alphas) > 1:
        out["A2"].append("at most one alpha_i may equal 2")

    if p != 2 or len(alphas) != 2:
        out["A3"].append(f"needs exactly two sets, got {p}")
    if not all(a == 2.0 for a in alphas):
        out["A3"].append("needs alpha_1 = alpha_2 = 2")
    return out


def validate(config: "GapConfig | tuple[float, Sequence[float]]", p: int | None = None) -> str:
    """Return the first satisfied case label ('A1', 'A2' or 'A3').

    Raises:
        AssumptionError: listing every violated bound of every case.
    """
    if isinstance(config, GapConfig):
        alpha, alphas = config.alpha, config.alphas
    else:
        alpha, alphas = config
    alphas = tuple(float(a) for a in alphas)
    p = len(alphas) if p is None else p
    if p != len(alphas):
        raise ValueError(f"{len(alphas)} relaxations given for {p} sets")
    v = _violations(float(alpha), alphas, p)
    for case in CASES:
        if not v[case]:
            return case
    raise AssumptionError(v)


@dataclass(frozen=True)
class GapConfig:
    """Outer relaxation ``alpha`` and per-set relaxations ``alphas``.

    ``alphas[0]`` pairs with the first-applied set. The matching assumption
    case is determined on construction.
    """

    alpha: float
    alphas: tuple[float, ...]
    assumption_case: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "assumption_case", validate((self.alpha, self.alphas)))

    @property
    def p(self) -> int:
        return len(self.alphas)

    @property
    def averagedness(self) -> float:
        return averagedness_constant(self)


def averagedness_constant(config: GapConfig) -> float:
    """``alpha * beta`` in case A1, ``alpha`` in cases A2/A3."""
    if config.assumption_case == "A1":
        return config.alpha * beta(config.alphas)
    return config.alpha


def outer_alpha(alphas: Sequence[float], target: float = 0.85) -> float:
    """Outer relaxation giving averagedness constant ``target``.

    Uses ``target / beta`` when beta is defined, otherwise ``target`` itself
    (the constant is alpha whenever some alpha_i equals 2).
    """
    if all(0.0 < a < 2.0 for a in alphas):
        return target / beta(alphas)
    return target


class GapOperator:
    """The GAP operator over an ordered list of sets.

    Args:
        sets: sets in application order (``sets[0]`` is applied first).
        alphas: relaxation per set, same order.
        alpha: outer relaxation. Defaults to :func:`outer_alpha`.
    """

    def __init__(self, sets: Sequence[ConvexSet], alphas: Sequence[float], alpha: float | None = None):
        sets = list(sets)
        if not sets:
            raise ValueError("need at least one set")
        if len(alphas) != len(sets):
            raise ValueError(f"{len(alphas)} relaxations given for {len(sets)} sets")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ValueError(f"sets have mismatched dimensions {sorted(dims)}")
        if alpha is None:
            alpha = outer_alpha(alphas)
        self.config = GapConfig(alpha, tuple(alphas))
        self.projectors = tuple(RelaxedProjector(s, a) for s, a in zip(sets, self.config.alphas))
        self.dim = sets[0].dim
        n_aff = 0
        for s in sets:
            if not isinstance(s, AffineSubspace):
                break
            n_aff += 1
        self.affine_prefix = n_aff
        self._h = None

    @property
    def sets(self) -> tuple[ConvexSet, ...]:
        return tuple(rp.set for rp in self.projectors)

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @property
    def p(self) -> int:
        return len(self.projectors)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"operator acts on R^{self.dim}, got shape {x.shape}")
        return x

    def S(self, x) -> np.ndarray:
        return self.S_trace(x)[0]

    def S_trace(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(S x, projection of x onto the first set)``."""
        y = self._check(x)
        y, first = self.projectors[0].apply(y)
        for rp in self.projectors[1:]:
            y = rp(y)
        return y, first

    def T(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(T x, S x - x)``."""
        x = self._check(x)
        r = self.S(x) - x
        return x + self.alpha * r, r

    def residual(self, x) -> np.ndarray:
        x = self._check(x)
        return self.S(x) - x

    # -- affine split S = S2 o S1 with S1 x = F x + h ----------------------
    def S1_linear(self, v: np.ndarray) -> np.ndarray:
        """Linear part F of the leading affine block S1."""
        if self.affine_prefix == 0:
            raise ValueError("operator has no leading affine sets")
        for rp in self.projectors[: self.affine_prefix]:
            a = rp.relaxation
            v = (1.0 - a) * v + a * rp.set.apply_linear(v)
        return v

    @property
    def S1_offset(self) -> np.ndarray:
        """Offset h = S1(0) of the leading affine block."""
        if self._h is None:
            y = np.zeros(self.dim)
            for rp in self.projectors[: self.affine_prefix]:
                y = rp(y)
            y.flags.writeable = False
            self._h = y
        return self._h

    def S2(self, y: np.ndarray) -> np.ndarray:
        for rp in self.projectors[self.affine_prefix :]:
            y = rp(y)
        return y

    def monitored_candidates(self, x, first: np.ndarray | None = None) -> list[tuple[str, np.ndarray]]:
        """Projected points tested for termination.

        ``first`` is the projection of ``x`` onto the first set, if already known.
        Returns the projection onto the first set and, for p >= 2, the plain
        alternating-projection sweep through all sets starting from it.
        """
        x = self._check(x)
        z = self.sets[0].project(x) if first is None else first
        out = [("P1", z)]
        if self.p >= 2:
            w = z
            for s in self.sets[1:]:
                w = s.project(w)
            out.append(("Pp..P1", w))
        return out

    def __repr__(self):
        return f"GapOperator(p={self.p}, alphas={self.config.alphas}, alpha={self.alpha:g}, case={self.config.assumption_case})"


def apply_S(op: GapOperator, x) -> np.ndarray:
    return op.S(x)


def apply_T(op: GapOperator, x) -> tuple[np.ndarray, np.ndarray]:
    return op.T(x)


@dataclass
class IterationState:
    """Quantities of one iteration: iterate, residual, nominal step and its residual.

    ``first`` caches the projection of ``x`` onto the first set and
    ``first_nom`` the same for ``x_nom``, when known.
    """

    k: int
    x: np.ndarray
    r: np.ndarray
    x_nom: np.ndarray | None = None
    r_nom: np.ndarray | None = None
    first: np.ndarray | None = None
    first_nom: np.ndarray | None = None
    residual_norm_history: list[float] = field(default_factory=list)

    @classmethod
    def at(cls, op: GapOperator, x, k: int = 0) -> "IterationState":
        """Evaluate the residual and nominal step at ``x`` from scratch."""
        x = op._check(x)
        sx, first = op.S_trace(x)
        r = sx - x
        state = cls(k=k, x=x, r=r, first=first)
        state.nominal(op)
        return state

    def nominal(self, op: GapOperator) -> None:
        self.x_nom = self.x + op.alpha * self.r
        s, self.first_nom = op.S_trace(self.x_nom)
        self.r_nom = s - self.x_nom
