"""Line searches along the fixed-point residual of a GAP iteration.

Two variants are provided:

* the basic line search, which tries ``x + t r`` for ``t > alpha`` and accepts
  when the new residual beats ``(1 - eps)`` times the nominal step's residual;
* the projected line search (two sets, first one affine), which tries
  ``proj_C(x + t r)`` and compares against the residual recorded right after
  the most recent accepted search.

When the leading sets are affine, candidates of the basic search are evaluated
from a small cache (:class:`AffineCache`) without any further affine
projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple

import numpy as np

from .gap import GapOperator, IterationState
from .projections import AffineSubspace

__all__ = [
    "LineSearchConfig",
    "LineSearchOutcome",
    "AffineCache",
    "ProjectedLsState",
    "StaleCacheError",
    "TrackResult",
    "trigger",
    "forward_track",
    "golden_section",
    "basic_step",
    "cached_candidate_residual",
    "projected_step",
]

STRATEGIES = ("forward_track", "golden_section")
TRIGGER_RULES = ("aligned", "printed")
TRACKING = ("best", "largest")


@dataclass(frozen=True)
class LineSearchConfig:
    """Parameters shared by both line searches.

    ``alpha_max=None`` means ``alpha * tracking_factor ** max_candidates``,
    i.e. the farthest point of the forward-tracking grid.

    ``trigger_rule`` selects when a search is attempted (see :func:`trigger`);
    ``tracking`` selects which forward-tracking candidate is kept (see
    :func:`forward_track`).
    """

    epsilon: float = 0.01
    alpha_max: float | None = None
    tracking_factor: float = 1.4
    max_candidates: int = 18
    trigger_tol: float = 1e-4
    strategy: str = "forward_track"
    golden_tol: float = 1e-3
    trigger_rule: str = "aligned"
    tracking: str = "best"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.tracking_factor > 1.0:
            raise ValueError(f"tracking_factor must exceed 1, got {self.tracking_factor}")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.trigger_rule not in TRIGGER_RULES:
            raise ValueError(f"unknown trigger rule {self.trigger_rule!r}; expected one of {TRIGGER_RULES}")
        if self.tracking not in TRACKING:
            raise ValueError(f"unknown tracking {self.tracking!r}; expected one of {TRACKING}")

    def resolve_alpha_max(self, alpha: float) -> float:
        if self.alpha_max is None:
            return alpha * self.tracking_factor**self.max_candidates
        if self.alpha_max < alpha:
            raise ValueError(f"alpha_max={self.alpha_max} is below the nominal step alpha={alpha}")
        return float(self.alpha_max)


@dataclass
class LineSearchOutcome:
    accepted: bool
    alpha_k: float
    candidates_evaluated: int
    next_x: np.ndarray
    next_residual_norm: float
    # residual vector at next_x when the search already produced it
    next_residual: np.ndarray | None = None
    next_first: np.ndarray | None = None


class TrackResult(NamedTuple):
    alpha: float | None
    count: int
    value: Any = None


class StaleCacheError(RuntimeError):
    """The affine cache does not belong to the iterate it is used with."""


def trigger(r: np.ndarray, r_nom: np.ndarray, tol: float = 1e-4, rule: str = "aligned") -> bool:
    """Decide whether to attempt a line search from the residual cosine.

    With ``c = <r, r_nom> / (||r|| ||r_nom||)``:

    * ``rule="aligned"`` fires iff ``c > 1 - tol``, i.e. consecutive residuals
      point the same way and the iterates travel along a straight line;
    * ``rule="printed"`` fires iff ``c < 1 - tol``.

    Zero residuals never fire.
    """
    nr = np.linalg.norm(r)
    nn = np.linalg.norm(r_nom)
    if nr == 0.0 or nn == 0.0:
        return False
    c = float(np.dot(r, r_nom)) / (nr * nn)
    if rule == "aligned":
        return bool(c > 1.0 - tol)
    if rule == "printed":
        return bool(c < 1.0 - tol)
    raise ValueError(f"unknown trigger rule {rule!r}")


def forward_track(
    evaluate: Callable[[float], Any],
    alpha0: float,
    factor: float,
    alpha_max: float,
    accept: Callable[[Any], bool],
    max_candidates: int,
    merit: Callable[[Any], float] | None = None,
) -> TrackResult:
    """Try ``alpha0 * factor**j`` for j = 1, 2, ... up to ``alpha_max``.

    Without ``merit`` the largest accepted step is kept and tracking stops at
    the first rejection that follows an acceptance. With ``merit`` tracking
    stops as soon as the merit increases, and the accepted candidate with the
    smallest merit is kept (ties go to the longer step). At most
    ``max_candidates`` evaluations either way.
    """
    if factor <= 1.0:
        raise ValueError("factor must exceed 1")
    best = TrackResult(None, 0)
    best_merit = np.inf
    prev = None
    count = 0
    t = alpha0
    limit = alpha_max * (1.0 + 1e-12)
    while count < max_candidates:
        t *= factor
        if t > limit:
            break
        value = evaluate(t)
        count += 1
        ok = accept(value)
        if merit is None:
            if ok:
                best = TrackResult(t, count, value)
            elif best.alpha is not None:
                break
            continue
        f = merit(value)
        if ok and f <= best_merit:
            best, best_merit = TrackResult(t, count, value), f
        if prev is not None and f > prev:
            break
        prev = f
    return TrackResult(best.alpha, count, best.value)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    phi: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6, max_eval: int = 200
) -> float:
    """Minimize a unimodal ``phi`` on ``[lo, hi]``.

    Returns the best evaluated point once the bracket is narrower than ``tol``
    or ``max_eval`` evaluations have been spent.
    """
    a, b = min(lo, hi), max(lo, hi)
    if b - a <= tol or max_eval < 2:
        m = 0.5 * (a + b)
        return m
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = phi(c), phi(d)
    n = 2
    best_t, best_f = (c, fc) if fc <= fd else (d, fd)
    while b - a > tol and n < max_eval:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = phi(c)
            t, f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = phi(d)
            t, f = d, fd
        n += 1
        if f < best_f:
            best_t, best_f = t, f
    return best_t


# ---------------------------------------------------------------------------
# basic line search
# ---------------------------------------------------------------------------


@dataclass
class AffineCache:
    """Running products with the linear part F of the leading affine block.

    Invariant: ``Fx + h`` equals ``S1(x)`` for the iterate tagged ``k``.
    ``Fr`` is the product with the current residual, once set.
    """

    Fx: np.ndarray
    h: np.ndarray
    k: int = 0
    Fr: np.ndarray | None = None

    @classmethod
    def start(cls, op: GapOperator, x: np.ndarray, k: int = 0) -> "AffineCache":
        return cls(Fx=op.S1_linear(np.asarray(x, dtype=float)), h=op.S1_offset, k=k)

    def set_direction(self, op: GapOperator, r: np.ndarray) -> None:
        self.Fr = op.S1_linear(r)

    def S1x(self) -> np.ndarray:
        return self.Fx + self.h

    def advance(self, alpha_k: float) -> None:
        """Move the cache from x^k to x^k + alpha_k r^k."""
        self.Fx = self.Fx + alpha_k * self.Fr
        self.Fr = None
        self.k += 1

    def first_projection(self, op: GapOperator, x: np.ndarray, s1x: np.ndarray | None = None) -> np.ndarray:
        """Projection onto the first set recovered from ``S1 x`` (single affine set only)."""
        if op.affine_prefix != 1:
            return op.sets[0].project(x)
        s1x = self.S1x() if s1x is None else s1x
        return x + (s1x - x) / op.config.alphas[0]


def _check_cache(cache: AffineCache, k: int | None) -> None:
    if cache.Fr is None:
        raise StaleCacheError("cache has no residual direction; call set_direction first")
    if k is not None and k != cache.k:
        raise StaleCacheError(f"cache is tagged for iteration {cache.k}, used at iteration {k}")


def cached_candidate_residual(
    op: GapOperator, cache: AffineCache, x: np.ndarray, r: np.ndarray, alpha_k: float, k: int | None = None
) -> float:
    """Residual norm at ``x + alpha_k r`` using only the cache and the trailing sets."""
    return float(np.linalg.norm(_cached_residual(op, cache, x, r, alpha_k, k)[0]))


def _cached_residual(op, cache, x, r, t, k=None):
    _check_cache(cache, k)
    s1 = cache.Fx + cache.h + t * cache.Fr
    xt = x + t * r
    return op.S2(s1) - xt, xt, s1


def _merit(cfg: LineSearchConfig):
    return (lambda v: v[0]) if cfg.tracking == "best" else None


def basic_step(
    op: GapOperator, state: IterationState, cfg: LineSearchConfig, cache: AffineCache | None = None
) -> LineSearchOutcome:
    """One basic line search from ``state``; falls back to the nominal step.

    With ``cache`` the candidates are evaluated without touching the leading
    affine sets; the caller keeps the cache in sync with the chosen step.
    """
    if cfg.strategy != "forward_track":
        raise ValueError("the basic line search only supports forward tracking")
    alpha = op.alpha
    amax = cfg.resolve_alpha_max(alpha)
    bound = (1.0 - cfg.epsilon) * np.linalg.norm(state.r_nom)
    x, r = state.x, state.r

    if cache is not None:
        _check_cache(cache, state.k)

        def evaluate(t):
            res, xt, s1 = _cached_residual(op, cache, x, r, t)
            return np.linalg.norm(res), xt, res, s1

    else:

        def evaluate(t):
            xt = x + t * r
            s, first = op.S_trace(xt)
            res = s - xt
            return np.linalg.norm(res), xt, res, first

    found = forward_track(
        evaluate, alpha, cfg.tracking_factor, amax, lambda v: v[0] <= bound, cfg.max_candidates, _merit(cfg)
    )
    if found.alpha is None:
        return LineSearchOutcome(
            accepted=False,
            alpha_k=alpha,
            candidates_evaluated=found.count,
            next_x=state.x_nom,
            next_residual_norm=float(np.linalg.norm(state.r_nom)),
            next_residual=state.r_nom,
            next_first=state.first_nom,
        )
    norm, xt, res, extra = found.value
    first = cache.first_projection(op, xt, extra) if cache is not None else extra
    return LineSearchOutcome(True, found.alpha, found.count, xt, float(norm), res, first)


# ---------------------------------------------------------------------------
# projected line search
# ---------------------------------------------------------------------------


@dataclass
class ProjectedLsState:
    """Reference residual for the projected line search acceptance test.

    Before any acceptance the reference is the initial residual norm. After an
    acceptance at iteration ``last_ls_iteration`` the reference is replaced by
    the residual norm of the following iterate once it is observed.
    """

    reference_residual_norm: float
    last_ls_iteration: int = -1
    pending: bool = False

    def observe(self, k: int, residual_norm: float) -> None:
        if self.pending and k == self.last_ls_iteration + 1:
            self.reference_residual_norm = float(residual_norm)
            self.pending = False


def check_projected(op: GapOperator) -> None:
    if op.p != 2 or not isinstance(op.sets[0], AffineSubspace):
        raise ValueError("projected line search needs exactly two sets with the first one affine")


def projected_step(
    op: GapOperator, state: IterationState, pls: ProjectedLsState, cfg: LineSearchConfig
) -> LineSearchOutcome:
    """One projected line search from ``state``; falls back to the nominal step.

    Candidates ``proj_C(x + t r)`` lie in the affine set C, so their residual
    norm equals ``alpha_2 * dist_D``. Only one product with the linear part of
    ``proj_C`` is needed per search, whatever the number of candidates.
    """
    check_projected(op)
    C, D = op.sets
    a2 = op.config.alphas[1]
    alpha = op.alpha
    amax = cfg.resolve_alpha_max(alpha)
    bound = (1.0 - cfg.epsilon) * pls.reference_residual_norm

    base = state.first if state.first is not None else C.project(state.x)
    direction = C.apply_linear(state.r)

    def evaluate(t):
        xt = base + t * direction
        return a2 * D.distance(xt), xt

    def accept(v):
        return v[0] <= bound

    if cfg.strategy == "forward_track":
        found = forward_track(evaluate, alpha, cfg.tracking_factor, amax, accept, cfg.max_candidates, _merit(cfg))
        t, count, value = found.alpha, found.count, found.value
    else:
        count = 0
        cache: dict[float, tuple] = {}

        def phi(t):
            nonlocal count
            count += 1
            cache[t] = evaluate(t)
            return cache[t][0]

        t = golden_section(phi, alpha, amax, cfg.golden_tol * (amax - alpha), 2 * cfg.max_candidates)
        value = cache[t] if t in cache else evaluate(t)
        if t not in cache:
            count += 1
        if not (t > alpha and accept(value)):
            t = None

    if t is None:
        return LineSearchOutcome(
            accepted=False,
            alpha_k=alpha,
            candidates_evaluated=count,
            next_x=state.x_nom,
            next_residual_norm=float(np.linalg.norm(state.r_nom)),
            next_residual=state.r_nom,
            next_first=state.first_nom,
        )
    pls.last_ls_iteration = state.k
    pls.pending = True
    norm, xt = value
    # xt lies in C, so it is its own projection onto the first set
    return LineSearchOutcome(True, t, count, xt, float(norm), None, xt)
