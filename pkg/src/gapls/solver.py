"""Iteration driver: nominal GAP, GAP with basic line search, GAP with projected line search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gap import GapOperator, IterationState
from .linesearch import (
    AffineCache,
    LineSearchConfig,
    ProjectedLsState,
    basic_step,
    check_projected,
    projected_step,
    trigger,
)
from .projections import AffineSubspace, ConvexSet, NonnegativeOrthant

__all__ = [
    "DEFAULT_MAX_ITER",
    "LineSearchStats",
    "SolveResult",
    "solve",
    "monitored_candidates",
    "feasibility_criterion",
    "affine_criterion",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 10**7
STEPPERS = {
    "nominal": "nominal",
    "none": "nominal",
    "basic_ls": "basic_ls",
    "basic": "basic_ls",
    "projected_ls": "projected_ls",
    "projected": "projected_ls",
}

Criterion = Callable[[np.ndarray], bool]


@dataclass
class LineSearchStats:
    triggered: int = 0
    accepted: int = 0
    candidates_total: int = 0
    candidates_max: int = 0

    @property
    def mean_candidates(self) -> float:
        return self.candidates_total / self.triggered if self.triggered else 0.0


@dataclass
class SolveResult:
    """Outcome of :func:`solve`.

    ``solution`` is the monitored point that met the termination criterion,
    or the last monitored point when ``converged`` is false. ``monitor``
    names the candidate ('P1', 'Pp..P1' or 'fixed_point').
    """

    solution: np.ndarray
    iterations: int
    converged: bool
    monitor: str
    stats: LineSearchStats
    x: np.ndarray
    residual_norms: list[float] = field(default_factory=list)
    accepted_at: list[int] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residual_norms[-1] if self.residual_norms else float("nan")


def monitored_candidates(op: GapOperator, x) -> list[tuple[str, np.ndarray]]:
    return op.monitored_candidates(x)


def feasibility_criterion(sets: Sequence[ConvexSet], tol: float = 1e-10) -> Criterion:
    """Criterion: distance to every set at most ``tol``."""

    def ok(z):
        return all(s.distance(z) <= tol for s in sets)

    return ok


def affine_criterion(affine: AffineSubspace, other: ConvexSet, tol: float = 1e-10, set_tol: float = 0.0) -> Criterion:
    """Criterion ``||A z - b|| <= tol`` and ``dist_other(z) <= set_tol``.

    With ``set_tol=0`` membership in ``other`` must hold exactly, which the
    candidate projected onto ``other`` satisfies for the orthant.
    """
    if isinstance(other, NonnegativeOrthant):

        def in_other(z):
            return bool(np.all(z >= -set_tol))  # per-entry slack; exact for set_tol=0

    else:

        def in_other(z):
            return other.distance(z) <= set_tol

    def ok(z):
        return in_other(z) and affine.residual(z) <= tol

    return ok


def solve(
    op: GapOperator,
    x0,
    termination: Criterion | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    stepper: str = "nominal",
    ls_config: LineSearchConfig | None = None,
    use_cache: bool | None = None,
    tol: float = 1e-10,
) -> SolveResult:
    """Run the GAP iteration from ``x0``.

    Args:
        op: the operator.
        x0: starting point.
        termination: predicate on monitored projected points. Defaults to
            distance at most ``tol`` to every set.
        max_iter: iteration cap.
        stepper: 'nominal', 'basic_ls' or 'projected_ls' (aliases 'none',
            'basic', 'projected').
        ls_config: line-search parameters.
        use_cache: evaluate basic line-search candidates through the affine
            cache. Defaults to true whenever the first set is affine.

    Returns:
        SolveResult. Hitting ``max_iter`` is not an error; ``converged`` is false.
    """
    try:
        mode = STEPPERS[stepper]
    except KeyError:
        raise ValueError(f"unknown stepper {stepper!r}; expected one of {sorted(STEPPERS)}") from None
    cfg = ls_config or LineSearchConfig()
    alpha = op.alpha
    if mode != "nominal":
        cfg.resolve_alpha_max(alpha)
    if mode == "projected_ls":
        check_projected(op)
    if mode == "basic_ls" and cfg.strategy != "forward_track":
        raise ValueError("the basic line search only supports forward tracking")
    if termination is None:
        termination = feasibility_criterion(op.sets, tol)
    if use_cache is None:
        use_cache = mode == "basic_ls" and op.affine_prefix > 0
    elif use_cache and (mode != "basic_ls" or op.affine_prefix == 0):
        raise ValueError("the affine cache needs the basic line search and a leading affine set")

    x = op._check(x0).copy()
    cache = AffineCache.start(op, x) if use_cache else None

    def evaluate(x):
        if cache is None:
            s, first = op.S_trace(x)
            return s - x, first
        s1 = cache.S1x()
        return op.S2(s1) - x, cache.first_projection(op, x, s1)

    r, first = evaluate(x)
    stats = LineSearchStats()
    history: list[float] = []
    accepted_at: list[int] = []
    pls = ProjectedLsState(float(np.linalg.norm(r))) if mode == "projected_ls" else None

    k = 0
    while True:
        rn = float(np.linalg.norm(r))
        history.append(rn)
        if pls is not None:
            pls.observe(k, rn)

        candidates = op.monitored_candidates(x, first)
        for label, z in candidates:
            if termination(z):
                return SolveResult(z, k, True, label, stats, x, history, accepted_at)
        if rn <= 1e-15 * (1.0 + np.linalg.norm(x)):
            done = bool(termination(x))
            log.debug("zero residual at iteration %d", k)
            return SolveResult(x if done else candidates[-1][1], k, done, "fixed_point", stats, x, history, accepted_at)
        if k >= max_iter:
            return SolveResult(candidates[-1][1], k, False, candidates[-1][0], stats, x, history, accepted_at)

        if mode == "nominal":
            x = x + alpha * r
            r, first = evaluate(x)
            k += 1
            continue

        if cache is not None:
            cache.set_direction(op, r)
            x_nom = x + alpha * r
            s1 = cache.Fx + cache.h + alpha * cache.Fr
            r_nom = op.S2(s1) - x_nom
            first_nom = cache.first_projection(op, x_nom, s1)
        else:
            x_nom = x + alpha * r
            s, first_nom = op.S_trace(x_nom)
            r_nom = s - x_nom
        state = IterationState(k, x, r, x_nom, r_nom, first, first_nom)

        step, outcome = alpha, None
        if trigger(r, r_nom, cfg.trigger_tol, cfg.trigger_rule):
            stats.triggered += 1
            if mode == "basic_ls":
                outcome = basic_step(op, state, cfg, cache)
            else:
                outcome = projected_step(op, state, pls, cfg)
            stats.candidates_total += outcome.candidates_evaluated
            stats.candidates_max = max(stats.candidates_max, outcome.candidates_evaluated)
            if outcome.accepted:
                stats.accepted += 1
                accepted_at.append(k)
                step = outcome.alpha_k

        if outcome is not None and outcome.accepted:
            x = outcome.next_x
            if outcome.next_residual is not None:
                r, first = outcome.next_residual, outcome.next_first
                if cache is not None:
                    cache.advance(step)
            else:
                r, first = evaluate(x)
        else:
            x, r, first = x_nom, r_nom, first_nom
            if cache is not None:
                cache.advance(alpha)
        k += 1
