"""Random nonnegative-feasibility instances and iteration-count sweeps.

The test problem is: find z with ``Q (z - p) = 0`` and ``z >= 0``, where Q has
i.i.d. standard normal entries and ``p = p_scale * ones`` makes it feasible.
C is the affine set and D the nonnegative orthant; C is applied first.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .gap import GapOperator, outer_alpha
from .linesearch import LineSearchConfig
from .projections import AffineSubspace, NonnegativeOrthant
from .rng import SplitMix64
from .solver import STEPPERS, affine_criterion, solve

__all__ = [
    "ExperimentSpec",
    "Instance",
    "RunRecord",
    "CSV_COLUMNS",
    "generate_instance",
    "has_nonnegative_ray",
    "run_one",
    "run_sweep",
    "emit_csv",
    "read_csv",
    "THREADS_ENV",
]

log = logging.getLogger(__name__)

THREADS_ENV = "GAPLS_MAX_THREADS"
CSV_COLUMNS = (
    "alpha1",
    "alpha",
    "mode",
    "iterations",
    "converged",
    "ls_triggered",
    "ls_accepted",
    "candidates_total",
    "final_residual",
    "wall_time_s",
)
MODE_ORDER = ("nominal", "basic_ls", "projected_ls")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: instance parameters plus the solver setting to sweep.

    ``alpha=None`` selects the outer relaxation by :func:`gapls.gap.outer_alpha`
    (0.85 / beta, or 0.85 when alpha_1 = alpha_2 = 2). ``bounded=True``
    redraws Q until the affine set holds no ray of the orthant, so the
    feasible set is a small polytope around p.
    """

    m: int = 50
    n: int = 100
    p_scale: float = 1e-7
    seed: int = 0
    alpha_grid: tuple[float, ...] = (1.0,)
    alpha: float | None = None
    mode: str = "nominal"
    tol: float = 1e-10
    max_iter: int = 10**5
    bounded: bool = True
    ls: LineSearchConfig = field(default_factory=LineSearchConfig)

    def __post_init__(self):
        if self.mode not in STEPPERS:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", STEPPERS[self.mode])
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class Instance:
    Q: np.ndarray
    p: np.ndarray
    x0: np.ndarray
    C: AffineSubspace
    D: NonnegativeOrthant
    draws: int = 1

    def criterion(self, tol: float = 1e-10):
        """``||Q (z - p)|| <= tol`` with ``z >= 0`` exactly."""
        return affine_criterion(self.C, self.D, tol, set_tol=0.0)


def has_nonnegative_ray(Q: np.ndarray) -> bool:
    """True if some nonzero ``d >= 0`` satisfies ``Q d = 0``."""
    m, n = Q.shape
    A_eq = np.vstack([Q, np.ones((1, n))])
    b_eq = np.zeros(m + 1)
    b_eq[-1] = 1.0
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def generate_instance(spec: ExperimentSpec, max_draws: int = 1000) -> Instance:
    """Draw Q (row-major) and then x0 from the SplitMix64 normal stream of ``spec.seed``.

    With ``spec.bounded`` each rejected Q is discarded and the next m*n
    normals of the same stream are used; x0 is drawn after the accepted Q.
    """
    g = SplitMix64(spec.seed)
    for draws in range(1, max_draws + 1):
        Q = g.standard_normal((spec.m, spec.n))
        if not spec.bounded or not has_nonnegative_ray(Q):
            break
    else:
        raise RuntimeError(f"no bounded instance in {max_draws} draws")
    x0 = g.standard_normal(spec.n)
    p = np.full(spec.n, spec.p_scale)
    C = AffineSubspace(Q, Q @ p)
    return Instance(Q, p, x0, C, NonnegativeOrthant(spec.n), draws)


@dataclass
class RunRecord:
    alpha1: float
    alpha: float
    mode: str
    iterations: int
    converged: bool
    ls_triggered: int
    ls_accepted: int
    candidates_total: int
    final_residual: float
    wall_time: float = 0.0

    def row(self) -> list[str]:
        return [
            repr(self.alpha1),
            repr(self.alpha),
            self.mode,
            str(self.iterations),
            str(self.converged).lower(),
            str(self.ls_triggered),
            str(self.ls_accepted),
            str(self.candidates_total),
            repr(self.final_residual),
            f"{self.wall_time:.6f}",
        ]


def run_one(spec: ExperimentSpec, alpha1: float, instance: Instance | None = None, mode: str | None = None):
    """Solve one instance at ``alpha_1 = alpha_2 = alpha1``; returns ``(RunRecord, SolveResult)``."""
    inst = instance or generate_instance(spec)
    mode = STEPPERS[mode or spec.mode]
    alphas = (alpha1, alpha1)
    alpha = spec.alpha if spec.alpha is not None else outer_alpha(alphas)
    op = GapOperator([inst.C, inst.D], alphas, alpha)
    t0 = time.monotonic()
    res = solve(op, inst.x0, inst.criterion(spec.tol), spec.max_iter, mode, spec.ls)
    wall = time.monotonic() - t0
    rec = RunRecord(
        alpha1=float(alpha1),
        alpha=float(alpha),
        mode=mode,
        iterations=res.iterations,
        converged=res.converged,
        ls_triggered=res.stats.triggered,
        ls_accepted=res.stats.accepted,
        candidates_total=res.stats.candidates_total,
        final_residual=res.final_residual,
        wall_time=wall,
    )
    return rec, res


def _max_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def run_sweep(spec: ExperimentSpec, threads: int | None = None) -> list[RunRecord]:
    """Run every grid point of ``spec`` on one shared instance.

    Grid points run concurrently on up to ``threads`` threads (default: the
    ``GAPLS_MAX_THREADS`` environment variable, else the CPU count). Records
    come back in grid order.
    """
    inst = generate_instance(spec)
    threads = min(threads or _max_threads(), max(len(spec.alpha_grid), 1))

    def job(a1):
        rec, _ = run_one(spec, a1, inst)
        log.info("alpha1=%g mode=%s iterations=%d converged=%s", a1, rec.mode, rec.iterations, rec.converged)
        return rec

    if threads <= 1:
        return [job(a) for a in spec.alpha_grid]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(job, spec.alpha_grid))


def _sort_key(rec: RunRecord):
    order = MODE_ORDER.index(rec.mode) if rec.mode in MODE_ORDER else len(MODE_ORDER)
    return (rec.alpha1, order, rec.mode)


def emit_csv(records: Sequence[RunRecord], path) -> None:
    """Write records sorted by alpha1 then mode, with the fixed header ``CSV_COLUMNS``."""
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in sorted(records, key=_sort_key):
            w.writerow(rec.row())


def read_csv(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(
                RunRecord(
                    alpha1=float(row["alpha1"]),
                    alpha=float(row["alpha"]),
                    mode=row["mode"],
                    iterations=int(row["iterations"]),
                    converged=row["converged"] == "true",
                    ls_triggered=int(row["ls_triggered"]),
                    ls_accepted=int(row["ls_accepted"]),
                    candidates_total=int(row["candidates_total"]),
                    final_residual=float(row["final_residual"]),
                    wall_time=float(row["wall_time_s"]),
                )
            )
    return out


def replace(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    return dataclasses.replace(spec, **changes)
