"""JSON file formats for cone programs and two-set feasibility problems.

Cone program::

    {
      "m": 4, "n": 2,
      "A": [[row, col, value], ...],        # zero-based triplets
      "b": [...],                           # length m
      "c": [...],                           # length n
      "cones": [{"type": "nonneg", "dim": 4}]   # zero | nonneg | soc, in order
    }

Feasibility problem (find z with ``A (z - offset) = rhs`` and z in the product
of ``sets``; the affine set is applied first)::

    {
      "n": 100,
      "affine": {"m": 50, "A": [[row, col, value], ...],
                 "rhs": [...],                # optional, default zeros
                 "offset": [...]},            # optional, default zeros
      "sets": [{"type": "nonneg", "dim": 100}],   # zero | nonneg | soc | free | box
      "x0": [...]                                  # optional starting point
    }

A ``box`` entry carries ``"lower"`` and ``"upper"`` lists instead of ``"dim"``.
Unknown fields are ignored; unknown set types are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cone import ConeProgram, EmbeddedFeasibility
from .projections import (
    AffineSubspace,
    Box,
    ConvexSet,
    FreeSpace,
    NonnegativeOrthant,
    ProductSet,
    SecondOrderCone,
    ZeroCone,
)

__all__ = [
    "FormatError",
    "FeasibilityProblem",
    "parse_cone_program",
    "dump_cone_program",
    "parse_feasibility",
    "dump_feasibility",
    "embedded_to_feasibility",
    "load",
    "save",
]

CONE_TYPES = {"zero": ZeroCone, "nonneg": NonnegativeOrthant, "soc": SecondOrderCone}
SET_TYPES = {**CONE_TYPES, "free": FreeSpace}
_NAMES = {ZeroCone: "zero", NonnegativeOrthant: "nonneg", SecondOrderCone: "soc", FreeSpace: "free"}


class FormatError(ValueError):
    pass


@dataclass
class FeasibilityProblem:
    """Affine set C (applied first) and product set D."""

    C: AffineSubspace | None
    D: ProductSet
    A: sp.csr_matrix
    rhs: np.ndarray
    offset: np.ndarray
    x0: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.D.dim

    def affine_set(self) -> AffineSubspace:
        if self.C is None:
            self.C = AffineSubspace(self.A, self.rhs + self.A @ self.offset)
        return self.C


def _triplets(entries, shape) -> sp.csr_matrix:
    if not entries:
        return sp.csr_matrix(shape)
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise FormatError("matrix must be a list of [row, col, value] triplets")
    rows, cols = arr[:, 0].astype(int), arr[:, 1].astype(int)
    if np.any(rows < 0) or np.any(rows >= shape[0]) or np.any(cols < 0) or np.any(cols >= shape[1]):
        raise FormatError(f"triplet index out of range for shape {shape}")
    return sp.csr_matrix((arr[:, 2], (rows, cols)), shape=shape)


def _to_triplets(A) -> list[list[float]]:
    coo = sp.coo_matrix(A)
    return [[int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0.0]


def _vector(d: dict, key: str, size: int, default: float | None = None) -> np.ndarray:
    if key not in d:
        if default is None:
            raise FormatError(f"missing field {key!r}")
        return np.full(size, default)
    v = np.asarray(d[key], dtype=float).reshape(-1)
    if v.size != size:
        raise FormatError(f"field {key!r} has length {v.size}, expected {size}")
    return v


def _parse_set(entry: dict, table: dict) -> ConvexSet:
    kind = entry.get("type")
    if kind == "box" and "box" in table:
        return Box(entry["lower"], entry["upper"])
    if kind not in table:
        raise FormatError(f"unknown set type {kind!r}; expected one of {sorted(table)}")
    return table[kind](int(entry["dim"]))


def _dump_set(s: ConvexSet) -> dict:
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    try:
        return {"type": _NAMES[type(s)], "dim": s.dim}
    except KeyError:
        raise FormatError(f"cannot serialize {s!r}") from None


def parse_cone_program(d: dict) -> ConeProgram:
    try:
        m, n = int(d["m"]), int(d["n"])
        cones = [_parse_set(c, CONE_TYPES) for c in d["cones"]]
    except KeyError as exc:
        raise FormatError(f"missing field {exc}") from None
    A = _triplets(d.get("A", []), (m, n))
    return ConeProgram(A, _vector(d, "b", m), _vector(d, "c", n), ProductSet(cones))


def dump_cone_program(p: ConeProgram) -> dict:
    return {
        "m": p.m,
        "n": p.n,
        "A": _to_triplets(p.A),
        "b": p.b.tolist(),
        "c": p.c.tolist(),
        "cones": [_dump_set(c) for c in p.K.components],
    }


def parse_feasibility(d: dict, factorize: bool = True) -> FeasibilityProblem:
    try:
        aff = d["affine"]
        sets = [_parse_set(s, {**SET_TYPES, "box": Box}) for s in d["sets"]]
        m = int(aff["m"])
    except KeyError as exc:
        raise FormatError(f"missing field {exc}") from None
    D = ProductSet(sets)
    n = int(d.get("n", D.dim))
    if D.dim != n:
        raise FormatError(f"sets cover {D.dim} coordinates, expected n={n}")
    A = _triplets(aff.get("A", []), (m, n))
    rhs = _vector(aff, "rhs", m, 0.0)
    offset = _vector(aff, "offset", n, 0.0)
    x0 = _vector(d, "x0", n) if "x0" in d else None
    prob = FeasibilityProblem(None, D, A, rhs, offset, x0)
    if factorize:
        prob.affine_set()
    return prob


def dump_feasibility(prob: FeasibilityProblem) -> dict:
    out = {
        "n": prob.n,
        "affine": {
            "m": prob.A.shape[0],
            "A": _to_triplets(prob.A),
            "rhs": prob.rhs.tolist(),
            "offset": prob.offset.tolist(),
        },
        "sets": [_dump_set(s) for s in prob.D.components],
    }
    if prob.x0 is not None:
        out["x0"] = prob.x0.tolist()
    return out


def embedded_to_feasibility(e: EmbeddedFeasibility) -> FeasibilityProblem:
    return FeasibilityProblem(None, e.coneset, e.matrix, e.rhs.copy(), np.zeros(e.dim))


def load(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None


def save(d: dict, path) -> None:
    Path(path).write_text(json.dumps(d, indent=1) + "\n")
