"""Solver adapter: one narrow contract over interchangeable MILP backends.

The default backend hands the block to HiGHS through
``scipy.optimize.milp``. A pure-python branch-and-bound fallback
(:mod:`mgdesign.bnb`) covers tiny instances so the contract can be tested
without any native solver. ``MGDESIGN_SOLVER`` selects the backend
(``highs`` or ``fallback``).
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .linearize import BINARY, INF, MilpBlock

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE_GAP = "feasible-gap"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_TIME_LIMIT = "time-limit"


class SolverError(RuntimeError):
    """Backend failure surfaced with block context."""


class MissingHandle(KeyError):
    """A requested variable handle is absent from the solve result."""


@dataclass(frozen=True)
class SolverParams:
    gap: float = 0.005
    time_limit_s: float = 600.0
    threads: int = 1
    seed: int = 0


@dataclass
class SolveResult:
    status: str
    objective: float | None
    values: dict[str, float] | None
    bound: float | None
    wall_time_s: float

    @property
    def ok(self) -> bool:
        return self.status in (STATUS_OPTIMAL, STATUS_FEASIBLE_GAP)

    def value(self, name: str) -> float:
        if self.values is None:
            raise MissingHandle(name)
        try:
            return self.values[name]
        except KeyError:
            raise MissingHandle(name) from None


def _matrices(block: MilpBlock):
    """Flatten a block into the arrays HiGHS-style backends consume."""
    names = list(block.variables)
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for name, coef in block.objective.items():
        c[index[name]] = coef
    lb = np.array([block.variables[v].lb for v in names])
    ub = np.array([block.variables[v].ub for v in names])
    integrality = np.array(
        [1 if block.variables[v].kind == BINARY else 0 for v in names])
    rows, cols, vals = [], [], []
    row_lb, row_ub = [], []
    for i, r in enumerate(block.rows):
        for name, coef in r.coeffs:
            rows.append(i)
            cols.append(index[name])
            vals.append(coef)
        if r.sense == "<=":
            row_lb.append(-INF)
            row_ub.append(r.rhs)
        elif r.sense == ">=":
            row_lb.append(r.rhs)
            row_ub.append(INF)
        else:
            row_lb.append(r.rhs)
            row_ub.append(r.rhs)
    a = sparse.csr_matrix((vals, (rows, cols)), shape=(len(block.rows), n))
    return names, c, a, np.array(row_lb), np.array(row_ub), lb, ub, integrality


class HighsBackend:
    """scipy.optimize.milp (HiGHS) binding; deterministic single-thread runs."""

    name = "highs"

    def solve(self, block: MilpBlock, params: SolverParams) -> SolveResult:
        t0 = time.perf_counter()
        if block.const_infeasible:
            return SolveResult(STATUS_INFEASIBLE, None, None, None,
                               time.perf_counter() - t0)
        block.validate()
        names, c, a, row_lb, row_ub, lb, ub, integrality = _matrices(block)
        constraints = []
        if a.shape[0]:
            constraints.append(LinearConstraint(a, row_lb, row_ub))
        options = {"time_limit": params.time_limit_s, "presolve": True}
        has_int = bool(integrality.any())
        if has_int:
            options["mip_rel_gap"] = params.gap
        try:
            res = milp(c, constraints=constraints, integrality=integrality,
                       bounds=Bounds(lb, ub), options=options)
        except Exception as exc:  # numerical failures surfaced verbatim
            raise SolverError(f"highs failed on block (tags={sorted(block.tags)[:8]}): {exc}")
        wall = time.perf_counter() - t0
        if res.status == 2:
            return SolveResult(STATUS_INFEASIBLE, None, None, None, wall)
        if res.status == 3:
            return SolveResult(STATUS_UNBOUNDED, None, None, None, wall)
        if res.x is None:
            return SolveResult(STATUS_TIME_LIMIT, None, None, None, wall)
        values = {name: float(v) for name, v in zip(names, res.x)}
        objective = float(res.fun) + block.obj_offset
        dual = getattr(res, "mip_dual_bound", None)
        bound = objective if dual is None else float(dual) + block.obj_offset
        if res.status == 1:
            return SolveResult(STATUS_TIME_LIMIT, objective, values, bound, wall)
        gap = abs(objective - bound) / max(1.0, abs(objective))
        status = STATUS_OPTIMAL if gap <= params.gap + 1e-12 else STATUS_FEASIBLE_GAP
        return SolveResult(status, objective, values, bound, wall)


class FallbackBackend:
    """Pure-python branch and bound for tiny blocks (tests, no native solver)."""

    name = "fallback"
    max_binaries = 25

    def solve(self, block: MilpBlock, params: SolverParams) -> SolveResult:
        from . import bnb

        t0 = time.perf_counter()
        if block.const_infeasible:
            return SolveResult(STATUS_INFEASIBLE, None, None, None,
                               time.perf_counter() - t0)
        block.validate()
        if block.n_binary() > self.max_binaries:
            raise SolverError(
                f"fallback backend handles at most {self.max_binaries} binaries, "
                f"got {block.n_binary()}")
        names, c, a, row_lb, row_ub, lb, ub, integrality = _matrices(block)
        status, x, obj, bound = bnb.solve_milp(
            c, a.toarray() if a.shape[0] else np.zeros((0, len(names))),
            row_lb, row_ub, lb, ub, integrality)
        wall = time.perf_counter() - t0
        if status != "optimal":
            mapped = {"infeasible": STATUS_INFEASIBLE,
                      "unbounded": STATUS_UNBOUNDED}.get(status)
            if mapped is None:
                raise SolverError(f"fallback solver failed: {status}")
            return SolveResult(mapped, None, None, None, wall)
        values = {name: float(v) for name, v in zip(names, x)}
        return SolveResult(STATUS_OPTIMAL, float(obj) + block.obj_offset, values,
                           float(bound) + block.obj_offset, wall)


_BACKENDS = {"highs": HighsBackend, "fallback": FallbackBackend}


def get_backend(name: str | None = None):
    name = name or os.environ.get("MGDESIGN_SOLVER", "highs")
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}; "
                          f"available: {sorted(_BACKENDS)}") from None


def solve(block: MilpBlock, params: SolverParams | None = None,
          backend=None) -> SolveResult:
    params = params or SolverParams()
    backend = backend if backend is not None else get_backend()
    return backend.solve(block, params)


def extract(handles: Mapping[str, str], result: SolveResult) -> dict[str, float]:
    """Map friendly keys to solved values; raises MissingHandle when absent."""
    return {key: result.value(name) for key, name in handles.items()}
