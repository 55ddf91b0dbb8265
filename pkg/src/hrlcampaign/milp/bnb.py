"""Best-bound branch-and-bound over LP relaxations."""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass

import numpy as np

from .model import MilpModel, MilpSolution, Status, relative_gap
from .simplex import STRICT, LpEngine, SingularBasisError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Limits:
    time_limit: float = 1800.0
    gap_tol: float = 1e-6
    int_tol: float = 1e-6
    node_limit: int | None = None


class WeakDualityError(AssertionError):
    pass


def _most_fractional(x: np.ndarray, int_idx: np.ndarray, int_tol: float) -> int:
    if len(int_idx) == 0:
        return -1
    v = x[int_idx]
    frac = np.abs(v - np.round(v))
    k = int(np.argmax(frac))
    return -1 if frac[k] <= int_tol else int(int_idx[k])


def solve_milp(model: MilpModel, limits: Limits | None = None, **kw) -> MilpSolution:
    """Minimize ``model`` with integrality enforced by branch and bound.

    Node selection is best-bound (ties broken toward deeper nodes, then
    creation order), branching is on the most fractional integer variable.
    ``kw`` may override individual :class:`Limits` fields.
    """
    limits = limits or Limits()
    if kw:
        limits = Limits(**{**limits.__dict__, **kw})
    t0 = time.perf_counter()
    engine = LpEngine(model)
    strict: list[LpEngine] = []

    def strict_engine() -> LpEngine:
        if not strict:
            strict.append(LpEngine(model, **STRICT))
        return strict[0]

    int_idx = np.flatnonzero(model.integer)
    lb0 = model.lb.copy()
    ub0 = model.ub.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - limits.int_tol)
    ub0[int_idx] = np.floor(ub0[int_idx] + limits.int_tol)

    nodes = 0
    iters = 0

    def relax(lb, ub, warm=None):
        nonlocal nodes, iters
        nodes += 1
        try:
            res = engine.solve(lb, ub) if warm is None else engine.resolve(lb, ub, warm)
        except SingularBasisError:
            res = strict_engine().solve(lb, ub)
        iters += res.iterations
        return res

    root = relax(lb0, ub0)
    if root.status == Status.UNBOUNDED:
        return MilpSolution(Status.UNBOUNDED, None, -np.inf, -np.inf, np.inf,
                            time.perf_counter() - t0, nodes, iters)
    if root.status == Status.INFEASIBLE:
        return MilpSolution(Status.INFEASIBLE, None, np.inf, np.inf, np.inf,
                            time.perf_counter() - t0, nodes, iters)

    inc_x: np.ndarray | None = None
    inc_obj = np.inf
    counter = itertools.count()
    heap: list = []

    def consider(res, lb, ub, depth):
        nonlocal inc_x, inc_obj
        if res.status != Status.OPTIMAL or res.objective >= inc_obj - 1e-12:
            return
        j = _most_fractional(res.x, int_idx, limits.int_tol)
        if j < 0:
            x = res.x.copy()
            x[int_idx] = np.round(x[int_idx])
            inc_x, inc_obj = x, model.objective_value(x)
            return
        heapq.heappush(heap, (res.objective, -depth, next(counter), lb, ub, res.x, j, res.warm))

    consider(root, lb0, ub0, 0)
    status = None
    while heap:
        bound = min(heap[0][0], inc_obj)
        if inc_x is not None:
            if root.objective > inc_obj + 1e-7 * max(1.0, abs(inc_obj)):
                raise WeakDualityError(f"root bound {root.objective} exceeds incumbent {inc_obj}")
            if relative_gap(inc_obj, bound) <= limits.gap_tol:
                break
        if time.perf_counter() - t0 > limits.time_limit or (
                limits.node_limit is not None and nodes >= limits.node_limit):
            status = Status.TIME_LIMIT
            break
        obj, negdepth, _, lb, ub, x, j, warm = heapq.heappop(heap)
        if obj >= inc_obj - 1e-12:
            continue
        v = x[j]
        down_ub = ub.copy()
        down_ub[j] = np.floor(v)
        up_lb = lb.copy()
        up_lb[j] = np.ceil(v)
        depth = 1 - negdepth
        consider(relax(lb, down_ub, warm), lb, down_ub, depth)
        consider(relax(up_lb, ub, warm), up_lb, ub, depth)

    wall = time.perf_counter() - t0
    open_bound = heap[0][0] if heap else np.inf
    best_bound = min(open_bound, inc_obj)
    if inc_x is None:
        if status == Status.TIME_LIMIT:
            return MilpSolution(Status.TIME_LIMIT, None, np.inf, best_bound, np.inf, wall, nodes, iters)
        return MilpSolution(Status.INFEASIBLE, None, np.inf, np.inf, np.inf, wall, nodes, iters)
    gap = relative_gap(inc_obj, best_bound)
    if status == Status.TIME_LIMIT and gap > limits.gap_tol:
        st = Status.FEASIBLE_WITH_GAP
    else:
        st = Status.OPTIMAL
    log.debug("bnb %s: obj=%.6g bound=%.6g nodes=%d iters=%d %.2fs", model.name, inc_obj,
              best_bound, nodes, iters, wall)
    return MilpSolution(st, inc_x, inc_obj, best_bound, gap, wall, nodes, iters)
