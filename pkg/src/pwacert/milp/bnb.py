"""Best-bound branch-and-bound over the binary variables of a MilpModel."""
from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from .model import INF, MilpModel, SolveResult, SolverConfig, Status
from .simplex import StandardForm, solve_standard


def _pick_branch(x, bin_ids, config: SolverConfig):
    vals = x[bin_ids]
    frac = np.abs(vals - np.round(vals))
    fractional = frac > config.int_tol
    if not fractional.any():
        return None
    if config.branching == "lowest_index":
        return int(bin_ids[np.flatnonzero(fractional)[0]])
    # closest to 0.5; argmax returns the lowest id on ties
    score = np.where(fractional, frac, -1.0)
    return int(bin_ids[np.argmax(score)])


def solve(model: MilpModel, config: SolverConfig | None = None) -> SolveResult:
    """Solve ``model`` to global optimality (within ``config.gap_abs``).

    Nodes are explored best bound first; among equal bounds the deeper node
    goes first, then insertion order. All internal bookkeeping is in
    minimization form (``key = sign * objective``).
    """
    config = config or SolverConfig()
    if model.n_vars == 0:
        raise ValueError("model has no variables")
    sf = StandardForm(model)
    sign = sf.sign
    bin_ids = model.binary_ids()
    lb0 = sf.lb[: sf.n_struct].copy()
    ub0 = sf.ub[: sf.n_struct].copy()
    t0 = time.monotonic()

    nodes = 0
    incumbent = None
    inc_key = INF
    counter = itertools.count()
    heap = []

    def evaluate(lb, ub, depth):
        nonlocal nodes, incumbent, inc_key
        nodes += 1
        out = solve_standard(sf, lb, ub, tol=config.lp_tol)
        if out.status == Status.INFEASIBLE:
            return None
        if out.status == Status.UNBOUNDED:
            return Status.UNBOUNDED
        key = sign * out.objective
        if key >= inc_key - config.gap_abs:
            return None
        var = _pick_branch(out.x, bin_ids, config)
        if var is None:
            x = out.x.copy()
            x[bin_ids] = np.round(x[bin_ids])
            incumbent, inc_key = x, key
            return None
        heapq.heappush(heap, (key, -depth, next(counter), lb, ub, var))
        return None

    if evaluate(lb0, ub0, 0) == Status.UNBOUNDED:
        return SolveResult(Status.UNBOUNDED, sign * -INF, sign * -INF,
                           np.full(model.n_vars, np.nan), nodes)

    status = Status.OPTIMAL
    while heap:
        key, neg_depth, _, lb, ub, var = heapq.heappop(heap)
        if key >= inc_key - config.gap_abs:
            continue
        if nodes >= config.max_nodes:
            heapq.heappush(heap, (key, neg_depth, -1, lb, ub, var))
            status = Status.NODE_LIMIT
            break
        if time.monotonic() - t0 > config.time_limit:
            heapq.heappush(heap, (key, neg_depth, -1, lb, ub, var))
            status = Status.TIME_LIMIT
            break
        depth = -neg_depth + 1
        for val in (1.0, 0.0) if sign < 0 else (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[var] = cub[var] = val
            if evaluate(clb, cub, depth) == Status.UNBOUNDED:
                return SolveResult(Status.UNBOUNDED, sign * -INF, sign * -INF,
                                   np.full(model.n_vars, np.nan), nodes)

    open_keys = [h[0] for h in heap if h[0] < inc_key - config.gap_abs]
    if status == Status.OPTIMAL:
        if incumbent is None:
            return SolveResult(Status.INFEASIBLE, math.nan, math.nan,
                               np.full(model.n_vars, np.nan), nodes)
        return SolveResult(Status.OPTIMAL, sign * inc_key, sign * inc_key, incumbent, nodes)
    bound_key = min(open_keys + [inc_key])
    obj = sign * inc_key if incumbent is not None else math.nan
    assignment = incumbent if incumbent is not None else np.full(model.n_vars, np.nan)
    return SolveResult(status, obj, sign * bound_key, assignment, nodes)
