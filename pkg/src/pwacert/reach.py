"""Support functions of reachable sets and template over-approximations."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .encode import encode_closed_loop, init_inside_x
from .geometry import DEFAULT_CONTAINMENT_TOL, HPolyhedron, box_template, check_template, octagon_template
from .milp import SolverConfig, Status, solve
from .sysmodel import MaxoutNet, PwaSystem

log = logging.getLogger(__name__)


class ReachError(Exception):
    pass


class SolverLimit(ReachError):
    def __init__(self, msg, incumbent, bound):
        super().__init__(msg)
        self.incumbent = incumbent
        self.bound = bound


def default_template(n: int) -> np.ndarray:
    return octagon_template() if n == 2 else box_template(n)


@dataclass
class ReachOptions:
    template: np.ndarray | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    containment_tol: float = DEFAULT_CONTAINMENT_TOL
    # every MILP solved through this options object is appended here
    log: list | None = None

    def template_for(self, n: int) -> np.ndarray:
        C = default_template(n) if self.template is None else check_template(self.template)
        if C.shape[1] != n:
            raise ValueError(f"template has dimension {C.shape[1]}, system has {n}")
        return C


def _solve_directions(sys, net, F, k, directions, opts: ReachOptions):
    if not init_inside_x(sys, F):
        warnings.warn("initial set is not contained in X", stacklevel=3)
    enc = encode_closed_loop(sys, net, F, k)
    x_last = enc.x_vars[-1]
    values = []
    for v in np.atleast_2d(directions):
        enc.model.set_objective(x_last, v, "max")
        res = solve(enc.model, opts.solver)
        if res.status == Status.INFEASIBLE:
            raise ReachError("reachability MILP is infeasible: the set leaves the modelled "
                             "state/input partition")
        if res.status == Status.UNBOUNDED:
            raise ReachError(f"support is unbounded in direction {v}")
        if res.status != Status.OPTIMAL:
            raise SolverLimit(f"solver stopped with {res.status.value} in direction {v}",
                              res.objective_value, res.best_bound)
        values.append(res.objective_value)
        if opts.log is not None:
            opts.log.append({"k": k, "direction": [float(t) for t in v],
                             "value": res.objective_value, "nodes": res.node_count})
    return np.array(values)


def support_reach(sys: PwaSystem, net: MaxoutNet, F: HPolyhedron, k: int, v,
                  opts: ReachOptions | None = None) -> float:
    """Exact support of the k-step reachable set of the disturbed closed loop."""
    opts = opts or ReachOptions()
    return float(_solve_directions(sys, net, F, k, np.atleast_2d(v), opts)[0])


def overapprox_one(sys: PwaSystem, net: MaxoutNet, F: HPolyhedron,
                   opts: ReachOptions | None = None) -> HPolyhedron:
    """Template polyhedron {x | C x <= c} with c the one-step supports."""
    opts = opts or ReachOptions()
    C = opts.template_for(sys.n)
    c = _solve_directions(sys, net, F, 1, C, opts)
    return HPolyhedron(C, c)


def overapprox_k(sys: PwaSystem, net: MaxoutNet, F: HPolyhedron, k: int,
                 opts: ReachOptions | None = None) -> list:
    """[R1(F), R1(R1(F)), ...] up to k applications."""
    if k < 1:
        raise ValueError("k must be at least 1")
    out = []
    current = F
    for _ in range(k):
        current = overapprox_one(sys, net, current, opts)
        out.append(current)
    return out


def check_rpi(sys: PwaSystem, net: MaxoutNet, F: HPolyhedron,
              opts: ReachOptions | None = None):
    """(is_rpi, supports): one-step supports along the facet normals of F."""
    opts = opts or ReachOptions()
    supports = _solve_directions(sys, net, F, 1, F.A, opts)
    ok = bool(np.all(supports <= F.b + opts.containment_tol))
    return ok, supports
