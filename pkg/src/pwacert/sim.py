"""Closed-loop simulation, Monte-Carlo validation and brute-force support oracles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import HPolyhedron, bounding_box, contains, support
from .sysmodel import GUARD_TOL, MaxoutNet, NoRegion, PwaSystem, eval_nn, eval_pwa

SAMPLERS = ("uniform_box", "vertices", "zero")
MEMBER_TOL = 1e-9


class SimError(Exception):
    pass


class DisturbanceOutOfSet(SimError):
    pass


class DimensionTooHigh(SimError):
    pass


def _rng(seed):
    # PCG64 behind numpy's default generator; streams are fixed per seed
    return np.random.default_rng(seed)


def eval_nn_batch(net: MaxoutNet, X: np.ndarray) -> np.ndarray:
    Y = np.atleast_2d(X)
    for layer in net.layers:
        Z = Y @ layer.W.T + layer.b
        Y = Z.reshape(len(Y), layer.width, layer.channels).max(axis=2)
    return Y @ net.W_out.T + net.b_out


def regions_batch(sys: PwaSystem, X: np.ndarray, U: np.ndarray, tol: float = GUARD_TOL):
    """Lowest-index active region per row, -1 where no guard holds."""
    XU = np.hstack([X, U])
    member = np.array([np.all(XU @ r.guard.A.T <= r.guard.b + tol, axis=1) for r in sys.regions])
    idx = np.argmax(member, axis=0)
    return np.where(member.any(axis=0), idx, -1)


def nominal_batch(sys: PwaSystem, X, U, regions) -> np.ndarray:
    out = np.empty_like(X)
    for i, r in enumerate(sys.regions):
        sel = regions == i
        if sel.any():
            out[sel] = X[sel] @ r.A.T + U[sel] @ r.B.T + r.p
    return out


def _is_box(P: HPolyhedron) -> bool:
    return contains(P, bounding_box(P).to_polyhedron(), 1e-12)


class _DisturbanceSampler:
    def __init__(self, sys: PwaSystem, kind: str, rng):
        if kind not in SAMPLERS:
            raise ValueError(f"unknown sampler {kind!r}")
        self.kind = kind
        self.rng = rng
        self.sets = [r.dist for r in sys.regions]
        self.boxes = [bounding_box(D) for D in self.sets]
        if kind == "vertices" and not all(_is_box(D) for D in self.sets):
            raise ValueError("vertex sampling needs box-shaped disturbance sets")

    def draw(self, regions: np.ndarray, n: int) -> np.ndarray:
        out = np.zeros((len(regions), n))
        if self.kind == "zero":
            return out
        for i, (D, box) in enumerate(zip(self.sets, self.boxes)):
            idx = np.flatnonzero(regions == i)
            if self.kind == "vertices":
                corners = box.vertices()
                out[idx] = corners[self.rng.integers(len(corners), size=idx.size)]
                continue
            # rejection from the bounding box
            while idx.size:
                d = self.rng.uniform(box.lo, box.hi, size=(idx.size, n))
                ok = np.all(d @ D.A.T <= D.b + MEMBER_TOL, axis=1)
                out[idx[ok]] = d[ok]
                idx = idx[~ok]
        return out


def step_closed_loop(sys: PwaSystem, net: MaxoutNet, x, d):
    """One disturbed step; returns (x_next, region)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    u = eval_nn(net, x)
    nominal, i = eval_pwa(sys, x, u)
    if not sys.regions[i].dist.contains_point(d, MEMBER_TOL):
        raise DisturbanceOutOfSet(f"d = {d} is not in the disturbance set of region {i}")
    return nominal + d, i


@dataclass
class Trajectory:
    states: np.ndarray  # (K+1, n)
    inputs: np.ndarray  # (K, m)
    disturbances: np.ndarray  # (K, n)
    regions: np.ndarray  # (K,)
    switched: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def replay_error(self, sys: PwaSystem) -> float:
        err = 0.0
        for k in range(len(self.inputs)):
            nominal, _ = eval_pwa(sys, self.states[k], self.inputs[k])
            err = max(err, float(np.abs(nominal + self.disturbances[k] - self.states[k + 1]).max()))
        return err

    def rows(self):
        """CSV rows: k, x..., u..., d..., region (the last state has no input)."""
        n, m = self.states.shape[1], self.inputs.shape[1]
        for k, x in enumerate(self.states):
            if k < len(self.inputs):
                yield [k, *x, *self.inputs[k], *self.disturbances[k], int(self.regions[k])]
            else:
                yield [k, *x, *([np.nan] * (m + n)), -1]


def simulate(sys: PwaSystem, net: MaxoutNet, x0, K: int, sampler: str = "uniform_box",
             seed: int = 0) -> Trajectory:
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if not sys.X.contains_point(x, MEMBER_TOL):
        raise SimError("x0 is outside X")
    draw = _DisturbanceSampler(sys, sampler, _rng(seed))
    states, inputs, dists, regs, switched = [x], [], [], [], []
    for _ in range(K):
        u = eval_nn(net, x)
        nominal, i = eval_pwa(sys, x, u)
        d = draw.draw(np.array([i]), sys.n)[0]
        x_next = nominal + d
        inputs.append(u)
        dists.append(d)
        regs.append(i)
        switched.append(_region_or_none(sys, net, x_next) != _region_or_none(sys, net, nominal))
        states.append(x_next)
        x = x_next
    return Trajectory(np.array(states), np.array(inputs).reshape(K, sys.m),
                      np.array(dists).reshape(K, sys.n), np.array(regs, dtype=int),
                      np.array(switched, dtype=bool))


def _region_or_none(sys, net, x):
    try:
        return eval_pwa(sys, x, eval_nn(net, x))[1]
    except NoRegion:
        return None


def sample_in(P: HPolyhedron, count: int, rng) -> np.ndarray:
    """Uniform samples of a bounded polyhedron by rejection from its bounding box."""
    box = bounding_box(P)
    out = np.empty((0, P.dim))
    while len(out) < count:
        x = rng.uniform(box.lo, box.hi, size=(2 * (count - len(out)) + 16, P.dim))
        out = np.vstack([out, x[np.all(x @ P.A.T <= P.b, axis=1)]])
    return out[:count]


@dataclass
class McReport:
    trials: int = 0
    steps: int = 0
    f_max_exits: int = 0
    r_min_late_exits: int = 0
    input_violations: int = 0
    uncovered: int = 0
    max_f_max_excess: float = 0.0
    max_r_min_excess: float = 0.0

    @property
    def violations(self) -> int:
        return self.f_max_exits + self.r_min_late_exits + self.input_violations + self.uncovered

    @property
    def clean(self) -> bool:
        return self.violations == 0


def _excess(P: HPolyhedron, X: np.ndarray) -> np.ndarray:
    return np.max(X @ P.A.T - P.b, axis=1)


def mc_validate(sys: PwaSystem, net: MaxoutNet, f_max: HPolyhedron, r_min: HPolyhedron,
                k_bar: int, trials: int, seed: int = 0, horizon: int | None = None,
                sampler: str = "uniform_box", dynamics=None, tol: float = MEMBER_TOL) -> McReport:
    """Count trajectories that leave F_max, sit outside R_min at k >= k_bar, or break U.

    With ``dynamics`` (a callable f(x, u)) the true map is simulated without
    added disturbance instead of the PWA model.
    """
    report = McReport(trials=trials)
    if trials == 0:
        return report
    horizon = 2 * k_bar + 10 if horizon is None else horizon
    report.steps = horizon
    rng = _rng(seed)
    draw = _DisturbanceSampler(sys, sampler, rng)
    X = sample_in(f_max, trials, rng)
    bad_f = np.zeros(trials, dtype=bool)
    bad_r = np.zeros(trials, dtype=bool)
    bad_u = np.zeros(trials, dtype=bool)
    lost = np.zeros(trials, dtype=bool)
    for k in range(horizon + 1):
        ex_f = _excess(f_max, X)
        report.max_f_max_excess = max(report.max_f_max_excess, float(ex_f.max()))
        bad_f |= ex_f > tol
        if k >= k_bar:
            ex_r = _excess(r_min, X)
            report.max_r_min_excess = max(report.max_r_min_excess, float(ex_r.max()))
            bad_r |= ex_r > tol
        if k == horizon:
            break
        U = eval_nn_batch(net, X)
        bad_u |= np.any(U @ sys.U.A.T > sys.U.b + tol, axis=1)
        if dynamics is not None:
            X = np.asarray(dynamics(X, U), dtype=float)
            continue
        regs = regions_batch(sys, X, U)
        lost |= regs < 0
        regs = np.where(regs < 0, 0, regs)
        X = nominal_batch(sys, X, U, regs) + draw.draw(regs, sys.n)
    report.f_max_exits = int(bad_f.sum())
    report.r_min_late_exits = int(bad_r.sum())
    report.input_violations = int(bad_u.sum())
    report.uncovered = int(lost.sum())
    return report


def brute_support(sys: PwaSystem, net: MaxoutNet, F: HPolyhedron, v, grid_per_axis: int) -> float:
    """max v.(f_PWA(x, Phi(x)) + d) over grid points of F and the extreme disturbances.

    A lower bound on the exact one-step support.
    """
    if sys.n > 3:
        raise DimensionTooHigh("grid oracle is limited to n <= 3")
    v = np.asarray(v, dtype=float)
    box = bounding_box(F)
    axes = [np.linspace(a, b, grid_per_axis) for a, b in zip(box.lo, box.hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, sys.n)
    pts = pts[np.all(pts @ F.A.T <= F.b + MEMBER_TOL, axis=1)]
    U = eval_nn_batch(net, pts)
    regs = regions_batch(sys, pts, U)
    if np.any(regs < 0):
        raise NoRegion("grid point outside every region")
    best = -np.inf
    for i, r in enumerate(sys.regions):
        sel = regs == i
        if not sel.any():
            continue
        nominal = pts[sel] @ r.A.T + U[sel] @ r.B.T + r.p
        if _is_box(r.dist):
            dbest = float(np.max(bounding_box(r.dist).vertices() @ v))
        else:
            dbest = support(r.dist, v)
        best = max(best, float(np.max(nominal @ v)) + dbest)
    return best

