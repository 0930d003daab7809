"""Mixed-integer linear description of the disturbed closed loop.

One call to :func:`encode_closed_loop` produces a MilpModel whose feasible
assignments are exactly the K-step trajectories x(0), ..., x(K) of
x+ = f_PWA(x, Phi(x)) + d with x(0) in the initial set and d in the
disturbance set of the active region.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, HPolyhedron, bounding_box, contains
from .milp import MilpModel
from .sysmodel import LayerBounds, MaxoutNet, PwaSystem, interval_bounds

BIG_M_MARGIN = 1.1


class EncodingError(Exception):
    pass


class BoundsTooTight(EncodingError):
    pass


@dataclass
class ClosedLoopEncoding:
    model: MilpModel
    horizon: int
    big_m: float
    bounds: LayerBounds
    x_vars: list = field(default_factory=list)  # K+1 arrays of n ids
    u_vars: list = field(default_factory=list)
    d_vars: list = field(default_factory=list)
    gamma_vars: list = field(default_factory=list)
    xtilde_vars: list = field(default_factory=list)  # per step: (s, n) id array
    q_vars: list = field(default_factory=list)  # per step: list over layers
    delta_vars: list = field(default_factory=list)
    n_binaries_per_step: int = 0


def _dist_box(sys: PwaSystem) -> Box:
    boxes = [bounding_box(r.dist) for r in sys.regions]
    return Box(np.min([b.lo for b in boxes], axis=0), np.max([b.hi for b in boxes], axis=0))


def _abs_max_affine(W, b, lo, hi):
    """Componentwise max of |W z + b| over the box [lo, hi]."""
    Wp, Wn = np.maximum(W, 0), np.minimum(W, 0)
    top = Wp @ hi + Wn @ lo + b
    bot = Wp @ lo + Wn @ hi + b
    return np.maximum(np.abs(top), np.abs(bot))


def compute_big_m(sys: PwaSystem, net: MaxoutNet | None = None) -> float:
    """A single constant that deactivates every region-gated row.

    Interval bounds over box(X) x box(U): guard row residuals, one-step
    affine images plus the disturbance range, disturbance-set row residuals
    and the state magnitude; the largest of these times 1.1.
    """
    bx, bu = bounding_box(sys.X), bounding_box(sys.U)
    dbox = _dist_box(sys)
    lo = np.concatenate([bx.lo, bu.lo])
    hi = np.concatenate([bx.hi, bu.hi])
    dmag = np.maximum(np.abs(dbox.lo), np.abs(dbox.hi))
    parts = [np.abs(np.concatenate([bx.lo, bx.hi])).max(), dmag.max()]
    for r in sys.regions:
        if r.guard.n_facets:
            parts.append(_abs_max_affine(r.guard.A, -r.guard.b, lo, hi).max())
        step = _abs_max_affine(np.hstack([r.A, r.B]), r.p, lo, hi) + dmag
        parts.append(step.max())
        if r.dist.n_facets:
            parts.append(_abs_max_affine(r.dist.A, -r.dist.b, dbox.lo, dbox.hi).max())
    return BIG_M_MARGIN * float(max(parts))


def encode_nn(model: MilpModel, net: MaxoutNet, x_vars, bounds: LayerBounds,
              k: int = 0, x_box: Box | None = None):
    """Add the maxout constraints for u = Phi(x) and return (u_vars, q_vars, delta_vars).

    q^(0) is the state itself, so ``x_vars`` feed the first layer directly.
    """
    if x_box is not None:
        if np.any(x_box.lo < bounds.box.lo - 1e-9) or np.any(x_box.hi > bounds.box.hi + 1e-9):
            raise BoundsTooTight("layer bounds were computed on a box that misses the state range")
    prev = np.asarray(x_vars)
    qs, deltas = [], []
    for li, layer in enumerate(net.layers):
        w, p = layer.width, layer.channels
        bbar = bounds.big_b[li]
        q = model.add_vars(f"q{li + 1}({k})", w)
        delta = model.add_vars(f"delta{li + 1}({k})", w * p, binary=True)
        for unit in range(w):
            group = range(p * unit, p * (unit + 1))
            for j in group:
                idx = np.concatenate([[q[unit]], prev, [delta[j]]])
                # q_l <= W_j q_prev + b_j + bbar (1 - delta_j)
                model.add_constraint(idx, np.concatenate([[1.0], -layer.W[j], [bbar]]),
                                     "<=", layer.b[j] + bbar)
                # q_l >= W_j q_prev + b_j
                model.add_constraint(idx[:-1], np.concatenate([[-1.0], layer.W[j]]),
                                     "<=", -layer.b[j])
            model.add_constraint(delta[list(group)], np.ones(p), "=", 1.0)
        qs.append(q)
        deltas.append(delta)
        prev = q
    u = model.add_vars(f"u({k})", net.n_out)
    for r in range(net.n_out):
        # u_r - W_out[r] q_last = b_out[r]
        model.add_constraint(np.concatenate([[u[r]], prev]),
                             np.concatenate([[1.0], -net.W_out[r]]), "=", net.b_out[r])
    return u, qs, deltas


def encode_regions(model: MilpModel, sys: PwaSystem, x_vars, u_vars, big_m: float,
                   k: int = 0) -> np.ndarray:
    """gamma_i(k) = 1 forces (x, u) into guard i; exactly one gamma is active."""
    gamma = model.add_vars(f"gamma({k})", sys.s, binary=True)
    xi = np.concatenate([x_vars, u_vars])
    for i, r in enumerate(sys.regions):
        for row, h in zip(r.guard.A, r.guard.b):
            model.add_constraint(np.concatenate([xi, [gamma[i]]]), np.concatenate([row, [big_m]]),
                                 "<=", h + big_m)
    model.add_constraint(gamma, np.ones(sys.s), "=", 1.0)
    return gamma


def encode_dynamics_disturbed(model: MilpModel, sys: PwaSystem, x_vars, u_vars, gamma,
                              big_m: float, k: int = 0, d_box: Box | None = None):
    """Rows for x(k+1) = A_i x + B_i u + p_i + d with d in D_i for the active region.

    Returns (x_next_vars, d_vars, xtilde) where xtilde has shape (s, n).
    """
    n = sys.n
    d_box = d_box or _dist_box(sys)
    d = model.add_vars(f"d({k})", n, lower=d_box.lo, upper=d_box.hi)
    xtilde = np.array([model.add_vars(f"xt{i + 1}({k + 1})", n) for i in range(sys.s)])
    xu = np.concatenate([x_vars, u_vars])
    for i, r in enumerate(sys.regions):
        AB = np.hstack([r.A, r.B])
        g = gamma[i]
        for c in range(n):
            idx = np.concatenate([xu, [d[c], xtilde[i, c], g]])
            # |A x + B u + p + d - xt| <= M (1 - gamma)
            model.add_constraint(idx, np.concatenate([AB[c], [1.0, -1.0, big_m]]),
                                 "<=", big_m - r.p[c])
            model.add_constraint(idx, np.concatenate([-AB[c], [-1.0, 1.0, big_m]]),
                                 "<=", big_m + r.p[c])
            # |xt| <= M gamma
            model.add_constraint([xtilde[i, c], g], [1.0, -big_m], "<=", 0.0)
            model.add_constraint([xtilde[i, c], g], [-1.0, -big_m], "<=", 0.0)
        for row, h in zip(r.dist.A, r.dist.b):
            model.add_constraint(np.concatenate([d, [g]]), np.concatenate([row, [big_m]]),
                                 "<=", h + big_m)
    x_next = model.add_vars(f"x({k + 1})", n)
    for c in range(n):
        model.add_constraint(np.concatenate([[x_next[c]], xtilde[:, c]]),
                             np.concatenate([[1.0], -np.ones(sys.s)]), "=", 0.0)
    return x_next, d, xtilde


def encode_closed_loop(sys: PwaSystem, net: MaxoutNet, init_set: HPolyhedron, K: int,
                       big_m: float | None = None,
                       bounds: LayerBounds | None = None) -> ClosedLoopEncoding:
    """Chain network, region logic and disturbed dynamics over K steps."""
    if K < 1:
        raise ValueError("horizon must be at least 1")
    if net.n_in != sys.n or net.n_out != sys.m:
        raise EncodingError("network dimensions do not match the system")
    x_box = bounding_box(sys.X)
    init_box = bounding_box(init_set)
    big_m = compute_big_m(sys, net) if big_m is None else big_m
    bounds = bounds or interval_bounds(net, x_box)
    d_box = _dist_box(sys)

    model = MilpModel("reach")
    enc = ClosedLoopEncoding(model, K, big_m, bounds)
    enc.n_binaries_per_step = sys.s + net.n_binaries
    x = model.add_vars("x(0)", sys.n, lower=init_box.lo, upper=init_box.hi)
    for row, h in zip(init_set.A, init_set.b):
        model.add_constraint(x, row, "<=", h)
    enc.x_vars.append(x)
    for k in range(K):
        u, qs, deltas = encode_nn(model, net, x, bounds, k, x_box=init_box if k == 0 else None)
        gamma = encode_regions(model, sys, x, u, big_m, k)
        x_next, d, xtilde = encode_dynamics_disturbed(model, sys, x, u, gamma, big_m, k, d_box)
        enc.u_vars.append(u)
        enc.q_vars.append(qs)
        enc.delta_vars.append(deltas)
        enc.gamma_vars.append(gamma)
        enc.d_vars.append(d)
        enc.xtilde_vars.append(xtilde)
        enc.x_vars.append(x_next)
        x = x_next
    return enc


def init_inside_x(sys: PwaSystem, init_set: HPolyhedron, tol: float = 1e-7) -> bool:
    return contains(sys.X, init_set, tol)
