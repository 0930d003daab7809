"""PWA plants with per-region disturbance sets, and maxout network controllers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .geometry import Box, HPolyhedron, bounding_box, is_bounded, is_empty


class ModelError(Exception):
    pass


class NoRegion(ModelError):
    pass


class BadBounds(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


GUARD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Region:
    A: np.ndarray
    B: np.ndarray
    p: np.ndarray
    guard: HPolyhedron  # over (x, u)
    dist: HPolyhedron  # over d

    def __post_init__(self):
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "B", np.atleast_2d(np.asarray(self.B, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))

    def affine(self, x, u) -> np.ndarray:
        return self.A @ x + self.B @ u + self.p


@dataclass(frozen=True, eq=False)
class PwaSystem:
    """x+ = A_i x + B_i u + p_i + d,  d in D_i,  whenever (x, u) lies in guard_i.

    ``provenance`` is ``"error_bound"`` when the disturbance sets were
    produced from approximation residuals of a nonlinear map.
    """

    regions: tuple
    X: HPolyhedron
    U: HPolyhedron
    name: str = "pwa"
    provenance: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ModelError("system needs at least one region")
        n, m = self.n, self.m
        if self.X.dim != n or self.U.dim != m:
            raise DimensionMismatch("X/U dimensions disagree with region matrices")
        for i, r in enumerate(self.regions):
            if r.A.shape != (n, n) or r.B.shape != (n, m) or r.p.shape != (n,):
                raise DimensionMismatch(f"region {i} has inconsistent matrix shapes")
            if r.guard.dim != n + m:
                raise DimensionMismatch(f"region {i} guard must live in dimension n+m")
            if r.dist.dim != n:
                raise DimensionMismatch(f"region {i} disturbance set must live in dimension n")
            if is_empty(r.dist) or not is_bounded(r.dist):
                raise ModelError(f"region {i} disturbance set must be bounded and non-empty")

    @property
    def n(self) -> int:
        return self.regions[0].A.shape[0]

    @property
    def m(self) -> int:
        return self.regions[0].B.shape[1]

    @property
    def s(self) -> int:
        return len(self.regions)

    def with_disturbances(self, dists, provenance=None) -> "PwaSystem":
        regions = [Region(r.A, r.B, r.p, r.guard, d) for r, d in zip(self.regions, dists)]
        return PwaSystem(regions, self.X, self.U, self.name, provenance)


def eval_pwa(sys: PwaSystem, x, u, tol: float = GUARD_TOL):
    """Nominal successor and active region; boundary points go to the lowest index."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    xi = np.concatenate([x, u])
    for i, r in enumerate(sys.regions):
        if r.guard.contains_point(xi, tol):
            return r.affine(x, u), i
    raise NoRegion(f"no region contains (x, u) = {xi}")


def regions_disjoint(sys: PwaSystem, slack: float = 1e-9) -> bool:
    """Pairwise check that region interiors do not intersect.

    For each pair, maximize t such that every facet of both guards holds
    with margin t (rows normalized); interiors meet iff t > slack.
    """
    dim = sys.n + sys.m
    for i in range(sys.s):
        for j in range(i + 1, sys.s):
            G = np.vstack([sys.regions[i].guard.A, sys.regions[j].guard.A])
            h = np.concatenate([sys.regions[i].guard.b, sys.regions[j].guard.b])
            norms = np.linalg.norm(G, axis=1)
            ok = norms > 0
            G, h, norms = G[ok], h[ok], norms[ok]
            A_ub = np.hstack([G, norms[:, None]])
            c = np.zeros(dim + 1)
            c[-1] = -1.0
            res = linprog(c, A_ub=A_ub, b_ub=h, bounds=[(None, None)] * dim + [(None, 1.0)],
                          method="highs")
            if res.status == 0 and -res.fun > slack:
                return False
    return True


def coverage_fraction(sys: PwaSystem, n_samples: int = 10_000, seed: int = 0) -> float:
    """Fraction of uniform samples of box(X) x box(U), inside X x U, hit by some guard."""
    rng = np.random.default_rng(seed)
    bx, bu = bounding_box(sys.X), bounding_box(sys.U)
    lo = np.concatenate([bx.lo, bu.lo])
    hi = np.concatenate([bx.hi, bu.hi])
    hits = total = 0
    pts = rng.uniform(lo, hi, size=(n_samples, lo.size))
    for xi in pts:
        x, u = xi[: sys.n], xi[sys.n:]
        if not (sys.X.contains_point(x) and sys.U.contains_point(u)):
            continue
        total += 1
        hits += any(r.guard.contains_point(xi) for r in sys.regions)
    return hits / total if total else 1.0


# --------------------------------------------------------------------------
# maxout networks


@dataclass(frozen=True, eq=False)
class MaxoutLayer:
    W: np.ndarray  # (p*w, w_prev)
    b: np.ndarray  # (p*w,)
    channels: int  # p

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if self.channels < 1 or W.shape[0] % self.channels or W.shape[0] != b.size:
            raise DimensionMismatch("layer rows must equal channels * width and match the bias")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def width(self) -> int:
        return self.W.shape[0] // self.channels

    def preactivation(self, y):
        return self.W @ y + self.b

    def activate(self, z):
        return z.reshape(self.width, self.channels).max(axis=1)


@dataclass(frozen=True, eq=False)
class MaxoutNet:
    """Hidden maxout layers followed by an affine output map."""

    layers: tuple
    W_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        W_out = np.atleast_2d(np.asarray(self.W_out, dtype=float))
        b_out = np.atleast_1d(np.asarray(self.b_out, dtype=float))
        object.__setattr__(self, "W_out", W_out)
        object.__setattr__(self, "b_out", b_out)
        width = None
        for i, layer in enumerate(self.layers):
            if width is not None and layer.W.shape[1] != width:
                raise DimensionMismatch(f"layer {i} input width {layer.W.shape[1]} != {width}")
            width = layer.width
        if width is not None and W_out.shape[1] != width:
            raise DimensionMismatch("output map does not match the last hidden width")
        if W_out.shape[0] != b_out.size:
            raise DimensionMismatch("output weight and bias disagree")

    @property
    def n_in(self) -> int:
        return self.layers[0].W.shape[1] if self.layers else self.W_out.shape[1]

    @property
    def n_out(self) -> int:
        return self.W_out.shape[0]

    @property
    def n_binaries(self) -> int:
        return sum(layer.W.shape[0] for layer in self.layers)


def eval_nn(net: MaxoutNet, x) -> np.ndarray:
    y = np.atleast_1d(np.asarray(x, dtype=float))
    if y.size != net.n_in:
        raise DimensionMismatch(f"network expects {net.n_in} inputs, got {y.size}")
    for layer in net.layers:
        y = layer.activate(layer.preactivation(y))
    return net.W_out @ y + net.b_out


def zero_net(n: int, m: int) -> MaxoutNet:
    """The controller u = 0, with no hidden layers."""
    return MaxoutNet((), np.zeros((m, n)), np.zeros(m))


def linear_net(K, offset=None) -> MaxoutNet:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    return MaxoutNet((), K, np.zeros(K.shape[0]) if offset is None else offset)


def relu_net() -> MaxoutNet:
    """Scalar ReLU written as a two-channel maxout unit, max(x, 0)."""
    return MaxoutNet((MaxoutLayer([[1.0], [0.0]], [0.0, 0.0], 2),), [[1.0]], [0.0])


def sat_linear_to_maxout(K, u_lo: float, u_hi: float) -> MaxoutNet:
    """Exact maxout form of u = min(u_hi, max(u_lo, K x)) for a single input.

    Layer 1 computes y1 = max(Kx, u_lo), layer 2 computes
    y2 = max(-y1, -u_hi), and the output is -y2.
    """
    if not u_lo < u_hi:
        raise BadBounds(f"need u_lo < u_hi, got {u_lo}, {u_hi}")
    K = np.atleast_1d(np.asarray(K, dtype=float)).reshape(-1)
    n = K.size
    l1 = MaxoutLayer(np.vstack([K, np.zeros(n)]), [0.0, u_lo], 2)
    l2 = MaxoutLayer([[-1.0], [0.0]], [0.0, -u_hi], 2)
    return MaxoutNet((l1, l2), [[-1.0]], [0.0])


@dataclass(frozen=True)
class LayerBounds:
    """Interval bounds on every preactivation for inputs in ``box``.

    ``big_b[i]`` is the constant that relaxes the upper max-out rows of
    layer i: it dominates (largest channel value in a unit) minus (any
    channel of that unit), plus a unit margin.
    """

    box: Box
    lower: tuple
    upper: tuple
    big_b: tuple
    out_lower: np.ndarray
    out_upper: np.ndarray


def _affine_interval(W, b, lo, hi):
    Wp, Wn = np.maximum(W, 0), np.minimum(W, 0)
    return Wp @ lo + Wn @ hi + b, Wp @ hi + Wn @ lo + b


def interval_bounds(net: MaxoutNet, box: Box, margin: float = 1.0) -> LayerBounds:
    lo, hi = box.lo.astype(float), box.hi.astype(float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise BadBounds("interval bounds need a bounded box")
    lowers, uppers, bigs = [], [], []
    for layer in net.layers:
        zl, zu = _affine_interval(layer.W, layer.b, lo, hi)
        lowers.append(zl)
        uppers.append(zu)
        gl = zl.reshape(layer.width, layer.channels)
        gu = zu.reshape(layer.width, layer.channels)
        # sup over the unit of (max_k z_k - z_j) <= max_k hi_k - lo_j
        spread = gu.max(axis=1, keepdims=True) - gl
        bigs.append(float(spread.max()) + margin)
        lo, hi = gl.max(axis=1), gu.max(axis=1)
    ol, ou = _affine_interval(net.W_out, net.b_out, lo, hi)
    return LayerBounds(box, tuple(lowers), tuple(uppers), tuple(bigs), ol, ou)
