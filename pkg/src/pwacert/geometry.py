"""Halfspace polytopes {x | A x <= b} and the set operations built on them.

All LPs here go through ``scipy.optimize.linprog`` (HiGHS). The MILPs that
describe reachable sets live in :mod:`pwacert.milp` and do not use this path.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

DEFAULT_CONTAINMENT_TOL = 1e-7


class GeometryError(Exception):
    pass


class EmptySet(GeometryError):
    pass


class Unbounded(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


class NonPositiveScale(GeometryError):
    pass


#: Returned by :func:`support` when the LP is unbounded in the given direction.
UNBOUNDED = float("inf")


@dataclass(frozen=True, eq=False)
class HPolyhedron:
    """The set {x | coeff_matrix @ x <= rhs}. Zero rows means all of R^n."""

    coeff_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        A = np.array(self.coeff_matrix, dtype=float)
        b = np.array(self.rhs, dtype=float).reshape(-1)
        if A.ndim == 1:
            A = A.reshape(1, -1) if b.size == 1 else A.reshape(b.size, -1)
        if A.ndim != 2 or A.shape[0] != b.size:
            raise DimensionMismatch(
                f"coeff_matrix has shape {A.shape}, rhs has length {b.size}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("polyhedron data must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "coeff_matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def A(self) -> np.ndarray:
        return self.coeff_matrix

    @property
    def b(self) -> np.ndarray:
        return self.rhs

    @property
    def dim(self) -> int:
        return self.coeff_matrix.shape[1]

    @property
    def n_facets(self) -> int:
        return self.coeff_matrix.shape[0]

    @classmethod
    def from_box(cls, lo, hi) -> "HPolyhedron":
        return Box(lo, hi).to_polyhedron()

    @classmethod
    def universe(cls, dim: int) -> "HPolyhedron":
        return cls(np.zeros((0, dim)), np.zeros(0))

    def contains_point(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self.n_facets == 0:
            return True
        return bool(np.all(self.coeff_matrix @ x <= self.rhs + tol))

    def __repr__(self):
        return f"HPolyhedron(dim={self.dim}, facets={self.n_facets})"


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.array(self.lo, dtype=float))
        hi = np.atleast_1d(np.array(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionMismatch("lo and hi must have the same shape")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def to_polyhedron(self) -> HPolyhedron:
        eye = np.eye(self.dim)
        return HPolyhedron(np.vstack([eye, -eye]), np.concatenate([self.hi, -self.lo]))

    def vertices(self) -> np.ndarray:
        grids = np.meshgrid(*[[l, h] for l, h in zip(self.lo, self.hi)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def box_template(n: int) -> np.ndarray:
    """Axis-aligned template rows (I; -I)."""
    eye = np.eye(n)
    return np.vstack([eye, -eye])


def octagon_template() -> np.ndarray:
    """Eight planar directions (cos(pi/4 (i-1)), sin(pi/4 (i-1))), i = 1..8."""
    angles = np.pi / 4 * np.arange(8)
    rows = np.column_stack([np.cos(angles), np.sin(angles)])
    # exact zeros keep the axis-aligned rows clean
    rows[np.abs(rows) < 1e-15] = 0.0
    return rows


def check_template(C) -> np.ndarray:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if np.any(np.all(C == 0, axis=1)):
        raise ValueError("template contains a zero direction")
    if C.shape[0] < C.shape[1] + 1:
        warnings.warn("template has fewer than n+1 directions; "
                      "over-approximations cannot be bounded", stacklevel=2)
    return C


def _lp_max(P: HPolyhedron, v: np.ndarray):
    # linprog minimizes; free variables need explicit (None, None) bounds
    res = linprog(-v, A_ub=P.A if P.n_facets else None,
                  b_ub=P.b if P.n_facets else None,
                  bounds=[(None, None)] * P.dim, method="highs")
    return res


def support(P: HPolyhedron, v) -> float:
    """sup_{x in P} v.x; returns ``UNBOUNDED`` (+inf) if the LP is unbounded.

    Raises EmptySet for an infeasible P.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != P.dim:
        raise DimensionMismatch(f"direction has size {v.size}, set has dim {P.dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("direction must be finite")
    res = _lp_max(P, v)
    if res.status == 2:
        raise EmptySet("support of an empty set")
    if res.status == 3:
        return UNBOUNDED
    if res.status != 0:
        raise GeometryError(f"LP failed: {res.message}")
    return float(-res.fun)


def support_many(P: HPolyhedron, V) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    return np.array([support(P, v) for v in V])


def is_empty(P: HPolyhedron) -> bool:
    if P.n_facets == 0:
        return False
    res = linprog(np.zeros(P.dim), A_ub=P.A, b_ub=P.b,
                  bounds=[(None, None)] * P.dim, method="highs")
    if res.status == 2:
        return True
    if res.status in (0, 3):
        return False
    raise GeometryError(f"LP failed: {res.message}")


def contains(outer: HPolyhedron, inner: HPolyhedron,
             tol: float = DEFAULT_CONTAINMENT_TOL) -> bool:
    """True iff inner is a subset of outer, tested facet by facet of outer."""
    if outer.dim != inner.dim:
        raise DimensionMismatch("sets live in different dimensions")
    if is_empty(inner):
        raise EmptySet("containment of an empty set")
    for a, b in zip(outer.A, outer.b):
        if support(inner, a) > b + tol:
            return False
    return True


def scale(P: HPolyhedron, s: float) -> HPolyhedron:
    if not s > 0:
        raise NonPositiveScale(f"scale factor must be positive, got {s}")
    return HPolyhedron(P.A, s * P.b)


def intersect(P: HPolyhedron, Q: HPolyhedron) -> HPolyhedron:
    if P.dim != Q.dim:
        raise DimensionMismatch(f"cannot intersect dim {P.dim} with dim {Q.dim}")
    return HPolyhedron(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]))


def bounding_box(P: HPolyhedron) -> Box:
    if is_empty(P):
        raise EmptySet("bounding box of an empty set")
    eye = np.eye(P.dim)
    hi = np.array([support(P, e) for e in eye])
    lo = -np.array([support(P, -e) for e in eye])
    if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
        raise Unbounded("set is unbounded")
    return Box(lo, hi)


def is_bounded(P: HPolyhedron) -> bool:
    try:
        bounding_box(P)
    except Unbounded:
        return False
    return True


def remove_redundancy(P: HPolyhedron, tol: float = 1e-9) -> HPolyhedron:
    """Drop facets that do not shape the set.

    Facet i is dropped when maximizing its normal over the remaining kept
    facets (plus the not-yet-tested ones) cannot exceed its offset.
    """
    if is_empty(P):
        raise EmptySet("cannot reduce an empty set")
    A, b = P.A, P.b
    # normalize rows so duplicates compare equal and tol is scale-free
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0
    if np.any(~keep) and np.any(b[~keep] < -tol):
        raise EmptySet("zero row with negative offset")
    A, b, norms = A[keep], b[keep], norms[keep]
    An, bn = A / norms[:, None], b / norms
    # exact duplicates: keep the tightest
    tightest = {}
    for idx, key in enumerate(map(tuple, np.round(An, 12) + 0.0)):
        if key not in tightest or bn[idx] < bn[tightest[key]]:
            tightest[key] = idx
    active = sorted(tightest.values())
    kept = list(active)
    for i in active:
        others = [j for j in kept if j != i]
        relaxed = HPolyhedron(np.vstack([An[others], An[i]]),
                              np.concatenate([bn[others], [bn[i] + 1.0]]))
        val = support(relaxed, An[i])
        if val <= bn[i] + tol:
            kept = others
    return HPolyhedron(An[kept] * norms[kept, None], bn[kept] * norms[kept])


def vertices_2d(P: HPolyhedron) -> np.ndarray:
    """Vertices of a bounded planar polytope, counter-clockwise.

    Intended for test oracles and figure data only.
    """
    if P.dim != 2:
        raise DimensionMismatch("vertices_2d needs a planar set")
    A, b = P.A, P.b
    pts = []
    for i in range(len(b)):
        for j in range(i + 1, len(b)):
            M = A[[i, j]]
            if abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]) < 1e-12:
                continue
            x = np.linalg.solve(M, b[[i, j]])
            if np.all(A @ x <= b + 1e-9):
                pts.append(x)
    if not pts:
        return np.zeros((0, 2))
    pts = np.unique(np.round(np.array(pts), 12), axis=0)
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    return pts[np.argsort(ang)]
