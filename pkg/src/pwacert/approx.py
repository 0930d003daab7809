"""Least-squares PWA fits of sampled nonlinear dynamics and their error bounds.

The fitted system carries the residual bound as its disturbance set, so the
ordinary certification pipeline applied to it gives an ultimate-boundedness
certificate for the sampled nonlinear map.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .certify import Certificate, assemble_certificate
from .geometry import HPolyhedron, bounding_box
from .library import NAMED_DYNAMICS, inf_ball
from .reach import ReachOptions
from .sysmodel import MaxoutNet, PwaSystem, Region

ERROR_BOUND = "error_bound"
DEFAULT_INFLATION = 0.25
MEMBER_TOL = 1e-9


class ApproxError(Exception):
    pass


class RankDeficient(ApproxError):
    def __init__(self, region):
        super().__init__(f"sample matrix of region {region} is rank deficient")
        self.region = region


class EmptyRegionValidation(ApproxError):
    def __init__(self, region):
        super().__init__(f"no validation samples fall in region {region}")
        self.region = region


@dataclass
class SampledDynamics:
    """Samples (x, u, f(x, u)) of a map on the declared domain X x U."""

    x: np.ndarray
    u: np.ndarray
    fx: np.ndarray
    X: HPolyhedron
    U: HPolyhedron
    generator: str | None = None

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.u = np.asarray(self.u, dtype=float).reshape(len(self.x), -1)
        self.fx = np.atleast_2d(np.asarray(self.fx, dtype=float))
        if self.fx.shape != self.x.shape:
            raise ValueError("fx must have the same shape as x")
        bad_x = np.any(self.x @ self.X.A.T > self.X.b + MEMBER_TOL, axis=1)
        bad_u = np.any(self.u @ self.U.A.T > self.U.b + MEMBER_TOL, axis=1)
        if np.any(bad_x | bad_u):
            raise ValueError(f"{int(np.sum(bad_x | bad_u))} samples lie outside the declared domain")

    def __len__(self):
        return len(self.x)

    @property
    def xu(self) -> np.ndarray:
        return np.hstack([self.x, self.u])


def grid_samples(dynamics, X: HPolyhedron, U: HPolyhedron, counts) -> SampledDynamics:
    """Evaluate ``dynamics`` (callable or built-in name) on a regular grid of box(X) x box(U)."""
    name = dynamics if isinstance(dynamics, str) else None
    f = NAMED_DYNAMICS[dynamics] if name else dynamics
    bx, bu = bounding_box(X), bounding_box(U)
    lo = np.concatenate([bx.lo, bu.lo])
    hi = np.concatenate([bx.hi, bu.hi])
    if len(counts) != lo.size:
        raise ValueError(f"need {lo.size} grid counts")
    axes = [np.linspace(a, b, c) for a, b, c in zip(lo, hi, counts)]
    pts = np.array(list(itertools.product(*axes)))
    n = X.dim
    x, u = pts[:, :n], pts[:, n:]
    # box(X) can exceed X for non-box domains
    keep = np.all(x @ X.A.T <= X.b + MEMBER_TOL, axis=1) & np.all(u @ U.A.T <= U.b + MEMBER_TOL, axis=1)
    x, u = x[keep], u[keep]
    return SampledDynamics(x, u, f(x, u), X, U, name)


def region_masks(regions, xu: np.ndarray) -> np.ndarray:
    """(s, N) membership; points on shared boundaries belong to every closed region."""
    return np.array([np.all(xu @ g.A.T <= g.b + MEMBER_TOL, axis=1) for g in regions])


@dataclass
class PwaFit:
    base: PwaSystem
    bounds: np.ndarray | None = None  # per-region infinity-norm radius
    rms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_residual: np.ndarray | None = None  # sampled, before inflation
    inflation: float = 0.0
    per_region: bool = False
    analytic: bool = False

    @property
    def provenance(self):
        return self.base.provenance

    @property
    def global_bound(self) -> float:
        return float(np.max(self.bounds))


def fit_least_squares(data: SampledDynamics, regions) -> PwaFit:
    """Per region, ordinary least squares of f(x, u) against (x, u, 1)."""
    n, m = data.x.shape[1], data.u.shape[1]
    xu = data.xu
    masks = region_masks(regions, xu)
    covered = masks.any(axis=0)
    if not covered.all():
        raise ApproxError(f"{int((~covered).sum())} samples are not covered by any region")
    out, rms = [], []
    for i, (g, mask) in enumerate(zip(regions, masks)):
        Z = np.hstack([xu[mask], np.ones((mask.sum(), 1))])
        if Z.shape[0] < n + m + 1:
            raise RankDeficient(i)
        theta, _, rank, _ = np.linalg.lstsq(Z, data.fx[mask], rcond=None)
        if rank < n + m + 1:
            raise RankDeficient(i)
        A, B, p = theta[:n].T, theta[n:n + m].T, theta[n + m]
        resid = data.fx[mask] - Z @ theta
        rms.append(float(np.sqrt(np.mean(resid ** 2))))
        out.append(Region(A, B, p, g, inf_ball(n, 0.0)))
    base = PwaSystem(out, data.X, data.U, name="fit", provenance="fit")
    return PwaFit(base, rms=np.array(rms))


def residuals(fit: PwaFit, data: SampledDynamics):
    """Infinity-norm residual of every sample in every region that contains it."""
    xu = data.xu
    masks = region_masks([r.guard for r in fit.base.regions], xu)
    res = []
    for r, mask in zip(fit.base.regions, masks):
        pred = data.x[mask] @ r.A.T + data.u[mask] @ r.B.T + r.p
        res.append(np.abs(data.fx[mask] - pred).max(axis=1) if mask.any() else np.zeros(0))
    return res


def error_bound(fit: PwaFit, data: SampledDynamics, inflation: float = DEFAULT_INFLATION,
                per_region: bool = False, analytic=None) -> PwaFit:
    """Attach D_i = infinity ball of radius (1 + inflation) max residual.

    ``analytic`` (scalar or per-region radii) replaces the sampled bound; it
    must still dominate every validation residual.
    """
    if inflation < 0:
        raise ValueError("inflation must be nonnegative")
    res = residuals(fit, data)
    for i, r in enumerate(res):
        if r.size == 0:
            raise EmptyRegionValidation(i)
    sampled = np.array([r.max() for r in res])
    s = fit.base.s
    if analytic is not None:
        bounds = np.broadcast_to(np.asarray(analytic, dtype=float), (s,)).copy()
        if np.any(bounds < sampled):
            raise ApproxError("analytic bound is below a sampled residual")
    else:
        bounds = (1.0 + inflation) * sampled
        if not per_region:
            bounds = np.full(s, bounds.max())
    n = fit.base.n
    base = fit.base.with_disturbances([inf_ball(n, b) for b in bounds], provenance=ERROR_BOUND)
    out = replace(fit, base=base, bounds=bounds, max_residual=sampled, inflation=inflation,
                  per_region=per_region, analytic=analytic is not None)
    assert all(np.all(r <= b) for r, b in zip(res, bounds))
    return out


def uub_certify(fit: PwaFit, net: MaxoutNet, opts: ReachOptions | None = None,
                eps_bar: float = 1e-3, **kwargs) -> Certificate:
    """Certificate for the fitted system; its UUB verdict transfers to the sampled map."""
    if fit.provenance != ERROR_BOUND:
        raise ApproxError("fit has no error bound attached")
    cert = assemble_certificate(fit.base, net, opts, eps_bar=eps_bar, **kwargs)
    if cert.inputs_verified and cert.uub_verdict == "uub_certified" and not fit.analytic:
        cert.notes.append("disturbance sets come from sampled residuals; the ultimate bound "
                          "is sound relative to those sets")
    return cert

