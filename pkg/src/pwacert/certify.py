"""Safe set, terminal set, contraction margin and the resulting certificates."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .encode import encode_nn
from .geometry import (HPolyhedron, bounding_box, contains, intersect, remove_redundancy,
                       scale, support_many)
from .milp import MilpModel, Status, solve
from .reach import ReachOptions, check_rpi, overapprox_one
from .sysmodel import MaxoutNet, PwaSystem, interval_bounds

log = logging.getLogger(__name__)

ALPHA_BRACKET = (1.0, 10.0)


class CertificationError(Exception):
    def __init__(self, msg, certificate=None, last=None):
        super().__init__(msg)
        self.certificate = certificate
        self.last = last


class NotConverged(CertificationError):
    pass


class OriginNotInterior(CertificationError):
    pass


@dataclass
class Certificate:
    f_max: HPolyhedron | None = None
    f_max_iterations: int = 0
    r_min: HPolyhedron | None = None
    k_bar: int = 0
    eps_bar: float = 0.0
    alpha: float = float("nan")
    delta_max: float = 0.0
    stability_verdict: str = "not_computed"
    uub_verdict: str = "not_applicable"
    inputs_verified: bool | None = None
    config: dict = field(default_factory=dict)
    # support values kept for re-verification without new MILP solves
    f_sequence: list = field(default_factory=list)
    r_sequence: list = field(default_factory=list)
    rpi_supports: np.ndarray | None = None
    termination_scaled: HPolyhedron | None = None
    termination_image: HPolyhedron | None = None
    support_log: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return self.stability_verdict == "asymptotically_stable"


def compute_f_max(sys: PwaSystem, net: MaxoutNet, opts: ReachOptions | None = None,
                  max_iters: int = 100, history: list | None = None):
    """Iterate F_{k+1} = R1(F_k) & X from F_0 = X until R1(F_k) lies in F_k.

    Returns (F_max, iterations, R1(F_max)). The first candidate tested is F_1.
    """
    opts = opts or ReachOptions()
    F = sys.X
    R = overapprox_one(sys, net, F, opts)
    for k in range(1, max_iters + 1):
        F_new = remove_redundancy(intersect(R, sys.X))
        if not contains(F, F_new, opts.containment_tol):
            raise CertificationError(f"F_{k} is not nested in F_{k - 1}", last=F_new)
        R_new = overapprox_one(sys, net, F_new, opts)
        if history is not None:
            history.append(F_new)
        log.info("F_max iteration %d: %d facets", k, F_new.n_facets)
        if contains(F_new, R_new, opts.containment_tol):
            return F_new, k, R_new
        F, R = F_new, R_new
    raise NotConverged(f"F_max did not converge in {max_iters} iterations", last=F)


def termination_holds(sys, net, R_k: HPolyhedron, eps_bar: float, opts: ReachOptions):
    """Test S subset R1(S) for S = R_k / (1 + eps_bar); returns (holds, S, R1(S))."""
    S = scale(R_k, 1.0 / (1.0 + eps_bar))
    RS = overapprox_one(sys, net, S, opts)
    return contains(RS, S, opts.containment_tol), S, RS


def compute_r_min(sys: PwaSystem, net: MaxoutNet, f_max: HPolyhedron, eps_bar: float,
                  opts: ReachOptions | None = None, max_iters: int = 500,
                  first: HPolyhedron | None = None, stride: int = 1):
    """Shrink R_k = R1^k(F_max) until the eps_bar test passes.

    Returns (R_min, k_bar, sequence) with sequence[0] = F_max and
    sequence[k] = R_k.
    """
    if not eps_bar > 0:
        raise ValueError("eps_bar must be positive")
    opts = opts or ReachOptions()
    seq = [f_max]
    current = first if first is not None else overapprox_one(sys, net, f_max, opts)
    for k in range(1, max_iters + 1):
        seq.append(current)
        if k % stride == 0:
            ok, _, _ = termination_holds(sys, net, current, eps_bar, opts)
            log.info("R_min iteration %d: termination test %s", k, ok)
            if ok:
                return current, k, seq
        current = overapprox_one(sys, net, current, opts)
    raise NotConverged(f"R_min did not converge in {max_iters} iterations", last=seq)


def alpha_margin(prev: HPolyhedron, last: HPolyhedron, rel_tol: float = 1e-9) -> float:
    """Largest alpha in [1, 10] with alpha * last inside prev, by bisection.

    Supports of ``last`` along the facets of ``prev`` are computed once;
    scaling a set scales its support, so each bisection step is a vector
    comparison. If alpha = 1 already fails, the (sub-unit) exact ratio is
    returned instead so callers can report how far off the condition is.
    """
    h = support_many(last, prev.A)
    b = prev.b

    def fits(alpha):
        return bool(np.all(alpha * h <= b))

    lo, hi = ALPHA_BRACKET
    if not fits(lo):
        pos = h > 0
        return float(np.min(b[pos] / h[pos])) if pos.any() else lo
    if fits(hi):
        warnings.warn("alpha bracket upper end is feasible; margin reported as 10", stacklevel=2)
        return hi
    while hi - lo > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def delta_max(r_kbar: HPolyhedron, alpha: float) -> float:
    """Radius of the 2-norm ball that fits between R and alpha R.

    Facet i of a template polyhedron moves out by (alpha - 1) c_i / ||C_i||;
    the smallest such move is the radius.
    """
    if not alpha > 1:
        raise ValueError("delta_max needs alpha > 1")
    if np.any(r_kbar.b <= 0):
        raise OriginNotInterior("the terminal set does not contain the origin in its interior")
    norms = np.linalg.norm(r_kbar.A, axis=1)
    return float((alpha - 1.0) * np.min(r_kbar.b / norms))


def max_controller_output(net: MaxoutNet, X: HPolyhedron, direction,
                          opts: ReachOptions | None = None) -> float:
    """max direction . Phi(x) over x in X, solved as a MILP."""
    opts = opts or ReachOptions()
    box = bounding_box(X)
    model = MilpModel("controller")
    x = model.add_vars("x", X.dim, lower=box.lo, upper=box.hi)
    for row, h in zip(X.A, X.b):
        model.add_constraint(x, row, "<=", h)
    u, _, _ = encode_nn(model, net, x, interval_bounds(net, box), x_box=box)
    model.set_objective(u, direction, "max")
    res = solve(model, opts.solver)
    if res.status != Status.OPTIMAL:
        raise CertificationError(f"controller bound MILP ended with {res.status.value}")
    return res.objective_value


def verify_nn_input_constraints(net: MaxoutNet, X: HPolyhedron, U: HPolyhedron,
                                opts: ReachOptions | None = None) -> bool:
    """True iff Phi(x) lies in U for every x in X."""
    opts = opts or ReachOptions()
    for row, g in zip(U.A, U.b):
        if max_controller_output(net, X, row, opts) > g + opts.containment_tol:
            return False
    return True


def _config_echo(opts: ReachOptions, eps_bar, max_iters, fmax_template):
    return {
        "eps_bar": eps_bar,
        "max_iters": max_iters,
        "template": None if opts.template is None else np.asarray(opts.template).tolist(),
        "fmax_template": None if fmax_template is None else np.asarray(fmax_template).tolist(),
        "containment_tol": opts.containment_tol,
        "solver": {k: getattr(opts.solver, k) for k in
                   ("int_tol", "gap_abs", "lp_tol", "max_nodes", "time_limit", "branching")},
    }


def assemble_certificate(sys: PwaSystem, net: MaxoutNet, opts: ReachOptions | None = None,
                         eps_bar: float = 1e-3, max_iters: int = 200,
                         alpha_tol: float = 0.0, fmax_template=None,
                         stride: int = 1) -> Certificate:
    """Run the full pipeline and re-validate every certificate invariant.

    ``fmax_template`` optionally uses a different template for the safe-set
    iteration than for the terminal-set iteration.
    """
    opts = opts or ReachOptions()
    if opts.log is None:
        opts.log = []
    cert = Certificate(eps_bar=eps_bar, config=_config_echo(opts, eps_bar, max_iters, fmax_template))
    cert.support_log = opts.log
    cert.config["alpha_tol"] = alpha_tol

    cert.inputs_verified = verify_nn_input_constraints(net, sys.X, sys.U, opts)
    if not cert.inputs_verified:
        cert.notes.append("controller violates the input constraints on X")
        return cert

    f_opts = opts
    if fmax_template is not None:
        f_opts = ReachOptions(np.asarray(fmax_template, dtype=float), opts.solver,
                              opts.containment_tol, opts.log)
    history: list = []
    try:
        f_max, k_hat, r1 = compute_f_max(sys, net, f_opts, max_iters, history)
    except CertificationError as exc:
        cert.f_sequence = history
        exc.certificate = cert
        raise
    cert.f_max, cert.f_max_iterations, cert.f_sequence = f_max, k_hat, history
    first = r1 if fmax_template is None else None
    try:
        r_min, k_bar, seq = compute_r_min(sys, net, f_max, eps_bar, opts, max_iters, first, stride)
    except CertificationError as exc:
        cert.r_sequence = exc.last or []
        exc.certificate = cert
        raise
    cert.r_min, cert.k_bar, cert.r_sequence = r_min, k_bar, seq

    _validate(sys, net, cert, opts)

    cert.alpha = alpha_margin(seq[k_bar - 1], seq[k_bar])
    if cert.alpha > 1.0 + alpha_tol:
        try:
            cert.delta_max = delta_max(r_min, cert.alpha)
            cert.stability_verdict = "asymptotically_stable"
        except OriginNotInterior:
            cert.stability_verdict = "alpha_condition_failed"
            cert.notes.append("terminal set does not contain the origin in its interior")
    else:
        cert.stability_verdict = "alpha_condition_failed"
    if sys.provenance == "error_bound":
        cert.uub_verdict = "uub_certified"
    return cert


def _validate(sys, net, cert: Certificate, opts: ReachOptions):
    tol = opts.containment_tol
    if not contains(sys.X, cert.f_max, tol):
        raise CertificationError("F_max is not inside X", cert)
    ok, supports = check_rpi(sys, net, cert.f_max, opts)
    cert.rpi_supports = supports
    if not ok:
        raise CertificationError("F_max failed the RPI check", cert)
    if not contains(cert.f_max, cert.r_min, tol):
        raise CertificationError("R_min is not inside F_max", cert)
    # independent recomputation of both sides of the termination test
    holds, S, RS = termination_holds(sys, net, cert.r_min, cert.eps_bar, opts)
    cert.termination_scaled, cert.termination_image = S, RS
    if not holds:
        raise CertificationError("termination test failed on re-verification", cert)


def recheck_certificate(cert: Certificate, tol: float | None = None) -> dict:
    """Re-run the containment tests from stored support values (LPs only)."""
    tol = cert.config.get("containment_tol", 1e-7) if tol is None else tol
    checks = {}
    checks["rpi"] = bool(np.all(np.asarray(cert.rpi_supports) <= cert.f_max.b + tol))
    checks["r_min_in_f_max"] = contains(cert.f_max, cert.r_min, tol)
    checks["termination"] = contains(cert.termination_image, cert.termination_scaled, tol)
    if cert.r_sequence and cert.k_bar >= 1:
        alpha = alpha_margin(cert.r_sequence[cert.k_bar - 1], cert.r_sequence[cert.k_bar])
        checks["alpha"] = abs(alpha - cert.alpha) <= 1e-9 * max(1.0, abs(alpha))
        if cert.stable:
            checks["alpha"] = checks["alpha"] and alpha > 1.0 + cert.config.get("alpha_tol", 0.0)
    return checks
