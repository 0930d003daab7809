"""Dense bounded-variable primal simplex (two phases, full tableau).

Works on the standard form  min c x  s.t.  A x = b,  lb <= x <= ub  obtained
from a :class:`MilpModel` by adding one slack per inequality row. Nonbasic
variables sit at a finite bound, or at zero when free.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import INF, MilpModel, NumericalFailure, Sense, SolveResult, SolverConfig, Status

PIVOT_TOL = 1e-9
TINY_PIVOT = 1e-12
REFACTOR_EVERY = 60
STALL_LIMIT = 40


class StandardForm:
    """Equality form of a model; columns [structural | slacks]."""

    def __init__(self, model: MilpModel):
        A, senses, b, c, lb, ub, is_bin = model.dense()
        m, nv = A.shape
        slack_cols, slack_lb, slack_ub = [], [], []
        for r, sense in enumerate(senses):
            if sense == Sense.LE:
                slack_cols.append((r, 1.0))
            elif sense == Sense.GE:
                slack_cols.append((r, -1.0))
            else:
                continue
            slack_lb.append(0.0)
            slack_ub.append(INF)
        self.slack_rows = slack_cols
        S = np.zeros((m, len(slack_cols)))
        for k, (r, sgn) in enumerate(slack_cols):
            S[r, k] = sgn
        self.A = np.hstack([A, S])
        self.b = b
        self.senses = senses
        self.n_struct = nv
        self.sign = -1.0 if model.maximize else 1.0
        self.c = np.concatenate([self.sign * c, np.zeros(len(slack_cols))])
        self.lb = np.concatenate([lb, slack_lb])
        self.ub = np.concatenate([ub, slack_ub])
        self.is_binary = is_bin

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LPOutcome:
    status: Status
    x: np.ndarray | None  # structural part only
    objective: float  # in the model's own direction
    iterations: int = 0
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None


class _Tableau:
    def __init__(self, A_full, b, lb, ub, x, basis, tol):
        self.A_full = A_full
        self.b = b
        self.lb = lb
        self.ub = ub
        self.x = x
        self.basis = basis
        self.tol = tol
        self.m, self.ncol = A_full.shape
        self.is_basic = np.zeros(self.ncol, dtype=bool)
        self.is_basic[basis] = True
        self.T = None
        self.d = None
        self.iterations = 0
        self.small_pivots = 0

    def refactor(self, cost):
        B = self.A_full[:, self.basis]
        self.T = np.linalg.solve(B, self.A_full)
        xn = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = np.linalg.solve(B, self.b - self.A_full @ xn)
        self.d = cost - cost[self.basis] @ self.T
        self.d[self.basis] = 0.0

    def run(self, cost, max_iter) -> Status:
        self.refactor(cost)
        tol = self.tol
        bland = False
        best_obj = float(cost @ self.x)
        stall = 0
        since_refactor = 0
        lb, ub, x = self.lb, self.ub, self.x
        while True:
            if self.iterations >= max_iter:
                raise NumericalFailure(f"simplex exceeded {max_iter} iterations")
            d = self.d
            nonbasic = ~self.is_basic
            inc = nonbasic & (x < ub - tol) & (d < -tol)
            dec = nonbasic & (x > lb + tol) & (d > tol)
            elig = inc | dec
            if not elig.any():
                return Status.OPTIMAL
            if bland:
                j = int(np.flatnonzero(elig)[0])
            else:
                j = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            direction = 1.0 if inc[j] else -1.0

            alpha = direction * self.T[:, j]
            xb = x[self.basis]
            lbb, ubb = lb[self.basis], ub[self.basis]
            ratios = np.full(self.m, INF)
            pos = alpha > PIVOT_TOL
            neg = alpha < -PIVOT_TOL
            with np.errstate(invalid="ignore"):
                ratios[pos] = (xb[pos] - lbb[pos]) / alpha[pos]
                ratios[neg] = (ubb[neg] - xb[neg]) / (-alpha[neg])
            np.maximum(ratios, 0.0, out=ratios)
            t_row = ratios.min() if self.m else INF
            t_flip = ub[j] - lb[j]

            if t_row == INF and t_flip == INF:
                return Status.UNBOUNDED

            self.iterations += 1
            if t_flip <= t_row:
                x[j] = ub[j] if direction > 0 else lb[j]
                x[self.basis] = xb - t_flip * alpha
            else:
                ties = np.flatnonzero(ratios <= t_row + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                piv = self.T[r, j]
                if abs(piv) < TINY_PIVOT:
                    self.small_pivots += 1
                    if self.small_pivots > 5:
                        raise NumericalFailure("repeated tiny pivots")
                t = ratios[r]
                leaving = self.basis[r]
                x[self.basis] = xb - t * alpha
                x[j] += direction * t
                x[leaving] = lbb[r] if alpha[r] > 0 else ubb[r]
                prow = self.T[r] / piv
                col = self.T[:, j].copy()
                self.T -= np.outer(col, prow)
                self.T[r] = prow
                self.d = self.d - self.d[j] * prow
                self.basis[r] = j
                self.is_basic[leaving] = False
                self.is_basic[j] = True
                since_refactor += 1
                if since_refactor >= REFACTOR_EVERY:
                    self.refactor(cost)
                    since_refactor = 0

            obj = float(cost @ x)
            if obj < best_obj - 1e-12 * (1.0 + abs(best_obj)):
                best_obj = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True


def solve_standard(sf: StandardForm, lb=None, ub=None, tol: float = 1e-9,
                   want_duals: bool = False) -> LPOutcome:
    """Solve the LP relaxation of ``sf`` with structural bounds ``lb``/``ub``."""
    A, b = sf.A, sf.b
    m, N = A.shape
    lb_full = sf.lb.copy()
    ub_full = sf.ub.copy()
    if lb is not None:
        lb_full[: sf.n_struct] = lb
    if ub is not None:
        ub_full[: sf.n_struct] = ub
    if np.any(lb_full > ub_full + tol):
        return LPOutcome(Status.INFEASIBLE, None, float("nan"))

    x = np.where(np.isfinite(lb_full), lb_full, np.where(np.isfinite(ub_full), ub_full, 0.0))
    resid = b - A @ x
    # crash basis: a slack is basic wherever it absorbs the residual with the
    # right sign; the remaining rows get an artificial column
    basis = np.full(m, -1)
    for col, (r, sgn) in zip(range(sf.n_struct, N), sf.slack_rows):
        val = sgn * resid[r]
        if val >= 0:
            basis[r] = col
            x[col] = val
    art_rows = np.flatnonzero(basis < 0)
    n_art = art_rows.size
    art = np.zeros((m, n_art))
    art[art_rows, np.arange(n_art)] = np.where(resid[art_rows] >= 0, 1.0, -1.0)
    basis[art_rows] = N + np.arange(n_art)
    A_full = np.hstack([A, art])
    x_full = np.concatenate([x, np.abs(resid[art_rows])])
    lo = np.concatenate([lb_full, np.zeros(n_art)])
    hi = np.concatenate([ub_full, np.full(n_art, INF)])
    max_iter = 50 * (m + N) + 1000

    tab = _Tableau(A_full, b, lo, hi, x_full, basis, tol)
    if n_art:
        phase1 = np.concatenate([np.zeros(N), np.ones(n_art)])
        tab.run(phase1, max_iter)
        tab.refactor(phase1)
        if float(np.sum(np.abs(tab.x[N:]))) > tol * max(1.0, np.abs(b).max(initial=0.0)):
            return LPOutcome(Status.INFEASIBLE, None, float("nan"), tab.iterations)
    # artificials are pinned at zero from here on
    tab.lb[N:] = 0.0
    tab.ub[N:] = 0.0
    tab.x[N:] = np.where(tab.is_basic[N:], tab.x[N:], 0.0)
    cost = np.concatenate([sf.c, np.zeros(n_art)])
    status = tab.run(cost, max_iter)
    if status == Status.UNBOUNDED:
        return LPOutcome(Status.UNBOUNDED, None, sf.sign * -INF, tab.iterations)
    tab.refactor(cost)
    xs = tab.x[:N].copy()
    # clean bound noise on the structural part
    xs = np.clip(xs, lb_full, ub_full)
    obj = sf.sign * float(sf.c @ xs)
    out = LPOutcome(Status.OPTIMAL, xs[: sf.n_struct], obj, tab.iterations)
    if want_duals:
        B = tab.A_full[:, tab.basis]
        y = np.linalg.solve(B.T, cost[tab.basis])
        out.duals = sf.sign * y
        out.reduced_costs = sf.sign * (sf.c[: sf.n_struct] - A[:, : sf.n_struct].T @ y)
    return out


def lp_solve(model: MilpModel, config: SolverConfig | None = None) -> SolveResult:
    """Solve the LP relaxation of ``model`` (binaries relaxed to [0, 1])."""
    config = config or SolverConfig()
    sf = StandardForm(model)
    out = solve_standard(sf, tol=config.lp_tol, want_duals=True)
    assignment = out.x if out.x is not None else np.full(model.n_vars, np.nan)
    return SolveResult(out.status, out.objective, out.objective, assignment,
                       node_count=1, duals=out.duals, reduced_costs=out.reduced_costs)
