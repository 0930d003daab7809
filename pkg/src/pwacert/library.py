"""Built-in systems and controllers used by the CLI, scripts and tests."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_discrete_are

from .geometry import Box, HPolyhedron
from .sysmodel import MaxoutNet, PwaSystem, Region, sat_linear_to_maxout, zero_net


def inf_ball(n: int, radius: float) -> HPolyhedron:
    return Box(-radius * np.ones(n), radius * np.ones(n)).to_polyhedron()


def _product(P: HPolyhedron, Q: HPolyhedron) -> HPolyhedron:
    A = np.block([[P.A, np.zeros((P.n_facets, Q.dim))],
                  [np.zeros((Q.n_facets, P.dim)), Q.A]])
    return HPolyhedron(A, np.concatenate([P.b, Q.b]))


def scalar_system(a: float = 0.5, x_max: float = 1.0, d_max: float = 0.1) -> PwaSystem:
    """x+ = a x + d on X = [-1, 1] with U = {0} and |d| <= d_max."""
    X = inf_ball(1, x_max)
    U = inf_ball(1, 0.0)
    region = Region([[a]], [[0.0]], [0.0], _product(X, U), inf_ball(1, d_max))
    return PwaSystem([region], X, U, name="scalar")


def scalar_controller() -> MaxoutNet:
    return zero_net(1, 1)


MIGNONE_A = [
    [[-0.04, -0.461], [-0.139, 0.341]],
    [[0.936, 0.323], [0.788, -0.049]],
    [[-0.857, 0.815], [0.491, 0.62]],
    [[-0.022, 0.644], [0.758, 0.271]],
]
MIGNONE_H = [
    [[-1.0, 0.0], [0.0, -1.0]],
    [[-1.0, 0.0], [0.0, 1.0]],
    [[1.0, 0.0], [0.0, 1.0]],
    [[1.0, 0.0], [0.0, -1.0]],
]


def quadrant_system(d_max: float = 0.15, x_max: float = 10.0, u_max: float = 1.0) -> PwaSystem:
    """Four-quadrant planar PWA system with B = (1, 0)^T.

    Region i is {H_i x <= 0} intersected with ||x||_inf <= x_max and
    |u| <= u_max, so region 1 is the closed first quadrant.
    """
    X = inf_ball(2, x_max)
    U = inf_ball(1, u_max)
    XU = _product(X, U)
    regions = []
    for A, H in zip(MIGNONE_A, MIGNONE_H):
        quad = HPolyhedron(np.hstack([np.array(H), np.zeros((2, 1))]), np.zeros(2))
        guard = HPolyhedron(np.vstack([quad.A, XU.A]), np.concatenate([quad.b, XU.b]))
        regions.append(Region(A, [[1.0], [0.0]], [0.0, 0.0], guard, inf_ball(2, d_max)))
    return PwaSystem(regions, X, U, name="quadrant")


def dlqr(A, B, Q, R) -> np.ndarray:
    """Gain K of u = K x minimizing sum x'Qx + u'Ru."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    P = solve_discrete_are(A, B, Q, R)
    return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


# LQR (Q = I, R = 1) designed on the third mode; of the four per-mode designs
# it is the one whose certificate converges fastest, see
# scripts/tune_quadrant_gain.py.
QUADRANT_LQR_MODE = 2


def quadrant_gain(mode: int = QUADRANT_LQR_MODE) -> np.ndarray:
    B = np.array([[1.0], [0.0]])
    return dlqr(np.array(MIGNONE_A[mode]), B, np.eye(2), np.eye(1)).reshape(-1)


def quadrant_controller(K=None, u_max: float = 1.0) -> MaxoutNet:
    """Saturated linear feedback clip(K x, -u_max, u_max) as a maxout network."""
    K = quadrant_gain() if K is None else np.asarray(K, dtype=float)
    return sat_linear_to_maxout(K, -u_max, u_max)


# nonlinear double integrator -------------------------------------------------

DI_A = np.array([[1.0, 1.0], [0.0, 1.0]])
DI_B = np.array([0.5, 1.0])


def nonlinear_double_integrator(x, u) -> np.ndarray:
    """x+ = A x + B u + 0.025 (x'x) (1, 1)^T, vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    quad = 0.025 * np.sum(x * x, axis=-1, keepdims=True)
    lin = x @ DI_A.T + u.reshape(x.shape[:-1] + (1,)) * DI_B
    return lin + quad


def double_integrator_domain(x_max: float = 6.0, u_max: float = 2.0):
    """(X, U) = (||x||_inf <= x_max, |u| <= u_max)."""
    return inf_ball(2, x_max), inf_ball(1, u_max)


NAMED_DYNAMICS = {"nonlinear_double_integrator": nonlinear_double_integrator}


def chessboard_regions(centers=(-4.0, 0.0, 4.0), half_width: float = 2.0,
                       u_max: float = 2.0) -> list:
    """Guards {||x - c||_inf <= half_width, |u| <= u_max} over a grid of centers."""
    regions = []
    for c1 in centers:
        for c2 in centers:
            c = np.array([c1, c2])
            box = Box(np.concatenate([c - half_width, [-u_max]]),
                      np.concatenate([c + half_width, [u_max]]))
            regions.append(box.to_polyhedron())
    return regions


def double_integrator_controller(u_max: float = 2.0, Q=None, R=None) -> MaxoutNet:
    Q = np.eye(2) if Q is None else Q
    R = np.eye(1) if R is None else np.atleast_2d(R)
    K = dlqr(DI_A, DI_B.reshape(2, 1), Q, R)
    return sat_linear_to_maxout(K.reshape(-1), -u_max, u_max)
