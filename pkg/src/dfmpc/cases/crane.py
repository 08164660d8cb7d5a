"""Overhead crane: steer the cart position while bounding the cable swing.

State ``x = (r, r_dot, theta, theta_dot)``, scalar force input. ``ode.w``
perturbs the load mass and the two friction coefficients.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..parametrization import compute_R, profile_from_R
from ..problem import OcpParams, OdeParams, ProblemDefinition, Trajectory, UParamParams

LOAD_MASS = 200.0
CART_MASS = 1500.0
FRICTION_THETA = 1e5
FRICTION_R = 10.0
CABLE_LENGTH = 100.0
# as printed in the reference script; override with ode.gravity
GRAVITY = 0.81


def crane_constants(ode: OdeParams) -> np.ndarray:
    """``(m, M, frot_theta, frot_r, L, g)`` including the ``w`` perturbation."""
    w = np.zeros(3)
    given = np.asarray(ode.get("w", np.zeros(0)), dtype=float)
    w[: min(3, given.size)] = given[:3]
    return np.array([
        LOAD_MASS * (1 + w[0]),
        CART_MASS,
        FRICTION_THETA * (1 + w[1]),
        FRICTION_R * (1 + w[2]),
        CABLE_LENGTH,
        float(ode.get("gravity", GRAVITY)),
    ])


def crane_ode(x, u, ode: OdeParams) -> np.ndarray:
    m, M, frot_theta, frot_r, L, g = crane_constants(ode)
    u = float(np.ravel(u)[0])
    th, thp = x[2], x[3]
    c, s = math.cos(th), math.sin(th)
    return np.array([
        x[1],
        (u + m * g * c * s + m * L * s * thp**2 - frot_r * x[1]) / (M + m * (1 - c**2)),
        x[3],
        (-u * c - m * L * thp**2 * c * s - (M - m) * g * s - frot_theta * thp) / ((M + m * s**2) * L),
    ])


def crane_ocp(traj: Trajectory, ode: OdeParams, up: UParamParams, ocp: OcpParams):
    xx, uu = traj.xx, traj.uu[:, 0]
    Q = np.asarray(ocp.Q, dtype=float)
    xd = np.array([ocp.rd, 0.0, 0.0, 0.0])
    J = 0.0
    for i in range(int(up.Np)):
        du = uu[0] - ode.u0[0] if i == 0 else uu[i] - uu[i - 1]
        e = xx[i + 1] - xd
        J += e @ Q @ e + ocp.R * uu[i] ** 2 + ocp.M * du**2
    h = (
        np.max(xx[:, 2] - ocp.theta_max),
        np.max(-xx[:, 2] - ocp.theta_max),
        np.max(xx[:, 3] - ocp.thetap_max),
        np.max(-xx[:, 3] - ocp.thetap_max),
    )
    return float(J), float(max(h))


@njit(cache=True)
def _rhs(x, u, c):
    m, M, frot_theta, frot_r, L, g = c[0], c[1], c[2], c[3], c[4], c[5]
    th, thp = x[2], x[3]
    co, s = math.cos(th), math.sin(th)
    out = np.empty(4)
    out[0] = x[1]
    out[1] = (u + m * g * co * s + m * L * s * thp**2 - frot_r * x[1]) / (M + m * (1 - co**2))
    out[2] = x[3]
    out[3] = (-u * co - m * L * thp**2 * co * s - (M - m) * g * s - frot_theta * thp) / ((M + m * s**2) * L)
    return out


@njit(cache=True)
def _step(x, u, tau, order, c):
    if order == 1:
        return x + tau * _rhs(x, u, c)
    if order == 2:
        k1 = _rhs(x, u, c)
        return x + tau * _rhs(x + 0.5 * tau * k1, u, c)
    k1 = _rhs(x, u, c)
    k2 = _rhs(x + 0.5 * tau * k1, u, c)
    k3 = _rhs(x + 0.5 * tau * k2, u, c)
    k4 = _rhs(x + tau * k3, u, c)
    return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _evaluate(p, R, x0, u0, tau, order, c, Q, Rw, Mw, rd, th_max, thp_max):
    uu = R @ p
    x = x0.copy()
    g = max(x[2] - th_max, -x[2] - th_max, x[3] - thp_max, -x[3] - thp_max)
    J = 0.0
    xd = np.zeros(4)
    xd[0] = rd
    for i in range(uu.size):
        x = _step(x, uu[i], tau, order, c)
        for k in range(4):
            if not math.isfinite(x[k]):
                return math.inf, math.inf
        du = uu[0] - u0 if i == 0 else uu[i] - uu[i - 1]
        e = x - xd
        J += e @ (Q @ e) + Rw * uu[i] ** 2 + Mw * du**2
        g = max(g, x[2] - th_max, -x[2] - th_max, x[3] - thp_max, -x[3] - thp_max)
    return J, g


def compiled_crane(ode: OdeParams, up: UParamParams, ocp: OcpParams):
    """Compiled ``p -> (J, g)`` equal to profile + rollout + :func:`crane_ocp`."""
    if int(up.nu) != 1:
        raise ValueError("the compiled crane evaluator supports nu = 1 only")
    if ode.rk_order not in (1, 2, 4):
        raise ValueError(f"rk_order must be one of (1, 2, 4), got {ode.rk_order!r}")
    R = np.ascontiguousarray(up.R, dtype=float)
    x0 = np.array(ode.x0, dtype=float)
    args = (
        R, x0, float(ode.u0[0]), float(ode.tau), int(ode.rk_order), crane_constants(ode),
        np.ascontiguousarray(ocp.Q, dtype=float), float(ocp.R), float(ocp.M), float(ocp.rd),
        float(ocp.theta_max), float(ocp.thetap_max),
    )

    def evaluate(p):
        return _evaluate(np.asarray(p, dtype=float), *args)

    return evaluate


def make_crane() -> ProblemDefinition:
    ode = OdeParams(tau=0.5, rk_order=4, x0=[0, 0, 0, 0], u0=0, w=[1, -0.2, -0.2])
    Ifree = np.array([1, 2, 3, 10])
    R = compute_R(Ifree, 20, 1)
    n_p = R.shape[1]
    uparam = UParamParams(
        nu=1, Np=20, Ifree=Ifree, R=R, np=n_p,
        p=np.zeros(n_p), pmin=-30 * np.ones(n_p), pmax=30 * np.ones(n_p),
    )
    ocp = OcpParams(
        Q=np.diag([1e8, 1e4, 1.0, 1.0]), R=1e2, M=1e4, rd=1.0,
        theta_max=0.0035, thetap_max=2 * math.pi / 30,
    )
    return ProblemDefinition(
        crane_ode, profile_from_R, crane_ocp, ode, uparam, ocp,
        compiled=compiled_crane, name="crane",
    )


def crane_setpoint(i: int, tt: np.ndarray, engine) -> None:
    """Cart setpoint +1, then -3, then +3 over thirds of the run."""
    t, T = tt[i], tt[-1]
    if t <= T / 3:
        engine.ocp.rd = 1.0
    elif t <= 2 * T / 3:
        engine.ocp.rd = -3.0
    else:
        engine.ocp.rd = 3.0
