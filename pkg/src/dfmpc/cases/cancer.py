"""Combined chemo/immunotherapy with alternating treatment and rest windows.

States: effector-immune cells, circulating lymphocytes, drug concentration,
tumor cells. Inputs: effector-cell injection rate and drug injection rate.
Time unit is the day.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..parametrization import treatment_rest_profile
from ..problem import OcpParams, OdeParams, ProblemDefinition, Trajectory, UParamParams

CONSTANTS = dict(
    a=25e-2, b=1.02e-14, c1=4.41e-10, f=4.12e-2, g=1.5e-2, r=4e-2, h=2.02e1,
    k2=6e-1, k3=6e-1, k1=8e-1, p=2e-11, s1=1.2e7, s2=7.5e6, delta=1.2e-2, gam=9e-1,
)
# f is part of the published constant set but enters none of the equations
_ORDER = ("a", "b", "c1", "g", "r", "h", "k1", "k2", "k3", "p", "s1", "s2", "delta", "gam")


def cancer_ode(x, u, ode: OdeParams) -> np.ndarray:
    u = np.ravel(u)
    return np.array([
        ode.g * x[3] * x[0] / (ode.h + x[3]) - ode.r * x[0] - ode.p * x[0] * x[3]
        - ode.k1 * x[0] * x[2] + ode.s1 * u[0],
        -ode.delta * x[1] - ode.k2 * x[2] * x[1] + ode.s2,
        -ode.gam * x[2] + u[1],
        ode.a * x[3] * (1 - ode.b * x[3]) - ode.c1 * x[0] * x[3] - ode.k3 * x[2] * x[3],
    ])


def cancer_ocp(traj: Trajectory, ode: OdeParams, up: UParamParams, ocp: OcpParams):
    """Terminal tumor size while above ``threshold``, total drug once below.

    The constraint keeps the lymphocytes above ``rho`` at every instant.
    """
    x4_end = traj.xx[-1, 3]
    if x4_end > ocp.threshold:
        J = x4_end
    else:
        J = float(np.sum(traj.uu))
    g = np.max(ocp.rho - traj.xx[:, 1])
    return float(J), float(g)


@njit(cache=True)
def _rhs(x, u0, u1, c):
    a, b, c1, g, r, h, k1, k2, k3, p, s1, s2, delta, gam = (
        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9], c[10], c[11], c[12], c[13]
    )
    out = np.empty(4)
    out[0] = g * x[3] * x[0] / (h + x[3]) - r * x[0] - p * x[0] * x[3] - k1 * x[0] * x[2] + s1 * u0
    out[1] = -delta * x[1] - k2 * x[2] * x[1] + s2
    out[2] = -gam * x[2] + u1
    out[3] = a * x[3] * (1 - b * x[3]) - c1 * x[0] * x[3] - k3 * x[2] * x[3]
    return out


@njit(cache=True)
def _step(x, u0, u1, tau, order, c):
    if order == 1:
        return x + tau * _rhs(x, u0, u1, c)
    if order == 2:
        k1 = _rhs(x, u0, u1, c)
        return x + tau * _rhs(x + 0.5 * tau * k1, u0, u1, c)
    k1 = _rhs(x, u0, u1, c)
    k2 = _rhs(x + 0.5 * tau * k1, u0, u1, c)
    k3 = _rhs(x + 0.5 * tau * k2, u0, u1, c)
    k4 = _rhs(x + tau * k3, u0, u1, c)
    return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _profile(p, N1, N, i):
    P = p.reshape((N1, 2)).T
    U = np.zeros((2, N))
    if i == 1:
        U[:, :N1] = P
    elif i <= N1:
        U[:, : N1 - i + 1] = P[:, : N1 - i + 1]
        U[:, N - i + 1 :] = P[:, N1 - i + 1 :]
    else:
        U[:, N - i + 1 : N - i + 1 + N1] = P
    return U


@njit(cache=True)
def _evaluate(p, N1, N, index, x0, tau, order, c, rho, threshold):
    U = _profile(p, N1, N, index)
    x = x0.copy()
    g = rho - x[1]
    for k in range(N):
        x = _step(x, U[0, k], U[1, k], tau, order, c)
        for j in range(4):
            if not math.isfinite(x[j]):
                return math.inf, math.inf
        g = max(g, rho - x[1])
    if x[3] > threshold:
        J = x[3]
    else:
        J = 0.0
        for k in range(N):
            J += U[0, k] + U[1, k]
    return J, g


def compiled_cancer(ode: OdeParams, up: UParamParams, ocp: OcpParams):
    """Compiled ``p -> (J, g)`` equal to profile + rollout + :func:`cancer_ocp`."""
    if int(up.nu) != 2:
        raise ValueError("the compiled cancer evaluator expects nu = 2")
    if ode.rk_order not in (1, 2, 4):
        raise ValueError(f"rk_order must be one of (1, 2, 4), got {ode.rk_order!r}")
    N1, N, index = int(up.N1), int(up.Np), int(up.index)
    if not 1 <= index <= N:
        raise ValueError(f"index must lie within [1, {N}], got {index}")
    c = np.array([float(ode.get(k)) for k in _ORDER])
    args = (
        N1, N, index, np.array(ode.x0, dtype=float), float(ode.tau), int(ode.rk_order), c,
        float(ocp.rho), float(ocp.threshold),
    )

    def evaluate(p):
        return _evaluate(np.ascontiguousarray(p, dtype=float), *args)

    return evaluate


def make_cancer(
    N1_days: float = 5.0, N2_days: float = 4.0, umax=(10.0, 1.0), tau: float = 0.25
) -> ProblemDefinition:
    """Treatment of ``N1_days`` followed by ``N2_days`` of rest, repeated."""
    ode = OdeParams(tau=tau, rk_order=4, x0=[5e8, 1e9, 0, 1e9], u0=[0, 0], **CONSTANTS)
    N1 = int(N1_days / tau)
    N2 = int(N2_days / tau)
    umax = np.asarray(umax, dtype=float)
    n_p = 2 * N1
    uparam = UParamParams(
        nu=2, N1=N1, N2=N2, umax=umax, Np=N1 + N2, index=1, np=n_p,
        p=np.zeros(n_p), pmin=np.zeros(n_p), pmax=np.tile(umax, N1),
    )
    ocp = OcpParams(rho=5e7, threshold=1e-40)
    return ProblemDefinition(
        cancer_ode, treatment_rest_profile, cancer_ocp, ode, uparam, ocp,
        compiled=compiled_cancer, name="cancer",
    )


def advance_index(i: int, tt: np.ndarray, engine) -> None:
    """Move the cycle position one sample forward, wrapping after ``Np``.

    Step 0 keeps the initial position.
    """
    if i == 0:
        return
    up = engine.uparam
    up.index = 1 if up.index == up.Np else up.index + 1
