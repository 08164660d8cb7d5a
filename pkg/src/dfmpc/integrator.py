"""Fixed-step explicit Runge-Kutta integration (orders 1, 2 and 4).

The control is held constant over each step (zero-order hold).
"""

from __future__ import annotations

import numpy as np

from .problem import OdeParams, OdeRhs, Trajectory

RK_ORDERS = (1, 2, 4)


class IntegrationError(ValueError):
    pass


class NonFiniteStateError(ArithmeticError):
    """The integrated state left the finite floats."""


def _f(rhs: OdeRhs, x: np.ndarray, u: np.ndarray, ode: OdeParams) -> np.ndarray:
    return np.asarray(rhs(x, u, ode), dtype=float).reshape(x.shape)


def one_step(x, u, ode: OdeParams, rhs: OdeRhs) -> np.ndarray:
    """Advance the state by one sampling period ``ode.tau``.

    Order 1 is explicit Euler, order 2 the explicit midpoint rule and order 4
    the classical four-stage scheme; order ``k`` calls ``rhs`` exactly ``k``
    times.
    """
    x = np.asarray(x, dtype=float).ravel()
    u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
    tau = ode.tau
    order = ode.rk_order
    if order == 1:
        xp = x + tau * _f(rhs, x, u, ode)
    elif order == 2:
        k1 = _f(rhs, x, u, ode)
        xp = x + tau * _f(rhs, x + 0.5 * tau * k1, u, ode)
    elif order == 4:
        k1 = _f(rhs, x, u, ode)
        k2 = _f(rhs, x + 0.5 * tau * k1, u, ode)
        k3 = _f(rhs, x + 0.5 * tau * k2, u, ode)
        k4 = _f(rhs, x + tau * k3, u, ode)
        xp = x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise IntegrationError(f"rk_order must be one of {RK_ORDERS}, got {order!r}")
    if not np.all(np.isfinite(xp)):
        raise NonFiniteStateError("non-finite state")
    return xp


def rollout(x0, uu, ode: OdeParams, rhs: OdeRhs) -> Trajectory:
    """Integrate from ``x0`` under the ``Np x nu`` control matrix ``uu``."""
    x0 = np.asarray(x0, dtype=float).ravel()
    uu = np.asarray(uu, dtype=float)
    if uu.ndim == 1:
        uu = uu[:, None]
    xx = np.empty((uu.shape[0] + 1, x0.size))
    xx[0] = x0
    for k in range(uu.shape[0]):
        xx[k + 1] = one_step(xx[k], uu[k], ode, rhs)
    return Trajectory(xx=xx, uu=uu)
