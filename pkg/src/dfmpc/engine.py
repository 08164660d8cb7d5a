"""Receding-horizon feedback built from a validated problem definition."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .integrator import NonFiniteStateError, rollout
from .problem import (
    DimensionChangeError,
    OcpParams,
    OdeParams,
    ProblemDefinition,
    UParamParams,
    validate_problem,
)
from .solver import SolverState, TrustRegionConfig, estimate_teval, solve, update_trust_region_parameters

FROZEN_UPARAM_FIELDS = ("Np", "np")


@dataclass
class EngineParam:
    """Mutable controller state shared across ``mpc_step`` calls.

    ``ode``, ``uparam`` and ``ocp`` are the engine's own copies; the engine's
    ``ode.w`` is zero so predictions use the nominal model. Every field may be
    changed between calls except ``uparam.Np`` and ``uparam.np``.
    """

    ode: OdeParams
    uparam: UParamParams
    ocp: OcpParams
    Nev: int
    trust: TrustRegionConfig
    warm_p: np.ndarray
    compiled: bool = True
    dims: tuple = field(default=(0, 0), repr=False)

    @property
    def n_p(self) -> int:
        return self.dims[1]

    def update_trust_region_parameters(self, b_plus, b_minus, alpha_min=None) -> None:
        self.trust = update_trust_region_parameters(
            self.trust, b_plus, b_minus, alpha_min, n_p=self.n_p
        )

    def check_dims(self) -> None:
        now = (int(self.uparam.Np), int(self.uparam.np))
        if now != self.dims:
            raise DimensionChangeError(
                f"(Np, np) changed from {self.dims} to {now}; rebuild the engine"
            )


@dataclass
class MpcResult:
    u: np.ndarray
    u_sol: np.ndarray
    t_exec: float
    n_eval: int
    state: SolverState

    @property
    def profile(self) -> np.ndarray:
        """``u_sol`` as an ``Np x nu`` matrix."""
        return self.u_sol.reshape(-1, self.u.size)


def nominal_copy(ode: OdeParams) -> OdeParams:
    nominal = ode.copy()
    nominal.w = np.zeros_like(np.asarray(ode.get("w", np.zeros(0)), dtype=float))
    return nominal


def create_engine(
    defn: ProblemDefinition,
    Nev: int = 500,
    trust: Optional[TrustRegionConfig] = None,
    mode=None,
    teval_samples: int = 100,
) -> "tuple[EngineParam, float]":
    """Build the engine state and measure the cost of one evaluation.

    ``mode`` exists for call-compatibility with build-on-demand workflows and
    is ignored. Raises :class:`~dfmpc.problem.ProblemValidationError` when the
    definition does not validate.
    """
    validate_problem(defn).raise_if_failed()
    if Nev < 1:
        raise ValueError("Nev must be >= 1")
    uparam = defn.uparam.copy()
    uparam.freeze(*FROZEN_UPARAM_FIELDS)
    param = EngineParam(
        ode=nominal_copy(defn.ode),
        uparam=uparam,
        ocp=defn.ocp.copy(),
        Nev=int(Nev),
        trust=trust or TrustRegionConfig(),
        warm_p=defn.uparam.p.copy(),
        compiled=defn.compiled is not None,
        dims=(int(defn.uparam.Np), int(defn.uparam.np)),
    )
    evaluator = make_evaluator(param, defn)
    evaluator(param.warm_p.copy())  # warm-up: keeps one-off compilation out of teval
    teval = estimate_teval(evaluator, param.warm_p, K=teval_samples)
    return param, teval


def evaluate_candidate(p, x0, param: EngineParam, defn: ProblemDefinition) -> "tuple[float, float]":
    """Cost and constraint of ``p`` predicted from ``x0`` with the nominal model.

    ``x0`` is installed as ``param.ode.x0`` so state-dependent profiles see
    it. A rollout that leaves the finite floats yields ``(inf, inf)``.
    """
    if x0 is not None:
        param.ode.x0 = x0
    return _generic_eval(np.asarray(p, dtype=float), param, defn)


def _generic_eval(p, param: EngineParam, defn: ProblemDefinition):
    ode, up = param.ode, param.uparam
    uu = np.asarray(defn.control_profile(p, ode, up), dtype=float)
    try:
        traj = rollout(ode.x0, uu, ode, defn.ode_rhs)
    except NonFiniteStateError:
        return math.inf, math.inf
    J, g = defn.cost_constraints(traj, ode, up, param.ocp)
    return float(J), float(g)


def make_evaluator(param: EngineParam, defn: ProblemDefinition):
    """``p -> (J, g)`` for the current engine state (compiled when available)."""
    if param.compiled and defn.compiled is not None:
        return defn.compiled(param.ode, param.uparam, param.ocp)
    return lambda p: _generic_eval(p, param, defn)


def mpc_step(
    x,
    param: EngineParam,
    defn: ProblemDefinition,
    subset: Optional[Sequence[int]] = None,
    trace: bool = False,
) -> MpcResult:
    """One receding-horizon update from the current state ``x``.

    Runs the solver from the warm start, applies the first row of the optimal
    profile and updates ``param.warm_p`` and ``param.ode.u0`` in place.
    ``subset`` lists 0-based decision components to optimize.
    An infeasible outcome is not an error: the least-violating point is used.
    """
    param.check_dims()
    x = np.asarray(x, dtype=float).ravel()
    if x.size != len(defn.ode.x0):
        raise ValueError(f"state has length {x.size}, expected {len(defn.ode.x0)}")
    param.ode.x0 = x
    pmin = np.asarray(param.uparam.pmin, dtype=float)
    pmax = np.asarray(param.uparam.pmax, dtype=float)
    warm = np.clip(param.warm_p, pmin, pmax)
    eval_fn = make_evaluator(param, defn)

    t0 = time.perf_counter()
    state = solve(eval_fn, warm, pmin, pmax, param.Nev, param.trust, subset, trace)
    t_exec = time.perf_counter() - t0

    profile = np.asarray(defn.control_profile(state.p_best, param.ode, param.uparam), dtype=float)
    u = profile[0].copy()
    param.warm_p = state.p_best.copy()
    param.ode.u0 = u
    return MpcResult(u=u, u_sol=profile.ravel(), t_exec=t_exec, n_eval=state.n_eval, state=state)
