"""Open-loop and closed-loop simulation drivers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .engine import EngineParam, mpc_step
from .integrator import NonFiniteStateError, one_step, rollout
from .problem import OdeParams, ProblemDefinition, UParamParams

# (step index, time grid, engine) -> engine or None (in-place mutation)
Scheduler = Callable[[int, np.ndarray, EngineParam], Optional[EngineParam]]


class SimulationDiverged(RuntimeError):
    """The plant state became non-finite; ``log`` holds the rows computed so far."""

    def __init__(self, message: str, log: "ClosedLoopLog"):
        super().__init__(message)
        self.log = log


def simulate_ol(p, ode: OdeParams, up: UParamParams, defn: ProblemDefinition):
    """Open-loop response to ``p`` from ``ode.x0`` using the given ``ode`` record.

    Returns ``(tt, xx, uu)`` with ``Np + 1`` time instants and ``Np`` controls.
    """
    uu = np.asarray(defn.control_profile(np.asarray(p, dtype=float), ode, up), dtype=float)
    traj = rollout(ode.x0, uu, ode, defn.ode_rhs)
    tt = ode.tau * np.arange(int(up.Np) + 1)
    return tt, traj.xx, traj.uu


def n_instants(tsim: float, tau: float) -> int:
    # tolerance guards exact multiples such as 400 / 0.5 against rounding
    return int(math.floor(tsim / tau + 1e-9)) + 1


def initialize(tsim: float, param: EngineParam):
    """Zero-filled storage for a closed-loop run of duration ``tsim``.

    Returns ``(tt, xx, uu, tt_exec, ntsim)``; row 0 of ``xx`` is ``ode.x0``.
    """
    if not tsim > 0:
        raise ValueError("tsim must be > 0")
    tau = param.ode.tau
    ntsim = n_instants(tsim, tau)
    tt = tau * np.arange(ntsim)
    xx = np.zeros((ntsim, len(param.ode.x0)))
    xx[0] = param.ode.x0
    uu = np.zeros((ntsim, int(param.uparam.nu)))
    return tt, xx, uu, np.zeros(ntsim), ntsim


@dataclass
class ClosedLoopLog:
    tt: np.ndarray
    xx: np.ndarray
    uu: np.ndarray
    t_exec: np.ndarray
    n_eval: np.ndarray
    scheduled: dict = field(default_factory=dict)
    engine_rk_order: int = 0
    plant_rk_order: int = 0
    diverged: bool = False
    last_trace: list = field(default_factory=list)

    @property
    def ntsim(self) -> int:
        return self.tt.size

    def header(self, timing: bool = True) -> list[str]:
        cols = ["t"]
        cols += [f"x{k + 1}" for k in range(self.xx.shape[1])]
        cols += [f"u{k + 1}" for k in range(self.uu.shape[1])]
        if timing:
            cols.append("t_exec")
        cols.append("n_eval")
        cols += list(self.scheduled)
        return cols

    def rows(self, timing: bool = True):
        for k in range(self.ntsim):
            row = [self.tt[k], *self.xx[k], *self.uu[k]]
            if timing:
                row.append(self.t_exec[k])
            row.append(int(self.n_eval[k]))
            row += [self.scheduled[name][k] for name in self.scheduled]
            yield row

    def to_csv(self, path, timing: bool = True) -> None:
        """Write the log; ``timing=False`` drops the wall-clock column so the
        file is reproducible byte for byte."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header(timing))
            for row in self.rows(timing):
                writer.writerow([v if isinstance(v, int) else repr(float(v)) for v in row])


def _get_path(engine: EngineParam, path: str):
    obj = engine
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def run_closed_loop(
    defn: ProblemDefinition,
    engine: EngineParam,
    plant_ode: OdeParams,
    tsim: float,
    subset: Optional[Sequence[int]] = None,
    scheduler: Optional[Scheduler] = None,
    record: Sequence[str] = (),
    progress: Optional[Callable[[int, int], None]] = None,
    trace_last: bool = False,
) -> ClosedLoopLog:
    """Simulate the plant under the receding-horizon feedback.

    At every instant but the last: apply ``scheduler`` (if any), call
    :func:`~dfmpc.engine.mpc_step` on the current plant state, then advance the
    plant one period with ``plant_ode`` (which may carry ``w != 0`` and its own
    ``rk_order``). ``record`` names dot-paths into the engine (e.g.
    ``"ocp.rd"``) logged once per instant. The last control row stays zero.

    Raises :class:`SimulationDiverged` carrying the partial log if the plant
    state becomes non-finite. With ``trace_last`` the solver trace of the
    final step is available as ``log.last_trace``.
    """
    tt, xx, uu, t_exec, ntsim = initialize(tsim, engine)
    xx[0] = plant_ode.x0
    n_eval = np.zeros(ntsim, dtype=int)
    scheduled = {name: np.zeros(ntsim) for name in record}
    log = ClosedLoopLog(
        tt, xx, uu, t_exec, n_eval, scheduled,
        engine_rk_order=int(engine.ode.rk_order),
        plant_rk_order=int(plant_ode.rk_order),
    )
    for i in range(ntsim - 1):
        if scheduler is not None:
            engine = scheduler(i, tt, engine) or engine
        res = mpc_step(xx[i], engine, defn, subset, trace=trace_last and i == ntsim - 2)
        uu[i] = res.u
        t_exec[i] = res.t_exec
        n_eval[i] = res.n_eval
        for name in record:
            scheduled[name][i] = float(_get_path(engine, name))
        try:
            xx[i + 1] = one_step(xx[i], res.u, plant_ode, defn.ode_rhs)
        except NonFiniteStateError:
            log.diverged = True
            keep = i + 1
            partial = ClosedLoopLog(
                tt[:keep], xx[:keep], uu[:keep], t_exec[:keep], n_eval[:keep],
                {k: v[:keep] for k, v in scheduled.items()},
                log.engine_rk_order, log.plant_rk_order, diverged=True,
            )
            raise SimulationDiverged(f"plant state non-finite after t={tt[i]:g}", partial)
        if progress is not None:
            progress(i + 1, ntsim - 1)
        if trace_last and i == ntsim - 2:
            log.last_trace = res.state.trace
    for name in record:
        if ntsim > 1:
            scheduled[name][-1] = scheduled[name][-2]
    return log
