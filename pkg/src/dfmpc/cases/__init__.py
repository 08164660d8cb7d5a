"""Built-in closed-loop scenarios and a registry to look them up by name."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..engine import EngineParam, create_engine
from ..problem import OdeParams, ProblemDefinition
from ..simulation import ClosedLoopLog, Scheduler, run_closed_loop
from ..solver import TrustRegionConfig
from .cancer import advance_index, make_cancer
from .crane import crane_setpoint, make_crane


@dataclass
class Scenario:
    """A problem definition plus everything needed to run its closed loop.

    ``plant_ode`` drives the simulated plant (it may carry ``w != 0``); the
    engine always predicts with ``w = 0`` and ``engine_rk_order``.
    """

    name: str
    definition: ProblemDefinition
    plant_ode: OdeParams
    Nev: int
    tsim: float
    engine_rk_order: int
    scheduler: Optional[Scheduler] = None
    record: tuple = ()
    subset: Optional[Sequence[int]] = None
    trust: TrustRegionConfig = field(default_factory=TrustRegionConfig)

    def build(self, teval_samples: int = 100) -> "tuple[EngineParam, float]":
        engine, teval = create_engine(self.definition, self.Nev, self.trust, teval_samples=teval_samples)
        engine.ode.rk_order = self.engine_rk_order
        return engine, teval

    def run(
        self,
        engine: Optional[EngineParam] = None,
        progress: Optional[Callable[[int, int], None]] = None,
        trace_last: bool = False,
    ) -> ClosedLoopLog:
        if engine is None:
            engine, _ = self.build(teval_samples=1)
        return run_closed_loop(
            self.definition, engine, self.plant_ode, self.tsim, self.subset,
            self.scheduler, self.record, progress, trace_last,
        )


def crane(subset: bool = False) -> Scenario:
    defn = make_crane()
    return Scenario(
        name="crane-subset" if subset else "crane",
        definition=defn,
        plant_ode=defn.ode.copy(),
        Nev=200 if subset else 500,
        tsim=400.0,
        engine_rk_order=2,
        scheduler=crane_setpoint,
        record=("ocp.rd",),
        subset=[0] if subset else None,
    )


def cancer(N1_days: float = 5.0, N2_days: float = 4.0, umax=(10.0, 1.0), name: str = "cancer") -> Scenario:
    defn = make_cancer(N1_days, N2_days, umax)
    up = defn.uparam
    return Scenario(
        name=name,
        definition=defn,
        plant_ode=defn.ode.copy(),
        Nev=2000,
        tsim=20 * up.Np * defn.ode.tau,
        engine_rk_order=4,
        scheduler=advance_index,
        record=("uparam.index",),
    )


SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "crane": crane,
    "crane-subset": lambda: crane(subset=True),
    "cancer": cancer,
    "cancer-n2-2": lambda: cancer(N2_days=2.0, name="cancer-n2-2"),
    "cancer-n2-3": lambda: cancer(N2_days=3.0, name="cancer-n2-3"),
    "cancer-umax-20": lambda: cancer(umax=(20.0, 1.0), name="cancer-umax-20"),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(SCENARIOS)}") from None


__all__ = ["Scenario", "SCENARIOS", "get_scenario", "make_crane", "make_cancer"]
