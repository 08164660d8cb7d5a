"""Problem description: parameter records, callbacks and constraint helpers.

A problem is defined by three callbacks (dynamics right-hand side, control
profile builder, cost/constraint map) and three open parameter records.
Records behave like structs: any field may be added, a handful are mandatory.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

import numpy as np


class ProblemValidationError(ValueError):
    """Raised when a problem definition fails validation."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(str(report))


class DimensionChangeError(AttributeError):
    """Raised on an attempt to change a field fixing the decision-vector size."""


def _coerce(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return np.asarray(value)
    return value


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Record):
        return value.to_dict()
    return value


class Record:
    """Open key-value parameter record with attribute access.

    Lists and tuples are stored as float arrays. Fields listed in ``vectors``
    are flattened to 1-D float arrays (so ``u0=0`` becomes ``array([0.])``).
    Fields may be frozen; assigning a frozen field raises
    :class:`DimensionChangeError`.
    """

    required: tuple[str, ...] = ()
    vectors: tuple[str, ...] = ()

    def __init__(self, **fields: Any):
        object.__setattr__(self, "_fields", {})
        object.__setattr__(self, "_frozen", frozenset())
        for key, value in fields.items():
            self._fields[key] = self._convert(key, value)

    def _convert(self, key: str, value: Any) -> Any:
        if key in self.vectors:
            return np.atleast_1d(np.asarray(value, dtype=float)).ravel().copy()
        return _coerce(value)

    def __getattr__(self, name: str) -> Any:
        try:
            return self._fields[name]
        except KeyError:
            raise AttributeError(
                f"{type(self).__name__} has no field {name!r}"
            ) from None

    def __setattr__(self, name: str, value: Any) -> None:
        if name in self._frozen:
            raise DimensionChangeError(
                f"field {name!r} cannot be changed: it fixes the number of "
                "decision variables; rebuild the engine instead"
            )
        self._fields[name] = self._convert(name, value)

    def __delattr__(self, name: str) -> None:
        if name in self._frozen:
            raise DimensionChangeError(f"field {name!r} cannot be removed")
        try:
            del self._fields[name]
        except KeyError:
            raise AttributeError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._fields

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Record) or type(other) is not type(self):
            return NotImplemented
        if self._fields.keys() != other._fields.keys():
            return False
        return all(
            np.array_equal(np.asarray(v), np.asarray(other._fields[k]))
            for k, v in self._fields.items()
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._fields.items())
        return f"{type(self).__name__}({inner})"

    def __getstate__(self):
        return {"fields": self._fields, "frozen": self._frozen}

    def __setstate__(self, state):
        object.__setattr__(self, "_fields", state["fields"])
        object.__setattr__(self, "_frozen", state["frozen"])

    def get(self, name: str, default: Any = None) -> Any:
        return self._fields.get(name, default)

    def keys(self) -> list[str]:
        return list(self._fields)

    def freeze(self, *names: str) -> None:
        object.__setattr__(self, "_frozen", self._frozen | frozenset(names))

    @property
    def frozen(self) -> frozenset:
        return self._frozen

    def copy(self) -> "Record":
        """Deep copy; frozen markers are not carried over."""
        return type(self)(**copy.deepcopy(self._fields))

    def missing_fields(self) -> list[str]:
        return [name for name in self.required if name not in self._fields]

    def to_dict(self) -> dict:
        """JSON-compatible dict: arrays become (nested) lists."""
        return {k: _jsonable(v) for k, v in self._fields.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "Record":
        return cls(**data)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "Record":
        return cls.from_dict(json.loads(text))


class OdeParams(Record):
    """Dynamics parameters. Mandatory: ``tau``, ``x0``, ``u0``, ``rk_order``.

    ``w`` is the uncertainty vector; it defaults to empty (nominal model).
    """

    required = ("tau", "x0", "u0", "rk_order")
    vectors = ("x0", "u0", "w")

    def __init__(self, **fields: Any):
        fields.setdefault("w", np.zeros(0))
        super().__init__(**fields)


class UParamParams(Record):
    """Control-parametrization parameters.

    Mandatory: ``nu``, ``Np``, ``np``, ``p``, ``pmin``, ``pmax``.
    """

    required = ("nu", "Np", "np", "p", "pmin", "pmax")
    vectors = ("p", "pmin", "pmax")


class OcpParams(Record):
    """Cost/constraint parameters. No mandatory fields."""


@dataclass(frozen=True)
class Trajectory:
    """Predicted state and control trajectories.

    ``xx`` has ``Np + 1`` rows (row 0 is the initial state), ``uu`` has
    ``Np`` rows; row ``k`` of ``uu`` is held over sampling interval ``k``.
    """

    xx: np.ndarray
    uu: np.ndarray

    @property
    def Np(self) -> int:
        return self.uu.shape[0]

    @property
    def nx(self) -> int:
        return self.xx.shape[1]

    @property
    def nu(self) -> int:
        return self.uu.shape[1]


OdeRhs = Callable[[np.ndarray, np.ndarray, OdeParams], np.ndarray]
ControlProfile = Callable[[np.ndarray, OdeParams, UParamParams], np.ndarray]
CostConstraints = Callable[
    [Trajectory, OdeParams, UParamParams, OcpParams], "tuple[float, float]"
]
# (ode, uparam, ocp) -> (p -> (J, g)); a compiled stand-in for the generic
# profile/rollout/cost chain that must return the same values.
CompiledEvaluator = Callable[
    [OdeParams, UParamParams, OcpParams], Callable[[np.ndarray], "tuple[float, float]"]
]


@dataclass(frozen=True)
class ProblemDefinition:
    ode_rhs: OdeRhs
    control_profile: ControlProfile
    cost_constraints: CostConstraints
    ode: OdeParams
    uparam: UParamParams
    ocp: OcpParams = field(default_factory=OcpParams)
    compiled: Optional[CompiledEvaluator] = None
    name: str = "problem"

    @property
    def nx(self) -> int:
        return len(self.ode.x0)

    @property
    def nu(self) -> int:
        return int(self.uparam.nu)


@dataclass(frozen=True)
class Violation:
    field: str
    expected: str
    observed: str

    def __str__(self) -> str:
        return f"{self.field}: expected {self.expected}, got {self.observed}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, name: str, expected: str, observed: str) -> None:
        self.violations.append(Violation(name, expected, observed))

    def names(self) -> list[str]:
        return [v.field for v in self.violations]

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise ProblemValidationError(self)

    def __str__(self) -> str:
        if self.ok:
            return "pass"
        return "; ".join(str(v) for v in self.violations)


def _check_records(defn: ProblemDefinition, report: ValidationReport) -> None:
    for prefix, rec in (("ode", defn.ode), ("uparam", defn.uparam)):
        for name in rec.missing_fields():
            report.add(f"{prefix}.{name}", "present", f"missing field {name}")

    ode, up = defn.ode, defn.uparam
    if "tau" in ode and not (np.isscalar(ode.tau) and ode.tau > 0):
        report.add("ode.tau", "scalar > 0", repr(ode.tau))
    if "rk_order" in ode and ode.rk_order not in (1, 2, 4):
        report.add("ode.rk_order", "one of {1, 2, 4}", repr(ode.rk_order))
    for name in ("x0", "u0"):
        if name in ode and len(ode.get(name)) == 0:
            report.add(f"ode.{name}", "non-empty vector", "empty")

    for name in ("nu", "Np", "np"):
        if name in up:
            val = up.get(name)
            if not (isinstance(val, (int, np.integer)) and val >= 1):
                report.add(f"uparam.{name}", "integer >= 1", repr(val))
    if all(n in up for n in ("np", "p", "pmin", "pmax")) and isinstance(
        up.np, (int, np.integer)
    ):
        for name in ("p", "pmin", "pmax"):
            size = len(up.get(name))
            if size != up.np:
                report.add(f"uparam.{name}", f"length np={up.np}", f"length {size}")
        if len(up.p) == len(up.pmin) == len(up.pmax):
            if np.any(up.pmin > up.pmax):
                report.add("uparam.pmin", "pmin <= pmax", "pmin > pmax somewhere")
            elif np.any(up.p < up.pmin) or np.any(up.p > up.pmax):
                report.add("uparam.p", "pmin <= p <= pmax", "p outside the box")
    if "u0" in ode and "nu" in up and len(ode.u0) != up.nu:
        report.add("ode.u0", f"length nu={up.nu}", f"length {len(ode.u0)}")


def validate_problem(defn: ProblemDefinition) -> ValidationReport:
    """Check mandatory fields, bounds and callback shapes by probe calls.

    Probes run the profile builder at ``uparam.p``, the right-hand side at
    ``(x0, u0)`` and the cost/constraint map on the resulting open-loop
    trajectory. Exceptions raised by a probe are reported, not propagated.
    """
    from .integrator import rollout

    report = ValidationReport()
    _check_records(defn, report)
    if not report.ok:
        return report

    ode, up = defn.ode, defn.uparam
    nx = len(ode.x0)
    try:
        xdot = np.asarray(defn.ode_rhs(ode.x0.copy(), ode.u0.copy(), ode), dtype=float)
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        report.add("ode_rhs", "callable on (x0, u0)", f"raised {exc!r}")
        return report
    if xdot.shape not in ((nx,), (nx, 1)):
        report.add("ode_rhs", f"output of length nx={nx}", f"shape {xdot.shape}")

    try:
        uu = np.asarray(defn.control_profile(up.p.copy(), ode, up), dtype=float)
    except Exception as exc:  # noqa: BLE001
        report.add("control_profile", "callable on p", f"raised {exc!r}")
        return report
    if uu.shape != (up.Np, up.nu):
        report.add(
            "control_profile",
            f"profile shape (Np, nu)=({up.Np}, {up.nu})",
            f"profile shape {uu.shape}",
        )
    if not report.ok:
        return report

    try:
        traj = rollout(ode.x0, uu, ode, defn.ode_rhs)
        J, g = defn.cost_constraints(traj, ode, up, defn.ocp)
        float(J), float(g)
    except Exception as exc:  # noqa: BLE001
        report.add("cost_constraints", "(J, g) scalars on the probe trajectory", f"raised {exc!r}")
    return report


def aggregate_max(c: Iterable[float]) -> float:
    """Max-aggregation of constraint values: ``g <= 0`` iff all ``c_i <= 0``."""
    c = np.asarray(list(c) if not isinstance(c, np.ndarray) else c, dtype=float)
    if c.size == 0:
        raise ValueError("no constraints; pass g = -1 when there are none")
    return float(np.max(c))


def aggregate_penalty(c: Iterable[float], q: int = 2) -> float:
    """Sum of ``max(0, c_i) ** q``; zero iff all constraints hold."""
    if q < 1:
        raise ValueError(f"penalty exponent q must be >= 1, got {q}")
    c = np.asarray(list(c) if not isinstance(c, np.ndarray) else c, dtype=float)
    return float(np.sum(np.maximum(c, 0.0) ** q))


def soften(J: float, g_soft: float, penalty: float) -> float:
    """Fold a soft constraint into the cost as a squared hinge."""
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    return J + penalty * max(g_soft, 0.0) ** 2
