import numpy as np
import pytest

from dfmpc.problem import OcpParams, OdeParams, ProblemDefinition, UParamParams

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record one pass/fail line for the acceptance summary, then assert."""

    def check(label: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" :: {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def decay_rhs(x, u, ode):
    return -x + u


def identity_profile(p, ode, up):
    return np.asarray(p, dtype=float).reshape(int(up.Np), int(up.nu))


def sumsq_ocp(traj, ode, up, ocp):
    return float(np.sum(traj.xx**2)), -1.0


@pytest.fixture
def decay_problem():
    """x' = -x + u with one control value per step and J = sum of x^2."""
    ode = OdeParams(tau=0.1, x0=[1.0], u0=[0.0], rk_order=4)
    up = UParamParams(nu=1, Np=3, np=3, p=np.zeros(3), pmin=-np.ones(3), pmax=np.ones(3))
    return ProblemDefinition(decay_rhs, identity_profile, sumsq_ocp, ode, up, OcpParams())
