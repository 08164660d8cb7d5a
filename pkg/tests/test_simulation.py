import csv
import math

import numpy as np
import pytest

from conftest import identity_profile
from dfmpc.cases import get_scenario
from dfmpc.cases.cancer import make_cancer
from dfmpc.cases.crane import make_crane
from dfmpc.engine import create_engine
from dfmpc.problem import ProblemDefinition
from dfmpc.simulation import (
    SimulationDiverged,
    initialize,
    n_instants,
    run_closed_loop,
    simulate_ol,
)


def test_simulate_ol_crane_equilibrium():
    defn = make_crane()
    defn.ode.w = np.zeros(3)
    tt, xx, uu = simulate_ol(np.zeros(4), defn.ode, defn.uparam, defn)
    assert tt.size == 21
    np.testing.assert_array_equal(np.diff(tt), 0.5)
    assert np.all(xx == 0) and uu.shape == (20, 1)


def test_simulate_ol_uses_given_w():
    defn = make_crane()
    p = np.array([10.0, 10.0, 10.0, 10.0])
    _, x_plant, _ = simulate_ol(p, defn.ode, defn.uparam, defn)
    nominal = defn.ode.copy()
    nominal.w = np.zeros(3)
    _, x_nom, _ = simulate_ol(p, nominal, defn.uparam, defn)
    assert not np.array_equal(x_plant, x_nom)


def test_simulate_ol_cancer_rest_rows():
    defn = make_cancer()
    _, xx, uu = simulate_ol(np.ones(40) * 0.5, defn.ode, defn.uparam, defn)
    assert np.all(uu[20:] == 0) and np.all(uu[:20] == 0.5)
    assert xx.shape == (37, 4)


@pytest.mark.parametrize(
    "tsim, tau, expected",
    [(400, 0.5, 801), (0.5, 0.5, 2), (180, 0.25, 721), (0.3, 0.1, 4), (1.05, 0.5, 3)],
)
def test_n_instants(tsim, tau, expected):
    assert n_instants(tsim, tau) == expected
    assert expected == math.floor(round(tsim / tau, 9)) + 1


def test_initialize_crane():
    engine, _ = create_engine(make_crane(), Nev=5, teval_samples=1)
    tt, xx, uu, tt_exec, ntsim = initialize(400, engine)
    assert ntsim == 801 and tt[-1] == 400.0
    assert xx.shape == (801, 4) and uu.shape == (801, 1) and tt_exec.shape == (801,)
    tt, *_, ntsim = initialize(0.5, engine)
    np.testing.assert_array_equal(tt, [0, 0.5])
    with pytest.raises(ValueError):
        initialize(0.0, engine)


def test_initialize_cancer():
    defn = make_cancer()
    engine, _ = create_engine(defn, Nev=5, teval_samples=1)
    tsim = 20 * defn.uparam.Np * defn.ode.tau
    assert tsim == 180
    *_, ntsim = initialize(tsim, engine)
    assert ntsim == 721


def test_forced_zero_control_matches_open_loop(decay_problem):
    up = decay_problem.uparam
    up.pmin = np.zeros(3)
    up.pmax = np.zeros(3)
    engine, _ = create_engine(decay_problem, Nev=20, teval_samples=1)
    log = run_closed_loop(decay_problem, engine, decay_problem.ode.copy(), tsim=1.0)
    assert log.ntsim == 11
    assert np.all(log.uu == 0)
    np.testing.assert_allclose(log.xx[:, 0], np.exp(-log.tt), rtol=0, atol=1e-6)


def test_scheduler_and_record(decay_problem):
    engine, _ = create_engine(decay_problem, Nev=5, teval_samples=1)
    engine.ocp.level = 0.0

    def ramp(i, tt, eng):
        eng.ocp.level = float(i)

    log = run_closed_loop(
        decay_problem, engine, decay_problem.ode.copy(), tsim=0.5,
        scheduler=ramp, record=("ocp.level",),
    )
    np.testing.assert_array_equal(log.scheduled["ocp.level"], [0, 1, 2, 3, 4, 4])
    assert log.header(timing=True) == ["t", "x1", "u1", "t_exec", "n_eval", "ocp.level"]
    assert np.all(log.uu[-1] == 0)


def test_without_scheduler_ocp_constant(decay_problem):
    engine, _ = create_engine(decay_problem, Nev=5, teval_samples=1)
    engine.ocp.level = 2.5
    log = run_closed_loop(decay_problem, engine, decay_problem.ode.copy(), 0.3, record=("ocp.level",))
    assert np.all(log.scheduled["ocp.level"] == 2.5)


def test_csv_roundtrip(tmp_path, decay_problem):
    engine, _ = create_engine(decay_problem, Nev=10, teval_samples=1)
    log = run_closed_loop(decay_problem, engine, decay_problem.ode.copy(), tsim=0.3)
    path = tmp_path / "log.csv"
    log.to_csv(path, timing=False)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "u1", "n_eval"]
    assert len(rows) == 5
    assert all(len(r) == 4 for r in rows)
    # shortest round-trip formatting keeps full precision
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], log.xx[:, 0])


def test_divergence_raises_with_partial_log(decay_problem):
    def rhs(x, u, ode):
        return np.where(x > 1.5, np.inf, x)

    defn = ProblemDefinition(
        rhs, identity_profile, decay_problem.cost_constraints,
        decay_problem.ode, decay_problem.uparam,
    )
    engine, _ = create_engine(defn, Nev=5, teval_samples=1)
    with pytest.raises(SimulationDiverged) as info:
        run_closed_loop(defn, engine, defn.ode.copy(), tsim=10.0)
    log = info.value.log
    assert log.diverged and 1 < log.ntsim < 101
    assert np.all(np.isfinite(log.xx))


def test_scenario_records_both_orders():
    sc = get_scenario("crane")
    sc.tsim = 1.0
    log = sc.run()
    assert (log.engine_rk_order, log.plant_rk_order) == (2, 4)
    assert log.ntsim == 3
    assert list(log.scheduled) == ["ocp.rd"]
