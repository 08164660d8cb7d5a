import dataclasses

import numpy as np
import pytest

from conftest import identity_profile
from dfmpc.cases.cancer import CONSTANTS, make_cancer
from dfmpc.cases.crane import make_crane
from dfmpc.engine import (
    MpcResult,
    create_engine,
    evaluate_candidate,
    make_evaluator,
    mpc_step,
    nominal_copy,
)
from dfmpc.problem import DimensionChangeError, ProblemDefinition, ProblemValidationError


def norm_ocp(traj, ode, up, ocp):
    return float(np.sum(traj.uu**2)), -1.0


@pytest.fixture(scope="module")
def crane_engine():
    defn = make_crane()
    engine, teval = create_engine(defn, Nev=500, teval_samples=5)
    return defn, engine, teval


def test_create_engine_crane(crane_engine):
    defn, engine, teval = crane_engine
    assert engine.n_p == 4
    np.testing.assert_array_equal(engine.warm_p, np.zeros(4))
    assert teval > 0
    assert np.all(engine.ode.w == 0)
    # the definition's record is not touched
    np.testing.assert_array_equal(defn.ode.w, [1, -0.2, -0.2])


def test_create_engine_cancer():
    engine, _ = create_engine(make_cancer(), Nev=10, teval_samples=1)
    assert engine.n_p == 40 and engine.uparam.N1 == 20


def test_create_engine_rejects_invalid():
    defn = make_crane()
    del defn.uparam.pmax
    with pytest.raises(ProblemValidationError, match="pmax"):
        create_engine(defn)


@pytest.mark.parametrize("compiled", [False, True])
def test_crane_zero_candidate(compiled):
    defn = make_crane()
    engine, _ = create_engine(defn, Nev=10, teval_samples=1)
    engine.compiled = compiled
    engine.ocp.rd = 0.0
    f = make_evaluator(engine, defn)
    engine.ode.x0 = np.zeros(4)
    assert f(np.zeros(4)) == (0.0, -0.0035)
    engine.ocp.rd = 1.0
    J, g = make_evaluator(engine, defn)(np.zeros(4))
    assert J == pytest.approx(2e9, rel=1e-15)
    assert g == -0.0035


def test_cancer_zero_candidate_against_linear_oracle():
    defn = make_cancer()
    engine, _ = create_engine(defn, Nev=10, teval_samples=1)
    engine.compiled = False
    x0 = np.array([5e8, 1e9, 0.0, 1e9])
    J, g = evaluate_candidate(np.zeros(40), x0, engine, defn)
    # without drug, x3 stays 0 and x2' = -delta x2 + s2 exactly
    d, s2 = CONSTANTS["delta"], CONSTANTS["s2"]
    tt = 0.25 * np.arange(37)
    x2 = s2 / d + (x0[1] - s2 / d) * np.exp(-d * tt)
    assert g == pytest.approx(5e7 - x2.min(), rel=1e-9)
    assert J > 1e-40  # tumor still present: terminal-size branch


@pytest.mark.parametrize("make", [make_crane, make_cancer])
def test_compiled_matches_generic(make):
    defn = make()
    engine, _ = create_engine(defn, Nev=10, teval_samples=1)
    rng = np.random.default_rng(7)
    up = engine.uparam
    for _ in range(5):
        p = rng.uniform(up.pmin, up.pmax)
        x0 = np.asarray(defn.ode.x0) * rng.uniform(0.5, 1.5)
        engine.ode.x0 = x0
        engine.compiled = True
        fast = make_evaluator(engine, defn)(p)
        engine.compiled = False
        slow = make_evaluator(engine, defn)(p)
        np.testing.assert_allclose(fast, slow, rtol=1e-12)


def test_mpc_step_reaches_origin(decay_problem):
    defn = dataclasses.replace(decay_problem, cost_constraints=norm_ocp)
    defn.uparam.p = np.full(3, 0.7)
    engine, _ = create_engine(defn, Nev=300, teval_samples=1)
    res = mpc_step([1.0], engine, defn)
    assert isinstance(res, MpcResult)
    np.testing.assert_allclose(res.u_sol, 0.0, atol=1e-4)
    np.testing.assert_array_equal(res.u, res.u_sol[:1])
    np.testing.assert_array_equal(engine.warm_p, res.state.p_best)
    np.testing.assert_array_equal(engine.ode.u0, res.u)
    assert res.n_eval <= 300 and res.t_exec >= 0


def test_repeat_step_at_fixed_point(decay_problem):
    engine, _ = create_engine(decay_problem, Nev=400, teval_samples=1)
    first = mpc_step([1.0], engine, decay_problem)
    for _ in range(3):
        prev = mpc_step([1.0], engine, decay_problem)
    again = mpc_step([1.0], engine, decay_problem)
    assert first.u.shape == (1,)
    np.testing.assert_array_equal(again.u, prev.u)


def test_crane_subset_only_moves_first_component():
    defn = make_crane()
    engine, _ = create_engine(defn, Nev=60, teval_samples=1)
    engine.warm_p = np.array([0.0, 1.0, -2.0, 3.0])
    res = mpc_step(np.zeros(4), engine, defn, subset=[0])
    np.testing.assert_array_equal(res.state.p_best[1:], [1.0, -2.0, 3.0])
    # the profile is the interpolation of p_best
    np.testing.assert_allclose(res.profile[:, 0], engine.uparam.R @ res.state.p_best, rtol=0, atol=0)


def test_mutation_guard(crane_engine):
    _, engine, _ = crane_engine
    with pytest.raises(DimensionChangeError, match="Np"):
        engine.uparam.Np = 30
    with pytest.raises(DimensionChangeError, match="np"):
        engine.uparam.np = 5
    engine.ocp.rd = -3.0
    engine.uparam.pmax = np.full(4, 20.0)


def test_warm_start_clipped_into_new_box():
    defn = make_crane()
    engine, _ = create_engine(defn, Nev=20, teval_samples=1)
    engine.warm_p = np.full(4, 25.0)
    engine.uparam.pmax = np.full(4, 10.0)
    res = mpc_step(np.zeros(4), engine, defn)
    assert np.all(res.state.p_best <= 10.0)


def test_state_length_checked(decay_problem):
    engine, _ = create_engine(decay_problem, Nev=5, teval_samples=1)
    with pytest.raises(ValueError, match="length"):
        mpc_step([1.0, 2.0], engine, decay_problem)


def test_nominal_isolation():
    defn = make_crane()
    engine, _ = create_engine(defn, Nev=10, teval_samples=1)
    p, x0 = np.array([3.0, -1.0, 2.0, 0.5]), np.array([0.1, 0.0, 0.001, 0.0])
    before = evaluate_candidate(p, x0, engine, defn)
    defn.ode.w = np.array([5.0, 1.0, 1.0])
    assert evaluate_candidate(p, x0, engine, defn) == before


def test_nominal_copy_zeros_w():
    ode = make_crane().ode
    nom = nominal_copy(ode)
    assert np.all(nom.w == 0) and nom.w.shape == (3,)
    assert np.all(ode.w == [1, -0.2, -0.2])


def test_non_finite_rollout_is_inf(decay_problem):
    blowup = ProblemDefinition(
        lambda x, u, ode: x * 1e300 + u, identity_profile,
        decay_problem.cost_constraints, decay_problem.ode, decay_problem.uparam,
    )
    engine, _ = create_engine(dataclasses.replace(decay_problem), Nev=5, teval_samples=1)
    with np.errstate(over="ignore"):
        assert evaluate_candidate(np.zeros(3), [1.0], engine, blowup) == (np.inf, np.inf)


def test_update_trust_region_through_engine(crane_engine):
    _, engine, _ = crane_engine
    engine.update_trust_region_parameters(2, 0.5, 1e-6)
    np.testing.assert_array_equal(engine.trust.alpha_min_vector(4), np.full(4, 1e-6))
    with pytest.raises(ValueError):
        engine.update_trust_region_parameters(2, 0.5, np.ones(5))
