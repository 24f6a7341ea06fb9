import math

import pytest

import bioremed as br


@pytest.fixture
def monod():
    return br.GrowthLaw.monod(1.0, 1.0)


def test_growth_law(monod):
    assert monod.mu(1.0) == pytest.approx(0.5)
    assert monod.mu_inverse(0.5) == pytest.approx(1.0)
    assert br.q_to_sr(monod, 0.3, 1.0) == pytest.approx(3.0 / 7.0)
    with pytest.raises(br.WashoutError):
        monod.mu_inverse(1.0)


def test_homogeneous_strategies(monod):
    scn = br.HomogeneousScenario(V=1000, V_r=1, S0=1, S_target=0.1)
    assert br.tf_constant(scn, monod, 0.05) == pytest.approx(1.05 / 0.05 * math.log(19) / 0.001)
    best = br.best_constant(scn, monod)
    assert best.sr == pytest.approx(0.078026, abs=1e-5)
    fb = br.solve_feedback(scn, monod)
    assert fb["hit_time"] < best.tf
    q = fb["q"]
    assert all(b < a for a, b in zip(q, q[1:]))
    assert br.feedback_optimal(monod, 1.0) == pytest.approx(math.sqrt(2) - 1)


def test_invalid_scenario():
    with pytest.raises(ValueError):
        br.HomogeneousScenario(V=1000, V_r=1, S0=1, S_target=2)


def test_two_compartments(monod):
    scn = br.TwoCompScenario.from_fraction(V=1000, p=0.4, V_r=1, S1_0=1, S2_0=1, S_target=0.1)
    assert br.kernel_A(0.3, 500.0, 0.001) == pytest.approx(br.kernel_A(0.7, 500.0, 0.001))
    tangency = br.best_constant_twocomp(scn, monod)
    assert tangency.tangency_residual < 1e-6
    field = br.SynthesisField.build(scn, monod, 32)
    assert field.n_extremals == 32
    run = br.solve_optimal_twocomp(scn, monod, field)
    assert run["hit_time"] < tangency.tf
    assert run["switch_time"] is not None
    assert field.query(1.0, 1.0) == pytest.approx(br.feedback_optimal(monod, 1.0), rel=1e-6)


def test_oracle(monod):
    scn = br.HomogeneousScenario(V=1000, V_r=1, S0=1, S_target=0.1)
    grid = br.hjb_solve_homogeneous(scn, monod, nodes=400, s_max=1.05)
    fb = br.solve_feedback(scn, monod)
    assert grid.value_at([1.0]) == pytest.approx(fb["hit_time"], rel=0.01)
    roll = br.greedy_rollout(grid, [1.0])
    assert roll["hit_time"] == pytest.approx(fb["hit_time"], rel=0.02)
    assert grid.to_csv().startswith("Sl,value,policy")
