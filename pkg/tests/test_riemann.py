import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from balancewaves.closures import CompatFunctions, ccc_closure, zero_f, zero_q
from balancewaves.eos import LAMBDA2, LAMBDA3, Chaplygin, IdealGas, State, to_char
from balancewaves.errors import InadmissibleData, NoEquilibrium
from balancewaves.riemann import (RPInput, asymptotic_compare, ccc_curve_velocity, ccc_entropy,
                                  ccc_equilibrium, ccc_rp_input, contact_rp,
                                  equilibrium_subsystem, explicit_ideal_rp, rarefaction_curve,
                                  solve_rp, subcharacteristic_check, EquilibriumSubsystem)

REF_RP = dict(gamma=3.0, k0=1.0, k1=0.0, k2=2.0, rho_L=0.5, rho_R=4.0)


@pytest.fixture(scope="module")
def ref_rp():
    return solve_rp(ccc_rp_input(**REF_RP)), explicit_ideal_rp(**REF_RP)


def test_reference_setup_matches_closed_forms(ref_rp):
    rp, ex = ref_rp
    assert ex.S_L == pytest.approx(math.log(4 / 12), abs=1e-15)
    assert ex.lam_L == pytest.approx(0.5 + 1.0 * 0.5, rel=1e-15)
    assert ex.lam_R == pytest.approx(4.0 + 4.0, rel=1e-15)
    assert rp.lam_L == pytest.approx(ex.lam_L, rel=1e-14)
    assert rp.lam_R == pytest.approx(ex.lam_R, rel=1e-14)
    assert rp.self_similar


def test_gamma3_fan_velocity(ref_rp):
    _, ex = ref_rp
    x = np.linspace(0.15, 0.75, 9)
    np.testing.assert_allclose(ex.u_at(x, 0.1), x / 0.2, rtol=1e-14)


def test_theorem_solver_matches_closed_form(ref_rp):
    rp, ex = ref_rp
    x = np.linspace(-2, 2, 2001)
    for t in (0.01, 0.1, 0.25):
        diff = rp.evaluate(x, t).as_array() - ex.evaluate(x, t).as_array()
        assert np.max(np.abs(diff)) <= 1e-8


@pytest.mark.parametrize("gamma,k0,k1,k2", [(1.4, 0.5, 0.3, 0.8), (5 / 3, 2.0, -1.0, 1.5)])
def test_general_constants_match_corrected_fan(gamma, k0, k1, k2):
    rp = solve_rp(ccc_rp_input(gamma, k0, k1, k2, 0.5, 2.0))
    ex = explicit_ideal_rp(gamma, k0, k1, k2, 0.5, 2.0)
    x = np.linspace(-3, 3, 801)
    t = 0.4
    assert np.max(np.abs(rp.evaluate(x, t).as_array() - ex.evaluate(x, t).as_array())) <= 1e-8
    inside = (x > ex.lam_L * t) & (x < ex.lam_R * t)
    u_fan = 2 * x / ((gamma + 1) * t) - (gamma - 1) * k1 / ((gamma + 1) * k0)
    np.testing.assert_allclose(rp.evaluate(x, t).u[inside], u_fan[inside], rtol=1e-12)


def test_fan_invariants_constant_and_characteristics_ordered(ref_rp):
    rp, _ = ref_rp
    t = 0.1
    x = np.linspace(rp.lam_L * t, rp.lam_R * t, 301)
    s = rp.evaluate(x, t)
    cf = to_char(rp.law, s, LAMBDA3)
    assert np.max(np.abs(cf.R1 - rp.R_L[0])) <= 1e-8
    assert np.max(np.abs(cf.R2 - rp.R_L[1])) <= 1e-8
    xa = rp.fan_x(t, np.linspace(0, 1, 201))
    assert np.all(np.diff(xa) > 0)
    assert xa[0] == pytest.approx(rp.lam_L * t, abs=1e-12)
    assert xa[-1] == pytest.approx(rp.lam_R * t, abs=1e-12)


def test_fan_continuous_at_edges(ref_rp):
    rp, _ = ref_rp
    t = 0.1
    for edge, state in ((rp.lam_L * t, rp.left), (rp.lam_R * t, rp.right)):
        inner = rp.evaluate(np.array([edge - 1e-12, edge + 1e-12]), t).as_array()
        np.testing.assert_allclose(inner, np.tile(state.as_array(), (2, 1)), atol=1e-8)


def test_self_similar_on_rays(ref_rp):
    rp, _ = ref_rp
    xi = np.linspace(0.5, 9, 50)
    a = rp.evaluate(xi * 0.02, 0.02).as_array()
    b = rp.evaluate(xi * 0.3, 0.3).as_array()
    assert np.max(np.abs(a - b)) <= 1e-8


def test_homogeneous_rarefaction_oracle():
    law = IdealGas(1.4)
    cf = CompatFunctions(law, LAMBDA3, zero_f, zero_q, "homogeneous")
    left = State(1.0, 0.0, 0.0)
    right = rarefaction_curve(law, left, np.array(2.0))
    rp = solve_rp(RPInput(left, State(2.0, float(right.u), 0.0), cf))
    g = law.gamma
    R1 = rp.R_L[0]
    t = 0.5
    x = np.linspace(rp.lam_L * t, rp.lam_R * t, 101)
    u_oracle = (2 * x / t + (g - 1) * R1) / (g + 1)
    np.testing.assert_allclose(rp.evaluate(x, t).u, u_oracle, atol=1e-8)


def test_degenerate_data_give_constant_state():
    rp = solve_rp(ccc_rp_input(3.0, 1.0, 0.0, 2.0, 1.0, 1.0))
    assert rp.kind == "constant"
    s = rp.evaluate(np.linspace(-2, 2, 11), 0.5)
    assert np.all(s.rho == 1.0) and np.all(s.u == rp.left.u)


def test_lambda_ordering_violation():
    with pytest.raises(InadmissibleData) as err:
        solve_rp(ccc_rp_input(3.0, 1.0, 0.0, 2.0, 4.0, 0.5))
    assert err.value.hypothesis == "lambda ordering"
    with pytest.raises(InadmissibleData):
        explicit_ideal_rp(3.0, 1.0, 0.0, 2.0, 4.0, 0.5)


def test_non_equilibrium_end_state():
    inp = ccc_rp_input(3.0, 1.0, 0.0, 2.0, 0.5, 4.0)
    bad = RPInput(State(0.5, 0.7, float(inp.left.S)), inp.right, inp.closure)
    with pytest.raises(InadmissibleData) as err:
        solve_rp(bad)
    assert err.value.hypothesis == "equilibrium"


def test_mismatched_invariants():
    law = IdealGas(1.4)
    cf = CompatFunctions(law, LAMBDA3, zero_f, zero_q, "homogeneous")
    with pytest.raises(InadmissibleData) as err:
        solve_rp(RPInput(State(1.0, 0.0, 0.0), State(2.0, 0.0, 0.0), cf))
    assert err.value.hypothesis == "riemann invariants"


class _Toy(CompatFunctions):
    """Homogeneous ideal gas but with a fan source h = k (v - v_L)(v_R - v)."""

    def __init__(self, law, vL, vR, k=2.0, H=0.0):
        super().__init__(law, LAMBDA3, zero_f, zero_q, "toy")
        object.__setattr__(self, "_p", (vL, vR, k, H))

    def h(self, Y):
        vL, vR, k, _ = self._p
        v = np.asarray(Y)[..., 2]
        return k * (v - vL) * (vR - v)

    def H(self, Y):
        Y = np.asarray(Y)
        return np.zeros(Y.shape[:-1] + (2,)) + self._p[3]


def _toy_states():
    law = IdealGas(1.4)
    left = State(1.0, 0.0, 0.0)
    right = rarefaction_curve(law, left, np.array(2.0))
    return law, left, State(2.0, float(right.u), 0.0)


def test_fan_with_source_follows_characteristic_ode():
    law, left, right = _toy_states()
    vL, vR = float(left.u), float(right.u)
    rp = solve_rp(RPInput(left, right, _Toy(law, vL, vR)))
    assert not rp.self_similar
    t = 0.6
    a = np.linspace(0, 1, 11)

    def lam(v):
        R1 = rp.R_L[0]
        return v + (law.gamma - 1) * (v - R1) / 2

    for aa in a:
        v0 = vL + aa * (vR - vL)
        ref = solve_ivp(lambda _, y: [2.0 * (y[0] - vL) * (vR - y[0]), lam(y[0])], (0, t),
                        [v0, 0.0], method="DOP853", rtol=1e-12, atol=1e-13).y[:, -1]
        assert rp.fan_v(t, aa) == pytest.approx(ref[0], abs=1e-8)
        assert rp.fan_x(t, aa) == pytest.approx(ref[1], abs=1e-8)
    xa = rp.fan_x(t, np.linspace(0, 1, 41))
    assert np.all(np.diff(xa) > 0)
    # query through the inverse map and the invariants inside the fan
    x = rp.fan_x(t, np.array([0.2, 0.5, 0.8]))
    s = rp.evaluate(x, t)
    np.testing.assert_allclose(s.u, rp.fan_v(t, np.array([0.2, 0.5, 0.8])), atol=1e-8)
    cf = to_char(law, s, LAMBDA3)
    np.testing.assert_allclose(cf.R1, rp.R_L[0], atol=1e-12)


def test_h_condition_violation():
    law, left, right = _toy_states()
    with pytest.raises(InadmissibleData) as err:
        solve_rp(RPInput(left, right, _Toy(law, float(left.u), float(right.u), H=1e-6)))
    assert err.value.hypothesis == "H condition"


def test_non_strict_collects_report():
    inp = ccc_rp_input(3.0, 1.0, 0.0, 2.0, 4.0, 0.5)
    rp = solve_rp(inp, strict=False)
    failed = [h.name for h in rp.report if not h.passed]
    assert "lambda ordering" in failed


def test_contact_lambda2():
    law = IdealGas(1.4)
    p = 1.0
    left = State(1.0, 1.0, float(law.entropy_from_A(p / 1.0**1.4)))
    right = State(2.0, 1.0, float(law.entropy_from_A(p / 2.0**1.4)))
    rp = contact_rp(left, right, law, LAMBDA2)
    s = rp.evaluate(np.array([0.49, 0.51]), 0.5)
    np.testing.assert_allclose(s.rho, [1.0, 2.0])
    with pytest.raises(InadmissibleData) as err:
        contact_rp(left, State(2.0, 1.5, float(right.S)), law, LAMBDA2)
    assert err.value.hypothesis == "lambda equality"


def test_contact_chaplygin_lambda3():
    law = Chaplygin(1.0)
    left, right = State(1.0, 0.0, 0.0), State(2.0, 0.5, 0.0)   # u + 1/rho = 1 on both
    rp = contact_rp(left, right, law, LAMBDA3)
    assert rp.lam_L == pytest.approx(1.0)
    s = rp.evaluate(np.array([0.9, 1.1]), 1.0)
    np.testing.assert_allclose(s.u, [0.0, 0.5])
    with pytest.raises(InadmissibleData):
        contact_rp(left, State(2.0, 0.0, 0.0), law, LAMBDA3)
    with pytest.raises(InadmissibleData) as err:
        contact_rp(left, right, IdealGas(1.4), LAMBDA3)
    assert err.value.hypothesis == "exceptional speed"


def test_rarefaction_curve_ref_rp():
    law = IdealGas(3.0, 1.0, 0.0)
    left = State(0.5, 0.5, ccc_entropy(3.0, 1.0, 2.0))
    rho = np.linspace(0.5, 4, 50)
    curve = rarefaction_curve(law, left, rho)
    np.testing.assert_allclose(curve.u, rho, rtol=1e-14)
    assert curve.u[0] == left.u
    f = ccc_closure(law, 1.0, 0.0, 2.0).f
    assert np.max(np.abs(f(curve.rho, curve.u, curve.S))) <= 1e-12


def test_equilibrium_subsystem_closed_form_and_numeric():
    g, k0, k1, k2 = 1.4, 0.5, 0.3, 0.8
    sub = ccc_equilibrium(g, k0, k1, k2)
    rho, S = np.linspace(0.3, 3, 25), np.zeros(25)
    assert np.max(np.abs(sub.residual(rho, S))) <= 1e-12
    num = equilibrium_subsystem(ccc_closure(IdealGas(g), k0, k1, k2))
    np.testing.assert_allclose(num.u_hat(rho, S), sub.u_hat(rho, S), atol=1e-10)
    np.testing.assert_allclose(num.mu2(rho, S), sub.mu2(rho, S), rtol=1e-7)
    np.testing.assert_allclose(sub.mu2(rho, S),
                               sub.u_hat(rho, S) + k2 * rho ** ((g - 1) / 2) / (2 * k0), rtol=1e-14)
    assert sub.exceptional == ("mu1",)
    np.testing.assert_allclose(sub.invariants(rho, S)[..., 1], S)


def test_no_equilibrium():
    with pytest.raises(NoEquilibrium):
        equilibrium_subsystem(lambda rho, u, S: 1.0 + 0 * u)


def test_subcharacteristic_equality_on_curve(ref_rp):
    rp, _ = ref_rp
    sub = ccc_equilibrium(3.0, 1.0, 0.0, 2.0)
    curve = rarefaction_curve(rp.law, rp.left, np.linspace(0.5, 4, 200))
    report = subcharacteristic_check(sub, rp.law, curve)
    assert report.passed
    assert np.max(np.abs(report.margin)) <= 1e-12


def test_subcharacteristic_trivial_and_failing():
    law = IdealGas(1.4)
    states = State(np.linspace(0.5, 2, 10), 0.0, 0.0)
    flat = EquilibriumSubsystem(None, lambda r, S: 0 * r, lambda r, S: 0 * r, lambda r, S: 0 * r)
    assert subcharacteristic_check(flat, law, states).passed
    steep = EquilibriumSubsystem(None, lambda r, S: 1e3 * r, lambda r, S: 1e3 + 0 * r,
                                 lambda r, S: 0 * r)
    report = subcharacteristic_check(steep, law, states)
    assert not report.passed
    assert report.to_csv().startswith("rho,margin,pass")


def test_asymptotic_compare(ref_rp):
    rp, _ = ref_rp
    sub = ccc_equilibrium(3.0, 1.0, 0.0, 2.0)
    d = asymptotic_compare(rp, sub, [0.02, 0.05, 0.1])
    assert np.all(d <= 1e-6)
    flat = solve_rp(ccc_rp_input(3.0, 1.0, 0.0, 2.0, 1.0, 1.0))
    assert np.all(asymptotic_compare(flat, sub, [0.05, 0.1]) == 0.0)


def test_asymptotic_compare_with_perturbed_entropy():
    g, k0, k1, k2 = 3.0, 1.0, 0.0, 2.0
    law = IdealGas(g)
    S = ccc_entropy(g, k0, k2) + 0.3
    left = State(0.5, float(ccc_curve_velocity(g, k0, k1, k2, 0.5)), S)
    right = rarefaction_curve(law, left, np.array(4.0))
    rp = solve_rp(RPInput(left, State(4.0, float(right.u), S), ccc_closure(law, k0, k1, k2)),
                  strict=False)
    d = asymptotic_compare(rp, ccc_equilibrium(g, k0, k1, k2), [0.05, 0.1])
    assert np.all(d > 1e-3)
