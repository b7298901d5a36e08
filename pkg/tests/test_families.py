import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from balancewaves.eos import IdealGas
from balancewaves.errors import BadParams, ConstraintViolation, NoBracket, OutOfValidity
from balancewaves.families import (FAMILY_IDS, FamilyParams, evaluate, make_family, source,
                                   wave_variable)
from balancewaves.fixtures import DEFAULTS, default_family, default_fixture
from balancewaves.profiles import Closure, Function1, Profile, X


@pytest.fixture(scope="module")
def families():
    return {fid: default_family(fid) for fid in FAMILY_IDS}


def test_every_family_has_a_default():
    assert set(DEFAULTS) == set(FAMILY_IDS)


@pytest.mark.parametrize("fid", FAMILY_IDS)
def test_identity_at_t0(families, fid):
    fs = families[fid]
    lo, hi = fs.x_domain
    x = np.linspace(lo + 0.05, hi - 0.05, 17)
    assert np.array_equal(wave_variable(fs, x, 0.0), x)
    U0, _ = fs.initial(x)
    np.testing.assert_allclose(evaluate(fs, x, 0.0).as_array(), U0, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("fid", FAMILY_IDS)
def test_wave_variable_forward_substitution(families, fid):
    fs = families[fid]
    t = min(0.5 * fs.t_star, 0.5)
    lo, hi = fs.x_range(t)
    x = np.linspace(lo, hi, 41)[1:-1]
    xi = wave_variable(fs, x, t)
    np.testing.assert_allclose(fs.char_x(xi, t), x, rtol=0, atol=1e-11)


@pytest.mark.parametrize("fid", FAMILY_IDS)
def test_states_hyperbolic(families, fid):
    fs = families[fid]
    t = min(0.8 * fs.t_star, 1.0)
    lo, hi = fs.x_range(t)
    s = evaluate(fs, np.linspace(lo, hi, 50), t)
    assert np.all(s.rho > 0)
    assert np.all(np.isfinite(fs.law.sound_speed(s.rho, s.S)))


def test_l2_i_translates_profiles(families):
    fs = families["L2_I"]
    P = fs.profiles
    x, t = np.linspace(-1, 1, 11), 0.7
    s = evaluate(fs, x, t)
    u0 = fs.params.get("u0")
    np.testing.assert_allclose(s.rho, P["rho0"](x - u0 * t), rtol=1e-14)
    np.testing.assert_allclose(s.u, u0)
    np.testing.assert_allclose(s.S, P["S0"](x - u0 * t), rtol=1e-14)


def test_l2_iii_uniform_density_decays():
    # rho0 = 1, A0 = 1 and u0 = x satisfy the family's constraints
    params = FamilyParams("L2_III", dict(gamma=2.0, Cv=1.0, S_hat=0.0, x_min=-1.0, x_max=1.0),
                          dict(pi0=Function1("0", "u")))
    fs = make_family(params, dict(rho0=Profile.constant(1.0), u0=Profile.from_expr(X),
                                  S0=Profile.constant(0.0)))
    for t in (0.1, 0.5, 1.5):
        lo, hi = fs.x_range(t)
        s = evaluate(fs, np.linspace(lo, hi, 9), t)
        np.testing.assert_allclose(s.rho, 1 / (1 + t), rtol=1e-13)


def _ig_ii(k1, A0=1 / 3, gamma=3.0):
    rho0 = 1 + sp.Rational(1, 5) * sp.tanh(X)
    u0 = rho0 - sp.Float(k1) * sp.integrate(rho0, X)
    params = FamilyParams("IG_II", dict(gamma=gamma, k1=k1, A0=A0, x_min=-2.0, x_max=2.0))
    return make_family(params, dict(rho0=Profile.from_expr(rho0), u0=Profile.from_expr(u0)))


def test_ig_ii_without_source_never_breaks_down():
    fs = _ig_ii(0.0)
    assert math.isinf(fs.t_star)
    lo, hi = fs.x_range(3.0)
    x = np.linspace(lo, hi, 9)[1:-1]
    s = evaluate(fs, x, 3.0)
    xi = wave_variable(fs, x, 3.0)
    np.testing.assert_allclose(s.rho, fs.profiles["rho0"](xi), rtol=1e-14)


def test_ig_ii_horizon_formula():
    fs = _ig_ii(0.5)
    xs = np.linspace(-2, 2, 1024)
    rho_max = np.max(1 + 0.2 * np.tanh(xs))
    assert fs.t_star == pytest.approx(math.sqrt(3 * (1 / 3)) / (0.5 * rho_max), rel=1e-12)


def test_ig_ii_gamma3_literal_form():
    # with 3 A0 = 1 the printed gamma = 3 relation holds as written
    k1, A0 = 0.5, 1 / 3
    fs = _ig_ii(k1, A0)
    rho0, u0 = fs.profiles["rho0"], fs.profiles["u0"]
    t = 0.6
    lo, hi = fs.x_range(t)
    x = np.linspace(lo, hi, 200)[1:-1]
    xi = wave_variable(fs, x, t)
    sq = math.sqrt(3 * A0)
    lhs = u0(xi) * t - sq / k1 * np.log(1 - k1 * rho0(xi) * t / sq) + xi
    assert np.max(np.abs(lhs - x)) <= 1e-10


def test_ig_ii_is_isentropic(families):
    fs = families["IG_II"]
    lo, hi = fs.x_range(0.5)
    s = evaluate(fs, np.linspace(lo, hi, 21), 0.5)
    assert np.all(s.S == fs.S0)


def _simple_oracle(v0, k1, k2, gamma, x, t):
    """Classical simple wave built from the characteristic construction."""
    law = IdealGas(gamma)
    A = float(law.A(k2))

    def sound(v):
        return (gamma - 1) * (v - k1) / 2

    out = []
    for xx in x:
        xi = brentq(lambda s: s + (v0(s) + sound(v0(s))) * t - xx, -10, 10, xtol=1e-15,
                    rtol=1e-15)
        v = float(v0(xi))
        c = sound(v)
        out.append(((c * c / (gamma * A)) ** (1 / (gamma - 1)), v, k2))
    return np.array(out)


def test_simple_wave_matches_characteristic_oracle(families):
    fs = families["SIMPLE"]
    t = 0.4
    lo, hi = fs.x_range(t)
    x = np.random.default_rng(5).uniform(lo, hi, 200)
    got = evaluate(fs, x, t).as_array()
    ref = _simple_oracle(fs.profiles["v0"], fs.k1, fs.k2, fs.law.gamma, x, t)
    assert np.max(np.abs(got - ref)) <= 1e-10


def test_simple_constant_v0_translates():
    law = IdealGas(1.4)
    params = FamilyParams("SIMPLE", dict(k1=-3.0, k2=0.1, x_min=-2.0, x_max=2.0), law=law)
    fs = make_family(params, dict(v0=Profile.constant(0.5)))
    c = (law.gamma - 1) * (0.5 + 3.0) / 2
    x, t = np.linspace(-1, 1, 9), 0.3
    np.testing.assert_allclose(wave_variable(fs, x, t), x - (0.5 + c) * t, atol=1e-13)


@pytest.mark.parametrize("fid", ["IG_I", "VK_A", "CH_PSI", "L2_III", "L2_V"])
def test_entropy_transported_with_flow(families, fid):
    fs = families[fid]
    T = min(0.5 * fs.t_star, 0.3)
    lo, hi = fs.x_domain
    # particles drift slower than u + c waves, so start them on the leading side
    x0s = lo + (hi - lo) * np.array([0.6, 0.7, 0.8, 0.9])

    def rhs(t, y):
        return evaluate(fs, y, t).u

    sol = solve_ivp(rhs, (0, T), x0s, method="DOP853", rtol=1e-12, atol=1e-12, vectorized=False)
    S0 = evaluate(fs, x0s, 0.0).S
    S1 = evaluate(fs, sol.y[:, -1], T).S
    assert np.max(np.abs(S1 - S0)) <= 1e-8


def test_l2_pressure_and_velocity_constant_on_contact(families):
    fs = families["L2_I"]
    u0 = fs.params.get("u0")
    xi = np.linspace(-1, 1, 9)
    p = [fs.law.pressure(*evaluate(fs, xi + u0 * t, t).as_array()[..., [0, 2]].T)
         for t in (0.0, 0.4, 0.9)]
    np.testing.assert_allclose(p[1], p[0], rtol=1e-10)
    np.testing.assert_allclose(p[2], p[0], rtol=1e-10)


def test_sources_match_closed_forms(families):
    rho, u, S = np.linspace(0.5, 2, 5), np.linspace(-1, 1, 5), np.linspace(0, 0.3, 5)
    ig2 = families["IG_II"]
    np.testing.assert_allclose(source(ig2)(rho, u, S), ig2.k1 * rho ** ((ig2.gamma + 1) / 2),
                               rtol=1e-12)
    l24 = families["L2_IV_2"]
    np.testing.assert_allclose(source(l24)(rho, u, S),
                               -l24.params.get("k0") * u - l24.params.get("k1"), rtol=1e-12)
    ig1 = families["IG_I"]
    g = ig1.gamma
    np.testing.assert_allclose(source(ig1)(rho, u, S), ig1.k2 / (1 - g) * rho**g, rtol=1e-12)
    l21 = families["L2_I"]
    assert np.allclose(source(l21)(rho, u, S), 0.5)


def test_source_balances_pressure_gradient_for_l2_i(families):
    fs = families["L2_I"]
    x = np.linspace(-1.5, 1.5, 31)
    U, dU = fs.initial(x)
    rho, S = U[:, 0], U[:, 2]
    p_x = fs.law.p_rho(rho, S) * dU[:, 0] + fs.law.p_S(rho, S) * dU[:, 2]
    np.testing.assert_allclose(p_x, rho * source(fs)(rho, U[:, 1], S), rtol=1e-12)


def test_out_of_validity(families):
    fs = families["IG_II"]
    with pytest.raises(OutOfValidity) as err:
        evaluate(fs, 0.0, fs.t_star + 0.1)
    assert err.value.t_star == fs.t_star
    with pytest.raises(OutOfValidity):
        evaluate(fs, 0.0, -0.1)
    with pytest.raises(OutOfValidity):
        evaluate(fs, 100.0, 0.1)
    with pytest.raises(NoBracket):
        wave_variable(fs, 100.0, 0.1)


def test_constraint_violation_on_perturbed_data():
    params, profiles = default_fixture("IG_I")
    bumped = Profile.from_expr(profiles["u0"].expr + sp.Rational(1, 1000) * sp.exp(-50 * X**2))
    with pytest.raises(ConstraintViolation) as err:
        make_family(params, dict(profiles, u0=bumped))
    assert err.value.residual >= 1e-4


def test_bad_params():
    with pytest.raises(BadParams):
        FamilyParams("NOPE", {})
    with pytest.raises(BadParams):
        FamilyParams("IG_I", dict(gamma=1.4))
    with pytest.raises(BadParams):
        FamilyParams("SIMPLE", dict(k1=0.0, k2=0.0))
    params, profiles = default_fixture("IG_I")
    with pytest.raises(BadParams):
        make_family(params.with_values(gamma=0.9), profiles)
    with pytest.raises(BadParams):
        make_family(params.with_values(x_min=2.0), profiles)


def test_closure_rejects_unknown_symbols():
    with pytest.raises(ValueError):
        Closure.from_expr("rho + y")
    with pytest.raises(ValueError):
        Profile.from_expr("x + y")


def test_tabulated_profile_matches_expression():
    xs = np.linspace(-2, 2, 401)
    prof = Profile.tabulated(xs, np.sin(xs))
    x = np.linspace(-1.5, 1.5, 13)
    np.testing.assert_allclose(prof(x), np.sin(x), atol=1e-8)
    np.testing.assert_allclose(prof.deriv(x), np.cos(x), atol=1e-6)
