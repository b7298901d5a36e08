"""Default scenario for every family id.

Initial data are built symbolically so that the differential constraints
hold exactly; e.g. for IG_I the entropy profile is chosen first and the
density and velocity follow from the two constraint relations.
"""
from __future__ import annotations

import sympy as sp

from .eos import Constant, Exponential, IdealGas, Linear
from .families import FamilyParams, FamilySolution, make_family
from .profiles import Closure, Function1, Profile, X

x = X


def _P(expr) -> Profile:
    return Profile.from_expr(sp.simplify(expr) if expr.has(sp.Symbol) else expr)


def ig_i():
    g, Cv, S_hat, k2, c1 = sp.Rational(7, 5), 1, 0, sp.Rational(1, 2), sp.Rational(1, 5)
    beta = sp.Rational(1, 4)
    A = sp.exp(beta * x)                         # A(S0(x))
    S0 = S_hat + Cv * sp.log(A)
    rho0 = sp.diff(A, x) / k2
    u0 = c1 + 2 * sp.sqrt(g * A) * rho0 ** ((g - 1) / 2) / (g - 1)
    params = FamilyParams("IG_I", dict(gamma=1.4, Cv=1.0, S_hat=0.0, k2=0.5, c1=0.2,
                                       x_min=-1.0, x_max=1.0, t_max=2.0))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def ig_ii():
    # gamma = 3 with A0 = 1/3 makes sqrt(gamma A0) = 1
    k1 = sp.Rational(1, 2)
    rho0 = 1 + sp.Rational(1, 5) * sp.tanh(x)
    u0 = rho0 - k1 * sp.integrate(rho0, x)
    params = FamilyParams("IG_II", dict(gamma=3.0, Cv=1.0, S_hat=0.0, k1=0.5, A0=1.0 / 3.0,
                                        x_min=-2.0, x_max=2.0, t_max=2.0))
    return params, dict(rho0=_P(rho0), u0=_P(u0))


def vk_a():
    alpha, kappa, beta = 1, sp.Rational(1, 2), sp.Rational(7, 10)
    c0, c1, s1, K = sp.Rational(2, 5), sp.Rational(3, 10), sp.Rational(3, 10), 1
    S0 = s1 * x
    a = alpha * sp.exp(kappa * S0)
    rho0 = s1 * a * kappa * a / (c0 * a + c1)
    R0 = (c0 * beta * S0 - c1 * beta * sp.exp(-kappa * S0) / (alpha * kappa) + K) / (c0 * a + c1)
    u0 = R0 - a / rho0
    params = FamilyParams("VK_A", dict(c0=0.4, c1=0.3, x_min=-2.0, x_max=2.0, t_max=2.0),
                          dict(a=Exponential(1.0, 0.5), b=Linear(0.0, 0.7)))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def ch_psi():
    a0, c0, Rb, c_hat = 1, sp.Rational(1, 5), 1, sp.Rational(1, 2)
    rho0 = 1 + sp.Rational(1, 5) * sp.tanh(x)
    R0 = 1 / (sp.Rational(1, Rb) + c0 / a0 * sp.integrate(rho0, x))
    u0 = R0 - a0 / rho0
    S0 = c_hat / R0
    params = FamilyParams("CH_PSI", dict(a0=1.0, c0=0.2, x_min=-1.0, x_max=1.0, t_max=2.0))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def ch_m0():
    m0, beta = sp.Rational(1, 2), sp.Rational(2, 5)
    psi = sp.exp(beta * x) - m0
    phi = sp.Rational(1, 2) + sp.Rational(1, 5) * sp.tanh(x)
    params = FamilyParams("CH_M0", dict(a0=1.0, m0=0.5, S0=0.1, x_min=-1.0, x_max=1.0,
                                        t_max=2.0))
    return params, dict(psi=_P(psi), phi=_P(phi))


def l2_i():
    law = IdealGas(1.4)
    g, gsrc = sp.Rational(7, 5), sp.Rational(1, 2)
    rho0 = 1 + sp.Rational(3, 10) * sp.tanh(x)
    p0 = 2 + gsrc * sp.integrate(rho0, x)
    S0 = sp.log(p0 / rho0**g)
    params = FamilyParams("L2_I", dict(u0=0.7, x_min=-2.0, x_max=2.0, t_max=2.0),
                          dict(f=Closure.from_expr("1/2")), law)
    return params, dict(rho0=_P(rho0), S0=_P(S0))


def l2_ii():
    law = IdealGas(1.4)
    g, gp = sp.Rational(7, 5), sp.Rational(3, 10)
    rho0 = 1 + sp.Rational(3, 10) * sp.tanh(x)
    p0 = 2 + gp * sp.integrate(sp.expand(rho0**2), x)
    S0 = sp.log(p0 / rho0**g)
    params = FamilyParams("L2_II", dict(u0=0.3, x_min=-2.0, x_max=2.0, t_max=2.0),
                          dict(F2=Function1("1/5 + u/2", "u"), psi=Function1("3/10*rho**2", "rho")),
                          law)
    return params, dict(rho0=_P(rho0), S0=_P(S0))


def l2_iii():
    g, pi = 2, sp.Rational(1, 2)
    u0 = x / 2 + x**2 / 10 + x**3 / 50
    du, d2u = sp.diff(u0, x), sp.diff(u0, x, 2)
    p0 = du**g
    rho0 = (g * du ** (g - 1) * d2u / pi) ** sp.Rational(1, g + 2)
    S0 = sp.log(p0 / rho0**g)
    params = FamilyParams("L2_III", dict(gamma=2.0, Cv=1.0, S_hat=0.0, x_min=-1.0, x_max=1.0,
                                         t_max=2.0), dict(pi0=Function1("1/2", "u")))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def l2_iv_1():
    rho0 = 1 + sp.Rational(1, 5) * sp.tanh(x)
    params = FamilyParams("L2_IV_1", dict(gamma=1.4, Cv=1.0, S_hat=0.0, k0=0.5, mu0=0.3,
                                          x_min=-2.0, x_max=-0.5, t_max=2.0))
    return params, dict(rho0=_P(rho0))


def l2_iv_2():
    g, Cv, S_hat, k0, k1 = sp.Rational(7, 5), 1, sp.Rational(1, 5), sp.Rational(1, 2), sp.Rational(3, 10)
    Cp = g * Cv
    rho0 = 1 + sp.Rational(2, 5) * sp.tanh(2 * x)
    u_hat = -k0 + k1 * sp.exp(-S_hat / Cp)
    params = FamilyParams("L2_IV_2", dict(gamma=1.4, Cv=1.0, S_hat=0.2, k0=0.5, k1=0.3,
                                          x_min=-2.0, x_max=2.0, t_max=2.0))
    return params, dict(rho0=_P(rho0), u0=_P(u_hat * x), S0=_P(-Cp * sp.log(rho0)))


def l2_iv_vk():
    k0, c0 = sp.Rational(1, 2), 1
    S0 = 2 + sp.Rational(3, 10) * x
    a = sp.exp(S0 / 2)
    rho0 = a**2 / (S0 - c0)
    u0 = sp.integrate(k0 * c0 / (S0 - c0), x)
    params = FamilyParams("L2_IV_VK", dict(k0=0.5, k1=0.3, x_min=-2.0, x_max=2.0, t_max=2.0),
                          dict(a=Exponential(1.0, 0.5), b=Linear(0.0, 1.0)))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def l2_v():
    k0 = sp.Rational(1, 2)
    gexp = -x - x**2 / 10
    u0 = sp.exp(gexp) / 5
    S0 = k0 * x - k0 / sp.diff(gexp, x)          # b(S) = S
    a = sp.exp(S0 / 2)
    rho0 = a**2 / (S0 - k0 * x)
    params = FamilyParams("L2_V", dict(k0=0.5, k1=0.4, x_min=-1.0, x_max=1.0, t_max=2.0),
                          dict(a=Exponential(1.0, 0.5), b=Linear(0.0, 1.0)))
    return params, dict(rho0=_P(rho0), u0=_P(u0), S0=_P(S0))


def l2_v_ch():
    params = FamilyParams("L2_V_CH", dict(a0=1.0, k0=0.5, k1=0.4, c_hat=0.3,
                                          x_min=-2.0, x_max=-0.5, t_max=2.0))
    return params, dict(S0=_P(sp.Rational(1, 10) * x))


def simple():
    params = FamilyParams("SIMPLE", dict(k1=-3.0, k2=0.1, x_min=-2.0, x_max=2.0, t_max=2.0),
                          law=IdealGas(1.4))
    return params, dict(v0=_P(sp.Rational(1, 2) + sp.Rational(2, 5) * sp.tanh(2 * x)))


DEFAULTS = {
    "IG_I": ig_i, "IG_II": ig_ii, "VK_A": vk_a, "CH_PSI": ch_psi, "CH_M0": ch_m0,
    "L2_I": l2_i, "L2_II": l2_ii, "L2_III": l2_iii, "L2_IV_1": l2_iv_1,
    "L2_IV_2": l2_iv_2, "L2_IV_VK": l2_iv_vk, "L2_V": l2_v, "L2_V_CH": l2_v_ch,
    "SIMPLE": simple,
}


def default_fixture(family_id: str):
    """(FamilyParams, profiles) of the shipped default scenario."""
    return DEFAULTS[family_id]()


def default_family(family_id: str, check: bool = True) -> FamilySolution:
    params, profiles = default_fixture(family_id)
    return make_family(params, profiles, check=check)


__all__ = ["DEFAULTS", "default_fixture", "default_family", "Constant"]
