"""Closed-form exact solutions of the 1-D Euler equations with a momentum
source, one class per family id.

Every family maps a characteristic label ``xi`` and time ``t`` to a state
(``at_label``) and to a position (``char_x``); ``evaluate`` inverts the
position map, either in closed form or by vectorised bisection. Validity
horizons are found at construction from the analytic denominators plus a
scan of the characteristic map on a 1024-point label grid.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np
import sympy as sp

from .closures import CompatFunctions, lambda2_q, zero_q
from .eos import (LAMBDA2, LAMBDA3, Chaplygin, IdealGas, PressureLaw, State,
                  VonKarman, sigma_matrix)
from .errors import (BadParams, BalanceWavesError, ConstraintViolation,
                     InversionFailure, NoBracket, NonHyperbolic, OutOfValidity)
from .numkit import bisect_vec, gauss_legendre, ode_solve, OdeConfig
from .profiles import Closure, Function1, Profile


@dataclass(frozen=True)
class FamilySchema:
    values: tuple[str, ...]
    functions: tuple[str, ...] = ()
    profiles: tuple[str, ...] = ()
    needs_law: bool = False
    tag: str = LAMBDA3
    summary: str = ""


SCHEMAS: dict[str, FamilySchema] = {
    "IG_I": FamilySchema(("gamma", "Cv", "S_hat", "k2", "c1"), (), ("rho0", "u0", "S0"),
                         summary="ideal gas, u+c waves, k0 = k1 = 0"),
    "IG_II": FamilySchema(("gamma", "Cv", "S_hat", "k1", "S0"), (), ("rho0", "u0"),
                          summary="ideal gas, u+c waves, k0 = k2 = 0, isentropic"),
    "VK_A": FamilySchema(("c0", "c1"), ("a", "b"), ("rho0", "u0", "S0"),
                         summary="Von Karman law with a'(S) != 0"),
    "CH_PSI": FamilySchema(("a0", "c0"), (), ("rho0", "u0", "S0"),
                           summary="Chaplygin gas, Psi = c0 R1^2"),
    "CH_M0": FamilySchema(("a0", "m0", "S0"), (), ("psi", "phi"),
                          summary="Chaplygin gas, q^2 = 0 branch"),
    "L2_I": FamilySchema(("u0",), ("f",), ("rho0", "S0"), True, LAMBDA2,
                         "contact family, F1 = F2 = 0"),
    "L2_II": FamilySchema(("u0",), ("F2", "psi"), ("rho0", "S0"), True, LAMBDA2,
                          "contact family, F1 = 0"),
    "L2_III": FamilySchema(("gamma", "Cv", "S_hat"), ("pi0",), ("rho0", "u0", "S0"),
                           tag=LAMBDA2, summary="contact family, F2 = 0, ideal gas"),
    "L2_IV_1": FamilySchema(("gamma", "Cv", "S_hat", "k0", "mu0"), (), ("rho0",),
                            tag=LAMBDA2, summary="ideal gas, mu = mu0 u^-(gamma+1)"),
    "L2_IV_2": FamilySchema(("gamma", "Cv", "S_hat", "k0", "k1"), (), ("rho0", "u0", "S0"),
                            tag=LAMBDA2, summary="ideal gas, mu = 0"),
    "L2_IV_VK": FamilySchema(("k0", "k1"), ("a", "b"), ("rho0", "u0", "S0"),
                             tag=LAMBDA2, summary="Von Karman law, mu = 0"),
    "L2_V": FamilySchema(("k0", "k1"), ("a", "b"), ("rho0", "u0", "S0"),
                         tag=LAMBDA2, summary="Von Karman law, mu = k0, k2 = 0"),
    "L2_V_CH": FamilySchema(("a0", "k0", "k1", "c_hat"), (), ("S0",),
                            tag=LAMBDA2, summary="Chaplygin specialisation of L2_V"),
    "SIMPLE": FamilySchema(("k1", "k2"), (), ("v0",), True,
                           summary="homogeneous simple wave on u + c"),
}
FAMILY_IDS = tuple(SCHEMAS)

HORIZON_GRID = 1024
HORIZON_STEPS = 128


@dataclass(frozen=True)
class FamilyParams:
    """Family id plus its scalar constants, function-valued parameters and,
    where the family leaves it free, the pressure law.

    ``x_min``/``x_max`` (label domain) and ``t_max`` (scan horizon) are
    optional entries of ``values``.
    """
    family: str
    values: Mapping[str, float] = field(default_factory=dict)
    functions: Mapping[str, Any] = field(default_factory=dict)
    law: PressureLaw | None = None

    def __post_init__(self):
        if self.family not in SCHEMAS:
            raise BadParams(f"unknown family id {self.family!r}; known: {', '.join(FAMILY_IDS)}")
        schema = SCHEMAS[self.family]
        vals = dict(self.values)
        # IG_II accepts A0 in place of S0; Cv and S_hat default to 1 and 0
        missing = [k for k in schema.values if k not in vals
                   and not (self.family == "IG_II" and k == "S0" and "A0" in vals)
                   and k not in ("Cv", "S_hat")]
        missing += [k for k in schema.functions if k not in self.functions]
        if schema.needs_law and self.law is None:
            missing.append("law")
        if missing:
            raise BadParams(f"{self.family}: missing parameters {missing}")
        for k, v in vals.items():
            if not np.isfinite(v):
                raise BadParams(f"{self.family}: parameter {k} is not finite")

    def get(self, key: str, default: float | None = None) -> float:
        if key in self.values:
            return float(self.values[key])
        if default is None:
            raise BadParams(f"{self.family}: missing parameter {key!r}")
        return float(default)

    def with_values(self, **updates) -> "FamilyParams":
        vals = dict(self.values)
        vals.update(updates)
        return FamilyParams(self.family, vals, dict(self.functions), self.law)


@dataclass(frozen=True)
class SourceTerm:
    f: Callable
    description: str = ""

    def __call__(self, rho, u, S):
        return self.f(rho, u, S)


def _E(k: float, t):
    """(exp(k t) - 1)/k, equal to t for k = 0."""
    t = np.asarray(t, dtype=float)
    if k == 0.0:
        return t
    return np.expm1(k * t) / k


def _arr(x):
    return np.asarray(x, dtype=float)


def _ideal_law(p: FamilyParams) -> IdealGas:
    try:
        return IdealGas(p.get("gamma"), p.get("Cv", 1.0), p.get("S_hat", 0.0))
    except ValueError as exc:
        raise BadParams(str(exc)) from exc


def qq2_residual(law, f, F, G, rho, S):
    """f - [rho F (p_S/rho - c int c_S/rho) + rho c G]."""
    c = law.sound_speed(rho, S)
    return f - (rho * F * (law.p_S(rho, S) / rho - c * law.int_cS(rho, S)) + rho * c * G)


class FamilySolution:
    """Base class: subclasses implement the label map and the state formula."""

    family_id = ""
    tag = LAMBDA3
    explicit_label = False
    default_domain = (-1.0, 1.0)

    def __init__(self, params: FamilyParams, profiles: Mapping[str, Profile]):
        self.params = params
        self.profiles = dict(profiles)
        missing = [k for k in SCHEMAS[self.family_id].profiles if k not in self.profiles]
        if missing:
            raise BadParams(f"{self.family_id}: missing profiles {missing}")
        lo = params.get("x_min", self.default_domain[0])
        hi = params.get("x_max", self.default_domain[1])
        if not lo < hi:
            raise BadParams("x_min must be below x_max")
        self.x_domain = (lo, hi)
        self.t_max = params.get("t_max", 2.0)
        self.t_star = math.inf
        self.law = self._make_law()
        self._setup()

    # hooks -------------------------------------------------------------------
    def _make_law(self) -> PressureLaw:
        return self.params.law

    def _setup(self):
        pass

    def char_x(self, xi, t):
        raise NotImplementedError

    def at_label(self, xi, t):
        raise NotImplementedError

    def f(self, rho, u, S):
        raise NotImplementedError

    def q(self, rho, u, S):
        raise NotImplementedError

    def structural(self, rho, u, S) -> list[tuple[str, np.ndarray, float]]:
        return []

    def analytic_horizon(self) -> float:
        return math.inf

    def crossing_free(self) -> bool:
        return False

    def initial(self, x):
        """(U0, dU0/dx), each of shape (..., 3)."""
        P = self.profiles
        x = _arr(x)
        U = np.stack(np.broadcast_arrays(P["rho0"](x), P["u0"](x), P["S0"](x)), -1)
        dU = np.stack(np.broadcast_arrays(P["rho0"].deriv(x), P["u0"].deriv(x),
                                          P["S0"].deriv(x)), -1)
        return U, dU

    # shared machinery ----------------------------------------------------------
    @property
    def grid(self) -> np.ndarray:
        return np.linspace(*self.x_domain, HORIZON_GRID)

    def label(self, x, t):
        x, t = np.broadcast_arrays(_arr(x), _arr(t))
        lo = np.full(x.shape, self.x_domain[0])
        hi = np.full(x.shape, self.x_domain[1])
        xi = bisect_vec(lambda s: self.char_x(s, t) - x, lo, hi)
        return np.where(t == 0, x, xi)

    def x_range(self, t):
        lo, hi = self.x_domain
        return self.char_x(lo, t), self.char_x(hi, t)

    def source(self) -> SourceTerm:
        return SourceTerm(self.f, f"{self.family_id} force")

    def compat(self) -> CompatFunctions:
        return CompatFunctions(self.law, self.tag, self.f, self.q, self.family_id)

    def state_at_label(self, xi, t) -> State:
        rho, u, S = self.at_label(xi, t)
        return State(rho, u, S)

    def _row_ok(self, t: float) -> bool:
        xi = self.grid
        with np.errstate(all="ignore"):
            try:
                rho, u, S = (np.broadcast_to(_arr(v), xi.shape) for v in self.at_label(xi, t))
                if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))
                        and np.all(np.isfinite(S)) and np.all(rho > 0)):
                    return False
                self.law.sound_speed(rho, S)
                xs = _arr(self.char_x(xi, t))
            except (BalanceWavesError, ValueError, FloatingPointError):
                return False
        return bool(np.all(np.isfinite(xs)) and np.all(np.diff(xs) > 0))

    def _compute_horizon(self) -> float:
        analytic = self.analytic_horizon()
        if not self._row_ok(0.0):
            raise BadParams(f"{self.family_id}: initial data not admissible on the label domain")
        t_cap = min(analytic, self.t_max)
        n = HORIZON_STEPS
        ts = t_cap * np.arange(1, n + 1) / n
        if t_cap == analytic:
            ts = ts[:-1]
        dt = t_cap / n
        for k, t in enumerate(ts):
            if not self._row_ok(float(t)):
                return max(0.0, float(t) - 2 * dt)
        if analytic <= self.t_max:
            return analytic
        return math.inf if (math.isinf(analytic) and self.crossing_free()) else self.t_max

    def check_time(self, t):
        t = _arr(t)
        if np.any(t < 0) or np.any(t >= self.t_star):
            raise OutOfValidity(f"{self.family_id}: t outside [0, {self.t_star:.17g})",
                                self.t_star)

    def with_law(self, law: PressureLaw) -> "FamilySolution":
        """Copy with a different pressure law but the same source closure
        (used to exercise the structural checks)."""
        other = copy.copy(self)
        other.law = law
        return other


# ---------------------------------------------------------------------------
# u + c families

class IGI(FamilySolution):
    """Ideal gas with k0 = k1 = 0: R1 = c1 everywhere, A(S) grows along u + c."""
    family_id = "IG_I"

    def _make_law(self):
        return _ideal_law(self.params)

    def _setup(self):
        g = self.law.gamma
        self.gamma, self.k2, self.c1 = g, self.params.get("k2"), self.params.get("c1")
        self.c2 = (self.k2 * g * math.sqrt(g) / (g - 1)
                   * ((g - 1) / (2 * math.sqrt(g))) ** ((g + 1) / (g - 1)))

    def char_x(self, xi, t):
        g = self.gamma
        u0 = self.profiles["u0"](xi)
        return ((g + 1) / 2 * u0 - (g - 1) / 2 * self.c1) * _arr(t) + _arr(xi)

    def at_label(self, xi, t):
        g, law = self.gamma, self.law
        u0 = self.profiles["u0"](xi)
        A0 = law.A(self.profiles["S0"](xi))
        e = g / (g - 1)
        A = (self.c2 * (u0 - self.c1) ** ((g + 1) / (g - 1)) * _arr(t) + A0**e) ** (1 / e)
        c = (g - 1) / 2 * (u0 - self.c1)
        rho = (c * c / (g * A)) ** (1 / (g - 1))
        return rho, u0 + 0 * rho, law.entropy_from_A(A)

    def f(self, rho, u, S):
        g = self.gamma
        return self.k2 / (1 - g) * _arr(rho) ** g + 0 * _arr(u)

    def q(self, rho, u, S):
        rho = _arr(rho)
        return np.stack(np.broadcast_arrays(self.f(rho, u, S),
                                            rho * self.k2 / self.law.A.deriv(S)), -1)

    def structural(self, rho, u, S):
        law = self.law
        F = self.k2 / law.A.deriv(S)
        G = 0.0 * _arr(rho)
        return [("qq2", qq2_residual(law, self.f(rho, u, S), F, G, rho, S), 1e-10)]

    def crossing_free(self):
        return bool(np.all(self.profiles["u0"].deriv(self.grid) >= 0))


class IGII(FamilySolution):
    """Ideal gas with k0 = k2 = 0: isentropic, density blows up at t*."""
    family_id = "IG_II"
    default_domain = (-2.0, 2.0)

    def _make_law(self):
        return _ideal_law(self.params)

    def _setup(self):
        law = self.law
        self.gamma = law.gamma
        self.k1 = self.params.get("k1")
        if "S0" in self.params.values:
            self.S0 = self.params.get("S0")
        else:
            self.S0 = float(law.entropy_from_A(self.params.get("A0")))
        self.A0 = float(law.A(self.S0))
        self.sq = math.sqrt(self.gamma * self.A0)
        self.kappa = self.k1 / self.sq

    def char_x(self, xi, t):
        g = self.gamma
        t = _arr(t)
        rho0, u0 = self.profiles["rho0"](xi), self.profiles["u0"](xi)
        y = self.kappa * rho0 * t
        m = (3 - g) / 2
        with np.errstate(all="ignore"):
            L = np.log1p(-y)
            if m == 0:
                phi = -L / y
            else:
                phi = -np.expm1(m * L) / (m * y)
        phi = np.where(y == 0, 1.0, phi)
        return u0 * t + self.sq * rho0 ** ((g - 1) / 2) * t * phi + _arr(xi)

    def at_label(self, xi, t):
        rho0, u0 = self.profiles["rho0"](xi), self.profiles["u0"](xi)
        rho = rho0 / (1 - self.kappa * rho0 * _arr(t))
        return rho, u0 + 0 * rho, self.S0 + 0 * rho

    def initial(self, x):
        P = self.profiles
        x = _arr(x)
        U = np.stack(np.broadcast_arrays(P["rho0"](x), P["u0"](x), self.S0 + 0 * x), -1)
        dU = np.stack(np.broadcast_arrays(P["rho0"].deriv(x), P["u0"].deriv(x), 0 * x), -1)
        return U, dU

    def f(self, rho, u, S):
        return self.k1 * _arr(rho) ** ((self.gamma + 1) / 2) + 0 * _arr(u)

    def q(self, rho, u, S):
        f = self.f(rho, u, S)
        return np.stack([f, 0 * f], -1)

    def structural(self, rho, u, S):
        G = self.k1 / np.sqrt(self.law.gamma * self.law.A(S))
        return [("qq2", qq2_residual(self.law, self.f(rho, u, S), 0.0, G, rho, S), 1e-10)]

    def analytic_horizon(self):
        if self.k1 <= 0:
            return math.inf
        return self.sq / (self.k1 * float(np.max(self.profiles["rho0"](self.grid))))

    def crossing_free(self):
        if self.k1 != 0:
            return False
        rho0 = self.profiles["rho0"](self.grid)
        speed = self.profiles["u0"](self.grid) + self.sq * rho0 ** ((self.gamma - 1) / 2)
        return bool(np.all(np.diff(speed) >= 0))


class VKA(FamilySolution):
    """Von Karman law, a'(S) != 0, f = c0 u - c1/rho."""
    family_id = "VK_A"
    n_quad = 32

    def _make_law(self):
        return VonKarman(self.params.functions["a"], self.params.functions["b"])

    def _setup(self):
        self.c0, self.c1 = self.params.get("c0"), self.params.get("c1")

    def _a_of_t(self, xi, t):
        a0 = self.law.a(self.profiles["S0"](xi))
        return a0 * np.exp(self.c0 * t) + self.c1 * _E(self.c0, t)

    def _H(self, S):
        law = self.law
        a = law.a(S)
        return (self.c0 * a + self.c1) * law.b.deriv(S) / (a * law.a.deriv(S))

    def _H_along(self, xi, tau):
        return self._H(self.law.a.inverse(self._a_of_t(xi, tau)))

    def _R0(self, xi):
        P = self.profiles
        return P["u0"](xi) + self.law.a(P["S0"](xi)) / P["rho0"](xi)

    def char_x(self, xi, t):
        xi, t = np.broadcast_arrays(_arr(xi), _arr(t))
        c0 = self.c0
        drift = gauss_legendre(lambda s: self._H_along(xi[..., None], s)
                               * _E(-c0, t[..., None] - s), 0.0, t, self.n_quad)
        return xi + self._R0(xi) * _E(-c0, t) + drift

    def at_label(self, xi, t):
        xi, t = np.broadcast_arrays(_arr(xi), _arr(t))
        c0 = self.c0
        I1 = gauss_legendre(lambda s: self._H_along(xi[..., None], s) * np.exp(c0 * s),
                            0.0, t, self.n_quad)
        R1 = np.exp(-c0 * t) * (self._R0(xi) + I1)
        a_t = self._a_of_t(xi, t)
        u0 = self.profiles["u0"](xi)
        return a_t / (R1 - u0), u0 + 0 * R1, self.law.a.inverse(a_t)

    def f(self, rho, u, S):
        return self.c0 * _arr(u) - self.c1 / _arr(rho)

    def _F(self, S):
        a = self.law.a(S)
        return (self.c0 * a + self.c1) / (a * self.law.a.deriv(S))

    def q(self, rho, u, S):
        rho = _arr(rho)
        return np.stack(np.broadcast_arrays(self.f(rho, u, S), rho * self._F(S)), -1)

    def structural(self, rho, u, S):
        law = self.law
        a = law.a(S)
        R1 = _arr(u) + a / _arr(rho)
        G = self.c0 * R1 / a - (self.c0 * a + self.c1) * law.b.deriv(S) / (a * a * law.a.deriv(S))
        return [("qq2", qq2_residual(law, self.f(rho, u, S), self._F(S), G, rho, S), 1e-10)]


class CHPSI(FamilySolution):
    """Chaplygin gas with f = c0 (R1)^2 and F = c0 R1 R2/a0."""
    family_id = "CH_PSI"

    def _make_law(self):
        try:
            return Chaplygin(self.params.get("a0"))
        except ValueError as exc:
            raise BadParams(str(exc)) from exc

    def _setup(self):
        self.a0, self.c0 = self.params.get("a0"), self.params.get("c0")

    def _R0(self, xi):
        return self.profiles["u0"](xi) + self.a0 / self.profiles["rho0"](xi)

    def char_x(self, xi, t):
        y = self.c0 * _arr(t) * self._R0(xi)
        with np.errstate(all="ignore"):
            g = np.where(y == 0, 1.0, np.log1p(y) / np.where(y == 0, 1.0, y))
        return _arr(xi) + _arr(t) * self._R0(xi) * g

    def at_label(self, xi, t):
        P, a0, c0 = self.profiles, self.a0, self.c0
        t = _arr(t)
        rho0, u0, S0 = P["rho0"](xi), P["u0"](xi), P["S0"](xi)
        m = a0 + rho0 * u0
        rho = a0 * (rho0 + c0 * m * t) / (a0 - c0 * u0 * m * t)
        S = S0 * (1 + c0 * t * (u0 + a0 / rho0))
        return rho, u0 + 0 * rho, S

    def f(self, rho, u, S):
        R1 = _arr(u) + self.a0 / _arr(rho)
        return self.c0 * R1 * R1

    def q(self, rho, u, S):
        rho = _arr(rho)
        R1 = _arr(u) + self.a0 / rho
        F = self.c0 * R1 * _arr(S) / self.a0
        return np.stack(np.broadcast_arrays(self.f(rho, u, S), rho * F), -1)

    def structural(self, rho, u, S):
        R1 = _arr(u) + self.a0 / _arr(rho)
        F = self.c0 * R1 * _arr(S) / self.a0
        G = self.f(rho, u, S) / self.a0
        return [("qq2", qq2_residual(self.law, self.f(rho, u, S), F, G, rho, S), 1e-10)]


class CHM0(FamilySolution):
    """Chaplygin gas, q^2 = 0: explicit in xi = x + m0 t and z = t - K(xi)."""
    family_id = "CH_M0"
    explicit_label = True

    def _make_law(self):
        try:
            return Chaplygin(self.params.get("a0"))
        except ValueError as exc:
            raise BadParams(str(exc)) from exc

    def _setup(self):
        self.a0, self.m0, self.S0 = (self.params.get(k) for k in ("a0", "m0", "S0"))
        lo, hi = self.x_domain
        self._xi_ref = 0.5 * (lo + hi)
        w = hi - lo
        self._inv_bracket = (lo - w, hi + w)

    def K(self, xi):
        if "K" in self.profiles:
            return self.profiles["K"](xi)
        psi, m0 = self.profiles["psi"], self.m0
        return gauss_legendre(lambda s: 1.0 / (psi(s) + m0), self._xi_ref, _arr(xi), 32)

    def G1(self, R1):
        """psi'(psi^{-1}(R1))."""
        psi = self.profiles["psi"]
        R1 = _arr(R1)
        lo, hi = self._inv_bracket
        xi = bisect_vec(lambda s: psi(s) - R1, np.full(R1.shape, lo), np.full(R1.shape, hi))
        return psi.deriv(xi)

    def char_x(self, xi, t):
        return _arr(xi) - self.m0 * _arr(t)

    def label(self, x, t):
        return _arr(x) + self.m0 * _arr(t)

    def at_label(self, xi, t):
        psi, phi = self.profiles["psi"](xi), self.profiles["phi"]
        z = _arr(t) - self.K(xi)
        ph = phi(z)
        rho = self.a0 / ((psi + self.m0) * (1 - ph))
        u = ph * (psi + self.m0) - self.m0
        return rho, u, self.S0 + 0 * rho

    def initial(self, x):
        x = _arr(x)
        psi, phi = self.profiles["psi"], self.profiles["phi"]
        P, dP = psi(x) + self.m0, psi.deriv(x)
        z0 = -self.K(x)
        dz0 = -1.0 / P
        ph, dph = phi(z0), phi.deriv(z0) * dz0
        rho = self.a0 / (P * (1 - ph))
        drho = -rho * (dP / P - dph / (1 - ph))
        u = ph * P - self.m0
        du = dph * P + ph * dP
        U = np.stack(np.broadcast_arrays(rho, u, self.S0 + 0 * x), -1)
        dU = np.stack(np.broadcast_arrays(drho, du, 0 * x), -1)
        return U, dU

    def f(self, rho, u, S):
        c = self.a0 / _arr(rho)
        return (_arr(u) - c + self.m0) * self.G1(_arr(u) + c)

    def q(self, rho, u, S):
        c = self.a0 / _arr(rho)
        g = -c * self.G1(_arr(u) + c)
        return np.stack([g, 0 * g], -1)

    def structural(self, rho, u, S):
        cf = self.compat()
        G1 = self.G1(_arr(u) + self.a0 / _arr(rho))
        z, w = cf.z_state(rho, u, S), cf.w_state(rho, u, S)
        return [("cc2-F1", z[..., 0] - self.m0 * G1, 1e-10), ("cc2-F2", z[..., 1], 1e-10),
                ("cc2-G1", w[..., 0] - G1, 1e-10), ("cc2-G2", w[..., 1], 1e-10)]

    def crossing_free(self):
        return True


class Simple(FamilySolution):
    """Homogeneous simple wave: R1 = k1, S = k2, u = v0(xi) carried at u + c."""
    family_id = "SIMPLE"

    def _setup(self):
        self.k1, self.k2 = self.params.get("k1"), self.params.get("k2")

    def _state(self, v):
        rho = self.law.rho_from_int(_arr(v) - self.k1, self.k2 + 0 * _arr(v))
        return rho, _arr(v) + 0 * rho, self.k2 + 0 * rho

    def char_x(self, xi, t):
        rho, u, S = self._state(self.profiles["v0"](xi))
        return (u + self.law.sound_speed(rho, S)) * _arr(t) + _arr(xi)

    def at_label(self, xi, t):
        rho, u, S = self._state(self.profiles["v0"](xi))
        return rho + 0 * _arr(t), u + 0 * _arr(t), S + 0 * _arr(t)

    def initial(self, x):
        v0 = self.profiles["v0"]
        x = _arr(x)
        rho, u, S = self._state(v0(x))
        c = self.law.sound_speed(rho, S)
        du = v0.deriv(x)
        # R1 = u - int c/rho constant: rho_x = rho u_x / c
        U = np.stack([rho, u, S], -1)
        dU = np.stack(np.broadcast_arrays(rho * du / c, du, 0 * x), -1)
        return U, dU

    def f(self, rho, u, S):
        return 0.0 * _arr(rho) * _arr(u)

    def q(self, rho, u, S):
        return zero_q(rho, u, S)

    def structural(self, rho, u, S):
        return [("B=0", self.f(rho, u, S), 0.0)]

    def crossing_free(self):
        rho, u, S = self._state(self.profiles["v0"](self.grid))
        return bool(np.all(np.diff(u + self.law.sound_speed(rho, S)) >= 0))


# ---------------------------------------------------------------------------
# contact (u) families, Riemann invariants R1 = p, R2 = u, v = S

def _com_residuals(law, f, F1, F2, rho, u, S, rel=1e-5):
    """(com1), (com2) evaluated by central differences in (p, u) at fixed S."""
    rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
    p = law.pressure(rho, S)

    def at(pp, uu):
        r = law.rho_from_pressure(pp, S)
        c2 = law.p_rho(r, S)
        F1v, F2v = _arr(F1(r, uu, S)), _arr(F2(r, uu, S))
        g1 = r * (_arr(f(r, uu, S)) + F2v)
        g2 = F1v / (r * c2)
        return np.stack(np.broadcast_arrays(F1v, F2v, g1, g2), -1)

    hp = rel * np.maximum(1.0, np.abs(p))
    hu = rel * np.maximum(1.0, np.abs(u))
    V = at(p, u)
    Dp = (at(p + hp, u) - at(p - hp, u)) / (2 * hp)[..., None]
    Du = (at(p, u + hu) - at(p, u - hu)) / (2 * hu)[..., None]
    F1v, F2v, g1, g2 = (V[..., i] for i in range(4))
    com1 = F1v * Dp[..., 2] + F2v * Du[..., 2] - (g1 * Dp[..., 0] + g2 * (Du[..., 0] + g1))
    com2 = F1v * Dp[..., 3] + F2v * Du[..., 3] - (g1 * Dp[..., 1] + g2 * (Du[..., 1] + g2))
    return com1, com2


class Lambda2Family(FamilySolution):
    tag = LAMBDA2

    def F1(self, rho, u, S):
        return 0 * _arr(rho) * _arr(u)

    def F2(self, rho, u, S):
        return 0 * _arr(rho) * _arr(u)

    def q(self, rho, u, S):
        return lambda2_q(self.law, self.f, self.F1, self.F2)(rho, u, S)

    def structural(self, rho, u, S):
        c1, c2 = _com_residuals(self.law, self.f, self.F1, self.F2, rho, u, S)
        return [("com1", c1, 1e-6), ("com2", c2, 1e-6)] + self.extra_structural(rho, u, S)

    def extra_structural(self, rho, u, S):
        return []


class L2I(Lambda2Family):
    family_id = "L2_I"
    explicit_label = True
    default_domain = (-2.0, 2.0)

    def _setup(self):
        self.u0 = self.params.get("u0")
        self._f = self.params.functions["f"]

    def char_x(self, xi, t):
        return _arr(xi) + self.u0 * _arr(t)

    def label(self, x, t):
        return _arr(x) - self.u0 * _arr(t)

    def at_label(self, xi, t):
        P = self.profiles
        rho = P["rho0"](xi) + 0 * _arr(t)
        return rho, self.u0 + 0 * rho, P["S0"](xi) + 0 * rho

    def initial(self, x):
        P = self.profiles
        x = _arr(x)
        U = np.stack(np.broadcast_arrays(P["rho0"](x), self.u0 + 0 * x, P["S0"](x)), -1)
        dU = np.stack(np.broadcast_arrays(P["rho0"].deriv(x), 0 * x, P["S0"].deriv(x)), -1)
        return U, dU

    def f(self, rho, u, S):
        return self._f(rho, u, S)

    def crossing_free(self):
        return True


class L2II(Lambda2Family):
    """F1 = 0, F2 = F2(u), f = -F2(u) + psi(rho)/rho; u = u_hat(t)."""
    family_id = "L2_II"
    default_domain = (-2.0, 2.0)
    explicit_label = True

    def _setup(self):
        self.u0 = self.params.get("u0")
        self._F2 = self.params.functions["F2"]
        self._psi = self.params.functions["psi"]
        expr, var = self._F2.expr, sp.Symbol(self._F2.var, real=True)
        poly = sp.Poly(expr, var) if expr.is_polynomial(var) else None
        if poly is not None and poly.degree() <= 1:
            self._alpha = float(poly.coeff_monomial(1))
            self._beta = float(poly.coeff_monomial(var)) if poly.degree() == 1 else 0.0
            self._traj = None
        else:
            tr = ode_solve(lambda t, y: np.array([-self._F2(y[0]), y[0]]),
                           [self.u0, 0.0], 0.0, self.t_max,
                           OdeConfig(method="rk45-adaptive", tol=1e-13))
            self._traj = tr

    def u_hat(self, t):
        t = _arr(t)
        if self._traj is not None:
            return self._traj(t)[..., 0]
        a, b = self._alpha, self._beta
        if b == 0:
            return self.u0 - a * t
        return -a / b + (self.u0 + a / b) * np.exp(-b * t)

    def int_u_hat(self, t):
        t = _arr(t)
        if self._traj is not None:
            return self._traj(t)[..., 1]
        a, b = self._alpha, self._beta
        if b == 0:
            return self.u0 * t - 0.5 * a * t * t
        return -a * t / b + (self.u0 + a / b) * _E(-b, t)

    def char_x(self, xi, t):
        return _arr(xi) + self.int_u_hat(t)

    def label(self, x, t):
        return _arr(x) - self.int_u_hat(t)

    def at_label(self, xi, t):
        P = self.profiles
        rho = P["rho0"](xi) + 0 * _arr(t)
        return rho, self.u_hat(t) + 0 * rho, P["S0"](xi) + 0 * rho

    def initial(self, x):
        P = self.profiles
        x = _arr(x)
        U = np.stack(np.broadcast_arrays(P["rho0"](x), self.u0 + 0 * x, P["S0"](x)), -1)
        dU = np.stack(np.broadcast_arrays(P["rho0"].deriv(x), 0 * x, P["S0"].deriv(x)), -1)
        return U, dU

    def f(self, rho, u, S):
        return -self._F2(u) + self._psi(rho) / _arr(rho)

    def F2(self, rho, u, S):
        return self._F2(u) + 0 * _arr(rho)

    def analytic_horizon(self):
        return math.inf if self._traj is None else self.t_max

    def crossing_free(self):
        return True


class L2III(Lambda2Family):
    """Ideal gas, F2 = 0, F1 = gamma p^(1+1/gamma), f = pi0(u) rho^(gamma+1)."""
    family_id = "L2_III"

    def _make_law(self):
        return _ideal_law(self.params)

    def _setup(self):
        self.gamma = self.law.gamma
        self._pi0 = self.params.functions["pi0"]

    def char_x(self, xi, t):
        return self.profiles["u0"](xi) * _arr(t) + _arr(xi)

    def at_label(self, xi, t):
        P = self.profiles
        rho0, S0 = P["rho0"](xi), P["S0"](xi)
        s = self.law.A(S0) ** (-1 / self.gamma)
        rho = rho0 * s / (rho0 * _arr(t) + s)
        return rho, P["u0"](xi) + 0 * rho, S0 + 0 * rho

    def f(self, rho, u, S):
        return self._pi0(u) * _arr(rho) ** (self.gamma + 1)

    def F1(self, rho, u, S):
        g = self.gamma
        return g * self.law.pressure(rho, S) ** (1 + 1 / g) + 0 * _arr(u)

    def extra_structural(self, rho, u, S):
        law, g = self.law, self.gamma
        rho = _arr(rho)
        phi = law.A(S) ** (1 / g)
        pi = self._pi0(u) / (g * law.A(S))
        return [("x-F1", self.F1(rho, u, S) - rho**2 * law.p_rho(rho, S) * phi, 1e-10),
                ("x-f", self.f(rho, u, S) - rho**2 * law.p_rho(rho, S) * pi, 1e-10)]

    def crossing_free(self):
        return bool(np.all(self.profiles["u0"].deriv(self.grid) >= 0))


class L2IV1(Lambda2Family):
    """Ideal gas, rho (f + F2) = mu0 u^-(gamma+1), u = -k0 x."""
    family_id = "L2_IV_1"
    explicit_label = True
    default_domain = (-2.0, -0.5)

    def _make_law(self):
        return _ideal_law(self.params)

    def _setup(self):
        self.gamma = self.law.gamma
        self.k0, self.mu0 = self.params.get("k0"), self.params.get("mu0")
        if self.k0 == 0:
            raise BadParams("L2_IV_1 needs k0 != 0")
        if np.any(-self.k0 * self.grid <= 0):
            raise BadParams("L2_IV_1 needs -k0 x > 0 on the domain")

    def _A(self, xi):
        g = self.gamma
        return self.mu0 / (g * self.k0) * (-self.k0 * _arr(xi) * self.profiles["rho0"](xi)) ** (-g)

    def char_x(self, xi, t):
        return _arr(xi) * np.exp(-self.k0 * _arr(t))

    def label(self, x, t):
        return _arr(x) * np.exp(self.k0 * _arr(t))

    def at_label(self, xi, t):
        t = _arr(t)
        rho = self.profiles["rho0"](xi) * np.exp(self.k0 * t)
        u = -self.k0 * self.char_x(xi, t)
        return rho, u, self.law.entropy_from_A(self._A(xi)) + 0 * rho

    def initial(self, x):
        x = _arr(x)
        r = self.profiles["rho0"]
        rho, drho = r(x), r.deriv(x)
        S = self.law.entropy_from_A(self._A(x))
        dS = -self.gamma * self.law.Cv * (1 / x + drho / rho)
        U = np.stack(np.broadcast_arrays(rho, -self.k0 * x, S), -1)
        dU = np.stack(np.broadcast_arrays(drho, -self.k0 + 0 * x, dS), -1)
        return U, dU

    def f(self, rho, u, S):
        return -self.k0 * _arr(u) + self.mu0 * _arr(u) ** (-(self.gamma + 1)) / _arr(rho)

    def F1(self, rho, u, S):
        return -self.k0 * self.gamma * self.law.pressure(rho, S) + 0 * _arr(u)

    def F2(self, rho, u, S):
        return self.k0 * _arr(u) + 0 * _arr(rho)

    def extra_structural(self, rho, u, S):
        rho = _arr(rho)
        c2 = self.law.p_rho(rho, S)
        return [("vv3", self.F1(rho, u, S) - rho * c2 * (-self.k0), 1e-10)]

    def crossing_free(self):
        return True


class L2IV2(Lambda2Family):
    """Ideal gas, mu = 0, f = -k0 u - k1, uniform initial pressure."""
    family_id = "L2_IV_2"
    explicit_label = True
    default_domain = (-2.0, 2.0)

    def _make_law(self):
        return _ideal_law(self.params)

    def _setup(self):
        self.gamma = self.law.gamma
        self.k0, self.k1 = self.params.get("k0"), self.params.get("k1")
        if self.k0 == 0:
            raise BadParams("L2_IV_2 needs k0 != 0")
        mid = 0.5 * sum(self.x_domain)
        P = self.profiles
        self.p0 = float(self.law.pressure(P["rho0"](mid), P["S0"](mid)))
        self.u0_hat = float(P["u0"].deriv(mid))

    def char_x(self, xi, t):
        k0, k1 = self.k0, self.k1
        t = _arr(t)
        u0 = self.profiles["u0"](xi)
        return _arr(xi) - k1 / k0 * t + (u0 + k1 / k0) * _E(-k0, t)

    def label(self, x, t):
        k0, k1, uh = self.k0, self.k1, self.u0_hat
        x, t = _arr(x), _arr(t)
        em = np.expm1(-k0 * t)          # e^{-k0 t} - 1
        return (k0 * (k0 * x + k1 * t) + k1 * em) / (k0 * (k0 - uh * em))

    def at_label(self, xi, t):
        k0, k1, g = self.k0, self.k1, self.gamma
        t = _arr(t)
        P = self.profiles
        rho0, u0, S0 = P["rho0"](xi), P["u0"](xi), P["S0"](xi)
        s = self.law.A(S0) ** (1 / g)
        rho = k0 * rho0 * np.exp(k0 * t) / (k0 + k1 * rho0 * s * np.expm1(k0 * t))
        u = -k1 / k0 + (u0 + k1 / k0) * np.exp(-k0 * t)
        return rho, u, S0 + 0 * rho

    def f(self, rho, u, S):
        return -self.k0 * _arr(u) - self.k1 + 0 * _arr(rho)

    def F1(self, rho, u, S):
        g = self.gamma
        p = self.law.pressure(rho, S)
        return g * (-self.k0 * p + self.k1 * p ** (1 + 1 / g)) + 0 * _arr(u)

    def F2(self, rho, u, S):
        return self.k0 * _arr(u) + self.k1 + 0 * _arr(rho)

    def extra_structural(self, rho, u, S):
        rho = _arr(rho)
        c2 = self.law.p_rho(rho, S)
        h = self.k1 * self.law.A(S) ** (1 / self.gamma)
        return [("vv3", self.F1(rho, u, S) - rho * c2 * (-self.k0 + rho * h), 1e-10)]

    def analytic_horizon(self):
        # k0 - u0_hat (e^{-k0 t} - 1) must stay positive
        k0, uh = self.k0, self.u0_hat
        if k0 > 0 and uh < 0 and k0 + uh <= 0:
            return -math.log(1 + k0 / uh) / k0
        return math.inf

    def crossing_free(self):
        return True


class L2IVVK(Lambda2Family):
    """Von Karman law, mu = 0, f = -(k0 u + k1), uniform initial pressure c0."""
    family_id = "L2_IV_VK"
    default_domain = (-2.0, 2.0)

    def _make_law(self):
        return VonKarman(self.params.functions["a"], self.params.functions["b"])

    def _setup(self):
        self.k0, self.k1 = self.params.get("k0"), self.params.get("k1")
        if self.k0 == 0:
            raise BadParams("L2_IV_VK needs k0 != 0")
        mid = 0.5 * sum(self.x_domain)
        P = self.profiles
        self.c0 = float(self.law.pressure(P["rho0"](mid), P["S0"](mid)))

    def char_x(self, xi, t):
        k0, k1 = self.k0, self.k1
        t = _arr(t)
        u0 = self.profiles["u0"](xi)
        return _arr(xi) - k1 / k0 * t + (u0 + k1 / k0) * _E(-k0, t)

    def at_label(self, xi, t):
        k0, k1 = self.k0, self.k1
        t = _arr(t)
        P, law = self.profiles, self.law
        u0, S0 = P["u0"](xi), P["S0"](xi)
        rho = law.a(S0) ** 2 / (law.b(S0) - self.c0 * np.exp(-k0 * t))
        u = -k1 / k0 + (u0 + k1 / k0) * np.exp(-k0 * t)
        return rho, u, S0 + 0 * rho

    def f(self, rho, u, S):
        return -(self.k0 * _arr(u) + self.k1) + 0 * _arr(rho)

    def F1(self, rho, u, S):
        return self.k0 * self.law.pressure(rho, S) + 0 * _arr(u)

    def F2(self, rho, u, S):
        return self.k0 * _arr(u) + self.k1 + 0 * _arr(rho)

    def extra_structural(self, rho, u, S):
        rho = _arr(rho)
        law = self.law
        h = self.k0 * law.b(S) / law.a(S) ** 2
        return [("vv3", self.F1(rho, u, S) - rho * law.p_rho(rho, S) * (-self.k0 + rho * h), 1e-10)]

    def crossing_free(self):
        return bool(np.all(self.profiles["u0"].deriv(self.grid) >= 0))


class L2V(Lambda2Family):
    """Von Karman law, mu = k0, k2 = 0: p0 = k0 x, u = u0 e^{k0 k1 t}."""
    family_id = "L2_V"

    def _make_law(self):
        return VonKarman(self.params.functions["a"], self.params.functions["b"])

    def _setup(self):
        self.k0, self.k1 = self.params.get("k0"), self.params.get("k1")

    def _p0(self, xi):
        P = self.profiles
        return self.law.pressure(P["rho0"](xi), P["S0"](xi))

    def char_x(self, xi, t):
        return _arr(xi) + self.profiles["u0"](xi) * _E(self.k0 * self.k1, t)

    def at_label(self, xi, t):
        k0, k1 = self.k0, self.k1
        t = _arr(t)
        P, law = self.profiles, self.law
        u0, S0 = P["u0"](xi), P["S0"](xi)
        p = self._p0(xi) + k0 * u0 * _E(k0 * k1, t)
        with np.errstate(all="ignore"):
            rho = law.a(S0) ** 2 / (law.b(S0) - p)
        rho = np.where(law.b(S0) - p > 0, rho, np.nan)
        return rho, u0 * np.exp(k0 * k1 * t), S0 + 0 * rho

    def f(self, rho, u, S):
        return self.k0 * self.k1 * _arr(u) + self.k0 / _arr(rho)

    def F1(self, rho, u, S):
        return -self.k0 * _arr(u) + 0 * _arr(rho)

    def F2(self, rho, u, S):
        return -self.k0 * self.k1 * _arr(u) + 0 * _arr(rho)

    def extra_structural(self, rho, u, S):
        rho = _arr(rho)
        H = 1.0 / self.law.a(S) ** 2
        return [("gh", rho * self.law.p_rho(rho, S) * (rho * H - 0.0) - 1.0, 1e-12)]


class L2VCH(L2V):
    """Chaplygin specialisation: p = k0 x, rho0 = -a0^2/(k0 x), u0 = -k0 c_hat x."""
    family_id = "L2_V_CH"
    explicit_label = True
    default_domain = (-2.0, -0.5)

    def _make_law(self):
        try:
            return Chaplygin(self.params.get("a0"))
        except ValueError as exc:
            raise BadParams(str(exc)) from exc

    def _setup(self):
        self.a0, self.k0, self.k1, self.c_hat = (self.params.get(k)
                                                 for k in ("a0", "k0", "k1", "c_hat"))
        if self.k1 == 0 or self.k0 == 0:
            raise BadParams("L2_V_CH needs k0, k1 != 0")
        if np.any(self.k0 * self.grid >= 0):
            raise BadParams("L2_V_CH needs k0 x < 0 on the domain")

    def _D(self, t):
        return self.k1 - self.c_hat * np.expm1(self.k0 * self.k1 * _arr(t))

    def char_x(self, xi, t):
        return _arr(xi) * self._D(t) / self.k1

    def label(self, x, t):
        return self.k1 * _arr(x) / self._D(t)

    def at_label(self, xi, t):
        k0, k1 = self.k0, self.k1
        t = _arr(t)
        x = self.char_x(xi, t)
        E = np.exp(k0 * k1 * t)
        p = k0 * x
        u = k0 * k1 * self.c_hat * x * E / (self.c_hat * (E - 1) - k1)
        return -self.a0**2 / p, u, self.profiles["S0"](xi) + 0 * p

    def initial(self, x):
        x = _arr(x)
        k0, a0, ch = self.k0, self.a0, self.c_hat
        S0 = self.profiles["S0"]
        U = np.stack(np.broadcast_arrays(-a0**2 / (k0 * x), -k0 * ch * x, S0(x)), -1)
        dU = np.stack(np.broadcast_arrays(a0**2 / (k0 * x * x), -k0 * ch + 0 * x,
                                          S0.deriv(x)), -1)
        return U, dU

    def analytic_horizon(self):
        k0, k1, ch = self.k0, self.k1, self.c_hat
        if ch == 0:
            return math.inf
        r = 1 + k1 / ch
        if r <= 0:
            return math.inf
        t = math.log(r) / (k0 * k1)
        return t if t > 0 else math.inf

    def crossing_free(self):
        return True


_CLASSES: dict[str, type[FamilySolution]] = {
    cls.family_id: cls for cls in (IGI, IGII, VKA, CHPSI, CHM0, L2I, L2II, L2III, L2IV1,
                                   L2IV2, L2IVVK, L2V, L2VCH, Simple)
}


# ---------------------------------------------------------------------------
# public operations

def make_family(params: FamilyParams, profiles: Mapping[str, Profile],
                check: bool = True) -> FamilySolution:
    """Build a family, compute its validity horizon and (unless ``check`` is
    false) verify the initial-data constraints."""
    cls = _CLASSES[params.family]
    try:
        fs = cls(params, profiles)
    except (InversionFailure, NonHyperbolic) as exc:
        raise BadParams(f"{params.family}: {exc}") from exc
    if check:
        from .constraints import check_initial_constraints
        report = check_initial_constraints(fs)
        if not report.passed:
            worst = max(r.max_resid for r in report.rows)
            raise ConstraintViolation(
                f"{params.family}: initial data violate the differential constraints "
                f"(max residual {worst:.3e})", worst)
    fs.t_star = fs._compute_horizon()
    return fs


def wave_variable(fs: FamilySolution, x, t):
    """Label xi of the characteristic through (x, t)."""
    fs.check_time(t)
    x, t = np.broadcast_arrays(_arr(x), _arr(t))
    lo, hi = fs.x_range(t)
    if np.any(x < lo) or np.any(x > hi):
        raise NoBracket(f"{fs.family_id}: x outside the range swept by characteristics")
    return np.where(t == 0, x, fs.label(x, t))


def evaluate(fs: FamilySolution, x, t) -> State:
    fs.check_time(t)
    x, t = np.broadcast_arrays(_arr(x), _arr(t))
    lo, hi = fs.x_range(t)
    if np.any(x < lo) or np.any(x > hi):
        raise OutOfValidity(f"{fs.family_id}: x outside the region swept by characteristics",
                            fs.t_star)
    xi = np.where(t == 0, x, fs.label(x, t))
    rho, u, S = fs.at_label(xi, t)
    return State(*np.broadcast_arrays(_arr(rho), _arr(u), _arr(S)))


def source(fs: FamilySolution) -> SourceTerm:
    return fs.source()


def family_sigma(fs: FamilySolution, s: State) -> np.ndarray:
    return sigma_matrix(fs.law, s, fs.tag)


__all__ = ["FAMILY_IDS", "SCHEMAS", "FamilyParams", "FamilySolution", "SourceTerm",
           "make_family", "wave_variable", "evaluate", "source", "qq2_residual",
           "Closure", "Function1", "Profile"]
