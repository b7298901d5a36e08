"""Riemann problems solved by generalised rarefaction waves.

Left and right constant states must be equilibria (B = 0, q = 0) sharing the
Riemann invariants of the selected family. Inside the fan the invariants keep
their left values and ``v`` follows ``dv/dt = h(R_L, v)`` along
``dx/dt = lambda^N``; when ``h`` vanishes the fan is self-similar.

The module also provides the closed-form ideal-gas solution, the contact
solution for exceptional speeds and the equilibrium-subsystem analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .closures import CompatFunctions, ccc_closure
from .eos import (LAMBDA2, LAMBDA3, N_INDEX, CharField, IdealGas, PressureLaw, State,
                  _AbLaw, char_speed, from_char, to_char)
from .errors import InadmissibleData, NoBracket, NoEquilibrium
from .numkit import OdeConfig, bisect_vec, ode_solve

EQ_TOL = 1e-10          # equilibrium and invariant matching at the end states
CH_TOL = 1e-9           # H(R_L, v0(a)) = 0
CH_POINTS = 33
H_ZERO = 1e-13          # |h| below this on the sampled fan counts as h = 0
SUBCHAR_TOL = 1e-12

HYP_EQUILIBRIUM = "equilibrium"
HYP_INVARIANTS = "riemann invariants"
HYP_ORDER = "lambda ordering"
HYP_CH = "H condition"
HYP_MONOTONE = "fan monotonicity"
HYP_EXCEPTIONAL = "exceptional speed"
HYP_EQUAL_SPEED = "lambda equality"

_ODE = OdeConfig("rk45-adaptive", tol=1e-12)


def _arr(x):
    return np.asarray(x, dtype=float)


def _scalar_state(s: State) -> State:
    return State(float(np.asarray(s.rho)), float(np.asarray(s.u)), float(np.asarray(s.S)))


@dataclass(frozen=True)
class Hypothesis:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class RPInput:
    """Riemann data plus the closure supplying f, q and hence H, h.

    ``closure`` may be a :class:`CompatFunctions` or anything with a
    ``compat()`` method (a family). ``v0`` maps a in [0, 1] to the fan datum;
    linear interpolation between v_L and v_R when omitted.
    """
    left: State
    right: State
    closure: object
    v0: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def compat(self) -> CompatFunctions:
        cf = self.closure
        return cf if isinstance(cf, CompatFunctions) else cf.compat()


class RPSolution:
    """Piecewise solution: left state, fan (or contact jump), right state."""

    def __init__(self, *, law: PressureLaw, tag: str, left: State, right: State,
                 kind: str, R_L, v_L: float, v_R: float, lam_L: float, lam_R: float,
                 v0: Callable | None = None, closure: CompatFunctions | None = None,
                 self_similar: bool = True, report=()):
        self.law, self.tag = law, tag
        self.left, self.right = left, right
        self.kind = kind                 # "constant" | "fan" | "contact"
        self.R_L = tuple(float(r) for r in R_L)
        self.v_L, self.v_R = float(v_L), float(v_R)
        self.lam_L, self.lam_R = float(lam_L), float(lam_R)
        self.v0 = v0
        self.closure = closure
        self.self_similar = self_similar
        self.report = tuple(report)

    # -- fan parametrisation ---------------------------------------------------
    def _lam(self, v):
        v = _arr(v)
        s = from_char(self.law, CharField(self.R_L[0] + 0 * v, self.R_L[1] + 0 * v, v, self.tag))
        return char_speed(self.law, s, self.tag)

    def _h(self, v):
        v = _arr(v)
        Y = np.stack([self.R_L[0] + 0 * v, self.R_L[1] + 0 * v, v], -1)
        return _arr(self.closure.h(Y))

    def speed(self, v):
        """Characteristic speed of the fan family along R = R_L."""
        return self._lam(v)

    def fan_source(self, v):
        """Right-hand side h(R_L, v) of the in-fan equation (0 without a closure)."""
        if self.closure is None:
            return 0.0 * _arr(v)
        return self._h(v)

    def state_of(self, v) -> State:
        v = _arr(v)
        return from_char(self.law, CharField(self.R_L[0] + 0 * v, self.R_L[1] + 0 * v, v, self.tag))

    def _integrate(self, v_start, t: float):
        """(v_hat, x) at time t for fan data v_start, by the characteristic ODE."""
        v_start = np.atleast_1d(_arr(v_start))
        if t == 0.0:
            return v_start.copy(), np.zeros_like(v_start)
        n = v_start.size

        def rhs(_, y):
            v = y[:n]
            return np.concatenate([self._h(v), self._lam(v)])

        traj = ode_solve(rhs, np.concatenate([v_start, np.zeros(n)]), 0.0, t, _ODE)
        y = traj.final
        return y[:n], y[n:]

    def fan_v(self, t: float, a):
        """v_hat(t, v0(a))."""
        v = _arr(self.v0(_arr(a)))
        if self.self_similar:
            return v
        return self._integrate(v, float(t))[0].reshape(v.shape)

    def fan_x(self, t: float, a):
        """x(t; a), the fan characteristic issued from the origin with datum v0(a)."""
        v = _arr(self.v0(_arr(a)))
        if self.self_similar:
            return self._lam(v) * float(t)
        return self._integrate(v, float(t))[1].reshape(v.shape)

    def _fan_label(self, x, t: float):
        lo, hi = np.zeros_like(x), np.ones_like(x)
        if self.self_similar:
            xi = x / t
            return bisect_vec(lambda a: self._lam(self.v0(a)) - xi, lo, hi)
        return bisect_vec(lambda a: self._integrate(self.v0(a), t)[1] - x, lo, hi)

    # -- evaluation --------------------------------------------------------------
    def v_at(self, x, t):
        x, t = np.broadcast_arrays(_arr(x), _arr(t))
        if np.any(t < 0):
            raise ValueError("t must be non-negative")
        v = np.where(x <= self.lam_L * t, self.v_L, self.v_R).astype(float)
        if self.kind != "fan":
            return v
        fan = (t > 0) & (x > self.lam_L * t) & (x <= self.lam_R * t)
        for tv in np.unique(t[fan]):
            sel = fan & (t == tv)
            a = self._fan_label(x[sel], float(tv))
            if self.self_similar:
                v[sel] = self.v0(a)
            else:
                v[sel] = self._integrate(self.v0(a), float(tv))[0]
        return v

    def evaluate(self, x, t) -> State:
        x, t = np.broadcast_arrays(_arr(x), _arr(t))
        v = self.v_at(x, t)
        R1, R2 = self.R_L
        s = from_char(self.law, CharField(R1 + 0 * v, R2 + 0 * v, v, self.tag))
        left = x <= self.lam_L * t
        right = (x > self.lam_R * t) if self.kind == "fan" else ~left
        if self.kind == "constant":
            left, right = np.ones_like(left), np.zeros_like(left)
        U = s.as_array()
        U = np.where(left[..., None], self.left.as_array(), U)
        U = np.where(right[..., None], self.right.as_array(), U)
        return State.from_array(U)

    def metadata(self) -> dict:
        return dict(kind=self.kind, tag=self.tag, lambda_L=self.lam_L, lambda_R=self.lam_R,
                    R1_L=self.R_L[0], R2_L=self.R_L[1], v_L=self.v_L, v_R=self.v_R,
                    self_similar=self.self_similar,
                    hypotheses=[(h.name, h.residual, h.passed) for h in self.report])


# ---------------------------------------------------------------------------
# Theorem-1 solver

def _linear_v0(v_L: float, v_R: float):
    def v0(a):
        a = _arr(a)
        return v_L + a * (v_R - v_L)
    return v0


def _equilibrium_residual(cf: CompatFunctions, s: State) -> float:
    B = cf.B(s.rho, s.u, s.S)
    q = _arr(cf.q(s.rho, s.u, s.S))
    return float(max(np.max(np.abs(B)), np.max(np.abs(q))))


def solve_rp(inp: RPInput, strict: bool = True) -> RPSolution:
    """Generalised rarefaction solution of the Riemann problem.

    Hypotheses are checked in order: end states are equilibria, they share
    the Riemann invariants, lambda^N increases from left to right, and H
    vanishes on the fan data. With ``strict`` the first failure raises
    :class:`InadmissibleData`; otherwise failures are only recorded in the
    solution's ``report``.
    """
    cf = inp.compat
    law, tag = cf.law, cf.tag
    left, right = _scalar_state(inp.left), _scalar_state(inp.right)
    cl, cr = to_char(law, left, tag), to_char(law, right, tag)
    R_L = (float(cl.R1), float(cl.R2))
    v_L, v_R = float(cl.v), float(cr.v)
    lam_L = float(char_speed(law, left, tag))
    lam_R = float(char_speed(law, right, tag))
    report: list[Hypothesis] = []

    def record(name, residual, ok, detail=""):
        report.append(Hypothesis(name, float(residual), bool(ok)))
        if strict and not ok:
            raise InadmissibleData(name, detail)

    eq = max(_equilibrium_residual(cf, left), _equilibrium_residual(cf, right))
    record(HYP_EQUILIBRIUM, eq, eq <= EQ_TOL, f"max |B|, |q| = {eq:.3e} at the end states")

    dR = max(abs(float(cl.R1) - float(cr.R1)) / max(1.0, abs(float(cl.R1))),
             abs(float(cl.R2) - float(cr.R2)) / max(1.0, abs(float(cl.R2))))
    record(HYP_INVARIANTS, dR, dR <= EQ_TOL, f"R_L - R_R = {dR:.3e}")

    degenerate = v_L == v_R
    v0 = inp.v0 or _linear_v0(v_L, v_R)
    if degenerate:
        return RPSolution(law=law, tag=tag, left=left, right=right, kind="constant", R_L=R_L,
                          v_L=v_L, v_R=v_R, lam_L=lam_L, lam_R=lam_L, v0=v0, closure=cf,
                          report=report)
    record(HYP_ORDER, lam_L - lam_R, lam_L < lam_R,
           f"lambda_L = {lam_L:.17g} is not below lambda_R = {lam_R:.17g}")

    a = np.linspace(0.0, 1.0, CH_POINTS)
    va = _arr(v0(a))
    ends = max(abs(va[0] - v_L), abs(va[-1] - v_R))
    Y = np.stack([np.full_like(va, R_L[0]), np.full_like(va, R_L[1]), va], -1)
    try:
        H = _arr(cf.H(Y))
        hv = _arr(cf.h(Y))
        ch = float(np.max(np.abs(H)))
        detail = f"max |H(R_L, v0(a))| = {ch:.3e}"
    except (ValueError, ArithmeticError) as exc:   # fan data outside the law's domain
        ch, hv, detail = math.inf, np.full_like(va, np.nan), str(exc)
    record(HYP_CH, max(ch, ends), ch <= CH_TOL and ends <= EQ_TOL, detail)

    self_similar = bool(np.all(np.abs(hv) <= H_ZERO))
    sol = RPSolution(law=law, tag=tag, left=left, right=right, kind="fan", R_L=R_L,
                     v_L=v_L, v_R=v_R, lam_L=lam_L, lam_R=lam_R, v0=v0, closure=cf,
                     self_similar=self_similar, report=report)
    if self_similar:
        lam_a = sol._lam(v0(np.linspace(0.0, 1.0, 257)))
        mono = float(np.min(np.diff(lam_a)))
        record(HYP_MONOTONE, mono, mono > 0, "lambda^N(v0(a)) is not increasing")
    sol.report = tuple(report)
    return sol


def contact_rp(left: State, right: State, law: PressureLaw, tag: str = LAMBDA2) -> RPSolution:
    """Two constant states separated by a jump moving at the common,
    exceptional lambda^N."""
    left, right = _scalar_state(left), _scalar_state(right)
    if tag == LAMBDA3 and not isinstance(law, _AbLaw):
        raise InadmissibleData(HYP_EXCEPTIONAL, "lambda3 is exceptional only for the "
                               "Von Karman and Chaplygin laws")
    lam_L = float(char_speed(law, left, tag))
    lam_R = float(char_speed(law, right, tag))
    if abs(lam_L - lam_R) > EQ_TOL * max(1.0, abs(lam_L)):
        raise InadmissibleData(HYP_EQUAL_SPEED, f"{lam_L:.17g} != {lam_R:.17g}")
    cl, cr = to_char(law, left, tag), to_char(law, right, tag)
    dR = max(abs(float(cl.R1) - float(cr.R1)) / max(1.0, abs(float(cl.R1))),
             abs(float(cl.R2) - float(cr.R2)) / max(1.0, abs(float(cl.R2))))
    if dR > EQ_TOL:
        raise InadmissibleData(HYP_INVARIANTS, f"R_L - R_R = {dR:.3e}")
    return RPSolution(law=law, tag=tag, left=left, right=right, kind="contact",
                      R_L=(float(cl.R1), float(cl.R2)), v_L=float(cl.v), v_R=float(cr.v),
                      lam_L=lam_L, lam_R=lam_L,
                      report=[Hypothesis(HYP_EQUAL_SPEED, abs(lam_L - lam_R), True)])


def rarefaction_curve(law: PressureLaw, left: State, rho, tag: str = LAMBDA3) -> State:
    """States at densities ``rho`` sharing the left state's lambda3 invariants
    R1 = u - int c/rho d rho and R2 = S."""
    if tag != LAMBDA3:
        raise ValueError("rarefaction curves exist only for the genuinely nonlinear lambda3")
    left = _scalar_state(left)
    rho = _arr(rho)
    S = left.S + 0 * rho
    R1 = left.u - float(law.int_c(left.rho, left.S))
    law.sound_speed(rho, S)
    return State(rho, R1 + law.int_c(rho, S), S)


# ---------------------------------------------------------------------------
# ideal gas with the (k0, k1, k2) force: closed forms

def ccc_entropy(gamma: float, k0: float, k2: float, Cv: float = 1.0, S_hat: float = 0.0):
    """Entropy making c = (k2/2k0) rho^((gamma-1)/2) on the equilibrium curve."""
    return S_hat + Cv * math.log(k2 * k2 / (4 * gamma * k0 * k0))


def ccc_curve_velocity(gamma, k0, k1, k2, rho):
    """u = -k1/k0 + k2 rho^((gamma-1)/2) / (k0 (gamma-1))."""
    return -k1 / k0 + k2 * _arr(rho) ** ((gamma - 1) / 2) / (k0 * (gamma - 1))


def _ccc_check(gamma, k0, k2, rho_L, rho_R):
    if not gamma > 1:
        raise InadmissibleData("ideal gas", "gamma must exceed 1")
    if k0 == 0 or k2 == 0 or k2 / k0 <= 0:
        raise InadmissibleData("sign of k2/k0", "the fan needs k2/k0 > 0")
    if not (rho_L > 0 and rho_R > 0):
        raise InadmissibleData("positive density")


def ccc_rp_input(gamma: float, k0: float, k1: float, k2: float, rho_L: float, rho_R: float,
                 Cv: float = 1.0, S_hat: float = 0.0) -> RPInput:
    """Riemann data on the equilibrium curve with the entropy fixed by the
    force constants; the closure is q^1 = f, q^2 = rho F."""
    _ccc_check(gamma, k0, k2, rho_L, rho_R)
    law = IdealGas(gamma, Cv, S_hat)
    S = ccc_entropy(gamma, k0, k2, Cv, S_hat)
    uL, uR = (float(ccc_curve_velocity(gamma, k0, k1, k2, r)) for r in (rho_L, rho_R))
    return RPInput(State(rho_L, uL, S), State(rho_R, uR, S), ccc_closure(law, k0, k1, k2))


@dataclass(frozen=True)
class ExplicitIdealRP:
    """Closed-form solution for the ideal gas with the (k0, k1, k2) force."""
    gamma: float
    k0: float
    k1: float
    k2: float
    left: State
    right: State
    lam_L: float
    lam_R: float
    law: IdealGas

    @property
    def S_L(self) -> float:
        return float(self.left.S)

    def u_at(self, x, t):
        x, t = np.broadcast_arrays(_arr(x), _arr(t))
        g, k0, k1 = self.gamma, self.k0, self.k1
        with np.errstate(divide="ignore", invalid="ignore"):
            fan = 2 * x / ((g + 1) * t) - (g - 1) * k1 / ((g + 1) * k0)
        u = np.where(x <= self.lam_L * t, float(self.left.u), fan)
        return np.where(x > self.lam_R * t, float(self.right.u), u)

    def evaluate(self, x, t) -> State:
        g = self.gamma
        u = self.u_at(x, t)
        base = self.k0 * (g - 1) / self.k2 * (u - float(self.left.u))
        rho = (base + float(self.left.rho) ** ((g - 1) / 2)) ** (2 / (g - 1))
        x, t = np.broadcast_arrays(_arr(x), _arr(t))
        rho = np.where(x <= self.lam_L * t, float(self.left.rho), rho)
        rho = np.where(x > self.lam_R * t, float(self.right.rho), rho)
        return State(rho, u, self.S_L + 0 * rho)


def explicit_ideal_rp(gamma: float, k0: float, k1: float, k2: float, rho_L: float,
                      rho_R: float, Cv: float = 1.0, S_hat: float = 0.0) -> ExplicitIdealRP:
    _ccc_check(gamma, k0, k2, rho_L, rho_R)
    if not rho_L < rho_R:
        raise InadmissibleData(HYP_ORDER, "the closed form needs rho_L < rho_R")
    law = IdealGas(gamma, Cv, S_hat)
    S = ccc_entropy(gamma, k0, k2, Cv, S_hat)
    uL, uR = (float(ccc_curve_velocity(gamma, k0, k1, k2, r)) for r in (rho_L, rho_R))
    lam = [u + k2 / (2 * k0) * r ** ((gamma - 1) / 2) for u, r in ((uL, rho_L), (uR, rho_R))]
    return ExplicitIdealRP(gamma, k0, k1, k2, State(rho_L, uL, S), State(rho_R, uR, S),
                           lam[0], lam[1], law)


# ---------------------------------------------------------------------------
# equilibrium subsystem

@dataclass(frozen=True)
class EquilibriumSubsystem:
    """Reduced system obtained from f(rho, u_hat(rho, S), S) = 0.

    Speeds are mu1 = u_hat (exceptional) and mu2 = u_hat + rho u_hat_rho,
    with Riemann invariants r = u_hat and r = S respectively.
    """
    f: Callable
    u_hat: Callable
    u_hat_rho: Callable
    u_hat_S: Callable
    exceptional: tuple[str, ...] = ("mu1",)

    def mu1(self, rho, S):
        return self.u_hat(rho, S)

    def mu2(self, rho, S):
        return self.u_hat(rho, S) + _arr(rho) * self.u_hat_rho(rho, S)

    def invariants(self, rho, S):
        return np.stack(np.broadcast_arrays(_arr(self.u_hat(rho, S)), _arr(S)), -1)

    def residual(self, rho, S):
        return _arr(self.f(rho, self.u_hat(rho, S), S))


def ccc_equilibrium(gamma: float, k0: float, k1: float, k2: float) -> EquilibriumSubsystem:
    law = IdealGas(gamma)
    f = ccc_closure(law, k0, k1, k2).f
    m = (gamma - 1) / 2

    def u_hat(rho, S):
        return ccc_curve_velocity(gamma, k0, k1, k2, rho) + 0 * _arr(S)

    def u_hat_rho(rho, S):
        return k2 * _arr(rho) ** (m - 1) / (2 * k0) + 0 * _arr(S)

    def u_hat_S(rho, S):
        return 0 * _arr(rho) * _arr(S)

    return EquilibriumSubsystem(f, u_hat, u_hat_rho, u_hat_S)


def equilibrium_subsystem(source, bracket=(-1e3, 1e3), rel_step: float = 1e-6
                          ) -> EquilibriumSubsystem:
    """Subsystem for a general force: u_hat by bracketed root finding in u and
    its derivatives by central differences. ``source`` is a force f(rho, u, S),
    a closure or a family."""
    f = getattr(source, "f", source)

    def u_hat(rho, S):
        rho, S = np.broadcast_arrays(_arr(rho), _arr(S))
        try:
            return bisect_vec(lambda u: _arr(f(rho, u, S)) + 0 * u,
                              np.full(rho.shape, float(bracket[0])),
                              np.full(rho.shape, float(bracket[1])))
        except NoBracket as exc:
            raise NoEquilibrium(f"f(rho, u, S) = 0 has no root for u in {tuple(bracket)}") from exc

    def u_hat_rho(rho, S):
        rho = _arr(rho)
        h = rel_step * np.maximum(1.0, np.abs(rho))
        return (u_hat(rho + h, S) - u_hat(rho - h, S)) / (2 * h)

    def u_hat_S(rho, S):
        S = _arr(S)
        h = rel_step * np.maximum(1.0, np.abs(S))
        return (u_hat(rho, S + h) - u_hat(rho, S - h)) / (2 * h)

    probe = u_hat(np.array([1.0]), np.array([0.0]))   # fail early if there is no root
    del probe
    return EquilibriumSubsystem(f, u_hat, u_hat_rho, u_hat_S)


@dataclass(frozen=True)
class SubcharReport:
    rho: np.ndarray
    margin: np.ndarray           # c - rho u_hat_rho
    passed: bool
    tol: float = SUBCHAR_TOL

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))

    def to_csv(self) -> str:
        lines = ["rho,margin,pass"]
        for r, m in zip(self.rho.ravel(), self.margin.ravel()):
            lines.append(f"{r:.17g},{m:.17g},{'PASS' if m >= -self.tol else 'FAIL'}")
        return "\n".join(lines) + "\n"


def subcharacteristic_check(sub: EquilibriumSubsystem, law: PressureLaw, states: State
                            ) -> SubcharReport:
    """c - rho u_hat_rho at the given densities and entropies; PASS iff >= -1e-12."""
    rho, S = np.broadcast_arrays(_arr(states.rho), _arr(states.S))
    margin = law.sound_speed(rho, S) - rho * _arr(sub.u_hat_rho(rho, S))
    return SubcharReport(rho, margin, bool(np.all(margin >= -SUBCHAR_TOL)))


def subsystem_rarefaction(sub: EquilibriumSubsystem, rho_L: float, rho_R: float, S: float,
                          x, t: float):
    """Density of the mu2 rarefaction of the subsystem (rho_t + mu2 rho_x = 0)."""
    x = _arr(x)
    if rho_L == rho_R or t == 0:
        return np.where(x <= 0, rho_L, rho_R) + 0 * x
    mL, mR = float(sub.mu2(rho_L, S)), float(sub.mu2(rho_R, S))
    xi = x / t
    out = np.where(xi <= mL, rho_L, rho_R).astype(float)
    fan = (xi > mL) & (xi <= mR)
    if np.any(fan):
        lo = np.full(int(fan.sum()), min(rho_L, rho_R))
        hi = np.full(int(fan.sum()), max(rho_L, rho_R))
        out[fan] = bisect_vec(lambda r: _arr(sub.mu2(r, S)) - xi[fan], lo, hi)
    return out


def asymptotic_compare(rp, sub: EquilibriumSubsystem, times, x_domain=(-2.0, 2.0),
                       nx: int = 801) -> np.ndarray:
    """L1 distance, at each time, between the full system's density profile
    and the subsystem rarefaction joining the same end densities."""
    x = np.linspace(*x_domain, nx)
    rho_L, rho_R = float(rp.left.rho), float(rp.right.rho)
    S = float(rp.left.S)
    out = []
    for t in np.atleast_1d(_arr(times)):
        full = rp.evaluate(x, float(t)).rho
        red = subsystem_rarefaction(sub, rho_L, rho_R, S, x, float(t))
        out.append(float(trapezoid(np.abs(full - red), x)))
    return np.array(out)


__all__ = ["RPInput", "RPSolution", "Hypothesis", "solve_rp", "contact_rp",
           "rarefaction_curve", "ccc_rp_input", "ccc_entropy", "ccc_curve_velocity",
           "ExplicitIdealRP", "explicit_ideal_rp", "EquilibriumSubsystem", "ccc_equilibrium",
           "equilibrium_subsystem", "SubcharReport", "subcharacteristic_check",
           "subsystem_rarefaction", "asymptotic_compare", "LAMBDA2", "LAMBDA3", "N_INDEX"]
