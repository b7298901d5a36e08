"""Pressure laws, sound speed, eigenstructure of the 1-D Euler system in the
primitive variables (rho, u, S), and the Riemann-invariant transforms for
the u + c and u characteristic families.

All functions accept scalars or numpy arrays (broadcast elementwise).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InversionFailure, NonHyperbolic
from .numkit import bisect_vec

Array = Union[float, np.ndarray]

LAMBDA3 = "lambda3"
LAMBDA2 = "lambda2"
TAGS = (LAMBDA3, LAMBDA2)

# index bookkeeping for U = (rho, u, S), 0-based
N_INDEX = {LAMBDA3: 2, LAMBDA2: 1}          # the selected speed lambda^N
OTHER_INDICES = {LAMBDA3: (0, 1), LAMBDA2: (0, 2)}
V_INDEX = {LAMBDA3: 1, LAMBDA2: 2}          # v = u resp. v = S


# ---------------------------------------------------------------------------
# entropy functions

class EntropyFunction:
    """Smooth scalar function of entropy with analytic first derivative."""

    def __call__(self, S: Array) -> Array:
        raise NotImplementedError

    def deriv(self, S: Array) -> Array:
        raise NotImplementedError

    def inverse(self, y: Array) -> Array:
        raise InversionFailure(f"{type(self).__name__} is not invertible")


@dataclass(frozen=True)
class Constant(EntropyFunction):
    c: float

    def __call__(self, S):
        return self.c + 0.0 * np.asarray(S, dtype=float)

    def deriv(self, S):
        return 0.0 * np.asarray(S, dtype=float)


@dataclass(frozen=True)
class Linear(EntropyFunction):
    c0: float
    c1: float

    def __call__(self, S):
        return self.c0 + self.c1 * np.asarray(S, dtype=float)

    def deriv(self, S):
        return self.c1 + 0.0 * np.asarray(S, dtype=float)

    def inverse(self, y):
        if self.c1 == 0:
            raise InversionFailure("linear entropy function with zero slope")
        return (np.asarray(y, dtype=float) - self.c0) / self.c1


@dataclass(frozen=True)
class Exponential(EntropyFunction):
    """alpha * exp(kappa * S)"""
    alpha: float
    kappa: float

    def __call__(self, S):
        return self.alpha * np.exp(self.kappa * np.asarray(S, dtype=float))

    def deriv(self, S):
        return self.kappa * self(S)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        r = y / self.alpha
        if self.kappa == 0 or np.any(r <= 0):
            raise InversionFailure("exponential entropy function: value out of range")
        return np.log(r) / self.kappa


class Tabulated(EntropyFunction):
    """Cubic-spline interpolant of tabulated (S, value) pairs.

    The derivative is the derivative of the interpolant. Inversion assumes
    the table is strictly monotone.
    """

    def __init__(self, S_nodes, values):
        S_nodes = np.asarray(S_nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if S_nodes.size < 4:
            raise ValueError("need at least 4 nodes for a cubic table")
        self.S_nodes, self.values = S_nodes, values
        self._spline = CubicSpline(S_nodes, values)
        self._dspline = self._spline.derivative()

    def __call__(self, S):
        return self._spline(np.asarray(S, dtype=float))

    def deriv(self, S):
        return self._dspline(np.asarray(S, dtype=float))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = self.S_nodes[0], self.S_nodes[-1]
        vlo, vhi = self(lo), self(hi)
        if np.any((y - vlo) * (y - vhi) > 0):
            raise InversionFailure("value outside the tabulated range")
        return bisect_vec(lambda s: self(s) - y, np.full(y.shape, lo), np.full(y.shape, hi))


# ---------------------------------------------------------------------------
# pressure laws

class PressureLaw:
    """Interface for p(rho, S) closures.

    ``int_c`` is the closed form of the integral of c/rho in rho and
    ``int_cS`` its entropy derivative (the integral of c_S/rho).
    """

    def pressure(self, rho, S):
        raise NotImplementedError

    def p_rho(self, rho, S):
        raise NotImplementedError

    def p_S(self, rho, S):
        raise NotImplementedError

    def c_S(self, rho, S):
        raise NotImplementedError

    def int_c(self, rho, S):
        raise NotImplementedError

    def int_cS(self, rho, S):
        raise NotImplementedError

    def rho_from_int(self, value, S):
        return self._rho_from_int_numeric(value, S)

    def rho_from_pressure(self, p, S):
        raise NotImplementedError

    def sound_speed(self, rho, S):
        c2 = np.asarray(self.p_rho(rho, S), dtype=float)
        if np.any(~(c2 > 0)):
            raise NonHyperbolic("p_rho <= 0: sound speed vanishes or is imaginary")
        return np.sqrt(c2)

    def _rho_from_int_numeric(self, value, S, lo: float = 1e-12, hi: float = 1e12):
        """Invert int_c in rho by bisection on log(rho); int_c is increasing in rho."""
        value = np.asarray(value, dtype=float)
        S = np.broadcast_to(np.asarray(S, dtype=float), value.shape)

        def g(logr):
            return self.int_c(np.exp(logr), S) - value

        shape = value.shape
        llo, lhi = np.full(shape, np.log(lo)), np.full(shape, np.log(hi))
        if np.any(np.sign(g(llo)) * np.sign(g(lhi)) > 0):
            raise InversionFailure("density bracket [1e-12, 1e12] does not enclose a root")
        rho = np.exp(bisect_vec(g, llo, lhi))
        # one Newton polish: d int_c / d rho = c / rho
        c = self.sound_speed(rho, S)
        rho = rho - (self.int_c(rho, S) - value) * rho / c
        return rho


@dataclass(frozen=True)
class IdealGas(PressureLaw):
    """p = A(S) rho^gamma with A(S) = exp((S - S_hat)/Cv)."""
    gamma: float
    Cv: float = 1.0
    S_hat: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("ideal gas needs gamma > 1")
        if not self.Cv > 0:
            raise ValueError("ideal gas needs Cv > 0")

    @property
    def A(self) -> Exponential:
        return Exponential(np.exp(-self.S_hat / self.Cv), 1.0 / self.Cv)

    @property
    def Cp(self) -> float:
        return self.gamma * self.Cv

    def entropy_from_A(self, A):
        A = np.asarray(A, dtype=float)
        if np.any(~(A > 0)):
            raise InversionFailure("A(S) must be positive")
        return self.S_hat + self.Cv * np.log(A)

    def pressure(self, rho, S):
        return self.A(S) * np.asarray(rho, dtype=float) ** self.gamma

    def p_rho(self, rho, S):
        return self.gamma * self.A(S) * np.asarray(rho, dtype=float) ** (self.gamma - 1)

    def p_S(self, rho, S):
        return self.A.deriv(S) * np.asarray(rho, dtype=float) ** self.gamma

    def c_S(self, rho, S):
        return 0.5 * self.sound_speed(rho, S) / self.Cv

    def int_c(self, rho, S):
        return 2.0 * self.sound_speed(rho, S) / (self.gamma - 1)

    def int_cS(self, rho, S):
        return self.sound_speed(rho, S) / ((self.gamma - 1) * self.Cv)

    def rho_from_int(self, value, S):
        value = np.asarray(value, dtype=float)
        if np.any(~(value > 0)):
            raise InversionFailure("ideal gas: integral of c/rho must be positive")
        c = 0.5 * (self.gamma - 1) * value
        return (c * c / (self.gamma * self.A(S))) ** (1.0 / (self.gamma - 1))

    def rho_from_pressure(self, p, S):
        p = np.asarray(p, dtype=float)
        if np.any(~(p > 0)):
            raise InversionFailure("ideal gas: pressure must be positive")
        return (p / self.A(S)) ** (1.0 / self.gamma)


class _AbLaw(PressureLaw):
    """Shared formulas for p = -a(S)^2 / rho + b(S)."""
    a: EntropyFunction
    b: EntropyFunction

    def pressure(self, rho, S):
        return -self.a(S) ** 2 / np.asarray(rho, dtype=float) + self.b(S)

    def p_rho(self, rho, S):
        return (self.a(S) / np.asarray(rho, dtype=float)) ** 2

    def p_S(self, rho, S):
        return -2 * self.a(S) * self.a.deriv(S) / np.asarray(rho, dtype=float) + self.b.deriv(S)

    def sound_speed(self, rho, S):
        a = np.asarray(self.a(S), dtype=float)
        if np.any(~(a > 0)):
            raise NonHyperbolic("a(S) must be positive")
        return a / np.asarray(rho, dtype=float)

    def c_S(self, rho, S):
        return self.a.deriv(S) / np.asarray(rho, dtype=float)

    def int_c(self, rho, S):
        return -self.a(S) / np.asarray(rho, dtype=float)

    def int_cS(self, rho, S):
        return -self.a.deriv(S) / np.asarray(rho, dtype=float)

    def rho_from_int(self, value, S):
        value = np.asarray(value, dtype=float)
        if np.any(~(value < 0)):
            raise InversionFailure("Von Karman: integral of c/rho must be negative")
        return -self.a(S) / value

    def rho_from_pressure(self, p, S):
        gap = self.b(S) - np.asarray(p, dtype=float)
        if np.any(~(gap > 0)):
            raise InversionFailure("Von Karman: need b(S) > p")
        return self.a(S) ** 2 / gap


@dataclass(frozen=True)
class VonKarman(_AbLaw):
    a: EntropyFunction
    b: EntropyFunction


@dataclass(frozen=True)
class Chaplygin(_AbLaw):
    """p = -a0^2 / rho, the Von Karman law with constant a and b = 0."""
    a0: float

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("Chaplygin gas needs a0 > 0")

    @property
    def a(self):
        return Constant(self.a0)

    @property
    def b(self):
        return Constant(0.0)


# ---------------------------------------------------------------------------
# states and characteristic data

@dataclass(frozen=True)
class State:
    rho: Array
    u: Array
    S: Array

    def __post_init__(self):
        if np.any(~(np.asarray(self.rho) > 0)):
            raise ValueError("density must be positive")

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(np.asarray(self.rho, dtype=float),
                                            np.asarray(self.u, dtype=float),
                                            np.asarray(self.S, dtype=float)), axis=-1)

    @classmethod
    def from_array(cls, U) -> "State":
        U = np.asarray(U, dtype=float)
        return cls(U[..., 0], U[..., 1], U[..., 2])


@dataclass(frozen=True)
class EigenStructure:
    lam: np.ndarray      # (..., 3) speeds u - c, u, u + c
    left: np.ndarray     # (..., 3, 3) rows l^i
    right: np.ndarray    # (..., 3, 3) rows d^i (stored as rows)


@dataclass(frozen=True)
class CharField:
    R1: Array
    R2: Array
    v: Array
    tag: str = LAMBDA3


def pressure(law: PressureLaw, s: State):
    return law.pressure(s.rho, s.S)


def sound_speed(law: PressureLaw, s: State):
    return law.sound_speed(s.rho, s.S)


def coefficient_matrix(law: PressureLaw, s: State) -> np.ndarray:
    """A(U) of U_t + A(U) U_x = B for U = (rho, u, S)."""
    rho, u, S = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (s.rho, s.u, s.S)))
    c2 = law.p_rho(rho, S)
    ps = law.p_S(rho, S)
    z = np.zeros_like(rho)
    return np.stack([np.stack([u, rho, z], -1),
                     np.stack([c2 / rho, u, ps / rho], -1),
                     np.stack([z, z, u], -1)], -2)


def eigen(law: PressureLaw, s: State) -> EigenStructure:
    rho, u, S = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (s.rho, s.u, s.S)))
    c = law.sound_speed(rho, S)
    ps = law.p_S(rho, S)
    z, one = np.zeros_like(rho), np.ones_like(rho)
    c2 = c * c
    lam = np.stack([u - c, u, u + c], -1)
    left = np.stack([np.stack([c2 / rho, -c, ps / rho], -1),
                     np.stack([z, z, one], -1),
                     np.stack([c2 / rho, c, ps / rho], -1)], -2)
    right = np.stack([np.stack([rho, -c, z], -1) / (2 * c2)[..., None],
                      np.stack([-ps / c2, z, one], -1),
                      np.stack([rho, c, z], -1) / (2 * c2)[..., None]], -2)
    return EigenStructure(lam, left, right)


def char_speed(law: PressureLaw, s: State, tag: str = LAMBDA3):
    if tag == LAMBDA3:
        return np.asarray(s.u, dtype=float) + law.sound_speed(s.rho, s.S)
    if tag == LAMBDA2:
        return np.asarray(s.u, dtype=float) + 0.0 * np.asarray(s.rho, dtype=float)
    raise ValueError(f"unknown tag {tag!r}")


def to_char(law: PressureLaw, s: State, tag: str = LAMBDA3) -> CharField:
    if tag == LAMBDA3:
        law.sound_speed(s.rho, s.S)
        R1 = np.asarray(s.u, dtype=float) - law.int_c(s.rho, s.S)
        return CharField(R1, np.asarray(s.S, dtype=float), np.asarray(s.u, dtype=float), tag)
    if tag == LAMBDA2:
        law.sound_speed(s.rho, s.S)
        return CharField(law.pressure(s.rho, s.S), np.asarray(s.u, dtype=float),
                         np.asarray(s.S, dtype=float), tag)
    raise ValueError(f"unknown tag {tag!r}")


def from_char(law: PressureLaw, cf: CharField) -> State:
    if cf.tag == LAMBDA3:
        S = cf.R2
        rho = law.rho_from_int(np.asarray(cf.v, dtype=float) - cf.R1, S)
        return State(rho, cf.v, S)
    if cf.tag == LAMBDA2:
        S = cf.v
        rho = law.rho_from_pressure(cf.R1, S)
        return State(rho, cf.R2, S)
    raise ValueError(f"unknown tag {cf.tag!r}")


def sigma_matrix(law: PressureLaw, s: State, tag: str = LAMBDA3) -> np.ndarray:
    """Components of grad R^alpha on the left eigenvectors l^beta.

    Returns shape (..., 2, 2); rows are alpha, columns the two non-selected
    families in increasing order ((1, 2) for lambda3, (1, 3) for lambda2).
    """
    rho, u, S = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (s.rho, s.u, s.S)))
    c = law.sound_speed(rho, S)
    z, one = np.zeros_like(rho), np.ones_like(rho)
    if tag == LAMBDA3:
        s12 = law.p_S(rho, S) / (rho * c) - law.int_cS(rho, S)
        return np.stack([np.stack([-1 / c, s12], -1), np.stack([z, one], -1)], -2)
    if tag == LAMBDA2:
        return np.stack([np.stack([rho / 2, rho / 2], -1),
                         np.stack([-1 / (2 * c), 1 / (2 * c)], -1)], -2)
    raise ValueError(f"unknown tag {tag!r}")


def riemann_invariants(law: PressureLaw, U, tag: str = LAMBDA3) -> np.ndarray:
    """(R1, R2) of a packed state array U[..., 3]; convenience for gradients."""
    cf = to_char(law, State.from_array(U), tag)
    return np.stack([cf.R1, cf.R2], -1)
