"""Source closures and differential-constraint data.

A :class:`CompatFunctions` bundles a pressure law, the force ``f`` and the
constraint right-hand sides ``q`` on the two non-selected characteristic
families. From these it derives, in Riemann-invariant coordinates
``(R1, R2, v)``, the quantities needed by the compatibility checks and by
the Riemann solver: ``w = sigma q``, ``z = sigma (l.B - lambda q)``, the
transport right-hand sides ``H = z + lambda^N w`` of the invariants and the
right-hand side ``h`` of the ``v`` equation along ``lambda^N``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .eos import (LAMBDA2, LAMBDA3, N_INDEX, OTHER_INDICES, V_INDEX, CharField,
                  IdealGas, PressureLaw, State, eigen, from_char, sigma_matrix, to_char)

StateFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _arr(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class CompatFunctions:
    law: PressureLaw
    tag: str
    f: StateFn                       # force in the momentum equation
    q: Callable[..., np.ndarray]     # (rho, u, S) -> (..., 2)
    name: str = ""

    # -- state-space helpers -------------------------------------------------
    def B(self, rho, u, S) -> np.ndarray:
        rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
        z = np.zeros_like(rho)
        return np.stack([z, _arr(self.f(rho, u, S)) + z, z], -1)

    def _pieces(self, rho, u, S):
        rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
        s = State(rho, u, S)
        es = eigen(self.law, s)
        sig = sigma_matrix(self.law, s, self.tag)
        q = _arr(self.q(rho, u, S))
        return s, es, sig, q

    def w_state(self, rho, u, S):
        _, _, sig, q = self._pieces(rho, u, S)
        return np.einsum("...ab,...b->...a", sig, q)

    def z_state(self, rho, u, S):
        _, es, sig, q = self._pieces(rho, u, S)
        idx = list(OTHER_INDICES[self.tag])
        lB = np.einsum("...ij,...j->...i", es.left[..., idx, :], self.B(rho, u, S))
        return np.einsum("...ab,...b->...a", sig, lB - es.lam[..., idx] * q)

    def H_state(self, rho, u, S):
        _, es, sig, q = self._pieces(rho, u, S)
        lamN = es.lam[..., N_INDEX[self.tag]]
        return self.z_state(rho, u, S) + lamN[..., None] * self.w_state(rho, u, S)

    def h_state(self, rho, u, S):
        """dv/dt along dx/dt = lambda^N."""
        _, es, _, q = self._pieces(rho, u, S)
        j = V_INDEX[self.tag]
        idx = list(OTHER_INDICES[self.tag])
        lamN = es.lam[..., N_INDEX[self.tag]]
        d_v = es.right[..., idx, j]
        return (self.B(rho, u, S)[..., j]
                + np.sum((lamN[..., None] - es.lam[..., idx]) * q * d_v, axis=-1))

    # -- Riemann-invariant coordinates ----------------------------------------
    def state(self, R1, R2, v) -> State:
        return from_char(self.law, CharField(_arr(R1), _arr(R2), _arr(v), self.tag))

    def char(self, rho, u, S) -> np.ndarray:
        cf = to_char(self.law, State(_arr(rho), _arr(u), _arr(S)), self.tag)
        return np.stack(np.broadcast_arrays(_arr(cf.R1), _arr(cf.R2), _arr(cf.v)), -1)

    def _via_state(self, fn, Y):
        Y = _arr(Y)
        s = self.state(Y[..., 0], Y[..., 1], Y[..., 2])
        return fn(s.rho, s.u, s.S)

    def q_char(self, Y):
        return self._via_state(lambda r, u, S: _arr(self.q(r, u, S)), Y)

    def w(self, Y):
        return self._via_state(self.w_state, Y)

    def z(self, Y):
        return self._via_state(self.z_state, Y)

    def H(self, Y):
        return self._via_state(self.H_state, Y)

    def h(self, Y):
        return self._via_state(self.h_state, Y)


# ---------------------------------------------------------------------------
# concrete closures used by the families, the Riemann solver and the tests

def ccc_closure(law: IdealGas, k0: float, k1: float, k2: float) -> CompatFunctions:
    """Ideal gas, u + c family, q^1 = f and q^2 = rho F with
    f = k2/(1-gamma) rho^gamma + (k0 u + k1) rho^((gamma+1)/2)."""
    g = law.gamma

    def f(rho, u, S):
        rho, u = _arr(rho), _arr(u)
        return k2 / (1 - g) * rho**g + (k0 * u + k1) * rho ** ((g + 1) / 2)

    def F(rho, u, S):
        A = law.A(S)
        return (k2 - 2 * k0 * np.sqrt(g * A)) / law.A.deriv(S)

    def q(rho, u, S):
        fv = f(rho, u, S)
        return np.stack(np.broadcast_arrays(fv, _arr(rho) * F(rho, u, S)), -1)

    return CompatFunctions(law, LAMBDA3, f, q, "ccc")


def ccc_structural(law: IdealGas, k0, k1, k2, rho, u, S):
    """f - [rho F (p_S/rho - c int c_S/rho) + rho c G] for the ccc closure."""
    g = law.gamma
    A = law.A(S)
    c = law.sound_speed(rho, S)
    R1 = _arr(u) - law.int_c(rho, S)
    f = k2 / (1 - g) * rho**g + (k0 * u + k1) * rho ** ((g + 1) / 2)
    F = (k2 - 2 * k0 * np.sqrt(g * A)) / law.A.deriv(S)
    G = (k0 * R1 + k1) / np.sqrt(g * A)
    return f - (rho * F * (law.p_S(rho, S) / rho - c * law.int_cS(rho, S)) + rho * c * G)


def vk_closure(law: PressureLaw, c0: float, c1: float) -> CompatFunctions:
    """Von Karman law with a'(S) != 0: q^1 = f = c0 u - c1/rho, q^2 = rho F."""
    def f(rho, u, S):
        return c0 * _arr(u) - c1 / _arr(rho)

    def q(rho, u, S):
        a = law.a(S)
        F = (c0 * a + c1) / (a * law.a.deriv(S))
        return np.stack(np.broadcast_arrays(f(rho, u, S), _arr(rho) * F), -1)

    return CompatFunctions(law, LAMBDA3, f, q, "vk-q1f")


def vk_case_ii_closure(law: PressureLaw, k0: float, k1: float,
                       Hfn: Callable[[np.ndarray], np.ndarray]) -> CompatFunctions:
    """Von Karman law, q^1 != f branch with a'(S) != 0.

    F2 = -(k0 a + k1)/a', F1 = b' F2 / a - 2 H(R1) + k0 R1, f = k0 u - k1/rho,
    q^1 = H + (a'(R1 - v)/a - b'/a) F2 + F1 and q^2 = -F2/(R1 - v), the sign
    that makes R2_x = -F2/(R1 - v) hold. Compatibility additionally needs
    H F1_R1 = F1 H', e.g. k0 = 0 with constant H, or constant b with H = c R1.
    """
    def f(rho, u, S):
        return k0 * _arr(u) - k1 / _arr(rho)

    def q(rho, u, S):
        rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
        a, da, db = law.a(S), law.a.deriv(S), law.b.deriv(S)
        R1 = u + a / rho
        F2 = -(k0 * a + k1) / da
        F1 = db * F2 / a - 2 * Hfn(R1) + k0 * R1
        q1 = Hfn(R1) + (da * (R1 - u) / a - db / a) * F2 + F1
        return np.stack([q1, -F2 / (R1 - u)], -1)

    return CompatFunctions(law, LAMBDA3, f, q, "vk-case-ii")


def chaplygin_case_iii_closure(law: PressureLaw, m0: float,
                               G1: Callable[[np.ndarray], np.ndarray]) -> CompatFunctions:
    """Chaplygin gas: q^1 = -c G1(R1), q^2 = 0, f = (u - c + m0) G1(R1)."""
    def f(rho, u, S):
        c = law.sound_speed(rho, S)
        return (_arr(u) - c + m0) * G1(_arr(u) + c)

    def q(rho, u, S):
        rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
        c = law.sound_speed(rho, S)
        return np.stack([-c * G1(u + c), np.zeros_like(c)], -1)

    return CompatFunctions(law, LAMBDA3, f, q, "chaplygin-case-iii")


def lambda2_q(law: PressureLaw, f: StateFn, F1: StateFn, F2: StateFn) -> Callable:
    """q^1 = f + F2 - F1/(rho c), q^3 = f + F2 + F1/(rho c)."""
    def q(rho, u, S):
        rho, u, S = np.broadcast_arrays(_arr(rho), _arr(u), _arr(S))
        c = law.sound_speed(rho, S)
        base = _arr(f(rho, u, S)) + _arr(F2(rho, u, S))
        k = _arr(F1(rho, u, S)) / (rho * c)
        return np.stack(np.broadcast_arrays(base - k, base + k), -1)
    return q


def zero_q(rho, u, S):
    rho = _arr(rho)
    return np.zeros(np.broadcast_shapes(rho.shape, np.shape(u), np.shape(S)) + (2,))


def zero_f(rho, u, S):
    return np.zeros(np.broadcast_shapes(np.shape(rho), np.shape(u), np.shape(S)))


__all__ = ["CompatFunctions", "ccc_closure", "ccc_structural", "vk_closure",
           "vk_case_ii_closure", "chaplygin_case_iii_closure", "lambda2_q",
           "zero_q", "zero_f", "LAMBDA2", "LAMBDA3"]
