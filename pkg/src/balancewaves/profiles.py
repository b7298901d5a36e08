"""Initial-data profiles and pointwise closures.

Closed-form profiles are sympy expressions in ``x`` compiled to numpy, so
their derivatives are exact; tabulated profiles use a cubic spline and the
spline's derivative.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

X = sp.Symbol("x", real=True)
RHO, U, S = sp.symbols("rho u S", real=True)


def _broadcasting(fn: Callable, nargs: int) -> Callable:
    # lambdify returns python scalars for constant expressions
    def wrapped(*args):
        out = fn(*args)
        shape = np.broadcast_shapes(*(np.shape(a) for a in args[:nargs]))
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy() if shape else float(out)
    return wrapped


class Profile:
    """Smooth scalar function of one variable with its derivative."""

    def __init__(self, fn: Callable, dfn: Callable, expr: sp.Expr | None = None,
                 label: str = ""):
        self._fn, self._dfn = fn, dfn
        self.expr = expr
        self.label = label or (str(expr) if expr is not None else "tabulated")

    @classmethod
    def from_expr(cls, expr, var: sp.Symbol = X) -> "Profile":
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={"x": var, "z": var, "xi": var})
        expr = sp.sympify(expr)
        free = expr.free_symbols - {var}
        if free:
            raise ValueError(f"profile depends on unknown symbols {sorted(map(str, free))}")
        fn = _broadcasting(sp.lambdify(var, expr, "numpy"), 1)
        dfn = _broadcasting(sp.lambdify(var, sp.diff(expr, var), "numpy"), 1)
        return cls(fn, dfn, expr)

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls.from_expr(sp.Float(value))

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> "Profile":
        spline = CubicSpline(np.asarray(xs, float), np.asarray(ys, float))
        return cls(spline, spline.derivative(), None, "tabulated")

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self._dfn(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Profile({self.label})"


class Closure:
    """Pointwise function of (rho, u, S), e.g. a force term f."""

    def __init__(self, fn: Callable, expr: sp.Expr | None = None):
        self._fn = fn
        self.expr = expr

    @classmethod
    def from_expr(cls, expr) -> "Closure":
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={"rho": RHO, "u": U, "S": S})
        expr = sp.sympify(expr)
        free = expr.free_symbols - {RHO, U, S}
        if free:
            raise ValueError(f"closure depends on unknown symbols {sorted(map(str, free))}")
        return cls(_broadcasting(sp.lambdify((RHO, U, S), expr, "numpy"), 3), expr)

    def __call__(self, rho, u, S):
        return self._fn(np.asarray(rho, float), np.asarray(u, float), np.asarray(S, float))

    def __repr__(self):
        return f"Closure({self.expr})"


class Function1:
    """Scalar function of one variable given by an expression (u, rho, ...)."""

    def __init__(self, expr, var: str):
        sym = sp.Symbol(var, real=True)
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={var: sym})
        self.expr = sp.sympify(expr)
        self.var = var
        self._fn = _broadcasting(sp.lambdify(sym, self.expr, "numpy"), 1)
        self._dfn = _broadcasting(sp.lambdify(sym, sp.diff(self.expr, sym), "numpy"), 1)

    def __call__(self, v):
        return self._fn(np.asarray(v, float))

    def deriv(self, v):
        return self._dfn(np.asarray(v, float))

    def __repr__(self):
        return f"Function1({self.var} -> {self.expr})"
