"""Small numerical kernels: root bracketing, quadrature, ODE stepping and
central finite differences.

Everything here is pure; the vectorised helpers (``bisect_vec``,
``gauss_legendre``) are what the exact-solution evaluators use on whole
sample grids at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (MaxDepthExceeded, MaxIterExceeded, MaxStepsExceeded,
                     NoBracket, NonFinite)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RootConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200
    expansion: float = 2.0
    max_expansions: int = 20

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    max_depth: int = 40

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class OdeConfig:
    method: str = "rk4-fixed"     # or "rk45-adaptive"
    step: float = 1e-3
    tol: float = 1e-10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown ODE method {self.method!r}")
        if not (self.step > 0 or self.tol > 0):
            raise ValueError("step or tol must be positive")


# ---------------------------------------------------------------------------
# root finding

def _expand(f, a: float, b: float, cfg: RootConfig):
    fa, fb = f(a), f(b)
    n = 0
    while np.sign(fa) * np.sign(fb) > 0:
        if n >= cfg.max_expansions:
            raise NoBracket(f"no sign change on [{a:g}, {b:g}] after {n} expansions")
        mid, half = 0.5 * (a + b), 0.5 * (b - a) * cfg.expansion
        a, b = mid - half, mid + half
        fa, fb = f(a), f(b)
        n += 1
    return a, b, fa, fb


def find_root(f: Callable[[float], float], bracket: Sequence[float],
              cfg: RootConfig = RootConfig()) -> float:
    """Bisection with a Newton (secant-slope) polish.

    The bracket is grown symmetrically if ``f`` does not change sign on it.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if a > b:
        a, b = b, a
    a, b, fa, fb = _expand(f, a, b, cfg)
    if not (np.isfinite(fa) and np.isfinite(fb)):
        raise NonFinite("f is not finite at the bracket ends")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b

    for _ in range(cfg.max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if not np.isfinite(fm):
            raise NonFinite(f"f({m!r}) is not finite")
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
        if b - a <= cfg.abs_tol or abs(fm) <= cfg.abs_tol:
            break
    else:
        raise MaxIterExceeded(f"bisection did not converge in {cfg.max_iter} steps")

    # polish: Newton steps with a local secant slope, kept inside [a, b]
    x = a if abs(fa) < abs(fb) else b
    fx = fa if x == a else fb
    for _ in range(8):
        h = 1e-7 * max(1.0, abs(x))
        slope = (f(x + h) - f(x - h)) / (2 * h)
        if slope == 0.0 or not np.isfinite(slope):
            break
        xn = x - fx / slope
        if not (a <= xn <= b):
            break
        fn = f(xn)
        if not abs(fn) < abs(fx):
            break
        x, fx = xn, fn
        if fx == 0.0:
            break
    return x


def bisect_vec(f: Callable[[np.ndarray], np.ndarray], lo, hi,
               max_iter: int = 200) -> np.ndarray:
    """Elementwise bisection for many independent monotone problems.

    Iterates until every interval has collapsed to adjacent floats, so the
    result is as accurate as the evaluation of ``f`` allows.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    flo, fhi = f(lo), f(hi)
    bad = np.sign(flo) * np.sign(fhi) > 0
    if np.any(bad):
        raise NoBracket(f"{int(bad.sum())} of {bad.size} brackets show no sign change")
    slo = np.sign(flo)
    done_lo = flo == 0
    done_hi = fhi == 0
    hi = np.where(done_lo, lo, hi)
    lo = np.where(done_hi, hi, lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid != lo) & (mid != hi)
        if not np.any(active):
            break
        fm = f(mid)
        if not np.all(np.isfinite(fm[active])):
            raise NonFinite("non-finite value during bisection")
        same = np.sign(fm) == slo
        lo = np.where(active & same, mid, lo)
        hi = np.where(active & ~same, mid, hi)
        exact = active & (fm == 0)
        lo = np.where(exact, mid, lo)
        hi = np.where(exact, mid, hi)
    else:
        raise MaxIterExceeded("vectorised bisection did not converge")
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# quadrature

def quad(f: Callable[[float], float], a: float, b: float,
         cfg: QuadConfig = QuadConfig()) -> float:
    """Adaptive Simpson rule with Richardson correction."""
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    scale = abs(whole)
    if scale == 0.0:
        scale = abs(b - a) * max(abs(fa), abs(fb), abs(fm), 1.0)
    return _simpson(f, a, b, fa, fm, fb, whole, cfg.rel_tol * scale, cfg.max_depth)


def _simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4 * flm + fm) / 6
    right = (b - m) * (fm + 4 * frm + fb) / 6
    delta = left + right - whole
    if abs(delta) <= 15 * tol or (b - a) <= 4 * _EPS * max(abs(a), abs(b), 1.0):
        return left + right + delta / 15
    if depth <= 0:
        raise MaxDepthExceeded(f"adaptive Simpson exceeded depth on [{a:g}, {b:g}]")
    return (_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a, b, n: int = 32) -> np.ndarray:
    """Fixed n-point Gauss-Legendre rule, broadcast over arrays of limits.

    ``f`` receives nodes with a trailing axis of length ``n``.
    """
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    nodes, weights = _GL_CACHE[n]
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    vals = f(a + half * (nodes + 1.0))
    return np.sum(vals * weights, axis=-1) * half[..., 0]


# ---------------------------------------------------------------------------
# ODEs

@dataclass(frozen=True)
class Trajectory:
    """Solution samples with dense output through ``__call__``."""
    t: np.ndarray
    y: np.ndarray            # shape (len(t), dim)
    dydt: np.ndarray         # rhs at the samples, for Hermite interpolation
    _dense: Callable | None = None

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self._dense is not None:
            return np.moveaxis(np.asarray(self._dense(s)), 0, -1)
        # cubic Hermite between stored samples
        i = np.clip(np.searchsorted(self.t, s, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        h = t1 - t0
        th = ((s - t0) / h)[..., None]
        y0, y1 = self.y[i], self.y[i + 1]
        d0, d1 = self.dydt[i] * h[..., None], self.dydt[i + 1] * h[..., None]
        h00 = 2 * th**3 - 3 * th**2 + 1
        h10 = th**3 - 2 * th**2 + th
        h01 = -2 * th**3 + 3 * th**2
        h11 = th**3 - th**2
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def ode_solve(rhs: Callable[[float, np.ndarray], np.ndarray], y0, t0: float, t1: float,
              cfg: OdeConfig = OdeConfig()) -> Trajectory:
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if cfg.method == "rk45-adaptive":
        sol = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=cfg.tol,
                        atol=cfg.tol * 1e-2, dense_output=True)
        if not sol.success:
            raise MaxStepsExceeded(sol.message)
        if not np.all(np.isfinite(sol.y)):
            raise NonFinite("non-finite ODE state")
        ys = sol.y.T
        ds = np.array([rhs(t, y) for t, y in zip(sol.t, ys)])
        return Trajectory(sol.t, ys, ds, sol.sol)

    span = t1 - t0
    n = max(1, int(np.ceil(abs(span) / cfg.step - 1e-12)))
    if n > cfg.max_steps:
        raise MaxStepsExceeded(f"{n} steps requested, max_steps={cfg.max_steps}")
    h = span / n
    ts = t0 + h * np.arange(n + 1)
    ys = np.empty((n + 1, y0.size))
    ds = np.empty_like(ys)
    y = y0.copy()
    for k in range(n):
        t = ts[k]
        k1 = np.asarray(rhs(t, y), dtype=float)
        k2 = np.asarray(rhs(t + h / 2, y + h / 2 * k1), dtype=float)
        k3 = np.asarray(rhs(t + h / 2, y + h / 2 * k2), dtype=float)
        k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
        ys[k], ds[k] = y, k1
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"non-finite ODE state at t={ts[k + 1]:g}")
    ys[n], ds[n] = y, np.asarray(rhs(ts[n], y), dtype=float)
    return Trajectory(ts, ys, ds)


# ---------------------------------------------------------------------------
# finite differences

def default_step(x: float) -> float:
    return 1e-5 * max(1.0, abs(x))


def fd_derivative(f: Callable[[float], float], x: float, h: float | None = None) -> float:
    """Second-order central difference."""
    if h is None:
        h = default_step(x)
    d = (f(x + h) - f(x - h)) / (2 * h)
    if not np.all(np.isfinite(d)):
        raise NonFinite(f"derivative at {x!r} is not finite")
    return d


def fd_partial(f: Callable[[np.ndarray], float], x, i: int, h: float | None = None):
    """Central difference of a multivariate ``f`` along coordinate ``i``."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_step(x[i])
    e = np.zeros_like(x)
    e[i] = h
    d = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    if not np.all(np.isfinite(d)):
        raise NonFinite(f"partial derivative {i} at {x!r} is not finite")
    return d
