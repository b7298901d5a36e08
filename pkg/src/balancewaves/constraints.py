"""Numeric verification of exact families: initial-data constraints, PDE
residuals with a step-halving convergence check, the compatibility
conditions of a constraint closure and each family's structural identity.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .closures import CompatFunctions
from .eos import N_INDEX, OTHER_INDICES, State, eigen
from .errors import OutOfValidity
from .numkit import fd_partial

CONSTRAINT_TOL = 1e-8
RESIDUAL_TOL = 1e-6
COMPAT_TOL = 1e-6
RATIO_BAND = (3.5, 4.5)
NOISE_FLOOR = 1e-9      # residuals below this are rounding-dominated: no ratio check


@dataclass(frozen=True)
class ResidualRow:
    check: str
    equation: str
    max_resid: float
    l2_resid: float
    h: float = math.nan
    ratio: float = math.nan
    passed: bool = True


@dataclass
class ResidualReport:
    rows: list[ResidualRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def extend(self, other: "ResidualReport") -> "ResidualReport":
        self.rows.extend(other.rows)
        return self

    def row(self, equation: str) -> ResidualRow:
        for r in self.rows:
            if r.equation == equation:
                return r
        raise KeyError(equation)

    def to_text(self) -> str:
        lines = [f"{'check':<14} {'equation':<14} {'max':>11} {'l2':>11} {'h':>9} {'ratio':>7}  result"]
        for r in self.rows:
            ratio = "" if math.isnan(r.ratio) else f"{r.ratio:7.3f}"
            h = "" if math.isnan(r.h) else f"{r.h:9.2e}"
            lines.append(f"{r.check:<14} {r.equation:<14} {r.max_resid:11.3e} {r.l2_resid:11.3e} "
                         f"{h:>9} {ratio:>7}  {'PASS' if r.passed else 'FAIL'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "equation", "max_resid", "l2_resid", "h", "ratio", "pass"])
        for r in self.rows:
            w.writerow([r.check, r.equation, f"{r.max_resid:.17g}", f"{r.l2_resid:.17g}",
                        f"{r.h:.17g}", f"{r.ratio:.17g}", "PASS" if r.passed else "FAIL"])
        return buf.getvalue()


def _norms(res: np.ndarray) -> tuple[float, float]:
    res = np.abs(np.asarray(res, dtype=float)).ravel()
    if res.size == 0:
        return 0.0, 0.0
    if not np.all(np.isfinite(res)):
        return math.inf, math.inf
    return float(res.max()), float(np.sqrt(np.mean(res**2)))


# ---------------------------------------------------------------------------
# sampling

def sample_points(fs, n_xi: int = 50, n_t: int = 20, n_random: int = 200, seed: int = 0,
                  t_hi: float | None = None):
    """(xi, t) samples inside the validity region: a tensor grid plus
    uniformly random interior points."""
    lo, hi = fs.x_domain
    pad = 0.02 * (hi - lo)
    if t_hi is None:
        t_hi = min(0.8 * fs.t_star, 1.0, fs.t_max)
    t_lo = 0.05 * t_hi
    xi_g, t_g = np.meshgrid(np.linspace(lo + pad, hi - pad, n_xi),
                            np.linspace(t_lo, t_hi, n_t), indexing="ij")
    rng = np.random.default_rng(seed)
    xi = np.concatenate([xi_g.ravel(), rng.uniform(lo + pad, hi - pad, n_random)])
    t = np.concatenate([t_g.ravel(), rng.uniform(t_lo, t_hi, n_random)])
    return xi, t


# ---------------------------------------------------------------------------
# operations

def check_initial_constraints(fs, xs=None) -> ResidualReport:
    """l^alpha(U0) . U0' - q^alpha(U0) on the non-selected families."""
    if xs is None:
        xs = np.linspace(*fs.x_domain, 201)
    xs = np.asarray(xs, dtype=float)
    report = ResidualReport()
    if xs.size == 0:
        return report
    U, dU = fs.initial(xs)
    s = State.from_array(U)
    es = eigen(fs.law, s)
    idx = list(OTHER_INDICES[fs.tag])
    lhs = np.einsum("...ij,...j->...i", es.left[..., idx, :], dU)
    res = lhs - np.asarray(fs.q(s.rho, s.u, s.S))
    for k, beta in enumerate(idx):
        mx, l2 = _norms(res[..., k])
        report.rows.append(ResidualRow("constraint", f"l{beta + 1}", mx, l2,
                                       passed=mx <= CONSTRAINT_TOL))
    return report


def _euler_residuals(fs, x, t, h):
    from .families import evaluate

    def ev(xx, tt):
        return evaluate(fs, xx, tt).as_array()

    U = ev(x, t)
    Ux = (ev(x + h, t) - ev(x - h, t)) / (2 * h)
    Ut = (ev(x, t + h) - ev(x, t - h)) / (2 * h)
    rho, u, S = U[..., 0], U[..., 1], U[..., 2]
    law = fs.law
    r1 = Ut[..., 0] + u * Ux[..., 0] + rho * Ux[..., 1]
    r2 = (Ut[..., 1] + u * Ux[..., 1] + law.p_rho(rho, S) / rho * Ux[..., 0]
          + law.p_S(rho, S) / rho * Ux[..., 2] - fs.f(rho, u, S))
    r3 = Ut[..., 2] + u * Ux[..., 2]
    return r1, r2, r3


def pde_residual(fs, grid=None, h: float = 1e-4) -> ResidualReport:
    """Central-difference residuals of mass, momentum and entropy equations
    at step h and h/2; the ratio is reported where the residual is above
    the rounding floor."""
    if grid is None:
        xi, t = sample_points(fs)
        x = fs.char_x(xi, t)
    else:
        x, t = (np.asarray(g, dtype=float) for g in grid)
        x, t = np.broadcast_arrays(x, t)
    t = np.asarray(t, dtype=float)
    if np.any(t - h < 0) or np.any(t + h >= fs.t_star):
        raise OutOfValidity("residual stencil leaves the validity horizon", fs.t_star)
    coarse = _euler_residuals(fs, x, t, h)
    fine = _euler_residuals(fs, x, t, h / 2)
    report = ResidualReport()
    for name, rc, rf in zip(("mass", "momentum", "entropy"), coarse, fine):
        mx, l2 = _norms(rc)
        mf, _ = _norms(rf)
        ratio = mx / mf if (mx > NOISE_FLOOR and mf > 0) else math.nan
        ok = mx <= RESIDUAL_TOL and (math.isnan(ratio) or RATIO_BAND[0] <= ratio <= RATIO_BAND[1])
        report.rows.append(ResidualRow("pde", name, mx, l2, h, ratio, ok))
    return report


def _compat_point(cf: CompatFunctions, y: np.ndarray):
    w, z, hv = cf.w(y), cf.z(y), cf.h(y)
    s = cf.state(*y)
    lamN = eigen(cf.law, s).lam[..., N_INDEX[cf.tag]]
    dw = [np.asarray(fd_partial(cf.w, y, i)) for i in range(3)]
    dz = [np.asarray(fd_partial(cf.z, y, i)) for i in range(3)]
    c1 = dz[2] + lamN * dw[2]
    c2 = (dw[0] * z[0] + dw[1] * z[1]) - (dz[0] * w[0] + dz[1] * w[1]) + dw[2] * hv
    return c1, c2


def verify_compatibility(cf: CompatFunctions, law=None, samples=None) -> ResidualReport:
    """Residuals of the two compatibility conditions,
    dz/dv + lambda^N dw/dv = 0 and w_R z - z_R w + w_v h = 0, by central
    differences in (R1, R2, v). ``samples`` are states (State or (N, 3))."""
    if law is not None and law is not cf.law:
        cf = CompatFunctions(law, cf.tag, cf.f, cf.q, cf.name)
    if samples is None:
        raise ValueError("samples are required")
    U = samples.as_array() if isinstance(samples, State) else np.asarray(samples, dtype=float)
    U = U.reshape(-1, 3)
    Y = cf.char(U[:, 0], U[:, 1], U[:, 2])
    res1, res2 = [], []
    for y in Y:
        c1, c2 = _compat_point(cf, y)
        res1.append(c1)
        res2.append(c2)
    report = ResidualReport()
    for name, res in (("c1", res1), ("c2", res2)):
        mx, l2 = _norms(np.array(res))
        report.rows.append(ResidualRow(f"compat:{cf.name}"[:14], name, mx, l2,
                                       passed=mx <= COMPAT_TOL))
    return report


def verify_structural(fs, samples=None) -> ResidualReport:
    """The family's structural identities evaluated on its own states."""
    if samples is None:
        xi, t = sample_points(fs, n_xi=40, n_t=10, n_random=100)
        rho, u, S = fs.at_label(xi, t)
    else:
        U = samples.as_array() if isinstance(samples, State) else np.asarray(samples, float)
        rho, u, S = U[..., 0], U[..., 1], U[..., 2]
    report = ResidualReport()
    try:
        items = fs.structural(rho, u, S)
    except Exception as exc:  # a broken closure counts as a failed identity
        report.rows.append(ResidualRow("structural", type(exc).__name__, math.inf, math.inf,
                                       passed=False))
        return report
    for name, res, tol in items:
        mx, l2 = _norms(res)
        report.rows.append(ResidualRow("structural", name, mx, l2,
                                       passed=mx <= max(tol, 1e-13)))
    return report


def verify_family(fs, seed: int = 0, **sample_kw) -> ResidualReport:
    """All checks for a shipped family: constraints, PDE residual, structure.

    ``sample_kw`` is forwarded to :func:`sample_points`; an empty sample set
    raises ValueError.
    """
    report = check_initial_constraints(fs)
    report.extend(pde_residual(fs, _grid_from_seed(fs, seed, **sample_kw)))
    report.extend(verify_structural(fs))
    return report


def _grid_from_seed(fs, seed, **sample_kw):
    xi, t = sample_points(fs, seed=seed, **sample_kw)
    if np.size(xi) == 0:
        raise ValueError("empty sample set")
    return fs.char_x(xi, t), t


__all__ = ["ResidualRow", "ResidualReport", "CompatFunctions", "sample_points",
           "check_initial_constraints", "pde_residual", "verify_compatibility",
           "verify_structural", "verify_family", "CONSTRAINT_TOL", "RESIDUAL_TOL",
           "COMPAT_TOL", "RATIO_BAND", "NOISE_FLOOR"]
