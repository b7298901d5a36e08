"""Command-line front end.

Subcommands ``exact``, ``rp``, ``tvd-compare``, ``verify`` and ``subchar``
read an INI scenario (``--config``), write CSV and JSON files into ``--out``
and report through the exit code:

    0  success
    1  configuration error (unreadable or malformed file, bad values,
       empty sample set) or a numerical failure such as a CFL violation
    2  ConstraintViolation: initial data break the differential constraints
    3  OutOfValidity: a requested time lies beyond the breakdown time t*
    4  InadmissibleData: Riemann data violate a named hypothesis
    5  a verification or subcharacteristic check FAILed

Any option can be overridden from the environment with
``BALANCEWAVES_<SECTION>__<KEY>=value``, e.g. ``BALANCEWAVES_RP__RHO_R=3``.
See ``docs/config.md`` for the full schema.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import sympy as sp

from .closures import ccc_closure, chaplygin_case_iii_closure, vk_case_ii_closure
from .constraints import verify_compatibility, verify_family
from .eos import Chaplygin, Constant, Exponential, IdealGas, State, VonKarman
from .errors import BalanceWavesError, ConstraintViolation, InadmissibleData, OutOfValidity
from .families import FAMILY_IDS, SCHEMAS, FamilyParams, evaluate, make_family
from .fixtures import default_fixture
from .profiles import Closure, Function1, Profile
from .riemann import (ccc_equilibrium, ccc_rp_input, asymptotic_compare, explicit_ideal_rp,
                      solve_rp, subcharacteristic_check)
from .tvd import (GridField, TvdConfig, advance_scalar, advance_system, l1_distance,
                  scalar_fan_problem, snapshot_csv, step_profile)

ENV_PREFIX = "BALANCEWAVES_"
COMMANDS = ("exact", "rp", "tvd-compare", "verify", "subchar")

EXIT_OK, EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_VALIDITY, EXIT_INADMISSIBLE, EXIT_FAIL = range(6)

# variable of each function-valued family parameter given as an expression
_FUNCTION_VARS = {"F2": "u", "psi": "rho", "pi0": "u"}

REFERENCE_RP = dict(gamma=3.0, k0=1.0, k1=0.0, k2=2.0, rho_L=0.5, rho_R=4.0, Cv=1.0, S_hat=0.0)


class ConfigError(Exception):
    pass


@dataclass
class Scenario:
    command: str
    cfg: configparser.ConfigParser
    out: Path
    seed: int

    def section(self, name: str) -> configparser.SectionProxy | dict:
        return self.cfg[name] if self.cfg.has_section(name) else {}

    def raw(self, section: str, key: str) -> str | None:
        """Option value with the key matched case-insensitively."""
        for k, v in self.section(section).items():
            if k.lower() == key.lower():
                return v
        return None

    def num(self, section: str, key: str, default: float | None = None) -> float:
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{section}] {key} is required")
            return float(default)
        try:
            return float(sp.sympify(raw))
        except (sp.SympifyError, TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as a number") from exc

    def integer(self, section: str, key: str, default: int) -> int:
        v = self.num(section, key, default)
        if v != int(v):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(v)

    def text(self, section: str, key: str, default: str) -> str:
        raw = self.raw(section, key)
        return str(default if raw is None else raw).strip()

    def floats(self, section: str, key: str, default: str) -> list[float]:
        raw = self.text(section, key, default)
        try:
            return [float(sp.sympify(p)) for p in raw.split(",") if p.strip()]
        except (sp.SympifyError, TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: cannot read {raw!r}") from exc


# ---------------------------------------------------------------------------
# config loading

def _new_parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    p.optionxform = str
    return p


def load_config(path: str | None, environ=None) -> configparser.ConfigParser:
    cfg = _new_parser()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            cfg.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
    apply_env(cfg, os.environ if environ is None else environ)
    return cfg


def apply_env(cfg: configparser.ConfigParser, environ) -> None:
    """Apply ``BALANCEWAVES_<SECTION>__<KEY>`` overrides (matched case-insensitively)."""
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
            continue
        sec, key = name[len(ENV_PREFIX):].split("__", 1)
        sec = sec.lower()
        if not cfg.has_section(sec):
            cfg.add_section(sec)
        existing = {k.lower(): k for k in cfg[sec]}
        cfg[sec][existing.get(key.lower(), key)] = environ[name]


# ---------------------------------------------------------------------------
# output helpers

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_index(out: Path, prefix: str, times) -> None:
    lines = ["file,t"] + [f"{prefix}_{k:03d}.csv,{t:.17g}" for k, t in enumerate(times)]
    _write(out / f"{prefix}_index.csv", "\n".join(lines) + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# family scenarios

def _law_from_config(sc: Scenario):
    sec = sc.section("law")
    if not sec:
        return None
    kind = sc.text("law", "kind", "ideal").lower()
    if kind == "ideal":
        return IdealGas(sc.num("law", "gamma"), sc.num("law", "Cv", 1.0), sc.num("law", "S_hat", 0.0))
    if kind == "chaplygin":
        return Chaplygin(sc.num("law", "a0"))
    raise ConfigError(f"[law] kind {kind!r} is not one of ideal, chaplygin")


def family_from_config(sc: Scenario, check: bool = True):
    fid = sc.text("family", "id", "")
    if fid not in SCHEMAS:
        raise ConfigError(f"[family] id {fid!r} is not one of {', '.join(FAMILY_IDS)}")
    fixture = sc.text("family", "fixture", "yes").lower() in ("yes", "true", "1", "on")
    if fixture:
        params, profiles = default_fixture(fid)
        values, functions, law = dict(params.values), dict(params.functions), params.law
    else:
        values, functions, law, profiles = {}, {}, None, {}
    for key in sc.section("family"):
        if key not in ("id", "fixture"):
            values[key] = sc.num("family", key)
    for key, expr in sc.section("functions").items():
        try:
            functions[key] = (Function1(expr, _FUNCTION_VARS[key]) if key in _FUNCTION_VARS
                              else Closure.from_expr(expr))
        except (sp.SympifyError, ValueError, TypeError) as exc:
            raise ConfigError(f"[functions] {key}: {exc}") from exc
    for key, expr in sc.section("profiles").items():
        try:
            profiles[key] = Profile.from_expr(expr)
        except (sp.SympifyError, ValueError, TypeError) as exc:
            raise ConfigError(f"[profiles] {key}: {exc}") from exc
    law = _law_from_config(sc) or law
    missing = [p for p in SCHEMAS[fid].profiles if p not in profiles]
    if missing:
        raise ConfigError(f"[profiles] missing {missing} for family {fid}")
    return make_family(FamilyParams(fid, values, functions, law), profiles, check=check)


def run_exact(sc: Scenario) -> int:
    fs = family_from_config(sc)
    lo, hi = fs.x_domain
    x_min, x_max = sc.num("grid", "x_min", lo), sc.num("grid", "x_max", hi)
    nx = sc.integer("grid", "nx", 101)
    if nx < 2 or not x_min < x_max:
        raise ConfigError("[grid] needs x_min < x_max and nx >= 2")
    times = sc.floats("grid", "times", "0")
    x = np.linspace(x_min, x_max, nx)
    for t in times:
        if t > 0 and t >= fs.t_star:
            raise OutOfValidity(f"t = {t:.17g} is beyond the breakdown time", fs.t_star)
    for k, t in enumerate(times):
        a, b = fs.x_range(t) if t > 0 else fs.x_domain
        xs = x[(x >= a) & (x <= b)]
        _write(sc.out / f"exact_{k:03d}.csv", snapshot_csv(xs, evaluate(fs, xs, t), fs.law))
    _write_index(sc.out, "exact", times)
    _write(sc.out / "exact_metadata.json",
           _json(dict(family=fs.family_id, t_star=_finite_or_str(fs.t_star), times=times)))
    return EXIT_OK


def _finite_or_str(v: float):
    return float(v) if np.isfinite(v) else "inf"


# ---------------------------------------------------------------------------
# Riemann scenarios (nonhomogeneous ideal gas with the equilibrium closure)

def _rp_params(sc: Scenario) -> dict:
    return {k: sc.num("rp", k, d) for k, d in REFERENCE_RP.items()}


def run_rp(sc: Scenario) -> int:
    p = _rp_params(sc)
    rp = solve_rp(ccc_rp_input(**p))
    x = np.linspace(sc.num("grid", "x_min", -2.0), sc.num("grid", "x_max", 2.0),
                    sc.integer("grid", "nx", 101))
    times = sc.floats("grid", "times", "0.1")
    for k, t in enumerate(times):
        _write(sc.out / f"rp_{k:03d}.csv", snapshot_csv(x, rp.evaluate(x, t), rp.law))
    _write_index(sc.out, "rp", times)
    meta = dict(rp.metadata(), params=p, times=times)
    if rp.kind == "fan" and p["rho_L"] < p["rho_R"]:
        ex = explicit_ideal_rp(**p)
        ref = [float(np.max(np.abs(rp.evaluate(x, t).u - ex.u_at(x, t)))) for t in times if t > 0]
        meta["closed_form_max_velocity_diff"] = max(ref) if ref else 0.0
    _write(sc.out / "rp_metadata.json", _json(meta))
    return EXIT_OK


def run_tvd_compare(sc: Scenario) -> int:
    p = _rp_params(sc)
    rp = solve_rp(ccc_rp_input(**p))
    solver = sc.text("tvd", "solver", "scalar")
    if solver not in ("scalar", "system"):
        raise ConfigError("[tvd] solver must be scalar or system")
    dx0, dt0 = sc.num("tvd", "dx", 4e-2), sc.num("tvd", "dt", 1e-3)
    T = sc.num("tvd", "T", 0.1)
    levels = sc.integer("tvd", "refinements", 3) + 1
    x_min, x_max = sc.num("grid", "x_min", -2.0), sc.num("grid", "x_max", 2.0)
    limiter = sc.text("tvd", "limiter", "van-leer")
    boundary = sc.text("tvd", "boundary", "fixed")
    rows = ["level,dx,dt,l1_u,ratio"]
    prev = None
    for k in range(levels):
        try:
            cfg = TvdConfig.from_spacing(x_min, x_max, dx0 / 2**k, dt=dt0 / 2**k, T=T,
                                         limiter=limiter, boundary=boundary)
        except ValueError as exc:
            raise ConfigError(f"[tvd] {exc}") from exc
        if solver == "scalar":
            lam, rhs = scalar_fan_problem(rp)
            run = advance_scalar(cfg, lam, rhs,
                                 GridField.scalar(cfg.x, step_profile(cfg.x, rp.v_L, rp.v_R)))
            s = rp.state_of(run.final.v)
        else:
            rho0 = step_profile(cfg.x, float(rp.left.rho), float(rp.right.rho))
            u0 = step_profile(cfg.x, float(rp.left.u), float(rp.right.u))
            U0 = GridField.from_state(cfg.x, State(rho0, u0, np.full_like(rho0, float(rp.left.S))))
            s = advance_system(cfg, rp.law, rp.closure.f, U0).final.state()
        err = l1_distance(cfg.x, s.u, rp.evaluate(cfg.x, T).u)
        ratio = prev / err if prev is not None and err > 0 else float("nan")
        rows.append(f"{k},{cfg.dx:.17g},{cfg.dt:.17g},{err:.17g},{ratio:.17g}")
        prev = err
        _write(sc.out / f"tvd_{k:03d}.csv", snapshot_csv(cfg.x, s, rp.law))
    _write(sc.out / "tvd_compare.csv", "\n".join(rows) + "\n")
    print("\n".join(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification

def _compat_closures():
    vk = VonKarman(Exponential(1.0, 0.5), Constant(1.0))
    return {
        "ccc": ccc_closure(IdealGas(1.4), 0.3, 0.2, 0.5),
        "vk-case-ii": vk_case_ii_closure(vk, 0.4, 0.3, lambda R: 0.15 * R),
        "chaplygin-case-iii": chaplygin_case_iii_closure(Chaplygin(1.0), 0.5,
                                                         lambda R: 0.2 * R + 0.1 * np.sin(R)),
    }


def run_verify(sc: Scenario) -> int:
    sample_kw = dict(n_xi=sc.integer("verify", "n_xi", 50), n_t=sc.integer("verify", "n_t", 20),
                     n_random=sc.integer("verify", "samples", 200))
    if min(sample_kw.values()) < 0:
        raise ConfigError("[verify] sample counts must be non-negative")
    if sample_kw["n_xi"] * sample_kw["n_t"] + sample_kw["n_random"] == 0:
        raise ConfigError("[verify] empty sample set")
    n_compat = sc.integer("verify", "compat_samples", 40)
    if n_compat <= 0:
        raise ConfigError("[verify] empty compatibility sample set")
    if sc.section("family"):
        families = {sc.text("family", "id", ""): family_from_config(sc, check=False)}
    else:
        names = sc.text("verify", "families", "all")
        ids = FAMILY_IDS if names == "all" else tuple(n.strip() for n in names.split(","))
        bad = [i for i in ids if i not in SCHEMAS]
        if bad:
            raise ConfigError(f"[verify] unknown family ids {bad}")
        families = {}
        for fid in ids:
            params, profiles = default_fixture(fid)
            families[fid] = make_family(params, profiles, check=False)
    summary = ["name,result"]
    ok = True
    for fid, fs in families.items():
        report = verify_family(fs, seed=sc.seed, **sample_kw)
        _write(sc.out / f"verify_{fid}.txt", report.to_text())
        _write(sc.out / f"verify_{fid}.csv", report.to_csv())
        summary.append(f"{fid},{'PASS' if report.passed else 'FAIL'}")
        ok &= report.passed
    if sc.text("verify", "compatibility", "yes").lower() in ("yes", "true", "1", "on"):
        rng = np.random.default_rng(sc.seed)
        states = np.stack([rng.uniform(0.5, 2.0, n_compat), rng.uniform(-0.5, 0.5, n_compat),
                           rng.uniform(-0.5, 0.5, n_compat)], -1)
        for name, cf in _compat_closures().items():
            report = verify_compatibility(cf, samples=states)
            _write(sc.out / f"compat_{name}.csv", report.to_csv())
            summary.append(f"compat:{name},{'PASS' if report.passed else 'FAIL'}")
            ok &= report.passed
    text = "\n".join(summary) + "\n"
    _write(sc.out / "verify_summary.csv", text)
    print(text, end="")
    return EXIT_OK if ok else EXIT_FAIL


def run_subchar(sc: Scenario) -> int:
    p = _rp_params(sc)
    n = sc.integer("subchar", "samples", 200)
    if n <= 0:
        raise ConfigError("[subchar] empty sample set")
    sub = ccc_equilibrium(p["gamma"], p["k0"], p["k1"], p["k2"])
    law = IdealGas(p["gamma"], p["Cv"], p["S_hat"])
    lo, hi = sorted((p["rho_L"], p["rho_R"]))
    rho = np.sort(np.random.default_rng(sc.seed).uniform(lo, hi, n))
    rp = solve_rp(ccc_rp_input(**p))
    S = float(rp.left.S)
    report = subcharacteristic_check(sub, law, State(rho, 0 * rho, np.full_like(rho, S)))
    _write(sc.out / "subchar.csv", report.to_csv())
    times = sc.floats("subchar", "times", "0.05, 0.1")
    dist = asymptotic_compare(rp, sub, times)
    _write(sc.out / "asymptotic.csv",
           "t,l1\n" + "".join(f"{t:.17g},{d:.17g}\n" for t, d in zip(times, dist)))
    tol = sc.num("subchar", "asymptotic_tol", 1e-6)
    ok = report.passed and bool(np.all(dist <= tol))
    print(f"subcharacteristic min margin {report.min_margin:.3e}; "
          f"asymptotic distance {float(np.max(dist)):.3e}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


RUNNERS = {"exact": run_exact, "rp": run_rp, "tvd-compare": run_tvd_compare,
           "verify": run_verify, "subchar": run_subchar}


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="balancewaves", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI scenario file")
    ap.add_argument("--out", default="out", help="output directory (default ./out)")
    ap.add_argument("--seed", type=int, default=None, help="random seed (overrides [scenario] seed)")
    return ap


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, environ)
        seed = args.seed
        if seed is None:
            seed = int(cfg["scenario"].get("seed", "0")) if cfg.has_section("scenario") else 0
        sc = Scenario(args.command, cfg, Path(args.out), seed)
        return RUNNERS[args.command](sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintViolation as exc:
        print(f"constraint violation: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_CONSTRAINT
    except OutOfValidity as exc:
        print(f"out of validity: {exc}; t* = {exc.t_star:.17g}", file=sys.stderr)
        return EXIT_VALIDITY
    except InadmissibleData as exc:
        print(f"inadmissible data: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (BalanceWavesError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
