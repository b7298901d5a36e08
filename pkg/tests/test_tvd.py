import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from balancewaves.eos import IdealGas, State
from balancewaves.errors import CflViolation, NonFinite, VacuumFormed
from balancewaves.families import evaluate
from balancewaves.fixtures import default_family
from balancewaves.riemann import ccc_entropy, ccc_rp_input, explicit_ideal_rp, solve_rp
from balancewaves.tvd import (CSV_HEADER, GridField, TvdConfig, advance_scalar, advance_system,
                              l1_distance, scalar_fan_problem, snapshot_csv, step_profile,
                              total_variation)


def _bump(x):
    return np.exp(-10 * x**2)


def test_total_variation_examples():
    assert total_variation(np.full(10, 3.0)) == 0.0
    assert total_variation(np.linspace(0, 1, 11)) == pytest.approx(1.0, abs=1e-15)
    assert total_variation(np.r_[np.zeros(5), np.ones(5)]) == 1.0


def test_constant_field_unchanged():
    cfg = TvdConfig(-1, 1, 41, dt=0.01, T=0.3)
    v0 = GridField.scalar(cfg.x, np.full(41, 0.7))
    run = advance_scalar(cfg, lambda v: 1 + v, None, v0)
    assert np.array_equal(run.final.v, v0.v)


def _advection_errors(limiter="van-leer"):
    errs = []
    for k in range(4):
        nx = 100 * 2**k + 1
        cfg = TvdConfig(-2, 2, nx, dt=0.4 * 4 / (nx - 1), T=0.5, limiter=limiter)
        run = advance_scalar(cfg, lambda v: 1 + 0 * v, None, GridField.scalar(cfg.x, _bump(cfg.x)))
        errs.append(l1_distance(cfg.x, run.final.v, _bump(cfg.x - 0.5)))
    return np.array(errs)


def test_advected_bump_converges():
    errs = _advection_errors()
    assert np.all(errs[:-1] / errs[1:] >= 2.5), errs


def test_smooth_order_of_accuracy():
    errs = _advection_errors()
    order = np.log2(errs[0] / errs[-1]) / (len(errs) - 1)
    assert 1.5 <= order <= 2.0, order


def test_minmod_limiter_is_convergent_but_less_accurate():
    vl, mm = _advection_errors()[:2], _advection_errors("minmod")[:2]
    assert mm[1] < mm[0]
    assert mm[0] > vl[0]


@pytest.mark.parametrize("limiter", ["van-leer", "minmod"])
@pytest.mark.parametrize("speed", [lambda v: 0.5 + 0 * v, lambda v: 2 * v, lambda v: -0.3 - 0.2 * v,
                                   lambda v: v - 0.5])
def test_step_total_variation_never_increases(limiter, speed):
    cfg = TvdConfig(-1, 1, 81, dt=0.005, T=0.4, limiter=limiter)
    v0 = GridField.scalar(cfg.x, step_profile(cfg.x, 1.0, 0.0))
    run = advance_scalar(cfg, speed, None, v0)
    assert np.max(np.diff(run.tv_history)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=6),
       st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(["van-leer", "minmod"]))
def test_piecewise_constant_total_variation(levels, a, b, limiter):
    cfg = TvdConfig(-1, 1, 61, dt=0.01, T=0.2, limiter=limiter)
    idx = np.minimum(((cfg.x + 1) / 2 * len(levels)).astype(int), len(levels) - 1)
    v0 = GridField.scalar(cfg.x, np.asarray(levels)[idx])
    run = advance_scalar(cfg, lambda v: a + b * v, None, v0)
    assert np.max(np.diff(run.tv_history)) <= 1e-12


def test_source_term_second_order_in_time():
    # v_t = -v with zero speed: exact exp(-T)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        cfg = TvdConfig(0, 1, 11, dt=dt, T=1.0)
        run = advance_scalar(cfg, lambda v: 0 * v, lambda v, x, t: -v,
                             GridField.scalar(cfg.x, np.ones(11)))
        errs.append(abs(run.final.v[0] - np.exp(-1.0)))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_cfl_violation():
    cfg = TvdConfig(-1, 1, 21, dt=0.2, T=1.0)
    with pytest.raises(CflViolation):
        advance_scalar(cfg, lambda v: 1 + 0 * v, None, GridField.scalar(cfg.x, np.zeros(21)))


def test_non_finite_detected():
    cfg = TvdConfig(0, 1, 11, dt=0.1, T=1.0)
    with np.errstate(over="ignore"):
        with pytest.raises(NonFinite):
            advance_scalar(cfg, lambda v: 0 * v, lambda v, x, t: 1e200 * v**3,
                           GridField.scalar(cfg.x, np.full(11, 1e60)))


def test_output_times_and_remainder_step():
    cfg = TvdConfig(-1, 1, 21, dt=0.03, T=0.1)
    run = advance_scalar(cfg, lambda v: 0.5 + 0 * v, None,
                         GridField.scalar(cfg.x, _bump(cfg.x)), outputs=[0.0, 0.06])
    assert [f.t for f in run.fields] == [0.0, 0.06, 0.1]
    assert run.steps == 4


def test_config_validation():
    with pytest.raises(ValueError):
        TvdConfig(nx=7)
    with pytest.raises(ValueError):
        TvdConfig(limiter="superbee")
    with pytest.raises(ValueError):
        TvdConfig(boundary="periodic")
    with pytest.raises(ValueError):
        TvdConfig.from_spacing(-2, 2, 0.03)
    assert TvdConfig.from_spacing(-2, 2, 4e-2).nx == 101


def test_grid_field_validation():
    with pytest.raises(ValueError):
        GridField.scalar(np.arange(5.0), np.zeros(5))
    with pytest.raises(NonFinite):
        GridField.scalar(np.arange(10.0), np.r_[np.zeros(9), np.nan])


# -- the Riemann scenario with the nonhomogeneous ideal gas -------------------

def _reference_errors(levels=4):
    exact = explicit_ideal_rp(3.0, 1.0, 0.0, 2.0, 0.5, 4.0)
    rp = solve_rp(ccc_rp_input(3.0, 1.0, 0.0, 2.0, 0.5, 4.0))
    lam, rhs = scalar_fan_problem(rp)
    errs = []
    for k in range(levels):
        cfg = TvdConfig.from_spacing(-2, 2, 4e-2 / 2**k, dt=1e-3 / 2**k, T=0.1, boundary="fixed")
        v0 = GridField.scalar(cfg.x, step_profile(cfg.x, rp.v_L, rp.v_R))
        run = advance_scalar(cfg, lam, rhs, v0)
        errs.append(l1_distance(cfg.x, run.final.v, exact.u_at(cfg.x, 0.1)))
    return np.array(errs)


def test_reference_scalar_run_converges_to_fan():
    errs = _reference_errors()
    assert np.all(errs[:-1] / errs[1:] >= 1.5), errs


def test_fan_problem_speed_is_linear_for_gamma_three():
    rp = solve_rp(ccc_rp_input(3.0, 1.0, 0.0, 2.0, 0.5, 4.0))
    lam, rhs = scalar_fan_problem(rp)
    v = np.linspace(0.5, 4, 8)
    np.testing.assert_allclose(lam(v), 2 * v, rtol=1e-13)
    assert np.max(np.abs(rhs(v, 0.0, 0.0))) <= 1e-13


# -- full system --------------------------------------------------------------

def test_system_preserves_uniform_equilibrium():
    law = IdealGas(1.4)
    cfg = TvdConfig(-1, 1, 41, dt=1e-3, T=0.05)
    n = cfg.nx
    U0 = GridField.from_state(cfg.x, State(np.full(n, 1.3), np.full(n, 0.2), np.full(n, 0.1)))
    run = advance_system(cfg, law, lambda r, u, S: 0 * r, U0)
    assert np.max(np.abs(run.final.values - U0.values)) <= 1e-12


def test_system_equilibrium_of_nonzero_force_profile():
    # f(rho, u, S) = 1 - u vanishes at u = 1; uniform rho and S stay put
    law = IdealGas(1.4)
    cfg = TvdConfig(-1, 1, 41, dt=1e-3, T=0.05)
    n = cfg.nx
    U0 = GridField.from_state(cfg.x, State(np.full(n, 0.9), np.ones(n), np.full(n, -0.2)))
    run = advance_system(cfg, law, lambda r, u, S: 1 - u, U0)
    assert np.max(np.abs(run.final.values - U0.values)) <= 1e-12


def test_system_converges_to_exact_family():
    fs = default_family("IG_II")
    T = 0.3
    errs = []
    for k in range(3):
        dx = 0.04 / 2**k
        cfg = TvdConfig.from_spacing(-2, 2, dx, dt=0.2 * dx, T=T)
        run = advance_system(cfg, fs.law, fs.source(),
                             GridField.from_state(cfg.x, evaluate(fs, cfg.x, 0.0)))
        # outside [-1, 1] the outflow boundary can be felt
        m = (cfg.x > -1) & (cfg.x < 1)
        ex = evaluate(fs, cfg.x[m], T).as_array().T
        errs.append(sum(l1_distance(cfg.x[m], run.final.values[j][m], ex[j]) for j in range(3)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] >= 3.0


def test_system_riemann_fan_matches_closed_form():
    exact = explicit_ideal_rp(3.0, 1.0, 0.0, 2.0, 0.5, 4.0)
    inp = ccc_rp_input(3.0, 1.0, 0.0, 2.0, 0.5, 4.0)
    S = ccc_entropy(3.0, 1.0, 2.0)
    errs = []
    for k in range(3):
        cfg = TvdConfig.from_spacing(-2, 2, 4e-2 / 2**k, dt=1e-3 / 2**k, T=0.1, boundary="fixed")
        rho0 = step_profile(cfg.x, 0.5, 4.0)
        U0 = GridField.from_state(cfg.x, State(rho0, rho0.copy(), np.full_like(rho0, S)))
        run = advance_system(cfg, IdealGas(3.0), inp.compat.f, U0)
        errs.append(l1_distance(cfg.x, run.final["u"], exact.u_at(cfg.x, 0.1)))
    assert errs[0] < 0.1
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_system_vacuum_detected():
    law = IdealGas(1.4)
    cfg = TvdConfig(-1, 1, 41, dt=2e-3, T=0.5)
    rho = np.where(np.abs(cfg.x) < 0.1, 0.0, 1.0)
    U0 = GridField(cfg.x, np.stack([rho, np.zeros(41), np.zeros(41)]), 0.0, ("rho", "u", "S"))
    with pytest.raises(VacuumFormed):
        advance_system(cfg, law, None, U0)


def test_system_strong_expansion_stays_positive():
    law = IdealGas(1.4)
    cfg = TvdConfig(-1, 1, 41, dt=0.9 * 0.05 / 6.5, T=0.3)
    U0 = GridField.from_state(cfg.x, State(1 - 0.999999 * np.exp(-(cfg.x / 0.05) ** 2),
                                           5 * np.tanh(cfg.x / 0.05), np.zeros(41)))
    assert advance_system(cfg, law, None, U0).final["rho"].min() > 0


def test_system_cfl_violation():
    law = IdealGas(1.4)
    cfg = TvdConfig(-1, 1, 41, dt=0.1, T=0.5)
    U0 = GridField.from_state(cfg.x, State(np.ones(41), np.zeros(41), np.zeros(41)))
    with pytest.raises(CflViolation):
        advance_system(cfg, law, None, U0)


# -- output -------------------------------------------------------------------

def test_snapshot_csv_round_trips():
    law = IdealGas(1.4)
    x = np.linspace(0, 1, 9)
    s = State(1 + x / 3, np.sin(x), 0.1 * x)
    text = snapshot_csv(x, s, law)
    rows = list(csv.reader(io.StringIO(text)))
    assert ",".join(rows[0]) == CSV_HEADER
    data = np.array(rows[1:], dtype=float)
    assert np.array_equal(data[:, 1], s.rho)
    assert np.array_equal(data[:, 4], law.pressure(s.rho, s.S))
    assert snapshot_csv(x, s, law) == text
