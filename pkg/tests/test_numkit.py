import math

import numpy as np
import pytest

from balancewaves import numkit
from balancewaves.errors import MaxDepthExceeded, NoBracket, NonFinite
from balancewaves.numkit import OdeConfig, QuadConfig, RootConfig


def test_root_linear():
    assert numkit.find_root(lambda x: x - 1, (0, 2)) == pytest.approx(1, abs=1e-12)


def test_root_sqrt2():
    r = numkit.find_root(lambda x: x * x - 2, (0, 2))
    assert abs(r - math.sqrt(2)) <= 1e-12


def test_root_no_bracket():
    with pytest.raises(NoBracket):
        numkit.find_root(lambda x: 1.0, (0, 1))


def test_root_bracket_expansion():
    r = numkit.find_root(lambda x: x - 10.5, (0, 1))
    assert r == pytest.approx(10.5, abs=1e-12)


def test_root_stays_in_bracket():
    calls = []

    def f(x):
        calls.append(x)
        return math.atan(x - 0.3)

    r = numkit.find_root(f, (-1, 1), RootConfig(abs_tol=1e-14))
    assert -1 <= r <= 1
    assert abs(r - 0.3) < 1e-13


def test_bisect_vec_machine_precision():
    targets = np.linspace(0.1, 3.9, 17)
    r = numkit.bisect_vec(lambda x: x**3 - targets, np.zeros(17), np.full(17, 2.0))
    assert np.allclose(r, np.cbrt(targets), rtol=4e-16, atol=0)


def test_bisect_vec_no_bracket():
    with pytest.raises(NoBracket):
        numkit.bisect_vec(lambda x: x * 0 + 1.0, np.zeros(3), np.ones(3))


@pytest.mark.parametrize("f, exact", [(lambda x: 1.0, 1.0),
                                      (lambda x: x, 0.5),
                                      (math.exp, math.e - 1)])
def test_quad(f, exact):
    assert abs(numkit.quad(f, 0.0, 1.0) - exact) <= 1e-10 * max(1, abs(exact))


@pytest.mark.parametrize("deg", [0, 1, 2, 3])
def test_quad_exact_for_cubics(deg):
    val = numkit.quad(lambda x: x**deg, 0.0, 2.0, QuadConfig(rel_tol=1e-12))
    assert val == pytest.approx(2.0 ** (deg + 1) / (deg + 1), rel=1e-12)


def test_quad_max_depth():
    with pytest.raises(MaxDepthExceeded):
        numkit.quad(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0,
                    QuadConfig(rel_tol=1e-14, max_depth=4))


def test_gauss_legendre_vectorised():
    b = np.array([0.5, 1.0, 2.0])
    vals = numkit.gauss_legendre(np.exp, 0.0, b, n=20)
    assert np.allclose(vals, np.exp(b) - 1, rtol=1e-14)


def test_ode_constant():
    tr = numkit.ode_solve(lambda t, y: 0 * y, [3.0], 0, 1)
    assert np.all(tr.y == 3.0)


@pytest.mark.parametrize("method", ["rk4-fixed", "rk45-adaptive"])
def test_ode_exponential(method):
    cfg = OdeConfig(method=method, step=1e-3, tol=1e-11)
    tr = numkit.ode_solve(lambda t, y: y, [1.0], 0, 1, cfg)
    assert abs(tr.final[0] - math.e) <= 1e-8


def test_ode_riccati():
    tr = numkit.ode_solve(lambda t, y: -y * y, [1.0], 0, 1, OdeConfig(step=1e-3))
    assert abs(tr.final[0] - 0.5) <= 1e-8


def test_ode_dense_output():
    tr = numkit.ode_solve(lambda t, y: np.cos(t) + 0 * y, [0.0], 0, 2, OdeConfig(step=1e-2))
    s = np.linspace(0, 2, 37)
    assert np.allclose(tr(s)[:, 0], np.sin(s), atol=1e-9)


def test_rk4_order_under_halving():
    def err(h):
        tr = numkit.ode_solve(lambda t, y: -2 * t * y, [1.0], 0, 2, OdeConfig(step=h))
        return abs(tr.final[0] - math.exp(-4))

    assert err(0.1) / err(0.05) >= 12


def test_ode_nonfinite():
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(NonFinite):
        numkit.ode_solve(lambda t, y: y * y, [1.0], 0, 2, OdeConfig(step=1e-2))


def test_fd_derivative():
    assert numkit.fd_derivative(lambda x: 5.0, 1.3) == 0.0
    assert abs(numkit.fd_derivative(lambda x: x * x, 1.0, 1e-5) - 2) <= 1e-8
    assert abs(numkit.fd_derivative(math.sin, 0.0) - 1) <= 1e-10


def test_fd_partial():
    f = lambda x: x[0] ** 2 * x[1]
    assert numkit.fd_partial(f, [2.0, 3.0], 0) == pytest.approx(12, rel=1e-9)
    assert numkit.fd_partial(f, [2.0, 3.0], 1) == pytest.approx(4, rel=1e-9)


def test_fd_nonfinite():
    with pytest.raises(NonFinite):
        numkit.fd_derivative(lambda x: math.inf, 0.0)
