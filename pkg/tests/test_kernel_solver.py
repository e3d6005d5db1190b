import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from alignqnd.kernel_solver import (
    MAX_CELL_COUPLING,
    GoursatPass,
    NumericalError,
    bessel_j,
    collective_output_variance,
    double_pass_moments,
    exact_double_pass_conditional_variance,
    grid_double_pass_conditional_variance,
    one_fn,
    pde_oracle,
    riemann,
    riemann_derivative,
    single_pass_kernels,
    zero_fn,
)

KAPPAS = [0.1, 0.5, 1.0]


# --- Bessel functions ---

@pytest.mark.parametrize("x", [0.0, 1e-8, 0.5, 2.404825557695773, 7.9, 8.1, 12.0, 33.3, 50.0])
@pytest.mark.parametrize("order", [0, 1])
def test_bessel_against_mpmath(order, x):
    ref = float(mpmath.besselj(order, x))
    assert bessel_j(order, x) == pytest.approx(ref, abs=1e-14)


def test_bessel_first_zero_and_parity():
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-15
    assert bessel_j(1, -3.0) == -bessel_j(1, 3.0)
    assert bessel_j(0, -3.0) == bessel_j(0, 3.0)
    with pytest.raises(ValueError):
        bessel_j(2, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, float("inf"))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 50))
def test_bessel_matches_scipy(x):
    assert bessel_j(0, x) == pytest.approx(special.j0(x), abs=1e-13)
    assert bessel_j(1, x) == pytest.approx(special.j1(x), abs=1e-13)


# --- Riemann function ---

def test_riemann_is_bessel():
    xi = np.linspace(0, 1, 11)
    k = 0.8
    np.testing.assert_allclose(riemann(-k * k, xi), special.j0(2 * k * np.sqrt(xi)), atol=1e-15)
    np.testing.assert_allclose(riemann(k * k, xi), special.i0(2 * k * np.sqrt(xi)), atol=1e-14)
    h = 1e-6
    fd = (riemann(-k * k, 0.5 + h) - riemann(-k * k, 0.5 - h)) / (2 * h)
    assert riemann_derivative(-k * k, 0.5) == pytest.approx(fd, rel=1e-8)


def test_riemann_diverging_series_raises():
    with pytest.raises(NumericalError):
        riemann(1e6, 1.0)


# --- collapsed single-pass kernels vs direct integration ---

@pytest.mark.parametrize("k", KAPPAS)
def test_collapsed_kernels_match_double_integrals(k):
    sol = single_pass_kernels(k)
    atom, _ = integrate.quad(lambda z: special.j0(2 * k * math.sqrt(1 - z)), 0, 1, epsabs=1e-13)
    assert integrate.quad(lambda z: float(sol.atom_kernel(z)), 0, 1)[0] == pytest.approx(atom, abs=1e-8)
    assert sol.c_self == pytest.approx(atom, abs=1e-8)
    cross, _ = integrate.dblquad(lambda z, t: k * special.j0(2 * k * math.sqrt(z * (1 - t))),
                                 0, 1, 0, 1, epsabs=1e-12)
    assert integrate.quad(lambda t: float(sol.field_kernel(t)), 0, 1)[0] == pytest.approx(cross, abs=1e-8)
    assert sol.c_cross == pytest.approx(cross, abs=1e-8)


@pytest.mark.parametrize("k", KAPPAS)
def test_collective_moments_closed_forms(k):
    m = collective_output_variance(k)
    assert m["x_on_x"] == pytest.approx(special.j1(2 * k) / k, abs=1e-12)
    assert m["x_on_sy"] == pytest.approx((1 - special.j0(2 * k)) / k, abs=1e-12)
    # the pass is unitary: output variances stay at vacuum and commutators survive
    for key in ("var_x", "var_p", "var_sx", "var_sy", "comm_xp"):
        assert m[key] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", KAPPAS)
def test_z_t_exchange_symmetry(k):
    m = collective_output_variance(k)
    assert m["sy_on_sy"] == pytest.approx(m["x_on_x"], abs=1e-13)
    assert m["sy_on_x"] == pytest.approx(-m["x_on_sy"], abs=1e-13)
    assert m["sx_on_p"] == pytest.approx(-m["p_on_sx"], abs=1e-13)
    assert m["p_on_p"] == pytest.approx(m["x_on_x"], abs=1e-13)


def test_first_order_overlaps():
    for k in (1e-3, 1e-2, 0.05):
        m = collective_output_variance(k)
        assert m["x_on_sy"] - k == pytest.approx(-k ** 3 / 4, rel=1e-2)
        assert 1 - m["x_on_x"] == pytest.approx(k ** 2 / 2, rel=1e-2)


def test_frozen_regression_kappa_half():
    # closed forms J1(1)/0.5 and (1 - J0(1))/0.5 evaluated with mpmath
    m = collective_output_variance(0.5)
    assert m["x_on_x"] == pytest.approx(float(mpmath.besselj(1, 1) / 0.5), abs=1e-13)
    assert m["x_on_sy"] == pytest.approx(float((1 - mpmath.besselj(0, 1)) / 0.5), abs=1e-13)
    assert m["x_on_x"] == pytest.approx(0.880101171489867, abs=1e-12)
    assert m["x_on_sy"] == pytest.approx(0.469604626884, abs=1e-11)


def test_quadrature_refinement_check_raises():
    with pytest.raises(NumericalError, match="not converged"):
        collective_output_variance(8.0, nodes=4)


def test_goursat_zero_coupling_is_identity():
    p = GoursatPass(0.0, 0.0)
    w, v = p.pullback(one_fn, zero_fn)
    s = np.linspace(0, 1, 5)
    np.testing.assert_allclose(w(s), 1.0)
    np.testing.assert_allclose(v(s), 0.0)


# --- double pass ---

def test_double_pass_exact_values():
    # values from this solver, matched by the grid oracle below
    assert exact_double_pass_conditional_variance(0.35) == pytest.approx(0.793450, abs=2e-6)
    assert exact_double_pass_conditional_variance(0.1) == pytest.approx(0.98030, abs=1e-5)
    assert exact_double_pass_conditional_variance(0.0) == 1.0
    with pytest.raises(ValueError):
        exact_double_pass_conditional_variance(0.7)


def test_double_pass_small_coupling_trend():
    # leading behaviour 1 - c k^2 with c close to, but below, the first-order value 4
    ks = np.array([0.01, 0.02, 0.04])
    drops = np.array([1 - exact_double_pass_conditional_variance(k) for k in ks])
    c = drops / ks ** 2
    assert np.all((c > 1.5) & (c < 4))
    assert np.ptp(c) < 0.02 * c.mean()


def test_double_pass_moments_keys():
    m = double_pass_moments(0.3)
    assert set(m) == {"var_x", "var_sy", "cov_x_sy", "var_p", "var_sx", "cov_p_sx", "x|sy", "p|sx"}
    assert m["x|sy"] < 1


# --- grid oracle ---

@pytest.mark.parametrize("k", KAPPAS)
def test_grid_matches_kernels(k):
    grid = pde_oracle(k).moments
    exact = collective_output_variance(k)
    for key in exact:
        assert grid[key] == pytest.approx(exact[key], abs=1e-6), key


def test_grid_second_order_convergence():
    exact = collective_output_variance(0.5)["x_on_sy"]
    errs = [abs(pde_oracle(0.5, n, n).moments["x_on_sy"] - exact) for n in (128, 256, 512)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    for p in orders:
        assert p == pytest.approx(2.0, abs=0.1)


def test_grid_refinement_changes_little():
    a = pde_oracle(0.5, 512, 512).moments
    b = pde_oracle(0.5, 1024, 1024).moments
    assert max(abs(a[k] - b[k]) for k in a) < 1e-3


def test_grid_double_pass_matches_kernels():
    for k in (0.1, 0.35):
        assert grid_double_pass_conditional_variance(k) == pytest.approx(
            exact_double_pass_conditional_variance(k), abs=1e-5)


def test_grid_guards():
    with pytest.raises(ValueError, match="too coarse"):
        pde_oracle(0.5, 32, 512)
    big = MAX_CELL_COUPLING * 64 * 1.01
    with pytest.raises(NumericalError, match="refine"):
        pde_oracle(big, 64, 64)
