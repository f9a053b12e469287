import math

import mpmath
import pytest

from densefrac import dickman
from densefrac.errors import ParameterError


def quad_rho3() -> float:
    """Independent oracle: rho(3) = rho(2) - int_2^3 rho(t-1)/t dt with the
    closed form rho(u) = 1 - log(u) on [1, 2], by high-order quadrature."""
    with mpmath.workdps(30):
        val = (1 - mpmath.log(2)) - mpmath.quad(
            lambda t: (1 - mpmath.log(t - 1)) / t, [2, 3]
        )
        return float(val)


def test_rho_flat_segment():
    assert dickman.rho(0.5) == 1.0
    assert dickman.rho(1.0) == 1.0


def test_rho_at_two():
    assert abs(dickman.rho(2.0) - (1 - math.log(2))) < 1e-8
    assert abs(dickman.rho(2.0) - 0.30685281944) < 1e-8


def test_rho_log_segment():
    for i in range(21):
        u = 1.0 + i / 20.0
        assert abs(dickman.rho(u) - (1 - math.log(u))) < 1e-8


def test_rho_at_three_vs_quadrature():
    oracle = quad_rho3()
    assert abs(oracle - 0.0486083883) < 1e-9
    assert abs(dickman.rho(3.0) - oracle) < 1e-7
    assert abs(dickman.rho(3.0) - 0.0486083883) < 1e-7


def test_rho_monotone_positive_grid():
    ev = dickman.default_evaluator()
    prev = 1.0
    u = 0.25
    while u <= ev.u_max:
        v = ev.rho(u)
        assert 0 < v <= prev + 1e-15
        prev = v
        u += 0.25


def test_rho_domain_errors():
    with pytest.raises(ParameterError):
        dickman.rho(0.0)
    with pytest.raises(ParameterError):
        dickman.rho(21.0)


def test_c_of_r_closed_form():
    with mpmath.workdps(30):
        expected = float(
            (1 - mpmath.log(2)) * (1 - mpmath.e ** (-1 / (1 - mpmath.log(2))))
        )
    assert abs(dickman.c_of_r(1) - expected) < 1e-12
    assert abs(dickman.c_of_r(1) - 0.29506) < 5e-6
    # limit r -> infinity is 1 - log 2
    assert abs(dickman.c_of_r(500) - (1 - math.log(2))) < 1e-15
    with pytest.raises(ParameterError):
        dickman.c_of_r(0)


def test_density_upper_bound():
    assert abs(dickman.density_upper_bound(1) - 0.6321206) < 1e-7
    assert dickman.density_upper_bound(1e-9) < 1e-8


@pytest.mark.parametrize("i", range(1, 51))
def test_theorem_constant_relations(i):
    r = i / 10.0
    c = dickman.c_of_r(r)
    ub = dickman.density_upper_bound(r)
    assert c < ub
    assert c / ub > 1 - math.log(2)


def test_zeta_series_oracle():
    for k in (2, 3, 4, 6):
        series = sum(n ** (-k) for n in range(1, 200_000))
        tail_hi = (200_000 - 1) ** (1 - k) / (k - 1)
        assert series < dickman.zeta(k) < series + tail_hi + 1e-12
    assert abs(dickman.zeta(2) - math.pi**2 / 6) < 1e-12
    assert abs(dickman.zeta(3) - 1.2020569) < 1e-7


def test_xi():
    assert abs(dickman.xi(2) - math.pi**2 / 4) < 1e-12
    for k in (2, 3, 5):
        assert abs(dickman.xi(k) - 2 * (1 - 2.0**-k) * dickman.zeta(k)) < 1e-15


def test_estimates():
    assert abs(dickman.psi_estimate(1e6, 1e6, 2) - 1e6 / dickman.zeta(2)) < 1e-6
    assert round(dickman.psi_estimate(1e6, 1e6, 2)) == 607927
    assert round(dickman.psi0_estimate(1e6, 1e6, 2)) == 405285
    assert dickman.recip_sum_estimate(1e6, 1e3, 2, 1.0) == 0.0
    with pytest.raises(ParameterError):
        dickman.psi_estimate(1e6, 2e6, 2)
