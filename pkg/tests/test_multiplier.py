"""Multiplier profile, cutoff family, and two-phase split checks."""
import math

import mpmath
import numpy as np
import pytest
from scipy.special import gamma as cgamma

from sphmax.analysis import decay_check
from sphmax.bessel import asymptotic_coefficients
from sphmax.multiplier import (
    CutoffFamily,
    choose_M,
    decomposition_residual,
    m_hat,
    main_symbols,
)

mpmath.mp.dps = 30


@pytest.mark.parametrize("alpha,n", [(1.0, 2), (2.0, 3), (0.5 + 0.5j, 2)])
def test_origin_limit(alpha, n):
    target = np.pi ** (n / 2.0) / cgamma(n / 2.0 + alpha)
    assert abs(m_hat(alpha, n, 0.0) - target) < 1e-10
    # the small-rho plateau hands off smoothly to the Bessel formula
    assert abs(m_hat(alpha, n, 9e-5) - m_hat(alpha, n, 1.1e-4)) < 1e-6


def test_ball_volume_transform_dim3():
    # order-one mean in R^3 is the unit-ball indicator transform, elementary
    rho = np.array([0.3, 1.7, 4.2])
    closed = (np.sin(2 * np.pi * rho)
              - 2 * np.pi * rho * np.cos(2 * np.pi * rho)) \
        / (2 * np.pi ** 2 * rho ** 3)
    vals = m_hat(1.0, 3, rho)
    assert np.max(np.abs(vals - closed)) < 1e-10
    assert abs(m_hat(1.0, 3, 0.0) - 4.0 * np.pi / 3.0) < 1e-12


def test_formula_crosscheck_complex_order():
    alpha, n = 0.5 + 0.5j, 2
    beta = n / 2.0 + alpha - 1.0
    for rho in (0.5, 3.3, 12.0):
        ref = complex(mpmath.power(mpmath.pi, 1 - alpha)
                      * mpmath.power(rho, 1 - n / 2.0 - alpha)
                      * mpmath.besselj(mpmath.mpc(beta), 2 * mpmath.pi * rho))
        got = m_hat(alpha, n, rho)
        assert abs(got - ref) < 1e-10 * max(1.0, abs(ref))


def test_cutoff_partition_of_unity():
    fam = CutoffFamily(M=1.0)
    rho = np.linspace(0.0, 2.0 ** 8, 4001)
    total = fam.phi_value(rho)
    for j in range(1, 9):
        total = total + fam.psi_value(j, rho)
    assert np.max(np.abs(total - 1.0)) < 1e-12


def test_cutoff_supports():
    fam = CutoffFamily(M=1.0)
    assert np.all(fam.phi_value(np.linspace(0.0, 1.0, 50)) == 1.0)
    assert np.all(fam.phi_value(np.linspace(2.0, 10.0, 50)) == 0.0)
    j = 3
    lo, hi = 2.0 ** (j - 1), 2.0 ** (j + 1)
    outside = np.array([lo * 0.5, lo * 0.9, hi * 1.1, hi * 4.0])
    assert np.all(fam.psi_value(j, outside) == 0.0)
    inside = np.linspace(lo * 1.4, hi * 0.7, 20)
    assert np.all(fam.psi_value(j, inside) > 0.0)
    sym = fam.psi(j)
    assert sym.support_lo == lo and sym.support_hi == hi
    with pytest.raises(ValueError):
        fam.psi_value(0, np.array([1.0]))
    with pytest.raises(ValueError):
        CutoffFamily(M=0.0)


def test_choose_M_certifies_amplitude():
    for N in (1, 2, 3, 4):
        ch = choose_M(1.0, 2, N)
        assert ch.M == 1.0
        coeffs = asymptotic_coefficients(1.0, N)
        assert ch.c_low >= 0.5 * abs(coeffs.d[0])
    assert abs(choose_M(1.0, 2, 1).c_low - (2 * math.pi) ** -0.5) < 1e-12


def test_choose_M_grows_for_wild_orders():
    # large imaginary order inflates a_1, pushing the threshold outward
    alpha = 0.5 * np.sqrt(complex(1.0, -40.0))
    assert choose_M(alpha, 2, 1).M == 1.0
    assert choose_M(alpha, 2, 2).M == 2.0


def test_main_symbol_far_field_limit():
    alpha, n, N, M = 1.0, 2, 3, 1.0
    a1, a2 = main_symbols(alpha, n, N, M)
    coeffs = asymptotic_coefficients(n / 2.0 + alpha - 1.0, N)
    c_amp = 2.0 ** -0.5 * np.pi ** (0.5 - alpha)
    rho = 1e6
    assert abs(a1(rho) - c_amp * coeffs.b[0]) < 1e-6 * abs(c_amp)
    assert abs(a2(rho) - c_amp * coeffs.d[0]) < 1e-6 * abs(c_amp)
    # amplitudes vanish under the cutoff by construction
    assert a1(np.array([0.5 * M]))[0] == 0.0
    assert a2(np.array([M]))[0] == 0.0


def test_split_residual_decays():
    alpha, n, N = 0.0, 2, 1
    M = choose_M(alpha, n, N).M
    rho = 2.0 * M * np.exp2(np.arange(10) / 3.0)
    res = np.abs(decomposition_residual(alpha, n, N, M, rho))
    chk = decay_check(rho, res, -1.35, floor=1e-14, min_points=3)
    assert chk.passed


def test_residual_rejects_low_rho():
    with pytest.raises(ValueError):
        decomposition_residual(0.0, 2, 1, 1.0, np.array([1.5]))
    with pytest.raises(ValueError):
        m_hat(1.0, 2, np.array([-0.5]))
