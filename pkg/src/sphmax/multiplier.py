"""Radial multiplier of the complex-order spherical mean and its wave split.

The multiplier is a Bessel profile in the radial frequency.  Away from the
origin it splits into two half-wave symbols carrying phases e^{+-2 pi i rho}
times slowly varying amplitudes, plus a residual that decays one power
faster per amplitude term kept.  This module builds the smooth cutoff family
that localizes the split, certifies the threshold radius, and exposes the
residual for decay measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma as cgamma

from .bessel import ComplexOrder, asymptotic_coefficients, bessel_j

__all__ = [
    "RadialSymbol",
    "CutoffFamily",
    "MChoice",
    "m_hat",
    "choose_M",
    "main_symbols",
    "decomposition_residual",
]

_SMALL_RHO = 1e-4


# ----------------------------------------------------------------------------
# smooth cutoffs


def _glue(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def _smoothstep(x) -> np.ndarray:
    # 0 for x <= 0, 1 for x >= 1, C-infinity glue in between
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    g1 = _glue(x)
    g2 = _glue(1.0 - x)
    return g1 / (g1 + g2)


@dataclass(frozen=True)
class RadialSymbol:
    """A radial frequency symbol with declared support and decay order.

    evaluate is the raw profile; calling the symbol zeroes values outside
    [support_lo, support_hi] so the support claim holds structurally.
    """

    evaluate: Callable = field(repr=False)
    support_lo: float
    support_hi: float
    decay_order: float
    label: str

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        inside = (rho >= self.support_lo) & (rho <= self.support_hi)
        vals = np.where(inside, self.evaluate(np.where(inside, rho, self.support_lo)), 0.0)
        return vals

    def bound_constant(self, rho) -> float:
        """Smallest C with |symbol| <= C (1+rho)^decay_order on the samples."""
        rho = np.asarray(rho, dtype=np.float64)
        vals = np.abs(self(rho))
        return float(np.max(vals / (1.0 + rho) ** self.decay_order))


@dataclass(frozen=True)
class CutoffFamily:
    """Low-pass cutoff phi and its dyadic annular differences.

    phi is 1 on [0, M], 0 on [2M, oo), smooth in between; the annuli
    psi_j = phi(rho/2^j) - phi(rho/2^{j-1}) telescope against phi to 1.
    """

    M: float

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("cutoff threshold must be positive")

    def phi_value(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.float64)
        return 1.0 - _smoothstep(rho / self.M - 1.0)

    def psi_value(self, j: int, rho) -> np.ndarray:
        if j < 1:
            raise ValueError("annulus index starts at 1")
        rho = np.asarray(rho, dtype=np.float64)
        return self.phi_value(rho * 2.0 ** (-j)) - self.phi_value(rho * 2.0 ** (-j + 1))

    @property
    def phi(self) -> RadialSymbol:
        return RadialSymbol(evaluate=self.phi_value, support_lo=0.0,
                            support_hi=2.0 * self.M, decay_order=0.0,
                            label="low_pass")

    def psi(self, j: int) -> RadialSymbol:
        return RadialSymbol(evaluate=lambda rho, j=j: self.psi_value(j, rho),
                            support_lo=2.0 ** (j - 1) * self.M,
                            support_hi=2.0 ** (j + 1) * self.M,
                            decay_order=0.0, label=f"annulus_{j}")


# ----------------------------------------------------------------------------
# the multiplier


def _bessel_order(alpha: ComplexOrder, n: int) -> complex:
    if n < 2:
        raise ValueError("dimension must be at least 2")
    beta = n / 2.0 + alpha.value - 1.0
    if beta.real <= -0.5:
        raise ValueError("order out of range: need n/2 + Re(alpha) - 1 > -1/2")
    return beta


def m_hat(alpha, n: int, rho):
    """Radial profile of the spherical-mean multiplier at frequency radius rho.

    For rho > 0 this is pi^{1-alpha} rho^{1-n/2-alpha} J_{n/2+alpha-1}(2 pi rho);
    below a small threshold the origin limit pi^{n/2}/Gamma(n/2+alpha) is used.
    """
    alpha = ComplexOrder.coerce(alpha)
    beta = _bessel_order(alpha, n)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    scalar = rho.ndim == 0
    rho = np.atleast_1d(rho)
    out = np.empty(rho.shape, dtype=np.complex128)
    small = rho < _SMALL_RHO
    if np.any(small):
        out[small] = np.pi ** (n / 2.0) / cgamma(n / 2.0 + alpha.value)
    if np.any(~small):
        rr = rho[~small]
        a = alpha.value
        pref = np.exp((1.0 - a) * np.log(np.pi) + (1.0 - n / 2.0 - a) * np.log(rr))
        out[~small] = pref * bessel_j(beta, 2.0 * np.pi * rr)
    return out[0] if scalar else out


@dataclass(frozen=True)
class MChoice:
    M: float
    c_low: float


def _phase_partial_sum(coeffs_d: np.ndarray, r: np.ndarray) -> np.ndarray:
    s = np.zeros(r.shape, dtype=np.complex128)
    for j in range(len(coeffs_d) - 1, -1, -1):
        s = s / (2.0 * np.pi * r) + coeffs_d[j]
    # Horner leaves sum_j d_j (2 pi r)^{-j}
    return s


def choose_M(alpha, n: int, N: int) -> MChoice:
    """Smallest power-of-two threshold M certifying the minus-phase amplitude.

    Doubles M until |sum_{j<N} d_j (2 pi r)^{-j}| >= |d_0|/2 on a log-spaced
    sample of r >= M, and reports the achieved lower bound.
    """
    alpha = ComplexOrder.coerce(alpha)
    beta = _bessel_order(alpha, n)
    if N < 1:
        raise ValueError("need at least one amplitude term")
    coeffs = asymptotic_coefficients(beta, N)
    target = 0.5 * abs(coeffs.d[0])
    M = 1.0
    while M <= 2.0 ** 20:
        r = M * np.exp2(np.arange(0, 161) / 16.0)  # covers [M, 1024 M]
        vals = np.abs(_phase_partial_sum(coeffs.d, r))
        c_low = float(vals.min())
        if c_low >= target:
            return MChoice(M=M, c_low=c_low)
        M *= 2.0
    raise ArithmeticError("no threshold up to 2^20 certifies the amplitude; "
                          "coefficient pathology")


def _amplitude_constant(alpha: ComplexOrder) -> complex:
    # 2^{-1/2} pi^{1/2 - alpha}
    return complex(2.0 ** -0.5 * np.exp((0.5 - alpha.value) * np.log(np.pi)))


def main_symbols(alpha, n: int, N: int, M: float):
    """The two half-wave amplitudes of the multiplier split, as symbols.

    Each is the truncated expansion amplitude times (1 - phi), so both vanish
    on [0, M] and are slowly varying where they live.
    """
    alpha = ComplexOrder.coerce(alpha)
    beta = _bessel_order(alpha, n)
    coeffs = asymptotic_coefficients(beta, N)
    fam = CutoffFamily(M=M)
    c_amp = _amplitude_constant(alpha)

    def a1_eval(r, _c=coeffs.b):
        r = np.asarray(r, dtype=np.float64)
        return c_amp * _phase_partial_sum(_c, r) * (1.0 - fam.phi_value(r))

    def a2_eval(r, _c=coeffs.d):
        r = np.asarray(r, dtype=np.float64)
        return c_amp * _phase_partial_sum(_c, r) * (1.0 - fam.phi_value(r))

    inf = np.inf
    a1 = RadialSymbol(evaluate=a1_eval, support_lo=M, support_hi=inf,
                      decay_order=0.0, label="plus_phase_amplitude")
    a2 = RadialSymbol(evaluate=a2_eval, support_lo=M, support_hi=inf,
                      decay_order=0.0, label="minus_phase_amplitude")
    return a1, a2


def decomposition_residual(alpha, n: int, N: int, M: float, rho):
    """Multiplier minus its N-term two-phase main part, beyond the cutoff.

    Only defined for rho >= 2M where the low-pass part is gone; the caller
    fits the decay of the returned values.
    """
    alpha = ComplexOrder.coerce(alpha)
    rho = np.asarray(rho, dtype=np.float64)
    scalar = rho.ndim == 0
    rho = np.atleast_1d(rho)
    if np.any(rho < 2.0 * M):
        raise ValueError("residual is defined for rho >= 2M")
    a1, a2 = main_symbols(alpha, n, N, M)
    a = alpha.value
    radial = np.exp((-(n - 1) / 2.0 - a) * np.log(rho))
    phase = np.exp(2j * np.pi * rho)
    main = radial * (phase * a1(rho) + np.conj(phase) * a2(rho))
    res = m_hat(alpha, n, rho) - main
    return res[0] if scalar else res
