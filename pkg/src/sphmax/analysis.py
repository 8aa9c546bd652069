"""Slope fitting, the oscillatory tail integral, and exponent-region calculators.

Everything here is either measurement plumbing (least-squares exponents on
log-log data, two-phase amplitude extraction) or closed-form threshold
arithmetic kept exact over the rationals.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "SlopeFit",
    "fit_slope",
    "DecayCheck",
    "decay_check",
    "two_phase_fit",
    "oscillatory_tail",
    "RegionCurve",
    "ExponentRegion",
    "threshold_regions",
    "region_compare",
    "conjugate_exponent",
    "sobolev_threshold_s",
]

Rational = Union[int, Fraction]
PLike = Union[int, float, Fraction]


# ----------------------------------------------------------------------------
# slope fitting


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through (log2 x, log2 y) points."""

    points: tuple
    slope: float
    intercept: float
    stderr: float

    def refit(self) -> "SlopeFit":
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return _fit_logs(xs, ys)


def _fit_logs(lx: np.ndarray, ly: np.ndarray) -> SlopeFit:
    n = len(lx)
    A = np.vstack([lx, np.ones(n)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    if n > 2:
        rss = float(res[0]) if res.size else float(np.sum((A @ coef - ly) ** 2))
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        stderr = math.sqrt(max(rss, 0.0) / (n - 2) / sxx) if sxx > 0 else 0.0
    else:
        stderr = 0.0
    return SlopeFit(points=tuple(zip(lx.tolist(), ly.tolist())), slope=slope,
                    intercept=intercept, stderr=stderr)


def fit_slope(x, y=None) -> SlopeFit:
    """Fit log2(y) = slope * log2(x) + intercept by least squares.

    Accepts either two positive arrays or a single sequence of (x, y) pairs.
    Requires at least 3 points with distinct abscissae.
    """
    if y is None:
        pts = list(x)
        xa = np.asarray([p[0] for p in pts], dtype=np.float64)
        ya = np.asarray([p[1] for p in pts], dtype=np.float64)
    else:
        xa = np.asarray(x, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
    if xa.size < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if np.any(xa <= 0) or np.any(ya <= 0):
        raise ValueError("slope fit needs positive x and y")
    lx, ly = np.log2(xa), np.log2(ya)
    if np.unique(lx).size < 2:
        raise ValueError("degenerate abscissae")
    return _fit_logs(lx, ly)


@dataclass(frozen=True)
class DecayCheck:
    """Outcome of a one-sided decay-slope test with a noise-floor escape.

    When the measured values sit at or below the supplied floor (truncation
    error identically zero in exact arithmetic, only round-off remains) the
    slope is meaningless and the check passes by floor certification instead.
    """

    passed: bool
    bound: float
    slope: Optional[float]
    stderr: Optional[float]
    floor_certified: bool
    n_used: int
    reason: str = ""


def decay_check(x, y, bound: float, floor: float = 0.0, min_points: int = 4) -> DecayCheck:
    """Check that y decays in x with log-log slope <= bound.

    Points with y <= floor are treated as noise and dropped before fitting.
    If fewer than min_points remain and every sample is at the floor, the
    decay claim is vacuously certified.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    mask = ya > floor
    if int(mask.sum()) >= min_points:
        f = fit_slope(xa[mask], ya[mask])
        return DecayCheck(passed=f.slope <= bound, bound=bound, slope=f.slope,
                          stderr=f.stderr, floor_certified=False,
                          n_used=int(mask.sum()))
    if not np.any(mask):
        return DecayCheck(passed=True, bound=bound, slope=None, stderr=None,
                          floor_certified=True, n_used=0,
                          reason="all samples at/below noise floor")
    return DecayCheck(passed=False, bound=bound, slope=None, stderr=None,
                      floor_certified=False, n_used=int(mask.sum()),
                      reason="too few resolvable points to fit")


def two_phase_fit(r, values, frequency: float = 1.0, powers: Sequence[float] = (-0.5,)):
    """Least-squares split of values into e^{+i w r} and e^{-i w r} components.

    Model: values(r) ~ sum_p r^p (B_p e^{i w r} + D_p e^{-i w r}) over the
    given powers.  Returns (B, D, rel_residual) with coefficient arrays
    ordered like `powers`.
    """
    rr = np.asarray(r, dtype=np.float64)
    vv = np.asarray(values, dtype=np.complex128)
    cols = []
    for p in powers:
        cols.append(rr ** p * np.exp(1j * frequency * rr))
    for p in powers:
        cols.append(rr ** p * np.exp(-1j * frequency * rr))
    A = np.stack(cols, axis=1)
    coef, _, _, _ = np.linalg.lstsq(A, vv, rcond=None)
    k = len(powers)
    resid = np.linalg.norm(A @ coef - vv) / max(np.linalg.norm(vv), 1e-300)
    return coef[:k], coef[k:], float(resid)


# ----------------------------------------------------------------------------
# oscillatory tail integral


@functools.lru_cache(maxsize=64)
def _gl_nodes(deg: int):
    return np.polynomial.legendre.leggauss(deg)


def _gl_block(fn: Callable, a: float, b: float, tau: float) -> complex:
    # degree grows with the number of oscillations across the block
    deg = int(24 + np.ceil(3.2 * abs(tau) * (b - a)))
    x, w = _gl_nodes(deg)
    r = 0.5 * (b - a) * x + 0.5 * (b + a)
    vals = fn(r) * np.exp(2j * np.pi * tau * r)
    return complex(0.5 * (b - a) * np.sum(vals * w))


def _ibp_tail(m: float, tau: float, a: float, terms: int = 10) -> complex:
    # int_a^oo e^{i z r} r^m dr by repeated integration by parts at the
    # boundary; converges once |z| a is a few dozen.
    z = 2.0 * np.pi * tau
    boundary = np.exp(1j * z * a)
    t = -boundary * a ** (m - terms) / (1j * z)
    for k in range(terms - 1, -1, -1):
        t = -boundary * a ** (m - k) / (1j * z) - ((m - k) / (1j * z)) * t
    return complex(t)


def oscillatory_tail(m: float, tau: float, phi) -> complex:
    """Evaluate int_0^oo e^{2 pi i r tau} r^m (1 - phi(r)) dr.

    The integrand vanishes below the cutoff shoulder, so the integral is
    split into dyadic blocks over the shoulder (plain Gauss-Legendre when a
    block sees at most one oscillation, oscillation-adapted degree otherwise)
    plus a pure-power tail evaluated by an integration-by-parts boundary
    series.  `phi` is a cutoff family exposing .M and .phi(r).

    Tested for m in (-2, 0); decay in tau goes like |tau|^{-m-1}.
    """
    if tau == 0:
        raise ValueError("tau must be nonzero")
    if not (-2.0 < m < 0.0):
        raise ValueError("m outside the tested range (-2, 0)")
    big_m = float(phi.M)
    # push the analytic tail start out until the boundary series converges
    r0 = 4.0 * big_m
    while 2.0 * np.pi * abs(tau) * r0 < 48.0:
        r0 *= 2.0
    total = 0.0 + 0.0j
    a = big_m
    while a < r0:
        b = min(2.0 * a, r0)
        total += _gl_block(lambda r: r ** m * (1.0 - phi.phi(r)), a, b, tau)
        a = b
    total += _ibp_tail(m, tau, r0)
    return total


# ----------------------------------------------------------------------------
# exponent regions


def conjugate_exponent(p: PLike) -> PLike:
    """Holder conjugate p' with p' = p/(p-1); exact for rational p."""
    if isinstance(p, (int, Fraction)):
        pf = Fraction(p)
        return pf / (pf - 1)
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _inv(p: PLike):
    """1/p, exact for rational p, 0 for p = infinity."""
    if isinstance(p, (int, Fraction)):
        return Fraction(1, 1) / Fraction(p)
    if math.isinf(p):
        return 0.0
    return 1.0 / p


def _half(x: PLike):
    return Fraction(x) / 2 if isinstance(x, (int, Fraction)) else x / 2.0


def sobolev_threshold_s(n: int, p: PLike):
    """Necessary Sobolev exponent curve s(p) = (n-1)|1/2 - 1/p|.

    Symmetric under p -> p' by construction.
    """
    i = _inv(p)
    h = _half(1) if isinstance(i, Fraction) else 0.5
    return (n - 1) * abs(h - i)


@dataclass(frozen=True)
class RegionCurve:
    """An alpha-threshold curve p -> threshold on a stated p-domain."""

    label: str
    p_lo: float
    p_hi: float
    fn: Callable = field(repr=False)
    lo_open: bool = False
    hi_open: bool = False

    def threshold(self, p: PLike):
        pf = float(p)
        below = pf < self.p_lo or (self.lo_open and pf == self.p_lo)
        above = pf > self.p_hi or (self.hi_open and pf == self.p_hi)
        if below or above:
            raise ValueError(f"p={p} outside domain of curve {self.label}")
        return self.fn(p)

    def __call__(self, p: PLike):
        return self.threshold(p)


@dataclass(frozen=True)
class ExponentRegion:
    """Named alpha-threshold curves for one dimension n.

    Membership is strict: (p, alpha) is inside a curve's region when
    Re(alpha) > threshold(p).
    """

    n: int
    curves: dict
    sup_failure_p: Optional[Fraction]

    def threshold(self, label: str, p: PLike):
        return self.curves[label].threshold(p)

    def contains(self, label: str, p: PLike, re_alpha) -> bool:
        return re_alpha > self.threshold(label, p)


def _curves_for(n: int) -> dict:
    inf = math.inf

    def fixed_time_low(p):
        return 1 - n + n * _inv(p)

    def fixed_time_high(p):
        return (2 - n) * _inv(p)

    def maximal_sufficient(p):
        i = _inv(p)
        q = Fraction(1, 4) if isinstance(i, Fraction) else 0.25
        return max((1 - n) * q + (3 - n) * _half(1) * i if isinstance(i, Fraction)
                   else (1 - n) * 0.25 + (3 - n) * 0.5 * i,
                   (1 - n) * i)

    def maximal_necessary(p):
        i = _inv(p)
        return max(i - (n - 1) * _half(1) if isinstance(i, Fraction)
                   else i - (n - 1) * 0.5,
                   -(n - 1) * i)

    def maximal_sharp_two_dim(p):
        i = _inv(p)
        h = _half(1) if isinstance(i, Fraction) else 0.5
        return max(i - h, -i)

    def maximal_improved(p):
        i = _inv(p)
        exact = isinstance(i, Fraction)

        def frac(a, b):
            return Fraction(a, b) if exact else a / b

        first = -(n - 1) * i
        if n % 2 == 1:
            second = -frac(3, 8) * (n - 1) + frac(5 - n, 4) * i
            third = frac(4 * (n - 1), (3 * n + 5) * (n + 3)) - (n * n - 5) * i * frac(1, n + 3)
        else:
            second = -frac(3 * n - 2, 8) - frac(n - 6, 4) * i
            third = -frac(n - 1, n + 4) - (n * n + n - 6) * i * frac(1, n + 4)
        return max(first, second, third)

    curves = {
        "fixed_time_low_p": RegionCurve("fixed_time_low_p", 1.0, 2.0, fixed_time_low, lo_open=True),
        "fixed_time_high_p": RegionCurve("fixed_time_high_p", 2.0, inf, fixed_time_high),
        "maximal_sufficient": RegionCurve("maximal_sufficient", 2.0, inf, maximal_sufficient),
        "maximal_necessary": RegionCurve("maximal_necessary", 2.0, inf, maximal_necessary),
        "maximal_improved": RegionCurve("maximal_improved", 2.0, inf, maximal_improved, lo_open=True),
    }
    if n == 2:
        curves["maximal_sharp"] = RegionCurve("maximal_sharp", 2.0, inf, maximal_sharp_two_dim)
    return curves


def threshold_regions(n: int) -> ExponentRegion:
    """All named alpha-threshold curves for dimension n (exact rationals in,
    exact rationals out).

    Curves: fixed-time bounds for the two p-ranges, the maximal-operator
    sufficient range, the necessary range, the sharp two-dimensional curve
    (n = 2 only), and the improved sufficient range driven by local
    smoothing, with its odd/even-n branches taken verbatim.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    sup_failure = Fraction(2 * (n - 1), n - 3) if n >= 4 else None
    return ExponentRegion(n=n, curves=_curves_for(n), sup_failure_p=sup_failure)


def crossover_p(n: int) -> Fraction:
    """p where the two necessary-range branches meet: 2n/(n-1)."""
    return Fraction(2 * n, n - 1)


def region_compare(n: int, p_grid: Sequence[PLike], check: bool = True):
    """Tabulate all curves on a p-grid in (2, oo) and test the two inclusion
    claims pointwise.

    Claim one: the maximal sufficient threshold lies strictly below the
    fixed-time threshold (a strictly wider range).  Claim two: the improved
    threshold lies at or below the sufficient threshold.  Rows also flag any
    curve value exceeding the trivial threshold 1 (the improved branches are
    evaluated verbatim and are only meaningful on their source's p-range).

    With check=True an AssertionError lists every violated grid point.
    """
    region = threshold_regions(n)
    rows = []
    violations = []
    for p in p_grid:
        pf = float(p)
        if not pf > 2.0:
            raise ValueError("p_grid must lie in (2, oo)")
        vals = {}
        for label, curve in region.curves.items():
            if label == "fixed_time_low_p":
                continue
            vals[label] = curve.threshold(p)
        wider = vals["maximal_sufficient"] < vals["fixed_time_high_p"]
        improved_ok = vals["maximal_improved"] <= vals["maximal_sufficient"]
        exceeds_trivial = any(v > 1 for v in vals.values())
        rows.append({"p": p, **vals, "sufficient_below_fixed_time": wider,
                     "improved_within_sufficient": improved_ok,
                     "exceeds_trivial": exceeds_trivial})
        if not wider:
            violations.append((p, "sufficient_below_fixed_time"))
        if not improved_ok:
            violations.append((p, "improved_within_sufficient"))
    if check and violations:
        raise AssertionError(f"inclusion claims violated at: {violations}")
    return rows
