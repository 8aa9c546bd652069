"""Counterexample families: blow-up radial profiles and coherent wave packets.

Two constructions drive the sharpness experiments.  The first is a radial
frequency profile with algebraic decay, confined to a narrow cone and
phase-flattened so that the minus-phase amplitude of the wave split becomes
a constant multiple of the high-pass cutoff on its support; its fixed-time
image then blows up along the cone axis near the unit sphere at a rate set
by the decay exponent.  The second is an anisotropic frequency-slab bump
transported coherently by the half waves; its sup-in-time concentrates on a
moving tube whose Lebesgue and Sobolev scalings differ by exactly the
exponent gap under study.

The sphere-cap transform quadrature lives here too.  It validates the
stationary-phase structure the radial construction relies on: a single
outgoing phase channel at the surface decay rate, active only when the
antipode of the evaluation direction lies inside the cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.ndimage import maximum_filter1d

from .analysis import SlopeFit, fit_slope
from .bessel import ComplexOrder, asymptotic_coefficients
from .fields import Grid, SampledField, apply_radial_multiplier, lp_norm, \
    radial_frequency_mesh, to_space
from .multiplier import _bessel_order, _phase_partial_sum, _smoothstep, \
    choose_M, main_symbols
from .operators import TimeGrid, script_a

__all__ = [
    "ConeCutoff",
    "PacketSpec",
    "radial_extremal",
    "choose_blowup_exponent",
    "BlowupReport",
    "blowup_probe",
    "CollarChoice",
    "stable_collar_slope",
    "wave_packet",
    "packet_envelope",
    "packet_time_slice",
    "PacketReport",
    "packet_lower_bound",
    "sphere_cap_ft",
]


def _broadcast_axis(grid: Grid, ax: int, vals: np.ndarray) -> np.ndarray:
    shape = [1] * grid.n
    shape[ax] = grid.m
    return vals.reshape(shape)


def _plateau_bump(u) -> np.ndarray:
    # 1 on |u| <= 1/2, 0 at |u| >= 1, smooth and nonnegative in between
    return _smoothstep(2.0 - 2.0 * np.abs(u))


@dataclass(frozen=True)
class ConeCutoff:
    """Degree-zero angular bump around a fixed unit direction.

    Evaluation depends only on the direction of the argument.  The profile
    equals 1 where the chordal distance to the axis is below half the
    aperture and vanishes beyond the full aperture, with a smooth glue in
    between, so the cutoff is flat wherever it is nonconstant-free.
    """

    axis: tuple
    aperture: float = 0.1

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=np.float64)
        if ax.ndim != 1 or ax.size < 2:
            raise ValueError("axis must be a vector in dimension >= 2")
        nrm = float(np.linalg.norm(ax))
        if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-9:
            raise ValueError("axis must be a unit vector")
        if not 0.0 < self.aperture <= 0.25:
            raise ValueError("aperture must lie in (0, 1/4]")
        object.__setattr__(self, "axis", tuple(float(c) for c in ax))
        object.__setattr__(self, "aperture", float(self.aperture))

    @classmethod
    def standard(cls, n: int, aperture: float = 0.1) -> "ConeCutoff":
        return cls(axis=(1.0,) + (0.0,) * (n - 1), aperture=aperture)

    @property
    def n(self) -> int:
        return len(self.axis)

    def angular_value(self, cosine) -> np.ndarray:
        """Profile as a function of the cosine of the angle to the axis."""
        c = np.clip(np.asarray(cosine, dtype=np.float64), -1.0, 1.0)
        chord = np.sqrt(np.maximum(2.0 - 2.0 * c, 0.0))
        return _smoothstep(2.0 - 2.0 * chord / self.aperture)

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape[-1] != self.n:
            raise ValueError("argument dimension does not match the axis")
        rho = np.sqrt(np.sum(xi * xi, axis=-1))
        dot = np.tensordot(xi, np.asarray(self.axis), axes=([-1], [0]))
        safe = np.where(rho > 0.0, rho, 1.0)
        return np.where(rho > 0.0, self.angular_value(dot / safe), 0.0)


def _resolve_split(alpha, n: int, terms: int, m_cut):
    a = ComplexOrder.coerce(alpha)
    terms = int(terms)
    if m_cut is None:
        M = choose_M(a.value, n, terms).M
    else:
        M = float(m_cut)
        if not M > 0.0:
            raise ValueError("cutoff radius must be positive")
    a1, a2 = main_symbols(a.value, n, terms, M)
    return a, M, a1, a2


def radial_extremal(beta, n: int, cone: Optional[ConeCutoff], grid: Grid, *,
                    alpha=1.0, terms: int = 4, m_cut=None) -> SampledField:
    """Cone-restricted radial profile whose time-one image blows up at the sphere.

    Frequency data w(|xi|) chi(xi) (1 + |xi|^2)^{-beta/2}.  The weight w
    inverts the minus-phase partial sum beyond the cutoff radius, so on the
    support of the high-pass cutoff the minus-phase amplitude times w is a
    constant; below the cutoff w freezes at its threshold value, hence is
    constant near zero and bounded away from zero everywhere.  beta sets the
    algebraic frequency decay and thereby the collar blow-up rate.

    cone=None drops the angular localization (chi identically 1).  The
    blow-up mechanism is radial, and a cap of aperture theta only reaches
    its stationary-phase regime at radii past 1/theta^2, far above any
    desk-scale Nyquist radius; the full sphere of directions reaches it by
    radius a few, so collar exponents are measured on the unconed profile.
    """
    beta = float(beta)
    if not beta > 0.0:
        raise ValueError("decay exponent must be positive")
    if grid.n != n or (cone is not None and cone.n != n):
        raise ValueError("cone, grid, and requested dimension disagree")
    a, M, _, _ = _resolve_split(alpha, n, terms, m_cut)
    coeffs = asymptotic_coefficients(_bessel_order(a, n), int(terms))
    if M * grid.m * grid.h < 2.0:
        raise ValueError("grid too coarse to resolve the cutoff transition")

    rho = radial_frequency_mesh(grid)
    if cone is None:
        chiv = np.ones(grid.shape(), dtype=np.float64)
    else:
        freqs = grid.axis_frequencies()
        dot = np.zeros(grid.shape(), dtype=np.float64)
        for ax, comp in enumerate(cone.axis):
            if comp != 0.0:
                dot = dot + comp * _broadcast_axis(grid, ax, freqs)
        safe = np.where(rho > 0.0, rho, 1.0)
        chiv = np.where(rho > 0.0, cone.angular_value(dot / safe), 0.0)
        del dot, safe

    svals = _phase_partial_sum(coeffs.d, np.maximum(rho, M))
    if np.any((np.abs(svals) < 1e-12) & (chiv > 0.0)):
        raise ArithmeticError("phase partial sum vanishes on the support; "
                              "the cutoff certificate does not cover this radius")
    values = (chiv / svals) * (1.0 + rho * rho) ** (-0.5 * beta)
    return SampledField(grid=grid, values=values.astype(np.complex128),
                        side="frequency")


def choose_blowup_exponent(p, n: int, s) -> Optional[object]:
    """Decay exponent for the radial counterexample, or None when infeasible.

    The window (s + n - n/p, min(s + n, (n+1)/2 - 1/p)] collects four
    constraints: the kernel bound giving Sobolev membership, Lp
    integrability of that kernel, convergence of the radial oscillatory
    integral, and failure of Lp membership for the blown-up image.  It is
    nonempty exactly when s < (n-1)(1/p - 1/2); the midpoint maximizes the
    worst slack.  Exact inputs (int or Fraction) get exact arithmetic.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need dimension >= 2")
    exact = isinstance(p, (int, Fraction)) and isinstance(s, (int, Fraction))
    if exact:
        p = Fraction(p)
        s = Fraction(s)
        if not p > 1:
            raise ValueError("need 1 < p < infinity")
        lo = s + n - Fraction(n) / p
        hi = min(s + n, Fraction(n + 1, 2) - 1 / p)
        return (lo + hi) / 2 if lo < hi else None
    p = float(p)
    s = float(s)
    if not (p > 1.0 and np.isfinite(p)):
        raise ValueError("need 1 < p < infinity")
    lo = s + n - n / p
    hi = min(s + n, 0.5 * (n + 1) - 1.0 / p)
    return 0.5 * (lo + hi) if lo < hi else None


def _probe_image(beta, n, cone, grid, alpha, terms, m_cut, component):
    a, M, a1, a2 = _resolve_split(alpha, n, terms, m_cut)
    f = radial_extremal(beta, n, cone, grid, alpha=alpha, terms=terms, m_cut=M)
    if component == "both":
        return script_a(f, a.value, n, int(terms), M, 1.0)
    if component == "minus":
        return apply_radial_multiplier(
            f, lambda rho: np.exp(-2j * np.pi * rho) * a2(rho))
    if component == "plus":
        return apply_radial_multiplier(
            f, lambda rho: np.exp(2j * np.pi * rho) * a1(rho))
    raise ValueError("component must be 'both', 'plus', or 'minus'")


def _collar_samples(values: np.ndarray, grid: Grid, axis, radii):
    """Snap probe radii to lattice points on the axis ray; unique offsets."""
    h = grid.h
    m = grid.m
    axis = np.asarray(axis, dtype=np.float64)
    seen = {}
    for r in radii:
        if not r > 0.0:
            raise ValueError("probe radii must be positive")
        idx = tuple(int(round(r * c / h)) % m for c in axis)
        x = np.array([i * h if i <= m // 2 else i * h - m * h for i in idx])
        off = abs(float(np.linalg.norm(x)) - 1.0)
        if off <= 0.0:
            continue
        seen[idx] = (off, abs(complex(values[idx])))
    pairs = sorted(seen.values())
    offs = np.array([p[0] for p in pairs])
    vals = np.array([p[1] for p in pairs])
    return offs, vals


@dataclass(frozen=True)
class BlowupReport:
    offsets: tuple
    values: tuple
    fit: SlopeFit
    component: str
    resolution_ok: bool

    @property
    def slope(self) -> float:
        return self.fit.slope


def _probe_axis(cone: Optional[ConeCutoff], n: int) -> tuple:
    if cone is not None:
        return cone.axis
    return (1.0,) + (0.0,) * (n - 1)


def blowup_probe(beta, n: int, cone: Optional[ConeCutoff], grid: Grid,
                 shell: Sequence[float], *, alpha=1.0, terms: int = 4,
                 m_cut=None, component: str = "both") -> BlowupReport:
    """Fit the collar growth rate of the time-one image along the cone axis.

    shell lists radii near 1; each is snapped to the nearest lattice point
    on the axis ray and the image magnitude is regressed against the
    distance to the unit sphere in log2-log2 coordinates.  The expected
    slope is beta - (n+1)/2 for the full image and for its minus-phase
    channel, while the plus-phase channel alone stays bounded.  With a cone
    that exponent emerges only past the cap's stationary-phase radius, so
    quantitative collar fits should pass cone=None (first-axis probe ray).
    """
    img = _probe_image(beta, n, cone, grid, alpha, terms, m_cut, component)
    offs, vals = _collar_samples(img.values, grid, _probe_axis(cone, n), shell)
    fit = fit_slope(offs, vals)
    span_ok = (offs.max() - offs.min()) / grid.h >= 8.0
    inner_ok = offs.min() >= 2.0 * grid.h - 1e-12
    return BlowupReport(offsets=tuple(float(o) for o in offs),
                        values=tuple(float(v) for v in vals),
                        fit=fit, component=component,
                        resolution_ok=bool(span_ok and inner_ok))


@dataclass(frozen=True)
class CollarChoice:
    fit: SlopeFit
    outer: float
    stable: bool
    ladder: tuple

    @property
    def slope(self) -> float:
        return self.fit.slope


def stable_collar_slope(beta, n: int, cone: Optional[ConeCutoff], grid: Grid, *,
                        alpha=1.0, terms: int = 4, m_cut=None,
                        component: str = "both", outer: float = 0.25,
                        per_octave: int = 4, tol: float = 0.05,
                        min_points: int = 8) -> CollarChoice:
    """Collar slope fitted on the widest outer edge stable under halving.

    The collar extent is not quantitative in the underlying estimate, only
    its existence is, so the probe walks a geometric ladder of sphere
    offsets and shrinks the outer edge until halving it moves the fitted
    slope by at most tol.  Falls back to the narrowest candidate, marked
    unstable, if no pair of consecutive edges agrees.
    """
    img = _probe_image(beta, n, cone, grid, alpha, terms, m_cut, component)
    h = grid.h
    lo = 4.0 * h
    if outer <= 8.0 * h:
        raise ValueError("outer collar edge too thin for this grid")
    ratio = 2.0 ** (1.0 / per_octave)
    ladder = [outer]
    while ladder[-1] / ratio >= lo:
        ladder.append(ladder[-1] / ratio)
    offs, vals = _collar_samples(img.values, grid, _probe_axis(cone, n),
                                 [1.0 + o for o in ladder])

    edges = []
    e = outer
    while e >= 8.0 * h:
        if int(np.count_nonzero(offs <= e * (1.0 + 1e-12))) >= min_points:
            edges.append(e)
        e /= 2.0
    if len(edges) < 2:
        raise ValueError("not enough collar points for a stability check")
    fits = []
    for e in edges:
        sel = offs <= e * (1.0 + 1e-12)
        fits.append(fit_slope(offs[sel], vals[sel]))
    for i in range(len(edges) - 1):
        if abs(fits[i].slope - fits[i + 1].slope) <= tol:
            return CollarChoice(fit=fits[i], outer=edges[i], stable=True,
                                ladder=tuple(float(o) for o in ladder))
    return CollarChoice(fit=fits[-1], outer=edges[-1], stable=False,
                        ladder=tuple(float(o) for o in ladder))


@dataclass(frozen=True)
class PacketSpec:
    """Anisotropic frequency slab: carrier 2^j e_1, half-widths delta 2^{j-1} and delta 2^{j/2}."""

    j: int
    delta: float = 0.1
    n: int = 2

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError("scale index must be an integer >= 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.n < 2:
            raise ValueError("need dimension >= 2")
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def center(self) -> float:
        return float(2.0 ** self.j)

    @property
    def half_width_axis(self) -> float:
        return self.delta * 2.0 ** (self.j - 1)

    @property
    def half_width_cross(self) -> float:
        return self.delta * 2.0 ** (0.5 * self.j)


def _slab_values(spec: PacketSpec, grid: Grid, center: float) -> np.ndarray:
    freqs = grid.axis_frequencies()
    vals = _broadcast_axis(grid, 0, _plateau_bump((freqs - center)
                                                  / spec.half_width_axis))
    sq = _broadcast_axis(grid, 1, freqs ** 2)
    for ax in range(2, grid.n):
        sq = sq + _broadcast_axis(grid, ax, freqs ** 2)
    vals = vals * _plateau_bump(np.sqrt(sq) / spec.half_width_cross)
    return vals.astype(np.complex128)


def wave_packet(spec: PacketSpec, grid: Grid) -> SampledField:
    """Nonnegative slab bump at the full carrier frequency.

    Usable only when the whole slab, carrier included, sits under the grid
    Nyquist radius, which confines direct construction to small scale
    indices; the envelope route below has no such confinement.
    """
    if grid.n != spec.n:
        raise ValueError("dimension mismatch between packet and grid")
    if spec.center * (1.0 + spec.delta) >= grid.nyquist:
        raise ValueError("slab violates the grid Nyquist bound")
    return SampledField(grid=grid, values=_slab_values(spec, grid, spec.center),
                        side="frequency")


def packet_envelope(spec: PacketSpec, grid: Grid) -> SampledField:
    """The slab bump recentred at zero frequency.

    The packet is exp(2 pi i 2^j x_1) times the space image of this
    envelope, so packet magnitudes equal envelope magnitudes pointwise and
    a grid only has to resolve the slab half-widths, not the carrier.
    """
    if grid.n != spec.n:
        raise ValueError("dimension mismatch between packet and grid")
    if 2.0 * max(spec.half_width_axis, spec.half_width_cross) >= grid.nyquist:
        raise ValueError("envelope slab too wide for the grid")
    return SampledField(grid=grid, values=_slab_values(spec, grid, 0.0),
                        side="frequency")


def _carrier_radius(spec: PacketSpec, grid: Grid) -> np.ndarray:
    freqs = grid.axis_frequencies()
    q2 = (spec.center + _broadcast_axis(grid, 0, freqs)) ** 2
    for ax in range(1, grid.n):
        q2 = q2 + _broadcast_axis(grid, ax, freqs) ** 2
    return np.sqrt(q2)


def _demodulated_values(grid, ghat, q, center, t, sign, amp) -> np.ndarray:
    w = ghat * amp(t * q) * np.exp(sign * 2j * np.pi * t * (q - center))
    return to_space(SampledField(grid=grid, values=w, side="frequency")).values


def packet_time_slice(spec: PacketSpec, grid: Grid, t: float, *,
                      channel: str = "minus", alpha=1.0, terms: int = 4,
                      m_cut=None) -> SampledField:
    """One phase channel of the wave split applied to the packet, demodulated.

    Returns the complex field whose modulus equals the modulus of the
    requested channel acting on the packet at time t, computed entirely on
    an envelope-resolving grid: the carrier oscillation is removed exactly,
    the radial phase and amplitude are evaluated at the true shifted
    frequencies, and only the envelope bandwidth must fit under Nyquist.
    """
    if channel not in ("minus", "plus"):
        raise ValueError("channel must be 'minus' or 'plus'")
    _, M, a1, a2 = _resolve_split(alpha, spec.n, terms, m_cut)
    ghat = packet_envelope(spec, grid).values
    q = _carrier_radius(spec, grid)
    sign, amp = (-1, a2) if channel == "minus" else (1, a1)
    vals = _demodulated_values(grid, ghat, q, spec.center, float(t), sign, amp)
    return SampledField(grid=grid, values=vals, side="space")


@dataclass(frozen=True)
class PacketReport:
    j: int
    delta: float
    on_slab_min: float
    on_slab_max: float
    plus_side_max: float
    side_ratio: float
    slab_measure: float
    slab_cells: int
    c_low_observed: float
    sup_norms: tuple
    sup_certified: bool
    bandlimit_ok: bool
    wrap_safe: bool

    def sup_norm(self, p) -> float:
        for q, v in self.sup_norms:
            if q == float(p):
                return v
        raise KeyError(f"no norm recorded for p={p}")


def packet_lower_bound(spec: PacketSpec, grid: Grid, tg: TimeGrid, *,
                       alpha=1.0, terms: int = 4, m_cut=None,
                       p_values=(2.0, 4.0), slab_x1=(1.0, 2.0)) -> PacketReport:
    """Sup-in-time statistics of the wave split acting on a packet.

    The minus channel transports the packet to x_1 near t, so its sup over
    a time interval is, at each point, a trailing-window maximum in x_1 of
    the demodulated slice frozen at the interval's left endpoint; the
    window granularity makes the effective time resolution one spatial
    cell.  That is far coarser than the quarter-width certification
    spacing, which is recorded honestly in sup_certified, but the slice's
    time bandwidth is the slab half-width, so one-cell granularity resolves
    the sup whenever bandlimit_ok holds.  The plus channel moves the
    opposite way and is only sampled at the grid times; wrap_safe records
    whether the torus keeps it separated from the slab.
    """
    if grid.n != spec.n:
        raise ValueError("dimension mismatch between packet and grid")
    a, M, a1, a2 = _resolve_split(alpha, spec.n, terms, m_cut)
    ghat = packet_envelope(spec, grid).values
    q = _carrier_radius(spec, grid)
    ts = tg.samples
    occupied = np.abs(ghat) > 0.0
    if float(ts[0] * q[occupied].min()) < 2.0 * M:
        raise ValueError("slab touches the low-frequency cutoff; "
                         "increase the scale index")
    c_low = min(float(np.min(np.abs(a2(t * q)[occupied])))
                for t in (ts[0], ts[-1]))

    h = grid.h
    side = grid.m * h
    coords = grid.axis_coordinates()
    x1_ok = (coords >= slab_x1[0] - 1e-12) & (coords <= slab_x1[1] + 1e-12)
    torus = np.minimum(coords, side - coords)
    cross_half = 2.0 ** (-0.5 * spec.j)
    if grid.n == 2:
        cross = _broadcast_axis(grid, 1, torus)
    else:
        s = _broadcast_axis(grid, 1, torus ** 2)
        for ax in range(2, grid.n):
            s = s + _broadcast_axis(grid, ax, torus ** 2)
        cross = np.sqrt(s)
    mask = _broadcast_axis(grid, 0, x1_ok) & (cross <= cross_half + 1e-12)
    slab_cells = int(np.count_nonzero(mask))
    if slab_cells == 0:
        raise ValueError("slab contains no lattice points at this resolution")

    sup_vals = None
    for k, t in enumerate(ts):
        b = np.abs(_demodulated_values(grid, ghat, q, spec.center, t, -1, a2))
        if k + 1 < len(ts):
            wsize = int(np.ceil((ts[k + 1] - t) / h)) + 1
            if wsize > 1:
                # trailing window [i - wsize + 1, i]: the channel moves the
                # profile forward in x1 as t grows within the interval
                b = maximum_filter1d(b, size=wsize, axis=0, mode="wrap",
                                     origin=(wsize - 1) // 2)
        sup_vals = b if sup_vals is None else np.maximum(sup_vals, b)

    plus_max = 0.0
    for t in ts:
        b1 = np.abs(_demodulated_values(grid, ghat, q, spec.center, t, 1, a1))
        plus_max = max(plus_max, float(b1[mask].max()))

    on_min = float(sup_vals[mask].min())
    on_max = float(sup_vals[mask].max())
    sup_field = SampledField(grid=grid, values=sup_vals.astype(np.complex128),
                             side="space")
    norms = tuple((float(p), lp_norm(sup_field, p)) for p in p_values)

    ball = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[grid.n - 1]
    measure = (slab_x1[1] - slab_x1[0]) * ball * cross_half ** (grid.n - 1)
    bandwidth = spec.half_width_axis + spec.delta ** 2
    return PacketReport(
        j=spec.j, delta=spec.delta,
        on_slab_min=on_min, on_slab_max=on_max,
        plus_side_max=plus_max,
        side_ratio=plus_max / on_min if on_min > 0.0 else float("inf"),
        slab_measure=measure, slab_cells=slab_cells,
        c_low_observed=c_low, sup_norms=norms,
        sup_certified=bool(h <= 0.25 * spec.delta * 2.0 ** (-spec.j)),
        bandlimit_ok=bool(h * bandwidth <= 0.25),
        wrap_safe=bool(side >= slab_x1[1] + tg.t_hi + 0.5),
    )


def sphere_cap_ft(cone: ConeCutoff, x, *, oscillation_budget: float = 512.0) -> complex:
    """Transform of the cap measure at x: quadrature of the surface integral.

    Integrates exp(-2 pi i x.theta) chi(theta) over the unit sphere with a
    node count adapted to |x|.  The circle uses the periodic trapezoid
    rule; the two-sphere a Gauss-Legendre polar rule crossed with a
    trapezoid azimuth, both spectrally accurate for smooth integrands.
    Stationary phase puts the surviving outgoing channel at the antipodal
    direction, so sweeps along minus the axis see the surface decay rate
    while the outgoing channel along the axis itself is vestigial.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != cone.n:
        raise ValueError("evaluation point dimension does not match the cone")
    big_r = float(np.linalg.norm(x))
    if big_r < 1.0:
        raise ValueError("defined for |x| >= 1")
    if big_r > oscillation_budget:
        raise ValueError(f"|x|={big_r:.3g} exceeds the oscillation budget "
                         f"{oscillation_budget:.3g}")
    axis = np.asarray(cone.axis)
    if cone.n == 2:
        nodes = 1 << max(8, int(np.ceil(np.log2(64.0 + 16.0 * big_r))))
        ang = 2.0 * np.pi * np.arange(nodes) / nodes
        theta = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        chi = cone.angular_value(theta @ axis)
        vals = np.exp(-2j * np.pi * (theta @ x)) * chi
        return complex(vals.mean() * 2.0 * np.pi)
    if cone.n == 3:
        deg = int(np.ceil(5.0 * big_r + 30.0))
        mu, wts = leggauss(deg)
        naz = 2 * deg
        ang = 2.0 * np.pi * np.arange(naz) / naz
        cos_az, sin_az = np.cos(ang), np.sin(ang)
        total = 0.0 + 0.0j
        for lo in range(0, deg, 256):
            mu_b = mu[lo:lo + 256]
            sin_pol = np.sqrt(1.0 - mu_b ** 2)
            theta = np.empty((mu_b.size, naz, 3))
            theta[..., 0] = sin_pol[:, None] * cos_az[None, :]
            theta[..., 1] = sin_pol[:, None] * sin_az[None, :]
            theta[..., 2] = mu_b[:, None]
            chi = cone.angular_value(theta @ axis)
            vals = np.exp(-2j * np.pi * (theta @ x)) * chi
            total += np.sum(wts[lo:lo + 256] * vals.mean(axis=1)) * 2.0 * np.pi
        return complex(total)
    raise ValueError("sphere quadrature implemented for n in {2, 3}")
