"""Blow-up profiles, wave packets, and the sphere-cap quadrature."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphmax.analysis import fit_slope, two_phase_fit
from sphmax.extremals import (
    BlowupReport,
    ConeCutoff,
    PacketSpec,
    blowup_probe,
    choose_blowup_exponent,
    packet_envelope,
    packet_lower_bound,
    packet_time_slice,
    radial_extremal,
    sphere_cap_ft,
    stable_collar_slope,
    wave_packet,
)
from sphmax.fields import Grid, lp_norm, radial_frequency_mesh, to_space
from sphmax.multiplier import main_symbols
from sphmax.operators import TimeGrid


def test_cone_cutoff_validation():
    with pytest.raises(ValueError):
        ConeCutoff(axis=(1.0, 1.0))
    with pytest.raises(ValueError):
        ConeCutoff(axis=(1.0, 0.0), aperture=0.3)
    with pytest.raises(ValueError):
        ConeCutoff(axis=(1.0, 0.0), aperture=0.0)
    with pytest.raises(ValueError):
        ConeCutoff(axis=(1.0,))
    cone = ConeCutoff.standard(3)
    assert cone.axis == (1.0, 0.0, 0.0)
    assert cone.n == 3
    with pytest.raises(ValueError):
        ConeCutoff.standard(2)(np.array([1.0, 0.0, 0.0]))


def test_cone_cutoff_is_angular():
    cone = ConeCutoff.standard(2, aperture=0.2)
    xi = np.array([[0.9, 0.05], [2.0, -0.3], [0.1, 0.7]])
    a = cone(xi)
    b = cone(3.0 * xi)
    assert np.max(np.abs(a - b)) < 1e-14
    assert cone(np.array([5.0, 0.0])) == 1.0
    assert cone(np.array([0.0, 0.0])) == 0.0
    # chordal distance at the full aperture kills the profile
    assert cone.angular_value(1.0 - 0.5 * 0.2**2) == pytest.approx(0.0)
    assert cone.angular_value(1.0 - 0.5 * (0.09) ** 2) == 1.0


def test_blowup_exponent_worked_values():
    v = choose_blowup_exponent(Fraction(4, 3), 2, 0)
    assert isinstance(v, Fraction) and v == Fraction(5, 8)
    assert choose_blowup_exponent(4, 2, 0) is None
    assert choose_blowup_exponent(2, 2, Fraction(-1, 10)) == Fraction(19, 20)
    assert choose_blowup_exponent(1.5, 2, 0.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        choose_blowup_exponent(1, 2, 0)
    with pytest.raises(ValueError):
        choose_blowup_exponent(2, 1, 0)


@settings(max_examples=80, deadline=None)
@given(p=st.floats(1.05, 6.0), s=st.floats(-2.0, 0.5), n=st.sampled_from([2, 3]))
def test_blowup_exponent_feasibility_window(p, s, n):
    boundary = (n - 1) * (1.0 / p - 0.5)
    if abs(s - boundary) < 1e-9:
        return
    got = choose_blowup_exponent(p, n, s)
    assert (got is not None) == (s < boundary)
    if got is not None:
        assert s + n - n / p < got <= s + n


def test_radial_extremal_flattens_minus_phase():
    """Beyond the cutoff the minus amplitude times the profile is the bare weight."""
    g = Grid(n=2, L=4.0, m=256)
    beta = 1.1
    f = radial_extremal(beta, 2, None, g, alpha=1.0, terms=4, m_cut=1.0)
    assert f.side == "frequency"
    _, a2 = main_symbols(1.0, 2, 4, 1.0)
    rho = radial_frequency_mesh(g)
    sel = rho >= 2.5
    ratio = a2(rho[sel]) * f.values[sel] * (1.0 + rho[sel] ** 2) ** (0.5 * beta)
    const = 1.0 / np.sqrt(2.0 * np.pi)
    assert np.max(np.abs(ratio - const)) < 1e-12
    assert np.max(np.abs(ratio.imag)) < 1e-14


def test_radial_extremal_argument_checks():
    g = Grid(n=2, L=4.0, m=64)
    with pytest.raises(ValueError):
        radial_extremal(0.0, 2, None, g)
    with pytest.raises(ValueError):
        radial_extremal(1.1, 3, None, g)
    with pytest.raises(ValueError):
        radial_extremal(1.1, 2, ConeCutoff.standard(3), Grid(n=3, L=4.0, m=16))
    with pytest.raises(ValueError):
        radial_extremal(1.1, 2, None, Grid(n=2, L=1.0, m=16), m_cut=1.0)


def test_blowup_probe_grows_toward_sphere():
    g = Grid(n=2, L=4.0, m=1024)
    shell = [1.0 + 0.25 * 2.0 ** (-k / 4.0) for k in range(22)]
    rep = blowup_probe(1.1, 2, None, g, shell)
    assert isinstance(rep, BlowupReport)
    assert rep.resolution_ok
    assert rep.slope < -0.2
    assert min(rep.values) > 0.0
    # shallower frequency decay blows up faster
    rep2 = blowup_probe(1.2, 2, None, g, shell)
    assert rep2.slope > rep.slope
    with pytest.raises(ValueError):
        blowup_probe(1.1, 2, None, g, shell, component="bogus")


def test_blowup_probe_minus_channel_carries_growth():
    g = Grid(n=2, L=4.0, m=512)
    cone = ConeCutoff.standard(2)
    shell = [1.0 + 0.25 * 2.0 ** (-k / 3.0) for k in range(12)]
    minus = blowup_probe(1.1, 2, cone, g, shell, component="minus")
    plus = blowup_probe(1.1, 2, cone, g, shell, component="plus")
    assert max(plus.values) < 0.05 * max(minus.values)
    narrow = blowup_probe(1.1, 2, cone, g, [1.3, 1.305, 1.31])
    assert not narrow.resolution_ok


def test_stable_collar_slope_quantitative():
    # unconed profile, decay exponent 1.1: the collar rate is beta - 3/2
    g = Grid(n=2, L=4.0, m=2048)
    choice = stable_collar_slope(1.1, 2, None, g)
    assert abs(choice.slope - (1.1 - 1.5)) < 0.1
    assert 0.0 < choice.outer <= 0.25
    ladder = np.asarray(choice.ladder)
    assert np.all(np.diff(ladder) < 0.0)
    with pytest.raises(ValueError):
        stable_collar_slope(1.1, 2, None, Grid(n=2, L=4.0, m=512), outer=0.01)


def test_packet_spec_validation():
    spec = PacketSpec(j=5, delta=0.2)
    assert spec.center == 32.0
    assert spec.half_width_axis == pytest.approx(0.2 * 16.0)
    assert spec.half_width_cross == pytest.approx(0.2 * 2.0**2.5)
    with pytest.raises(ValueError):
        PacketSpec(j=0)
    with pytest.raises(ValueError):
        PacketSpec(j=3, delta=1.5)
    with pytest.raises(ValueError):
        PacketSpec(j=3, n=1)


def test_wave_packet_matches_modulated_envelope():
    """Demodulation is exact: the carrier is a lattice frequency."""
    g = Grid(n=2, L=4.0, m=512)
    spec = PacketSpec(j=4)
    hat = wave_packet(spec, g)
    assert np.all(hat.values.imag == 0.0)
    assert np.all(hat.values.real >= 0.0)
    pk = to_space(hat).values
    env = to_space(packet_envelope(spec, g)).values
    x = g.axis_coordinates()
    carrier = np.exp(2j * np.pi * spec.center * x).reshape(g.m, 1)
    diff = np.max(np.abs(pk - carrier * env)) / np.max(np.abs(env))
    assert diff < 1e-10
    with pytest.raises(ValueError):
        wave_packet(PacketSpec(j=6), g)  # carrier at Nyquist
    with pytest.raises(ValueError):
        packet_envelope(PacketSpec(j=8, delta=1.0), g)
    with pytest.raises(ValueError):
        wave_packet(PacketSpec(j=4, n=3), g)


def test_packet_norm_scales_with_slab_volume():
    # axis width doubles and cross width gains sqrt(2) per scale step
    g = Grid(n=2, L=16.0, m=256)
    norms = [lp_norm(to_space(packet_envelope(PacketSpec(j=j), g)), 2)
             for j in (4, 5, 6)]
    for lo, hi in zip(norms, norms[1:]):
        assert abs((hi / lo) ** 2 - 2.0**1.5) < 0.02 * 2.0**1.5


def test_slab_stays_radially_linear():
    # the cross width delta 2^{j/2} makes |xi| - xi_1 order delta^2 on the slab
    g = Grid(n=2, L=4.0, m=512)
    spec = PacketSpec(j=4, delta=0.1)
    hat = wave_packet(spec, g)
    rho = radial_frequency_mesh(g)
    xi1 = g.axis_frequencies().reshape(g.m, 1)
    gap = (rho - xi1)[np.abs(hat.values) > 0]
    assert np.max(gap) <= 0.55 * spec.delta**2
    assert np.min(gap) >= 0.0


def test_packet_slice_transports_along_axis():
    g = Grid(n=2, L=8.0, m=256)
    sl = packet_time_slice(PacketSpec(j=6), g, 1.5)
    mag = np.abs(sl.values)
    peak = np.unravel_index(np.argmax(mag), mag.shape)
    assert abs(peak[0] - 1.5 / g.h) <= 2
    assert min(peak[1], g.m - peak[1]) <= 2
    with pytest.raises(ValueError):
        packet_time_slice(PacketSpec(j=6), g, 1.5, channel="sideways")


def test_packet_lower_bound_report():
    g = Grid(n=2, L=8.0, m=512)
    tg = TimeGrid.uniform(1.0, 2.0, 9)
    rep = packet_lower_bound(PacketSpec(j=6), g, tg)
    # min of the minus amplitude over the slab: 1/(2 pi) for this order
    assert abs(rep.c_low_observed - 1.0 / (2.0 * np.pi)) < 1e-3
    assert 0.0 < rep.on_slab_min <= rep.on_slab_max
    assert rep.side_ratio < 0.01
    assert rep.slab_cells > 0
    assert rep.bandlimit_ok and rep.wrap_safe
    assert not rep.sup_certified  # honest: h is far above the quarter width
    assert rep.sup_norm(2.0) > 0.0
    with pytest.raises(KeyError):
        rep.sup_norm(3.0)


def test_packet_on_slab_growth_rate():
    """The sup magnitude on the slab grows like the slab volume, rate 3/2."""
    g = Grid(n=2, L=8.0, m=512)
    tg = TimeGrid.uniform(1.0, 2.0, 9)
    mins = [packet_lower_bound(PacketSpec(j=j), g, tg).on_slab_min
            for j in (4, 5, 6)]
    fit = fit_slope([2.0**j for j in (4, 5, 6)], mins)
    assert abs(fit.slope - 1.5) < 0.1


def test_packet_lower_bound_cutoff_guard():
    g = Grid(n=2, L=8.0, m=64)
    tg = TimeGrid.uniform(0.4, 2.0, 3)
    with pytest.raises(ValueError, match="low-frequency cutoff"):
        packet_lower_bound(PacketSpec(j=2, delta=0.4), g, tg)


def test_cap_transform_channel_split():
    # both probe directions see one stationary direction inside the cap, so
    # the magnitudes agree; the surviving phase channel flips with the side
    for n, power in ((2, -0.5), (3, -1.0)):
        cone = ConeCutoff.standard(n, aperture=0.25)
        rs = np.linspace(10.0, 20.0, 41)
        fwd = np.array([sphere_cap_ft(cone, [r] + [0.0] * (n - 1)) for r in rs])
        bwd = np.array([sphere_cap_ft(cone, [-r] + [0.0] * (n - 1)) for r in rs])
        B_f, D_f, res_f = two_phase_fit(rs, fwd, frequency=2.0 * np.pi,
                                        powers=(power,))
        B_b, D_b, res_b = two_phase_fit(rs, bwd, frequency=2.0 * np.pi,
                                        powers=(power,))
        assert abs(B_f[0]) < 0.02 * abs(D_f[0])
        assert abs(D_b[0]) < 0.02 * abs(B_b[0])
        assert res_f < 0.3 and res_b < 0.3


def test_cap_transform_phase_steadiness():
    cone = ConeCutoff.standard(2, aperture=0.25)
    rs = np.linspace(10.0, 20.0, 21)
    vals = np.array([sphere_cap_ft(cone, [-r, 0.0])
                     * np.exp(-2j * np.pi * r) * np.sqrt(r) for r in rs])
    ang = np.unwrap(np.angle(vals))
    assert np.sum(np.abs(np.diff(ang))) < 0.5


def test_cap_transform_surface_decay():
    cone2 = ConeCutoff.standard(2, aperture=0.25)
    rs2 = [64.0 * 2.0 ** (k / 2.0) for k in range(5)]
    mags2 = [abs(sphere_cap_ft(cone2, [-r, 0.0])) for r in rs2]
    assert abs(fit_slope(rs2, mags2).slope + 0.5) < 0.1
    cone3 = ConeCutoff.standard(3, aperture=0.25)
    rs3 = [128.0 * 2.0 ** (k / 2.0) for k in range(5)]
    mags3 = [abs(sphere_cap_ft(cone3, [-r, 0.0, 0.0])) for r in rs3]
    assert abs(fit_slope(rs3, mags3).slope + 1.0) < 0.1


def test_cap_transform_argument_checks():
    cone = ConeCutoff.standard(2)
    with pytest.raises(ValueError):
        sphere_cap_ft(cone, [0.5, 0.0])
    with pytest.raises(ValueError):
        sphere_cap_ft(cone, [100.0, 0.0], oscillation_budget=64.0)
    with pytest.raises(ValueError):
        sphere_cap_ft(cone, [10.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        sphere_cap_ft(ConeCutoff(axis=(1.0, 0.0, 0.0, 0.0)), [10.0, 0.0, 0.0, 0.0])
