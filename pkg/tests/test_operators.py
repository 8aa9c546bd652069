"""Multiplier-side operators: means, half waves, pieces, time suprema."""
import numpy as np
import pytest

from sphmax.fields import (
    Grid,
    SampledField,
    apply_radial_multiplier,
    lp_norm,
    to_frequency,
    to_space,
)
from sphmax.multiplier import CutoffFamily
from sphmax.operators import (
    FtcReport,
    TimeGrid,
    ftc_maximal_check,
    half_wave,
    low_piece,
    lp_piece,
    script_a,
    spherical_mean,
    square_function,
    sup_over_t,
    wave_piece,
)


def random_field(grid, seed=0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    vals = rng.standard_normal(grid.shape()) + 1j * rng.standard_normal(grid.shape())
    return SampledField(grid=grid, values=vals)


def gaussian_packet(grid, center, carrier=0.0):
    """Gaussian bump at center, optionally modulated along the first axis."""
    x = grid.axis_coordinates()
    sq = np.zeros(grid.shape())
    for ax in range(grid.n):
        view = [1] * grid.n
        view[ax] = grid.m
        sq = sq + (x - center[ax]).reshape(view) ** 2
    vals = np.exp(-np.pi * sq).astype(complex)
    if carrier:
        view = [1] * grid.n
        view[0] = grid.m
        vals = vals * np.exp(2j * np.pi * carrier * x).reshape(view)
    return SampledField(grid=grid, values=vals)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(t_lo=1.0, t_hi=2.0, samples=(1.0,))
    with pytest.raises(ValueError):
        TimeGrid(t_lo=1.0, t_hi=2.0, samples=(1.0, 1.7, 1.3, 2.0))
    with pytest.raises(ValueError):
        TimeGrid(t_lo=1.0, t_hi=2.0, samples=(1.2, 2.0))
    tg = TimeGrid.uniform(1.0, 2.0, 5)
    assert tg.K == 5
    assert tg.max_spacing == pytest.approx(0.25)
    with pytest.raises(ValueError):
        TimeGrid.uniform(0.0, 1.0, 1)


def test_half_wave_unitary_and_group_law():
    g = Grid(n=2, L=4.0, m=64)
    f = random_field(g)
    base = lp_norm(f, 2)
    for sign in (1, -1):
        out = half_wave(f, sign, 0.7)
        assert abs(lp_norm(out, 2) - base) < 1e-10 * base
    two_step = half_wave(half_wave(f, 1, 0.3), 1, 0.4)
    one_step = half_wave(f, 1, 0.7)
    assert np.max(np.abs(two_step.values - one_step.values)) < 1e-12
    undone = half_wave(half_wave(f, 1, 0.5), -1, 0.5)
    assert np.max(np.abs(undone.values - to_space(f).values)) < 1e-12
    with pytest.raises(ValueError):
        half_wave(f, 2, 1.0)
    with pytest.raises(ValueError):
        half_wave(f, 1, -0.1)


def test_half_wave_transports_modulated_packet():
    # carrier at frequency 10 rides on a unit-bandwidth envelope, so the
    # packet translates along the carrier axis with small dispersion
    g = Grid(n=2, L=8.0, m=256)
    f = gaussian_packet(g, (3.0, 4.0), carrier=10.0)
    out = half_wave(f, -1, 2.0)
    mag = np.abs(out.values)
    peak = np.unravel_index(np.argmax(mag), mag.shape)
    expected = (int(round(5.0 / g.h)), int(round(4.0 / g.h)))
    assert abs(peak[0] - expected[0]) <= 3
    assert abs(peak[1] - expected[1]) <= 3
    shift = int(round(2.0 / g.h))
    back = np.roll(mag, -shift, axis=0)
    ref = np.abs(f.values)
    rel = np.sqrt(np.sum((back - ref) ** 2) / np.sum(ref**2))
    assert rel < 0.15


def test_spherical_mean_argument_checks():
    g = Grid(n=2, L=4.0, m=32)
    f = random_field(g)
    with pytest.raises(ValueError):
        spherical_mean(f, 1.0, 3, 1.0)
    with pytest.raises(ValueError):
        spherical_mean(f, 1.0, 2, 0.0)


def test_mean_decomposes_into_low_and_annular_pieces():
    """phi + sum psi_j is a partition, so the pieces must re-sum exactly."""
    g = Grid(n=2, L=4.0, m=64)
    f = random_field(g, seed=5)
    alpha, t, M = 0.7, 1.3, 1.0
    total = low_piece(f, alpha, t, M).values.copy()
    for j in range(1, 8):
        total += lp_piece(f, alpha, j, t, M).values
    whole = spherical_mean(f, alpha, 2, t)
    scale = np.max(np.abs(whole.values))
    assert np.max(np.abs(total - whole.values)) < 1e-10 * scale
    with pytest.raises(ValueError):
        lp_piece(f, alpha, 0, t, M)


def test_mean_respects_dyadic_dilation():
    # band-limit to half Nyquist so x -> 2x stays on the grid, then the
    # radius-t mean of the dilated field is the dilated radius-2t mean
    g = Grid(n=2, L=4.0, m=64)
    F = to_frequency(random_field(g, seed=7))
    spectrum = F.values.copy()
    k = np.fft.fftfreq(g.m, d=1.0 / g.m)
    keep = np.abs(k) < g.m // 4
    mask = np.outer(keep, keep)
    spectrum[~mask] = 0.0
    f = to_space(SampledField(grid=g, values=spectrum, side="frequency"))
    idx = (2 * np.arange(g.m)) % g.m
    dil = SampledField(grid=g, values=f.values[np.ix_(idx, idx)])
    lhs = spherical_mean(dil, 0.8, 2, 0.5)
    rhs_full = spherical_mean(f, 0.8, 2, 1.0)
    rhs = rhs_full.values[np.ix_(idx, idx)]
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs.values - rhs)) < 1e-10 * scale


def test_wave_part_vanishes_below_cutoff():
    # amplitudes carry the high-frequency cutoff, so a field whose spectrum
    # sits far under M passes to nearly zero
    g = Grid(n=2, L=8.0, m=64)
    f = gaussian_packet(g, (4.0, 4.0))
    out = script_a(f, 0.0, 2, 3, 4.0, 1.0)
    assert lp_norm(out, 2) < 1e-10 * lp_norm(f, 2)
    with pytest.raises(ValueError):
        script_a(f, 0.0, 2, 3, 4.0, 0.5)
    with pytest.raises(ValueError):
        script_a(f, 0.0, 2, 3, 4.0, 2.5)


def test_wave_piece_single_mode_factor():
    g = Grid(n=2, L=4.0, m=64)
    vals = np.zeros(g.shape(), dtype=complex)
    vals[12, 0] = 1.0  # radial frequency 3
    f = SampledField(grid=g, values=vals, side="frequency")
    mode = to_space(f)
    fam = CutoffFamily(M=1.0)
    rho0 = 3.0
    for j, ell, sign in ((1, 0, 1), (2, 0, -1), (2, 1, 1)):
        out = wave_piece(f, j, 1.0, 1.0, ell=ell, sign=sign)
        factor = fam.psi_value(j, rho0) * rho0 ** (-ell) * np.exp(
            2j * np.pi * sign * rho0)
        assert np.max(np.abs(out.values - factor * mode.values)) < 1e-12
    # below the annulus the piece is dead
    out = wave_piece(f, 4, 1.0, 1.0)
    assert np.max(np.abs(out.values)) < 1e-15
    with pytest.raises(ValueError):
        wave_piece(f, 0, 1.0, 1.0)
    with pytest.raises(ValueError):
        wave_piece(f, 1, 1.0, 1.0, sign=0)


def test_sup_over_t_dominates_and_refines():
    g = Grid(n=2, L=4.0, m=32)
    f = random_field(g, seed=1)
    family = lambda t: half_wave(f, 1, t)
    coarse = sup_over_t(family, TimeGrid.uniform(1.0, 2.0, 3))
    fine = sup_over_t(family, TimeGrid.uniform(1.0, 2.0, 9))
    assert np.all(fine.values.real >= coarse.values.real - 1e-14)
    single = np.abs(to_space(family(1.5)).values)
    assert np.all(fine.values.real >= single - 1e-14)

    def mismatched(t):
        if t > 1.4:
            return random_field(Grid(n=2, L=4.0, m=16))
        return f

    with pytest.raises(ValueError):
        sup_over_t(mismatched, TimeGrid.uniform(1.0, 2.0, 3))


def test_ftc_check_constant_family_is_tight():
    g = Grid(n=2, L=4.0, m=32)
    f = random_field(g, seed=9)
    zero = SampledField(grid=g, values=np.zeros(g.shape(), dtype=complex))
    tg = TimeGrid.uniform(1.0, 2.0, 5)
    report = ftc_maximal_check(lambda t: f, lambda t: zero, tg, p=4.0)
    assert isinstance(report, FtcReport)
    assert report.worst_pointwise_ratio == pytest.approx(1.0)
    assert report.pointwise_failures == 0
    assert report.passed
    with pytest.raises(ValueError):
        ftc_maximal_check(lambda t: f, lambda t: zero, tg, p=1.0)


def test_ftc_check_half_wave_movie():
    """Endpoint plus integrated symbol derivative controls the supremum."""
    g = Grid(n=2, L=4.0, m=32)
    f = gaussian_packet(g, (2.0, 2.0), carrier=3.0)

    def value_at(t):
        return half_wave(f, 1, t)

    def deriv_at(t):
        return apply_radial_multiplier(
            f, lambda rho: 2j * np.pi * rho * np.exp(2j * np.pi * t * rho))

    tg = TimeGrid.uniform(1.0, 2.0, 33)
    report = ftc_maximal_check(value_at, deriv_at, tg, p=4.0)
    assert report.pointwise_failures == 0
    assert report.integrated_ratio <= 1.0


def test_square_function_single_mode_is_exact():
    g = Grid(n=2, L=4.0, m=64)
    vals = np.zeros(g.shape(), dtype=complex)
    vals[12, 0] = 1.0
    f = SampledField(grid=g, values=vals, side="frequency")
    fam = CutoffFamily(M=1.0)
    rho0 = 3.0
    expect = np.sqrt(fam.phi_value(rho0) ** 2
                     + sum(fam.psi_value(j, rho0) ** 2 for j in range(1, 5)))
    ratio = lp_norm(square_function(f, 1.0), 2) / lp_norm(f, 2)
    assert abs(ratio - expect) < 1e-12
    # a pure DC field lives entirely in the low cutoff
    dc = np.zeros(g.shape(), dtype=complex)
    dc[0, 0] = 1.0
    fdc = SampledField(grid=g, values=dc, side="frequency")
    assert lp_norm(square_function(fdc, 1.0), 2) == pytest.approx(
        lp_norm(fdc, 2))
    assert lp_norm(square_function(fdc, 1.0, include_low=False), 2) < 1e-15


def test_square_function_bounds_random_field():
    # annuli overlap in pairs, so the square sum sits between half and one
    g = Grid(n=2, L=4.0, m=64)
    f = random_field(g, seed=4)
    ratio = lp_norm(square_function(f, 1.0), 2) / lp_norm(f, 2)
    assert ratio <= 1.0 + 1e-12
    assert ratio >= np.sqrt(0.5) - 1e-12


def test_mean_commutes_with_translation():
    g = Grid(n=2, L=4.0, m=64)
    f = random_field(g, seed=8)
    shifted = SampledField(grid=g, values=np.roll(f.values, (5, -3), (0, 1)))
    a = spherical_mean(shifted, 1.0 + 0.5j, 2, 1.0)
    b = spherical_mean(f, 1.0 + 0.5j, 2, 1.0)
    scale = np.max(np.abs(b.values))
    assert np.max(np.abs(a.values - np.roll(b.values, (5, -3), (0, 1)))) \
        < 1e-11 * scale
