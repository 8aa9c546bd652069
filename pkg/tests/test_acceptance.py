"""Acceptance gate: every headline claim of the package, one test each.

Each test drives the shipped experiment configs (or the library directly for
the structural invariants), asserts the advertised tolerance, and prints one
summary line.  Budgets are wall-clock ceilings for the whole criterion.
"""
import time

import numpy as np

from sphmax.cli import execute
from sphmax.fields import Grid, SampledField, apply_radial_multiplier, \
    lp_norm, to_frequency, to_space
from sphmax.multiplier import CutoffFamily
from sphmax.operators import TimeGrid, ftc_maximal_check, half_wave, \
    square_function


def _report(tag, run, elapsed, budget):
    ok = run.passed and elapsed <= budget
    fails = [v.criterion for v in run.verdicts if not v.passed]
    note = f"{len(run.verdicts)} verdicts, {elapsed:.1f}s/{budget:.0f}s"
    if fails:
        note += "; failed: " + ", ".join(fails)
    print(("PASS" if ok else "FAIL") + f" {tag}: {note}")
    assert run.passed, f"{tag} verdicts failed: {fails}"
    assert elapsed <= budget, f"{tag} exceeded {budget:.0f}s ({elapsed:.1f}s)"


def _timed(name, params, out_dir):
    t0 = time.monotonic()
    run = execute(name, params, out_dir)
    return run, time.monotonic() - t0


def test_c01_bessel_expansion_error_slopes(tmp_path):
    run, dt = _timed("bessel-check", {}, tmp_path)
    assert len(run.verdicts) == 30
    _report("criterion-01 bessel-expansion", run, dt, 60.0)


def test_c02_multiplier_residual_decay(tmp_path):
    run, dt = _timed("multiplier-residual", {}, tmp_path)
    assert len(run.verdicts) == 6
    _report("criterion-02 multiplier-residual", run, dt, 120.0)


def test_c03_multiplier_path_matches_direct_quadrature(tmp_path):
    run, dt = _timed("oracle-crosscheck", {}, tmp_path)
    assert len(run.verdicts) == 6
    _report("criterion-03 oracle-equivalence", run, dt, 120.0)


def test_c04_radial_blowup_collar_slopes(tmp_path):
    run, dt = _timed("radial-blowup", {}, tmp_path)
    assert len(run.verdicts) == 4
    _report("criterion-04 radial-blowup", run, dt, 600.0)


def test_c05_wave_packet_scaling_gap(tmp_path):
    run, dt = _timed("packet-sweep", {}, tmp_path)
    assert len(run.verdicts) == 3
    slopes = {v.criterion: v.measured for v in run.verdicts}
    print("  packet slopes:", {k: f"{v:.4f}" for k, v in slopes.items()})
    _report("criterion-05 packet-scaling", run, dt, 900.0)


def test_c06_oscillatory_tail_decay(tmp_path):
    run, dt = _timed("tail-decay", {}, tmp_path)
    assert len(run.verdicts) == 8
    _report("criterion-06 oscillatory-tail", run, dt, 60.0)


def test_c07_fixed_time_ratio_slope(tmp_path):
    run, dt = _timed("fio-slope", {}, tmp_path)
    assert len(run.verdicts) == 1
    _report("criterion-07 fixed-time-slope", run, dt, 600.0)


def test_c08_exponent_region_calculators(tmp_path):
    run, dt = _timed("regions", {}, tmp_path)
    assert len(run.verdicts) == 7
    _report("criterion-08 exponent-regions", run, dt, 1.0)


def test_c09_structural_invariants():
    t0 = time.monotonic()
    g = Grid(n=2, L=4.0, m=64)
    rng = np.random.Generator(np.random.Philox(key=0))
    corpus = []
    for _ in range(100):
        vals = rng.standard_normal(g.shape()) + 1j * rng.standard_normal(g.shape())
        corpus.append(SampledField(grid=g, values=vals))

    for f in corpus[:10]:
        F = to_frequency(f)
        par = np.sqrt(float(np.sum(np.abs(F.values) ** 2))) / g.L ** (g.n / 2)
        assert abs(par - lp_norm(f, 2)) < 1e-10 * lp_norm(f, 2)
        out = half_wave(f, 1, 1.3)
        assert abs(lp_norm(out, 2) - lp_norm(f, 2)) < 1e-10 * lp_norm(f, 2)

    fam = CutoffFamily(M=1.0)
    rho = np.linspace(0.0, 256.0, 4097)
    total = fam.phi_value(rho) + sum(fam.psi_value(j, rho)
                                     for j in range(1, 11))
    assert np.max(np.abs(total - 1.0)) < 1e-12

    tg = TimeGrid.uniform(1.0, 2.0, 64)
    failures = 0
    for f in corpus:
        def deriv(t, f=f):
            return apply_radial_multiplier(
                f, lambda r: 2j * np.pi * r * np.exp(2j * np.pi * t * r))
        rep = ftc_maximal_check(lambda t, f=f: half_wave(f, 1, t), deriv,
                                tg, p=4.0)
        failures += rep.pointwise_failures

    ratios = [lp_norm(square_function(f, 1.0), 2) / lp_norm(f, 2)
              for f in corpus]
    band = max(ratios) / min(ratios)

    dt = time.monotonic() - t0
    ok = failures == 0 and band <= 2.0 and dt <= 300.0
    print(("PASS" if ok else "FAIL")
          + f" criterion-09 structural: ftc failures {failures}/100, "
          f"square-function band x{band:.3f}, {dt:.1f}s/300s")
    assert failures == 0
    assert band <= 2.0
    assert dt <= 300.0


def test_c10_reruns_are_byte_identical(tmp_path):
    t0 = time.monotonic()
    configs = [
        ("regions", {}),
        ("bessel-check", {}),
        ("fio-slope", {"draws": 4}),
    ]
    for name, params in configs:
        first = execute(name, params, tmp_path / name / "a")
        second = execute(name, params, tmp_path / name / "b")
        assert first.id == second.id
        assert first.outputs == second.outputs
        for out in first.outputs:
            a = (tmp_path / name / "a" / out).read_bytes()
            b = (tmp_path / name / "b" / out).read_bytes()
            assert a == b, f"{name}/{out} differs between identical runs"
    dt = time.monotonic() - t0
    print(f"PASS criterion-10 determinism: {len(configs)} configs "
          f"re-run byte-identical, {dt:.1f}s")
