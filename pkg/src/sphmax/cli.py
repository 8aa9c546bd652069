"""Experiment driver with reproducible output bundles.

Every invocation resolves to one named experiment or utility, a canonical
parameter snapshot, and an output directory.  The snapshot (experiment
name, params, seed, parallelism) is hashed into a run id; the directory
receives flat CSV tables, field snapshots or SVG plots where they apply,
and a schema-versioned manifest.json recording the id, the snapshot, the
output names, and one verdict per checked claim.  Two runs of the same
config produce byte-identical tables and manifests that differ only in
their timestamps.  Configs come from TOML files (the `run` subcommand) or
from flags on the dedicated subcommands; malformed configs are rejected
up front with the offending field named, and numeric failures inside a
run are recorded as failed verdicts instead of crashing the process.

Randomness is drawn from a counter-based generator keyed by the config
seed, so the draw sequence is independent of platform and thread count;
parallel sections reduce their results in a fixed order.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .analysis import (
    _ibp_tail,
    crossover_p,
    decay_check,
    fit_slope,
    oscillatory_tail,
    region_compare,
    threshold_regions,
)
from .bessel import asymptotic_coefficients, bessel_asymptotic, bessel_quadrature
from .extremals import (
    ConeCutoff,
    PacketSpec,
    packet_envelope,
    packet_lower_bound,
    radial_extremal,
    sphere_cap_ft,
    stable_collar_slope,
    wave_packet,
)
from .fields import (
    Grid,
    SampledField,
    ball_average_direct,
    hl_maximal,
    load_field,
    lp_norm,
    radial_frequency_mesh,
    save_field,
    to_space,
    write_slice_csv,
)
from .multiplier import CutoffFamily, choose_M, decomposition_residual, m_hat, main_symbols
from .operators import TimeGrid, half_wave, script_a, spherical_mean, wave_piece

SCHEMA = "sphmax-run/1"

_NUMERIC_FAILURES = (ArithmeticError, FloatingPointError, ValueError,
                     np.linalg.LinAlgError)


class SchemaError(ValueError):
    """Config rejected before any computation, naming the offending field."""


# ----------------------------------------------------------------------------
# config validation


def _fail(name: str, msg: str):
    raise SchemaError(f"{name}: {msg}")


def _check_fields(raw: dict, where: str, allowed):
    for key in raw:
        if key not in allowed:
            _fail(f"{where}.{key}" if where else key, "unknown field")


def _as_int(value, name: str, lo: Optional[int] = None, hi: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(name, "must be an integer")
    if lo is not None and value < lo:
        _fail(name, f"must be at least {lo}")
    if hi is not None and value > hi:
        _fail(name, f"must be at most {hi}")
    return int(value)


def _as_float(value, name: str, lo=None, lo_open: bool = False, hi=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(name, "must be a number")
    v = float(value)
    if not math.isfinite(v):
        _fail(name, "must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        _fail(name, f"must be {'greater than' if lo_open else 'at least'} {lo:g}")
    if hi is not None and v > hi:
        _fail(name, f"must be at most {hi:g}")
    return v


def _as_str(value, name: str, allowed: Optional[Sequence[str]] = None) -> str:
    if not isinstance(value, str):
        _fail(name, "must be a string")
    if allowed is not None and value not in allowed:
        _fail(name, "must be one of " + ", ".join(sorted(allowed)))
    return value


def _as_order_pair(value, name: str) -> list:
    """A real or complex order, canonicalized to [re, im]."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value), 0.0]
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return [_as_float(value[0], f"{name}[0]"),
                _as_float(value[1], f"{name}[1]")]
    _fail(name, "must be a number or an [re, im] pair")


def _as_int_list(value, name: str, lo=None, hi=None) -> list:
    if not isinstance(value, (list, tuple)) or not value:
        _fail(name, "must be a nonempty list of integers")
    return [_as_int(v, f"{name}[{i}]", lo, hi) for i, v in enumerate(value)]


def _as_grid(value, name: str, default: dict) -> dict:
    merged = dict(default)
    if value is not None:
        if not isinstance(value, dict):
            _fail(name, "must be a table with n, L, m")
        _check_fields(value, name, {"n", "L", "m"})
        merged.update(value)
    n = _as_int(merged["n"], f"{name}.n", 2, 4)
    box = _as_float(merged["L"], f"{name}.L", 0.0, lo_open=True)
    m = merged["m"]
    if isinstance(m, bool) or not isinstance(m, int):
        _fail(f"{name}.m", "must be an integer")
    if m < 2 or m & (m - 1):
        _fail(f"{name}.m", "must be a power of two")
    try:
        Grid(n=n, L=box, m=int(m))
    except ValueError as exc:
        _fail(name, str(exc))
    return {"n": n, "L": box, "m": int(m)}


def _grid_of(params: dict, key: str = "grid") -> Grid:
    g = params[key]
    return Grid(n=g["n"], L=g["L"], m=g["m"])


def _order_label(pair) -> str:
    re, im = float(pair[0]), float(pair[1])
    if im == 0.0:
        return f"{re:g}"
    return f"{re:g}{'+' if im >= 0 else '-'}{abs(im):g}i"


def _order_value(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


# ----------------------------------------------------------------------------
# run bookkeeping


def _g17(v) -> str:
    return format(float(v), ".17g")


@dataclass(frozen=True)
class Verdict:
    criterion: str
    passed: bool
    measured: Optional[float]
    tolerance: str
    note: str = ""

    def as_dict(self) -> dict:
        return {"criterion": self.criterion, "passed": self.passed,
                "measured": self.measured, "tolerance": self.tolerance,
                "note": self.note}


class _CsvTable:
    """RFC-4180 table writer with fixed float formatting."""

    def __init__(self, ctx: "RunContext", name: str, header: Sequence[str]):
        self._ctx = ctx
        self._name = name
        self._header = list(header)

    def __enter__(self) -> "_CsvTable":
        self._fh = open(self._ctx.out_dir / self._name, "w", newline="",
                        encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\r\n")
        self._writer.writerow(self._header)
        return self

    def row(self, *cells):
        out = []
        for cell in cells:
            if cell is None:
                out.append("")
            elif isinstance(cell, (bool, np.bool_)):
                out.append("true" if cell else "false")
            elif isinstance(cell, (int, np.integer)):
                out.append(str(int(cell)))
            elif isinstance(cell, (float, np.floating)):
                out.append(_g17(cell))
            else:
                out.append(str(cell))
        self._writer.writerow(out)

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None:
            self._ctx.outputs.append(self._name)
        return False


class RunContext:
    """Mutable state of one run: output registry, verdicts, RNG, thread pool.

    The generator is counter-based and keyed by the seed alone.  Workers
    handed to `map` must not touch it; experiments draw randomness in the
    main thread and pass arrays in, keeping the stream order fixed.
    """

    def __init__(self, out_dir: Path, seed: int, threads: int):
        self.out_dir = out_dir
        self.seed = int(seed)
        self.threads = max(1, int(threads))
        self.rng = np.random.Generator(np.random.Philox(key=self.seed))
        self.outputs: list = []
        self.verdicts: list = []

    def csv_table(self, name: str, header: Sequence[str]) -> _CsvTable:
        return _CsvTable(self, name, header)

    def write_text(self, name: str, text: str):
        (self.out_dir / name).write_text(text, encoding="utf-8")
        self.outputs.append(name)

    def verdict(self, criterion: str, passed, measured, tolerance: str,
                note: str = ""):
        value = None if measured is None else float(measured)
        self.verdicts.append(Verdict(criterion=criterion, passed=bool(passed),
                                     measured=value, tolerance=tolerance,
                                     note=note))

    def map(self, fn: Callable, items) -> list:
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]


def _safe(fn: Callable) -> Callable:
    """Wrap a worker so numeric blowups come back as values, not raises."""

    def inner(item):
        try:
            return True, fn(item)
        except _NUMERIC_FAILURES as exc:
            return False, exc

    return inner


@dataclass(frozen=True)
class ExperimentRun:
    """Completed run: content-addressed config snapshot plus results."""

    id: str
    experiment: str
    config: dict
    started: str
    finished: str
    outputs: tuple
    verdicts: tuple

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def manifest(self) -> dict:
        doc = dict(self.config)
        doc["id"] = self.id
        doc["started"] = self.started
        doc["finished"] = self.finished
        doc["outputs"] = list(self.outputs)
        doc["verdicts"] = [v.as_dict() for v in self.verdicts]
        return doc


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    summary: str
    normalize: Callable
    run: Callable


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _run_id(snapshot: dict) -> str:
    blob = json.dumps(snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def execute(name: str, raw_params: Optional[dict], out_dir, *, seed: int = 0,
            threads: int = 1, registry: Optional[dict] = None) -> ExperimentRun:
    """Normalize, hash, run, and persist one experiment or utility.

    Refuses an output directory whose manifest carries a different run id,
    so distinct configs never silently share a bundle.  The manifest is
    written even when verdicts fail; only schema errors abort early.
    """
    table = dict(EXPERIMENTS)
    table.update(UTILITIES)
    if registry is not None:
        table = registry
    if name not in table:
        _fail("experiment", "unknown name " + repr(name) + "; one of "
              + ", ".join(sorted(table)))
    if not (0 <= int(seed) < 2 ** 64):
        _fail("seed", "must fit in 64 bits")
    threads = _as_int(threads, "parallelism", 1, 64)
    spec = table[name]
    params = spec.normalize(raw_params or {})
    snapshot = {"schema": SCHEMA, "experiment": name, "params": params,
                "seed": int(seed), "parallelism": threads}
    run_id = _run_id(snapshot)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            previous = {}
        old_id = previous.get("id")
        if old_id is not None and old_id != run_id:
            _fail("out", f"directory {out} already holds run {old_id[:12]}; "
                  "pick a fresh directory for a different config")

    ctx = RunContext(out, seed, threads)
    started = _utc_now()
    try:
        spec.run(ctx, params)
    except _NUMERIC_FAILURES as exc:
        ctx.verdict(f"{name}:completed", False, None,
                    "run completes without numeric failure",
                    f"numeric failure: {exc}")
    finished = _utc_now()

    run = ExperimentRun(id=run_id, experiment=name, config=snapshot,
                        started=started, finished=finished,
                        outputs=tuple(ctx.outputs),
                        verdicts=tuple(ctx.verdicts))
    manifest_path.write_text(
        json.dumps(run.manifest(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    return run


# ----------------------------------------------------------------------------
# expansion accuracy


def _normalize_bessel_check(raw: dict) -> dict:
    _check_fields(raw, "params", {"orders", "terms", "r_lo", "octaves",
                                  "per_octave", "bin_size", "floor", "margin",
                                  "exact_tol"})
    orders = raw.get("orders", [0.0, 0.5, 1.0, 1.5, [0.5, 0.5]])
    if not isinstance(orders, (list, tuple)) or not orders:
        _fail("params.orders", "must be a nonempty list")
    out = {
        "orders": [_as_order_pair(o, f"params.orders[{i}]")
                   for i, o in enumerate(orders)],
        "terms": _as_int_list(raw.get("terms", [1, 2, 3, 4, 5, 6]),
                              "params.terms", 1, 8),
        "r_lo": _as_float(raw.get("r_lo", 8.0), "params.r_lo", 1.0),
        "octaves": _as_int(raw.get("octaves", 5), "params.octaves", 1, 12),
        "per_octave": _as_int(raw.get("per_octave", 8), "params.per_octave", 1, 64),
        "bin_size": _as_int(raw.get("bin_size", 4), "params.bin_size", 1, 512),
        "floor": _as_float(raw.get("floor", 1e-14), "params.floor", 0.0),
        "margin": _as_float(raw.get("margin", 0.15), "params.margin", 0.0),
        "exact_tol": _as_float(raw.get("exact_tol", 1e-11), "params.exact_tol",
                               0.0, lo_open=True),
    }
    if out["bin_size"] > out["octaves"] * out["per_octave"]:
        _fail("params.bin_size", "exceeds the number of radius samples")
    for i, pair in enumerate(out["orders"]):
        if pair[0] <= -0.5 and pair[1] == 0.0:
            _fail(f"params.orders[{i}]", "real part must exceed -1/2")
    return out


def _run_bessel_check(ctx: RunContext, params: dict):
    per = params["per_octave"]
    count = params["octaves"] * per
    radii = params["r_lo"] * np.exp2(np.arange(count) / per)
    bsz = params["bin_size"]
    nbin = count // bsz
    binned_r = radii[:nbin * bsz].reshape(nbin, bsz)
    centers = np.exp2(np.log2(binned_r).mean(axis=1))

    with ctx.csv_table("bessel_error.csv",
                       ["order", "terms", "radius", "abs_error"]) as errors, \
         ctx.csv_table("bessel_fit.csv",
                       ["order", "terms", "bin_radius", "rms_error"]) as fits:
        for pair in params["orders"]:
            beta = _order_value(pair)
            label = _order_label(pair)
            ref = bessel_quadrature(beta, radii)
            for nterms in params["terms"]:
                crit = f"bessel:order={label}:terms={nterms}"
                bound = -(nterms + 0.5) + params["margin"]
                tol = f"rms error slope <= {bound:g}"
                try:
                    coeffs = asymptotic_coefficients(beta, nterms)
                    err = np.abs(bessel_asymptotic(coeffs, radii) - ref)
                    rms = np.sqrt((err[:nbin * bsz].reshape(nbin, bsz) ** 2)
                                  .mean(axis=1))
                    for r, e in zip(radii, err):
                        errors.row(label, nterms, r, e)
                    for c, e in zip(centers, rms):
                        fits.row(label, nterms, c, e)
                    # first dropped coefficient zero: the series terminated
                    # and the deviation is pure quadrature round-off
                    dropped = abs(asymptotic_coefficients(
                        beta, nterms + 1, validate=False).a[nterms])
                    if dropped == 0.0:
                        worst = float(err.max())
                        ctx.verdict(crit, worst <= params["exact_tol"], worst,
                                    f"max deviation <= {params['exact_tol']:g}",
                                    "series terminates, exactness check")
                    else:
                        chk = decay_check(centers, rms, bound,
                                          floor=params["floor"], min_points=3)
                        note = ("all bins at round-off floor"
                                if chk.floor_certified else chk.reason)
                        ctx.verdict(crit, chk.passed, chk.slope, tol, note)
                except _NUMERIC_FAILURES as exc:
                    ctx.verdict(crit, False, None, tol,
                                f"numeric failure: {exc}")


# ----------------------------------------------------------------------------
# multiplier split residual


def _normalize_multiplier_residual(raw: dict) -> dict:
    _check_fields(raw, "params", {"cases", "terms", "octaves", "per_octave",
                                  "floor", "margin"})
    cases = raw.get("cases", [[2, 0.0], [2, 0.3], [3, 0.0]])
    if not isinstance(cases, (list, tuple)) or not cases:
        _fail("params.cases", "must be a nonempty list of [n, alpha] pairs")
    norm_cases = []
    for i, case in enumerate(cases):
        if not isinstance(case, (list, tuple)) or len(case) != 2:
            _fail(f"params.cases[{i}]", "must be an [n, alpha] pair")
        norm_cases.append([_as_int(case[0], f"params.cases[{i}][0]", 2, 4),
                           _as_order_pair(case[1], f"params.cases[{i}][1]")])
    return {
        "cases": norm_cases,
        "terms": _as_int_list(raw.get("terms", [1, 3]), "params.terms", 1, 8),
        "octaves": _as_int(raw.get("octaves", 5), "params.octaves", 1, 12),
        "per_octave": _as_int(raw.get("per_octave", 3), "params.per_octave", 1, 64),
        "floor": _as_float(raw.get("floor", 1e-14), "params.floor", 0.0),
        "margin": _as_float(raw.get("margin", 0.15), "params.margin", 0.0),
    }


def _run_multiplier_residual(ctx: RunContext, params: dict):
    per = params["per_octave"]
    count = params["octaves"] * per + 1
    with ctx.csv_table("residual.csv",
                       ["n", "alpha", "terms", "threshold", "rho",
                        "abs_residual"]) as table:
        for n, pair in params["cases"]:
            alpha = _order_value(pair)
            label = _order_label(pair)
            for nterms in params["terms"]:
                crit = f"residual:n={n}:alpha={label}:terms={nterms}"
                bound = -((n - 1) / 2.0 + pair[0] + nterms) + params["margin"]
                tol = f"residual slope <= {bound:g}"
                try:
                    threshold = choose_M(alpha, n, nterms).M
                    rho = 2.0 * threshold * np.exp2(np.arange(count) / per)
                    res = np.abs(decomposition_residual(alpha, n, nterms,
                                                        threshold, rho))
                    for r, v in zip(rho, res):
                        table.row(n, label, nterms, threshold, r, v)
                    chk = decay_check(rho, res, bound, floor=params["floor"],
                                      min_points=3)
                    note = ("residual at round-off floor"
                            if chk.floor_certified else chk.reason)
                    ctx.verdict(crit, chk.passed, chk.slope, tol, note)
                except _NUMERIC_FAILURES as exc:
                    ctx.verdict(crit, False, None, tol,
                                f"numeric failure: {exc}")


# ----------------------------------------------------------------------------
# multiplier path against real-space quadrature


def _normalize_oracle_crosscheck(raw: dict) -> dict:
    _check_fields(raw, "params", {"alphas", "fields", "grid", "t", "tol",
                                  "mod_freq", "weights"})
    alphas = raw.get("alphas", [1.0, 2.0])
    if not isinstance(alphas, (list, tuple)) or not alphas:
        _fail("params.alphas", "must be a nonempty list")
    kinds = raw.get("fields", ["gaussian", "modulated", "anisotropic"])
    if not isinstance(kinds, (list, tuple)) or not kinds:
        _fail("params.fields", "must be a nonempty list")
    kinds = [_as_str(k, f"params.fields[{i}]",
                     ("gaussian", "modulated", "anisotropic"))
             for i, k in enumerate(kinds)]
    weights = raw.get("weights", [2.0, 0.5])
    if not isinstance(weights, (list, tuple)) or not weights:
        _fail("params.weights", "must be a nonempty list")
    return {
        "alphas": [_as_order_pair(a, f"params.alphas[{i}]")
                   for i, a in enumerate(alphas)],
        "fields": kinds,
        "grid": _as_grid(raw.get("grid"), "params.grid",
                         {"n": 2, "L": 4.0, "m": 1024}),
        "t": _as_float(raw.get("t", 1.0), "params.t", 0.0, lo_open=True),
        "tol": _as_float(raw.get("tol", 1e-3), "params.tol", 0.0, lo_open=True),
        "mod_freq": _as_float(raw.get("mod_freq", 3.0), "params.mod_freq"),
        "weights": [_as_float(w, f"params.weights[{i}]", 0.0, lo_open=True)
                    for i, w in enumerate(weights)],
    }


def _test_field(kind: str, grid: Grid, mod_freq: float,
                weights: Sequence[float]) -> SampledField:
    centered = grid.axis_coordinates() - grid.L / 2.0
    sq = np.zeros(grid.shape())
    for ax in range(grid.n):
        w = weights[ax % len(weights)] if kind == "anisotropic" else 1.0
        view = [1] * grid.n
        view[ax] = grid.m
        sq = sq + w * centered.reshape(view) ** 2
    vals = np.exp(-np.pi * sq).astype(np.complex128)
    if kind == "modulated":
        x1 = grid.axis_coordinates().reshape([grid.m] + [1] * (grid.n - 1))
        vals = vals * np.exp(2j * np.pi * mod_freq * x1)
    return SampledField(grid=grid, values=vals)


def _run_oracle_crosscheck(ctx: RunContext, params: dict):
    grid = _grid_of(params)
    cases = [(pair, kind) for pair in params["alphas"]
             for kind in params["fields"]]

    def worker(case):
        pair, kind = case
        f = _test_field(kind, grid, params["mod_freq"], params["weights"])
        via_symbol = spherical_mean(f, _order_value(pair), grid.n, params["t"])
        via_kernel = ball_average_direct(f, _order_value(pair), params["t"])
        gap = SampledField(grid=grid,
                           values=via_symbol.values - via_kernel.values)
        return lp_norm(gap, 2) / lp_norm(via_kernel, 2)

    results = ctx.map(_safe(worker), cases)
    with ctx.csv_table("oracle.csv", ["alpha", "field", "rel_l2"]) as table:
        for (pair, kind), (ok, value) in zip(cases, results):
            label = _order_label(pair)
            crit = f"oracle:alpha={label}:{kind}"
            tol = f"relative l2 gap <= {params['tol']:g}"
            if not ok:
                ctx.verdict(crit, False, None, tol, f"numeric failure: {value}")
                continue
            table.row(label, kind, value)
            ctx.verdict(crit, value <= params["tol"], value, tol)


# ----------------------------------------------------------------------------
# packet sweep


def _normalize_packet_sweep(raw: dict) -> dict:
    _check_fields(raw, "params", {"js", "delta", "grid", "t_lo", "t_hi",
                                  "samples", "p", "sup_tol", "norm_tol",
                                  "gap_tol"})
    out = {
        "js": _as_int_list(raw.get("js", [5, 6, 7, 8, 9, 10]), "params.js", 1, 30),
        "delta": _as_float(raw.get("delta", 0.1), "params.delta", 0.0,
                           lo_open=True, hi=1.0),
        "grid": _as_grid(raw.get("grid"), "params.grid",
                         {"n": 2, "L": 8.0, "m": 2048}),
        "t_lo": _as_float(raw.get("t_lo", 1.0), "params.t_lo", 0.0, lo_open=True),
        "t_hi": _as_float(raw.get("t_hi", 2.0), "params.t_hi", 0.0, lo_open=True),
        "samples": _as_int(raw.get("samples", 17), "params.samples", 2),
        "p": _as_float(raw.get("p", 4.0), "params.p", 1.0, lo_open=True),
        "sup_tol": _as_float(raw.get("sup_tol", 0.1), "params.sup_tol", 0.0),
        "norm_tol": _as_float(raw.get("norm_tol", 0.1), "params.norm_tol", 0.0),
        "gap_tol": _as_float(raw.get("gap_tol", 0.15), "params.gap_tol", 0.0),
    }
    if len(out["js"]) < 3:
        _fail("params.js", "need at least 3 scale indices for a slope fit")
    if out["t_hi"] <= out["t_lo"]:
        _fail("params.t_hi", "must exceed t_lo")
    grid = _grid_of(out)
    nyq = grid.nyquist
    for j in out["js"]:
        spec = PacketSpec(j=j, delta=out["delta"], n=grid.n)
        if 2.0 * max(spec.half_width_axis, spec.half_width_cross) >= nyq:
            _fail("params.js", f"slab for scale index {j} too wide for the grid")
    return out


def _run_packet_sweep(ctx: RunContext, params: dict):
    grid = _grid_of(params)
    n = grid.n
    p = params["p"]
    tg = TimeGrid.uniform(params["t_lo"], params["t_hi"], params["samples"])
    sup_target = (n + 1) / 2.0 - 1.0 / (2.0 * p)
    norm_target = (n + 1) / 2.0 - (n + 1) / (2.0 * p)
    gap_target = n / (2.0 * p)

    def worker(j):
        spec = PacketSpec(j=j, delta=params["delta"], n=n)
        report = packet_lower_bound(spec, grid, tg, p_values=(2.0, p))
        # carrier modulation is unimodular, so envelope norms are packet norms
        packet_norm = lp_norm(to_space(packet_envelope(spec, grid)), p)
        return report, packet_norm

    results = ctx.map(_safe(worker), params["js"])
    failures = [(j, value) for j, (ok, value) in zip(params["js"], results)
                if not ok]
    slope_criteria = (
        ("packet:sup-slope", sup_target, params["sup_tol"]),
        ("packet:norm-slope", norm_target, params["norm_tol"]),
        ("packet:slope-gap", gap_target, params["gap_tol"]),
    )
    if failures:
        j, exc = failures[0]
        for crit, target, tol in slope_criteria:
            ctx.verdict(crit, False, None, f"within {tol:g} of {target:g}",
                        f"numeric failure at scale index {j}: {exc}")
        return

    with ctx.csv_table("packet.csv",
                       ["j", "scale", "sup_l2", "sup_lp", "packet_lp",
                        "on_slab_min", "on_slab_max", "side_ratio", "c_low",
                        "slab_cells", "sup_certified", "bandlimit_ok",
                        "wrap_safe"]) as table:
        scales, sup_norms, packet_norms = [], [], []
        for j, (_, (report, packet_norm)) in zip(params["js"], results):
            scale = 2.0 ** j
            scales.append(scale)
            sup_norms.append(report.sup_norm(p))
            packet_norms.append(packet_norm)
            table.row(j, scale, report.sup_norm(2.0), report.sup_norm(p),
                      packet_norm, report.on_slab_min, report.on_slab_max,
                      report.side_ratio, report.c_low_observed,
                      report.slab_cells, report.sup_certified,
                      report.bandlimit_ok, report.wrap_safe)

    sup_fit = fit_slope(scales, sup_norms)
    norm_fit = fit_slope(scales, packet_norms)
    gap = sup_fit.slope - norm_fit.slope
    measured = (sup_fit.slope, norm_fit.slope, gap)
    notes = (f"stderr {sup_fit.stderr:.2g}", f"stderr {norm_fit.stderr:.2g}", "")
    for (crit, target, tol), value, note in zip(slope_criteria, measured, notes):
        ctx.verdict(crit, abs(value - target) <= tol, value,
                    f"within {tol:g} of {target:g}", note)


# ----------------------------------------------------------------------------
# collar growth of the radial family


def _normalize_radial_blowup(raw: dict) -> dict:
    _check_fields(raw, "params", {"betas", "n", "L", "ms", "alpha", "terms",
                                  "aperture", "component", "outer", "tol",
                                  "drift_tol"})
    betas = raw.get("betas", [1.1, 1.2])
    if not isinstance(betas, (list, tuple)) or not betas:
        _fail("params.betas", "must be a nonempty list")
    out = {
        "betas": [_as_float(b, f"params.betas[{i}]")
                  for i, b in enumerate(betas)],
        "n": _as_int(raw.get("n", 2), "params.n", 2, 4),
        "L": _as_float(raw.get("L", 4.0), "params.L", 0.0, lo_open=True),
        "ms": _as_int_list(raw.get("ms", [2048, 4096]), "params.ms", 2),
        "alpha": _as_order_pair(raw.get("alpha", 1.0), "params.alpha"),
        "terms": _as_int(raw.get("terms", 4), "params.terms", 1, 8),
        "aperture": _as_float(raw.get("aperture", 0.0), "params.aperture",
                              0.0, hi=0.25),
        "component": _as_str(raw.get("component", "both"), "params.component",
                             ("both", "minus", "plus")),
        "outer": _as_float(raw.get("outer", 0.25), "params.outer", 0.0,
                           lo_open=True),
        "tol": _as_float(raw.get("tol", 0.1), "params.tol", 0.0, lo_open=True),
        "drift_tol": _as_float(raw.get("drift_tol", 0.05), "params.drift_tol",
                               0.0, lo_open=True),
    }
    for i, m in enumerate(out["ms"]):
        if m & (m - 1):
            _fail(f"params.ms[{i}]", "must be a power of two")
        _as_grid({"m": m}, f"params.ms[{i}]",
                 {"n": out["n"], "L": out["L"], "m": m})
    return out


def _run_radial_blowup(ctx: RunContext, params: dict):
    n = params["n"]
    cone = (None if params["aperture"] == 0.0
            else ConeCutoff.standard(n, params["aperture"]))
    alpha = _order_value(params["alpha"])

    def worker(beta):
        choices = []
        for m in params["ms"]:
            grid = Grid(n=n, L=params["L"], m=m)
            choices.append(stable_collar_slope(
                beta, n, cone, grid, alpha=alpha, terms=params["terms"],
                component=params["component"], outer=params["outer"]))
        return choices

    results = ctx.map(_safe(worker), params["betas"])
    with ctx.csv_table("blowup.csv",
                       ["beta", "m", "offset", "value"]) as samples, \
         ctx.csv_table("blowup_fit.csv",
                       ["beta", "m", "slope", "stderr", "outer_edge",
                        "stable"]) as fits:
        for beta, (ok, value) in zip(params["betas"], results):
            label = f"{beta:g}"
            target = beta - (n + 1) / 2.0
            slope_crit = f"blowup:beta={label}:slope"
            drift_crit = f"blowup:beta={label}:doubling-drift"
            slope_tol = f"within {params['tol']:g} of {target:g}"
            drift_tol = f"slope drift <= {params['drift_tol']:g}"
            if not ok:
                ctx.verdict(slope_crit, False, None, slope_tol,
                            f"numeric failure: {value}")
                if len(params["ms"]) >= 2:
                    ctx.verdict(drift_crit, False, None, drift_tol,
                                f"numeric failure: {value}")
                continue
            for m, choice in zip(params["ms"], value):
                for lx, ly in choice.fit.points:
                    samples.row(label, m, 2.0 ** lx, 2.0 ** ly)
                fits.row(label, m, choice.slope, choice.fit.stderr,
                         choice.outer, choice.stable)
            final = value[-1]
            note = "" if final.stable else "collar fit not edge-stable"
            ctx.verdict(slope_crit, abs(final.slope - target) <= params["tol"],
                        final.slope, slope_tol, note)
            if len(value) >= 2:
                drift = abs(value[-1].slope - value[-2].slope)
                ctx.verdict(drift_crit, drift <= params["drift_tol"], drift,
                            drift_tol)


# ----------------------------------------------------------------------------
# oscillatory tail decay


def _normalize_tail_decay(raw: dict) -> dict:
    _check_fields(raw, "params", {"exponents", "threshold_log2", "k_lo",
                                  "k_hi", "tol", "compare_tau", "agree_tol",
                                  "quad_upper"})
    exponents = raw.get("exponents", [-0.3, -0.5, -0.7, -1.2])
    if not isinstance(exponents, (list, tuple)) or not exponents:
        _fail("params.exponents", "must be a nonempty list")
    out = {
        "exponents": [_as_float(e, f"params.exponents[{i}]", -2.0,
                                lo_open=True, hi=0.0)
                      for i, e in enumerate(exponents)],
        "threshold_log2": _as_int(raw.get("threshold_log2", -12),
                                  "params.threshold_log2", -30, 6),
        "k_lo": _as_int(raw.get("k_lo", 6), "params.k_lo", 0),
        "k_hi": _as_int(raw.get("k_hi", 16), "params.k_hi", 0),
        "tol": _as_float(raw.get("tol", 0.1), "params.tol", 0.0, lo_open=True),
        "compare_tau": _as_float(raw.get("compare_tau", 16.0),
                                 "params.compare_tau", 0.0, lo_open=True),
        "agree_tol": _as_float(raw.get("agree_tol", 1e-6), "params.agree_tol",
                               0.0, lo_open=True),
        "quad_upper": _as_float(raw.get("quad_upper", 64.0),
                                "params.quad_upper", 1.0),
    }
    for i, e in enumerate(out["exponents"]):
        if e >= 0.0 or e <= -2.0:
            _fail(f"params.exponents[{i}]", "must lie in (-2, 0)")
    if out["k_hi"] - out["k_lo"] < 2:
        _fail("params.k_hi", "need at least 3 dyadic tau samples")
    return out


def _tail_baseline(exponent: float, fam: CutoffFamily) -> float:
    # zero-frequency value, finite only for exponents below -1: shoulder by
    # log-substituted Gauss-Legendre plus the closed-form pure power piece
    nodes, wts = np.polynomial.legendre.leggauss(60)
    lo, hi = math.log(fam.M), math.log(2.0 * fam.M)
    u = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    r = np.exp(u)
    shoulder = 0.5 * (hi - lo) * float(
        np.sum(wts * r ** (exponent + 1) * (1.0 - fam.phi_value(r))))
    return shoulder + (2.0 * fam.M) ** (exponent + 1) / (-(exponent + 1))


def _adaptive_tail(exponent: float, tau: float, fam: CutoffFamily,
                   upper: float) -> complex:
    w = 2.0 * math.pi * tau

    def profile(r):
        return r ** exponent * (1.0 - float(fam.phi_value(r)))

    re_part, _ = quad(profile, fam.M, upper, weight="cos", wvar=w, limit=400)
    im_part, _ = quad(profile, fam.M, upper, weight="sin", wvar=w, limit=400)
    return re_part + 1j * im_part + _ibp_tail(exponent, tau, upper)


def _run_tail_decay(ctx: RunContext, params: dict):
    fam = CutoffFamily(M=2.0 ** params["threshold_log2"])
    taus = np.exp2(-np.arange(params["k_lo"], params["k_hi"] + 1,
                              dtype=np.float64))
    with ctx.csv_table("tail.csv",
                       ["exponent", "tau", "magnitude"]) as table, \
         ctx.csv_table("tail_fit.csv",
                       ["exponent", "slope", "stderr",
                        "adaptive_gap"]) as fits:
        for exponent in params["exponents"]:
            label = f"{exponent:g}"
            target = -(exponent + 1.0)
            slope_crit = f"tail:exponent={label}:slope"
            agree_crit = f"tail:exponent={label}:adaptive"
            slope_tol = f"within {params['tol']:g} of {target:g}"
            agree_tol = f"block vs adaptive gap <= {params['agree_tol']:g}"
            try:
                base = (_tail_baseline(exponent, fam)
                        if exponent < -1.0 else 0.0)
                mags = np.array([abs(oscillatory_tail(exponent, t, fam) - base)
                                 for t in taus])
                for t, v in zip(taus, mags):
                    table.row(label, t, v)
                fit = fit_slope(taus, mags)
                block = oscillatory_tail(exponent, params["compare_tau"], fam)
                adaptive = _adaptive_tail(exponent, params["compare_tau"], fam,
                                          params["quad_upper"])
                gap = abs(block - adaptive)
                fits.row(label, fit.slope, fit.stderr, gap)
                ctx.verdict(slope_crit, abs(fit.slope - target) <= params["tol"],
                            fit.slope, slope_tol)
                ctx.verdict(agree_crit, gap <= params["agree_tol"], gap,
                            agree_tol)
            except _NUMERIC_FAILURES as exc:
                ctx.verdict(slope_crit, False, None, slope_tol,
                            f"numeric failure: {exc}")
                ctx.verdict(agree_crit, False, None, agree_tol,
                            f"numeric failure: {exc}")


# ----------------------------------------------------------------------------
# annular wave growth on random fields


def _normalize_fio_slope(raw: dict) -> dict:
    _check_fields(raw, "params", {"grid", "threshold", "js", "draws", "t",
                                  "p", "margin"})
    out = {
        "grid": _as_grid(raw.get("grid"), "params.grid",
                         {"n": 2, "L": 4.0, "m": 1024}),
        "threshold": _as_float(raw.get("threshold", 1.0), "params.threshold",
                               0.0, lo_open=True),
        "js": _as_int_list(raw.get("js", [2, 3, 4, 5, 6]), "params.js", 1, 30),
        "draws": _as_int(raw.get("draws", 20), "params.draws", 1, 10000),
        "t": _as_float(raw.get("t", 1.0), "params.t", 0.0, lo_open=True),
        "p": _as_float(raw.get("p", 6.0), "params.p", 1.0, lo_open=True),
        "margin": _as_float(raw.get("margin", 0.15), "params.margin", 0.0),
    }
    if len(out["js"]) < 3:
        _fail("params.js", "need at least 3 scale indices for a slope fit")
    grid = _grid_of(out)
    top = max(out["js"])
    if 2.0 ** (top + 1) * out["threshold"] > grid.nyquist:
        _fail("params.js", f"annulus {top} exceeds the grid Nyquist radius")
    return out


def _run_fio_slope(ctx: RunContext, params: dict):
    grid = _grid_of(params)
    n = grid.n
    p = params["p"]
    fam = CutoffFamily(M=params["threshold"])
    rho = radial_frequency_mesh(grid)
    masks = {j: fam.psi_value(j, rho) > 0.0 for j in params["js"]}
    bound = (n - 1) * (0.5 - 1.0 / p) + params["margin"]
    crit = "fio:slope"
    tol = f"median ratio slope <= {bound:g}"

    ratios = {j: [] for j in params["js"]}
    with ctx.csv_table("fio_ratios.csv", ["j", "draw", "ratio"]) as table:
        for draw in range(params["draws"]):
            noise = (ctx.rng.standard_normal(grid.shape())
                     + 1j * ctx.rng.standard_normal(grid.shape()))

            def worker(j):
                masked = SampledField(
                    grid=grid, values=np.where(masks[j], noise, 0.0),
                    side="frequency")
                f = to_space(masked)
                piece = to_space(wave_piece(f, j, params["t"], fam.M))
                return lp_norm(piece, p) / lp_norm(f, p)

            results = ctx.map(_safe(worker), params["js"])
            for j, (ok, value) in zip(params["js"], results):
                if not ok:
                    ctx.verdict(crit, False, None, tol,
                                f"numeric failure at scale index {j}: {value}")
                    return
                ratios[j].append(value)
                table.row(j, draw, value)

    scales = [2.0 ** j for j in params["js"]]
    medians = [float(np.median(ratios[j])) for j in params["js"]]
    with ctx.csv_table("fio_fit.csv", ["j", "scale", "median_ratio"]) as fits:
        for j, scale, med in zip(params["js"], scales, medians):
            fits.row(j, scale, med)
    fit = fit_slope(scales, medians)
    ctx.verdict(crit, fit.slope <= bound, fit.slope, tol,
                f"stderr {fit.stderr:.2g}")


# ----------------------------------------------------------------------------
# exponent regions


_REGION_COLORS = (
    ("fixed_time_high_p", "#666666"),
    ("maximal_sufficient", "#1f77b4"),
    ("maximal_necessary", "#d62728"),
    ("maximal_improved", "#2ca02c"),
    ("maximal_sharp", "#9467bd"),
)


def _normalize_regions(raw: dict) -> dict:
    _check_fields(raw, "params", {"n", "points"})
    return {
        "n": _as_int(raw.get("n", 2), "params.n", 2, 6),
        "points": _as_int(raw.get("points", 100), "params.points", 3, 10000),
    }


def _regions_svg(rows: list, labels: Sequence[str], n: int) -> str:
    width, height = 640, 420
    ml, mr, mt, mb = 64, 170, 34, 48
    xs = [1.0 / float(r["p"]) for r in rows]
    ys = [float(r[lab]) for lab in labels for r in rows]
    y_lo = min(ys) - 0.05
    y_hi = max(ys) + 0.05
    x_lo, x_hi = 0.0, 0.5

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def py(y):
        return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
             f'<text x="{ml}" y="20" font-family="monospace" font-size="13">'
             f'order thresholds against 1/p, dimension {n}</text>']
    axis = 'stroke="#000000" stroke-width="1"'
    parts.append(f'<line x1="{px(x_lo):.2f}" y1="{py(y_lo):.2f}" '
                 f'x2="{px(x_hi):.2f}" y2="{py(y_lo):.2f}" {axis}/>')
    parts.append(f'<line x1="{px(x_lo):.2f}" y1="{py(y_lo):.2f}" '
                 f'x2="{px(x_lo):.2f}" y2="{py(y_hi):.2f}" {axis}/>')
    for k in range(6):
        x = x_lo + k * (x_hi - x_lo) / 5.0
        parts.append(f'<line x1="{px(x):.2f}" y1="{py(y_lo):.2f}" '
                     f'x2="{px(x):.2f}" y2="{py(y_lo) + 4:.2f}" {axis}/>')
        parts.append(f'<text x="{px(x):.2f}" y="{py(y_lo) + 17:.2f}" '
                     f'font-family="monospace" font-size="10" '
                     f'text-anchor="middle">{x:.1f}</text>')
    for k in range(5):
        y = y_lo + k * (y_hi - y_lo) / 4.0
        parts.append(f'<line x1="{px(x_lo) - 4:.2f}" y1="{py(y):.2f}" '
                     f'x2="{px(x_lo):.2f}" y2="{py(y):.2f}" {axis}/>')
        parts.append(f'<text x="{px(x_lo) - 8:.2f}" y="{py(y) + 3:.2f}" '
                     f'font-family="monospace" font-size="10" '
                     f'text-anchor="end">{y:.2f}</text>')
    colors = dict(_REGION_COLORS)
    legend_y = mt + 10
    for lab in labels:
        pts = sorted(((1.0 / float(r["p"]), float(r[lab])) for r in rows))
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{colors[lab]}" stroke-width="1.5"/>')
        lx = width - mr + 10
        parts.append(f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 18}" '
                     f'y2="{legend_y - 4}" stroke="{colors[lab]}" '
                     f'stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{legend_y}" '
                     f'font-family="monospace" font-size="10">{lab}</text>')
        legend_y += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _run_regions(ctx: RunContext, params: dict):
    n = params["n"]
    ps = [Fraction(2) + Fraction(k * k, 100)
          for k in range(1, params["points"] + 1)]
    rows = region_compare(n, ps, check=False)
    labels = [lab for lab, _ in _REGION_COLORS if lab in rows[0]]

    with ctx.csv_table("regions.csv",
                       ["p", "inv_p"] + labels
                       + ["sufficient_below_fixed_time",
                          "improved_within_sufficient"]) as table:
        for r in rows:
            table.row(float(r["p"]), 1.0 / float(r["p"]),
                      *[float(r[lab]) for lab in labels],
                      r["sufficient_below_fixed_time"],
                      r["improved_within_sufficient"])
    ctx.write_text("regions.svg", _regions_svg(rows, labels, n))

    wider_bad = sum(not r["sufficient_below_fixed_time"] for r in rows)
    ctx.verdict("regions:sufficient-below-fixed-time", wider_bad == 0,
                float(wider_bad), "0 grid points violate the strict inclusion")
    improved_bad = sum(not r["improved_within_sufficient"] for r in rows)
    ctx.verdict("regions:improved-within-sufficient", improved_bad == 0,
                float(improved_bad), "0 grid points violate the inclusion")

    plane = threshold_regions(2)
    at_two = plane.threshold("maximal_sharp", Fraction(2))
    ctx.verdict("regions:sharp-at-two", at_two == 0, float(at_two),
                "threshold 0 exactly at p = 2")
    cross = crossover_p(n)
    inv = Fraction(1, 1) / cross
    branch_gap = (inv - Fraction(n - 1, 2)) - (-(n - 1) * inv)
    cross_ok = branch_gap == 0 and (n != 2 or cross == 4)
    ctx.verdict("regions:crossover", cross_ok, float(cross),
                "necessary branches meet at 2n/(n-1)")
    sup_p = threshold_regions(4).sup_failure_p
    ctx.verdict("regions:sup-failure-dim4", sup_p == 6,
                None if sup_p is None else float(sup_p),
                "maximal bound fails for p > 6 in dimension 4")
    point = threshold_regions(3).threshold("maximal_improved", Fraction(4))
    ctx.verdict("regions:improved-dim3-point", point == Fraction(-1, 14),
                float(point), "threshold -1/14 exactly at n = 3, p = 4")
    if n == 2:
        gaps = [abs(float(r["maximal_sharp"] - r["maximal_necessary"]))
                for r in rows]
        ctx.verdict("regions:sharp-equals-necessary", max(gaps) == 0.0,
                    max(gaps), "exact equality on the whole grid")


# ----------------------------------------------------------------------------
# utilities: symbol dump, operator application, extremal fields, probes


def _normalize_multiplier_dump(raw: dict) -> dict:
    _check_fields(raw, "params", {"n", "alpha", "terms", "threshold",
                                  "low_points", "octaves", "per_octave"})
    return {
        "n": _as_int(raw.get("n", 2), "params.n", 2, 4),
        "alpha": _as_order_pair(raw.get("alpha", 1.0), "params.alpha"),
        "terms": _as_int(raw.get("terms", 4), "params.terms", 1, 8),
        "threshold": _as_float(raw.get("threshold", 0.0), "params.threshold",
                               0.0),
        "low_points": _as_int(raw.get("low_points", 17), "params.low_points",
                              2, 4096),
        "octaves": _as_int(raw.get("octaves", 6), "params.octaves", 1, 20),
        "per_octave": _as_int(raw.get("per_octave", 8), "params.per_octave",
                              1, 64),
    }


def _run_multiplier_dump(ctx: RunContext, params: dict):
    alpha = _order_value(params["alpha"])
    n = params["n"]
    nterms = params["terms"]
    threshold = params["threshold"] or choose_M(alpha, n, nterms).M
    fam = CutoffFamily(M=threshold)
    plus_amp, minus_amp = main_symbols(alpha, n, nterms, threshold)
    low = np.linspace(0.0, 2.0 * threshold, params["low_points"])
    high = 2.0 * threshold * np.exp2(
        np.arange(1, params["octaves"] * params["per_octave"] + 1)
        / params["per_octave"])
    rho = np.concatenate([low, high])
    symbol = m_hat(alpha, n, np.maximum(rho, 0.0))
    res_high = np.abs(decomposition_residual(alpha, n, nterms, threshold, high))
    with ctx.csv_table("multiplier.csv",
                       ["rho", "low_pass", "mhat_re", "mhat_im", "a1_re",
                        "a1_im", "a2_re", "a2_im", "abs_residual"]) as table:
        a1_vals = plus_amp(rho)
        a2_vals = minus_amp(rho)
        phi_vals = fam.phi_value(rho)
        for i, r in enumerate(rho):
            res = res_high[i - len(low)] if i >= len(low) else None
            table.row(r, phi_vals[i], symbol[i].real, symbol[i].imag,
                      a1_vals[i].real, a1_vals[i].imag, a2_vals[i].real,
                      a2_vals[i].imag, res)


def _normalize_operator_apply(raw: dict) -> dict:
    _check_fields(raw, "params", {"op", "alpha", "t", "terms", "threshold",
                                  "sign", "field", "grid", "slice_index"})
    out = {
        "op": _as_str(raw.get("op", "mean"), "params.op",
                      ("mean", "ball", "halfwave", "scripta", "hl")),
        "alpha": _as_order_pair(raw.get("alpha", 1.0), "params.alpha"),
        "t": _as_float(raw.get("t", 1.0), "params.t", 0.0, lo_open=True),
        "terms": _as_int(raw.get("terms", 4), "params.terms", 1, 8),
        "threshold": _as_float(raw.get("threshold", 0.0), "params.threshold",
                               0.0),
        "sign": _as_int(raw.get("sign", 1), "params.sign", -1, 1),
        "field": _as_str(raw.get("field", "gaussian"), "params.field"),
        "grid": _as_grid(raw.get("grid"), "params.grid",
                         {"n": 2, "L": 4.0, "m": 256}),
        "slice_index": _as_int(raw.get("slice_index", -1),
                               "params.slice_index", -1),
    }
    if out["sign"] == 0:
        _fail("params.sign", "must be +1 or -1")
    if out["field"] != "gaussian" and not os.path.exists(out["field"]):
        _fail("params.field", "must be 'gaussian' or a field snapshot path")
    return out


def _run_operator_apply(ctx: RunContext, params: dict):
    if params["field"] == "gaussian":
        grid = _grid_of(params)
        f = _test_field("gaussian", grid, 0.0, [1.0])
    else:
        f = load_field(params["field"])
        grid = f.grid
    alpha = _order_value(params["alpha"])
    op = params["op"]
    if op == "mean":
        result = spherical_mean(f, alpha, grid.n, params["t"])
    elif op == "ball":
        result = ball_average_direct(f, alpha, params["t"])
    elif op == "halfwave":
        result = half_wave(f, params["sign"], params["t"])
    elif op == "scripta":
        threshold = (params["threshold"]
                     or choose_M(alpha, grid.n, params["terms"]).M)
        result = script_a(f, alpha, grid.n, params["terms"], threshold,
                          params["t"])
    else:
        result = hl_maximal(f)
    save_field(result, str(ctx.out_dir / "field.spf"))
    ctx.outputs.append("field.spf")
    idx = params["slice_index"]
    if idx < 0:
        idx = grid.m // 2
    if idx >= grid.m:
        raise ValueError("slice index outside the grid")
    with open(ctx.out_dir / "slice.csv", "w", newline="",
              encoding="utf-8") as fh:
        write_slice_csv(result, idx, fh)
    ctx.outputs.append("slice.csv")


def _normalize_extremal_build(raw: dict) -> dict:
    _check_fields(raw, "params", {"family", "beta", "n", "aperture", "alpha",
                                  "terms", "j", "delta", "grid",
                                  "slice_index"})
    family = _as_str(raw.get("family", "radial"), "params.family",
                     ("radial", "packet"))
    out = {
        "family": family,
        "n": _as_int(raw.get("n", 2), "params.n", 2, 4),
        "slice_index": _as_int(raw.get("slice_index", -1),
                               "params.slice_index", -1),
    }
    if family == "radial":
        out.update({
            "beta": _as_float(raw.get("beta", 1.2), "params.beta"),
            "aperture": _as_float(raw.get("aperture", 0.1), "params.aperture",
                                  0.0, hi=0.25),
            "alpha": _as_order_pair(raw.get("alpha", 1.0), "params.alpha"),
            "terms": _as_int(raw.get("terms", 4), "params.terms", 1, 8),
            "grid": _as_grid(raw.get("grid"), "params.grid",
                             {"n": out["n"], "L": 4.0, "m": 1024}),
        })
    else:
        out.update({
            "j": _as_int(raw.get("j", 5), "params.j", 1, 30),
            "delta": _as_float(raw.get("delta", 0.1), "params.delta", 0.0,
                               lo_open=True, hi=1.0),
            "grid": _as_grid(raw.get("grid"), "params.grid",
                             {"n": out["n"], "L": 8.0, "m": 1024}),
        })
        spec = PacketSpec(j=out["j"], delta=out["delta"], n=out["grid"]["n"])
        nyq = out["grid"]["m"] / (2.0 * out["grid"]["L"])
        if spec.center * (1.0 + spec.delta) >= nyq:
            _fail("params.j", "slab violates the grid Nyquist bound")
    if out["grid"]["n"] != out["n"]:
        _fail("params.grid.n", "must match params.n")
    return out


def _run_extremal_build(ctx: RunContext, params: dict):
    grid = _grid_of(params)
    if params["family"] == "radial":
        cone = (None if params["aperture"] == 0.0
                else ConeCutoff.standard(params["n"], params["aperture"]))
        field = radial_extremal(params["beta"], params["n"], cone, grid,
                                alpha=_order_value(params["alpha"]),
                                terms=params["terms"])
    else:
        spec = PacketSpec(j=params["j"], delta=params["delta"], n=params["n"])
        field = wave_packet(spec, grid)
    save_field(field, str(ctx.out_dir / "field.spf"))
    ctx.outputs.append("field.spf")
    idx = params["slice_index"]
    if idx < 0:
        idx = grid.m // 2
    if idx >= grid.m:
        raise ValueError("slice index outside the grid")
    with open(ctx.out_dir / "slice.csv", "w", newline="",
              encoding="utf-8") as fh:
        write_slice_csv(field, idx, fh)
    ctx.outputs.append("slice.csv")


def _normalize_probe(raw: dict) -> dict:
    _check_fields(raw, "params", {"what", "beta", "n", "L", "m", "alpha",
                                  "terms", "aperture", "component", "outer",
                                  "js", "delta", "t_lo", "t_hi", "samples",
                                  "r_lo", "r_hi", "per_octave"})
    what = _as_str(raw.get("what", "blowup"), "params.what",
                   ("blowup", "packet", "cap"))
    out = {"what": what, "n": _as_int(raw.get("n", 2), "params.n", 2, 4)}
    if what == "blowup":
        out.update({
            "beta": _as_float(raw.get("beta", 1.2), "params.beta"),
            "L": _as_float(raw.get("L", 4.0), "params.L", 0.0, lo_open=True),
            "m": raw.get("m", 1024),
            "alpha": _as_order_pair(raw.get("alpha", 1.0), "params.alpha"),
            "terms": _as_int(raw.get("terms", 4), "params.terms", 1, 8),
            "aperture": _as_float(raw.get("aperture", 0.0), "params.aperture",
                                  0.0, hi=0.25),
            "component": _as_str(raw.get("component", "both"),
                                 "params.component",
                                 ("both", "minus", "plus")),
            "outer": _as_float(raw.get("outer", 0.25), "params.outer", 0.0,
                               lo_open=True),
        })
        out["grid"] = _as_grid({"m": out.pop("m")}, "params",
                               {"n": out["n"], "L": out.pop("L"), "m": 1024})
    elif what == "packet":
        out.update({
            "js": _as_int_list(raw.get("js", [3, 4, 5]), "params.js", 1, 30),
            "delta": _as_float(raw.get("delta", 0.1), "params.delta", 0.0,
                               lo_open=True, hi=1.0),
            "t_lo": _as_float(raw.get("t_lo", 1.0), "params.t_lo", 0.0,
                              lo_open=True),
            "t_hi": _as_float(raw.get("t_hi", 2.0), "params.t_hi", 0.0,
                              lo_open=True),
            "samples": _as_int(raw.get("samples", 9), "params.samples", 2),
            "grid": _as_grid(raw.get("grid") if isinstance(raw.get("grid"), dict)
                             else None, "params.grid",
                             {"n": out["n"], "L": 8.0, "m": 1024}),
        })
        if len(out["js"]) < 3:
            _fail("params.js", "need at least 3 scale indices for a slope fit")
    else:
        out.update({
            "aperture": _as_float(raw.get("aperture", 0.25), "params.aperture",
                                  0.0, lo_open=True, hi=0.25),
            "r_lo": _as_float(raw.get("r_lo", 64.0), "params.r_lo", 1.0),
            "r_hi": _as_float(raw.get("r_hi", 256.0), "params.r_hi", 2.0),
            "per_octave": _as_int(raw.get("per_octave", 6),
                                  "params.per_octave", 1, 64),
        })
        if out["r_hi"] <= out["r_lo"]:
            _fail("params.r_hi", "must exceed r_lo")
        if out["n"] > 3:
            _fail("params.n", "cap transform supports n = 2 and 3 only")
    return out


def _run_probe(ctx: RunContext, params: dict):
    what = params["what"]
    if what == "blowup":
        grid = _grid_of(params)
        cone = (None if params["aperture"] == 0.0
                else ConeCutoff.standard(params["n"], params["aperture"]))
        choice = stable_collar_slope(
            params["beta"], params["n"], cone, grid,
            alpha=_order_value(params["alpha"]), terms=params["terms"],
            component=params["component"], outer=params["outer"])
        with ctx.csv_table("probe.csv",
                           ["offset", "value", "slope", "stderr"]) as table:
            for lx, ly in choice.fit.points:
                table.row(2.0 ** lx, 2.0 ** ly, choice.slope,
                          choice.fit.stderr)
    elif what == "packet":
        grid = _grid_of(params)
        tg = TimeGrid.uniform(params["t_lo"], params["t_hi"],
                              params["samples"])
        mins = []
        for j in params["js"]:
            spec = PacketSpec(j=j, delta=params["delta"], n=grid.n)
            report = packet_lower_bound(spec, grid, tg)
            mins.append(report.on_slab_min)
        fit = fit_slope([2.0 ** j for j in params["js"]], mins)
        with ctx.csv_table("probe.csv",
                           ["j", "value", "slope", "stderr"]) as table:
            for j, v in zip(params["js"], mins):
                table.row(j, v, fit.slope, fit.stderr)
    else:
        cone = ConeCutoff.standard(params["n"], params["aperture"])
        octs = math.log2(params["r_hi"] / params["r_lo"])
        count = int(round(octs * params["per_octave"])) + 1
        radii = params["r_lo"] * np.exp2(np.arange(count)
                                         / params["per_octave"])
        direction = -np.array(cone.axis)
        mags = [abs(sphere_cap_ft(cone, r * direction)) for r in radii]
        fit = fit_slope(radii, mags)
        with ctx.csv_table("probe.csv",
                           ["radius", "value", "slope", "stderr"]) as table:
            for r, v in zip(radii, mags):
                table.row(r, v, fit.slope, fit.stderr)


# ----------------------------------------------------------------------------
# registries


EXPERIMENTS = {
    "bessel-check": ExperimentSpec(
        "bessel-check", "truncated expansion error decay against quadrature",
        _normalize_bessel_check, _run_bessel_check),
    "multiplier-residual": ExperimentSpec(
        "multiplier-residual", "two-phase split residual decay",
        _normalize_multiplier_residual, _run_multiplier_residual),
    "oracle-crosscheck": ExperimentSpec(
        "oracle-crosscheck", "multiplier path against kernel quadrature",
        _normalize_oracle_crosscheck, _run_oracle_crosscheck),
    "packet-sweep": ExperimentSpec(
        "packet-sweep", "sup-in-time norms of slab packets across scales",
        _normalize_packet_sweep, _run_packet_sweep),
    "radial-blowup": ExperimentSpec(
        "radial-blowup", "collar growth rate of the radial family",
        _normalize_radial_blowup, _run_radial_blowup),
    "tail-decay": ExperimentSpec(
        "tail-decay", "oscillatory tail integral decay in tau",
        _normalize_tail_decay, _run_tail_decay),
    "fio-slope": ExperimentSpec(
        "fio-slope", "annular wave growth on random fields",
        _normalize_fio_slope, _run_fio_slope),
    "regions": ExperimentSpec(
        "regions", "exponent threshold curves and worked points",
        _normalize_regions, _run_regions),
}

UTILITIES = {
    "multiplier-dump": ExperimentSpec(
        "multiplier-dump", "radial symbol profile table",
        _normalize_multiplier_dump, _run_multiplier_dump),
    "operator-apply": ExperimentSpec(
        "operator-apply", "apply one operator to a field snapshot",
        _normalize_operator_apply, _run_operator_apply),
    "extremal-build": ExperimentSpec(
        "extremal-build", "emit one extremal family member",
        _normalize_extremal_build, _run_extremal_build),
    "probe": ExperimentSpec(
        "probe", "quick slope probe with CSV output",
        _normalize_probe, _run_probe),
}


# ----------------------------------------------------------------------------
# command line


def _load_config(path: str):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        _fail("config", f"no such file: {path}")
    except tomllib.TOMLDecodeError as exc:
        _fail("config", f"invalid TOML: {exc}")
    _check_fields(cfg, "", {"experiment", "seed", "parallelism", "params"})
    name = cfg.get("experiment")
    if not isinstance(name, str) or name not in EXPERIMENTS:
        _fail("experiment", "must be one of " + ", ".join(sorted(EXPERIMENTS)))
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        _fail("params", "must be a table")
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        _fail("seed", "must be an integer")
    threads = cfg.get("parallelism", 1)
    if isinstance(threads, bool) or not isinstance(threads, int):
        _fail("parallelism", "must be an integer")
    return name, params, seed, threads


def _parse_order_flag(text: str, name: str) -> list:
    try:
        z = complex(text.strip().replace("i", "j"))
    except ValueError:
        _fail(name, f"cannot parse order {text!r}")
    return [z.real, z.imag]


def _parse_int_list_flag(text: str, name: str) -> list:
    try:
        return [int(chunk) for chunk in text.split(",") if chunk.strip()]
    except ValueError:
        _fail(name, f"cannot parse integer list {text!r}")


def _parse_grid_flag(text: str, name: str) -> dict:
    chunks = text.split(",")
    if len(chunks) != 3:
        _fail(name, "expected n,L,m")
    try:
        return {"n": int(chunks[0]), "L": float(chunks[1]),
                "m": int(chunks[2])}
    except ValueError:
        _fail(name, f"cannot parse grid {text!r}")


def _print_verdicts(run: ExperimentRun, out_dir):
    for v in run.verdicts:
        status = "PASS" if v.passed else "FAIL"
        measured = "n/a" if v.measured is None else f"{v.measured:.6g}"
        line = f"{status} {v.criterion} measured={measured} ({v.tolerance})"
        if v.note:
            line += f" [{v.note}]"
        print(line)
    print(f"run {run.id[:12]} -> {Path(out_dir) / 'manifest.json'}")


def _dispatch(name: str, raw_params: dict, args) -> int:
    seed = args.seed if args.seed is not None else 0
    threads = args.threads if args.threads is not None else 1
    out_dir = args.out if args.out is not None else os.path.join("runs", name)
    run = execute(name, raw_params, out_dir, seed=seed, threads=threads)
    _print_verdicts(run, out_dir)
    return 0 if run.passed else 1


def _handle_run(args) -> int:
    name, params, seed, threads = _load_config(args.config)
    if args.seed is not None:
        seed = args.seed
    if args.threads is not None:
        threads = args.threads
    out_dir = args.out if args.out is not None else os.path.join("runs", name)
    run = execute(name, params, out_dir, seed=seed, threads=threads)
    _print_verdicts(run, out_dir)
    return 0 if run.passed else 1


def _handle_bessel_check(args) -> int:
    params = {}
    if args.orders is not None:
        params["orders"] = [_parse_order_flag(tok, "--orders")
                            for tok in args.orders.split(",")]
    if args.terms is not None:
        params["terms"] = _parse_int_list_flag(args.terms, "--terms")
    return _dispatch("bessel-check", params, args)


def _handle_regions(args) -> int:
    params = {}
    if args.dim is not None:
        params["n"] = args.dim
    if args.points is not None:
        params["points"] = args.points
    return _dispatch("regions", params, args)


def _handle_multiplier_dump(args) -> int:
    params = {}
    if args.dim is not None:
        params["n"] = args.dim
    if args.alpha is not None:
        params["alpha"] = _parse_order_flag(args.alpha, "--alpha")
    if args.terms is not None:
        params["terms"] = args.terms
    if args.threshold is not None:
        params["threshold"] = args.threshold
    return _dispatch("multiplier-dump", params, args)


def _handle_operator_apply(args) -> int:
    params = {}
    if args.op is not None:
        params["op"] = args.op
    if args.alpha is not None:
        params["alpha"] = _parse_order_flag(args.alpha, "--alpha")
    if args.t is not None:
        params["t"] = args.t
    if args.field is not None:
        params["field"] = args.field
    if args.grid is not None:
        params["grid"] = _parse_grid_flag(args.grid, "--grid")
    return _dispatch("operator-apply", params, args)


def _handle_extremal_build(args) -> int:
    params = {}
    if args.family is not None:
        params["family"] = args.family
    if args.beta is not None:
        params["beta"] = args.beta
    if args.aperture is not None:
        params["aperture"] = args.aperture
    if args.scale is not None:
        params["j"] = args.scale
    if args.delta is not None:
        params["delta"] = args.delta
    if args.dim is not None:
        params["n"] = args.dim
    if args.grid is not None:
        params["grid"] = _parse_grid_flag(args.grid, "--grid")
    return _dispatch("extremal-build", params, args)


def _handle_probe(args) -> int:
    params = {"what": args.what}
    if args.beta is not None:
        params["beta"] = args.beta
    if args.aperture is not None:
        params["aperture"] = args.aperture
    if args.js is not None:
        params["js"] = _parse_int_list_flag(args.js, "--js")
    if args.dim is not None:
        params["n"] = args.dim
    return _dispatch("probe", params, args)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphmax",
        description="spherical means laboratory: experiments and utilities")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default runs/<name>)")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="config seed for the counter-based generator")
    common.add_argument("--threads", type=int, default=None, metavar="K",
                        help="worker threads with order-fixed reductions")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", parents=[common],
                        help="execute one experiment from a TOML config")
    sp.add_argument("--config", required=True, metavar="PATH")
    sp.set_defaults(handler=_handle_run)

    sp = sub.add_parser("bessel-check", parents=[common],
                        help=EXPERIMENTS["bessel-check"].summary)
    sp.add_argument("--orders", default=None,
                    help="comma list, complex as re+imi")
    sp.add_argument("--terms", default=None, help="comma list of term counts")
    sp.set_defaults(handler=_handle_bessel_check)

    sp = sub.add_parser("regions", parents=[common],
                        help=EXPERIMENTS["regions"].summary)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--points", type=int, default=None)
    sp.set_defaults(handler=_handle_regions)

    sp = sub.add_parser("multiplier-dump", parents=[common],
                        help=UTILITIES["multiplier-dump"].summary)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--terms", type=int, default=None)
    sp.add_argument("--threshold", type=float, default=None)
    sp.set_defaults(handler=_handle_multiplier_dump)

    sp = sub.add_parser("operator-apply", parents=[common],
                        help=UTILITIES["operator-apply"].summary)
    sp.add_argument("--op", default=None,
                    choices=["mean", "ball", "halfwave", "scripta", "hl"])
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--field", default=None,
                    help="'gaussian' or a field snapshot path")
    sp.add_argument("--grid", default=None, metavar="n,L,m")
    sp.set_defaults(handler=_handle_operator_apply)

    sp = sub.add_parser("extremal-build", parents=[common],
                        help=UTILITIES["extremal-build"].summary)
    sp.add_argument("--family", default=None, choices=["radial", "packet"])
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--aperture", type=float, default=None)
    sp.add_argument("--scale", type=int, default=None,
                    help="packet scale index")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--grid", default=None, metavar="n,L,m")
    sp.set_defaults(handler=_handle_extremal_build)

    sp = sub.add_parser("probe", parents=[common],
                        help=UTILITIES["probe"].summary)
    sp.add_argument("--what", required=True,
                    choices=["blowup", "packet", "cap"])
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--aperture", type=float, default=None)
    sp.add_argument("--js", default=None, help="comma list of scale indices")
    sp.add_argument("--dim", type=int, default=None)
    sp.set_defaults(handler=_handle_probe)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
