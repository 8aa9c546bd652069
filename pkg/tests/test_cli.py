"""Run bundles: config hashing, determinism, schema errors, exit codes."""
import json

import pytest

from sphmax.cli import (
    EXPERIMENTS,
    UTILITIES,
    ExperimentSpec,
    SchemaError,
    execute,
    main,
)


def test_registries_cover_the_documented_surface():
    assert set(EXPERIMENTS) == {
        "bessel-check", "multiplier-residual", "oracle-crosscheck",
        "packet-sweep", "radial-blowup", "tail-decay", "fio-slope", "regions",
    }
    assert set(UTILITIES) == {
        "multiplier-dump", "operator-apply", "extremal-build", "probe",
    }
    assert not set(EXPERIMENTS) & set(UTILITIES)


def test_execute_writes_manifest_and_outputs(tmp_path):
    run = execute("regions", {}, tmp_path / "r")
    assert run.passed
    assert len(run.verdicts) == 7
    doc = json.loads((tmp_path / "r" / "manifest.json").read_text())
    assert doc["schema"] == "sphmax-run/1"
    assert doc["experiment"] == "regions"
    assert doc["id"] == run.id
    assert doc["seed"] == 0 and doc["parallelism"] == 1
    assert set(doc["outputs"]) == {"regions.csv", "regions.svg"}
    for name in doc["outputs"]:
        assert (tmp_path / "r" / name).exists()
    for v in doc["verdicts"]:
        assert set(v) == {"criterion", "passed", "measured", "tolerance", "note"}
        assert v["passed"] is True


def test_execute_is_deterministic(tmp_path):
    r1 = execute("regions", {}, tmp_path / "a")
    r2 = execute("regions", {}, tmp_path / "b")
    assert r1.id == r2.id
    for name in ("regions.csv", "regions.svg"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()
    r3 = execute("regions", {}, tmp_path / "c", seed=7)
    assert r3.id != r1.id


def test_execute_refuses_mismatched_directory(tmp_path):
    execute("regions", {}, tmp_path / "d")
    with pytest.raises(SchemaError, match="already holds run"):
        execute("regions", {"points": 50}, tmp_path / "d")
    # identical config may land in the same directory again
    rerun = execute("regions", {}, tmp_path / "d")
    assert rerun.passed


def test_schema_errors_name_the_field(tmp_path):
    with pytest.raises(SchemaError, match="experiment: unknown name"):
        execute("no-such-thing", {}, tmp_path / "x")
    with pytest.raises(SchemaError, match="bogus: unknown field"):
        execute("regions", {"bogus": 1}, tmp_path / "x")
    with pytest.raises(SchemaError, match=r"params\.grid\.m: must be a power"):
        execute("packet-sweep", {"grid": {"n": 2, "L": 8.0, "m": 100}},
                tmp_path / "x")
    with pytest.raises(SchemaError, match=r"params\.points"):
        execute("regions", {"points": 1}, tmp_path / "x")


def test_numeric_failure_becomes_failed_verdict(tmp_path):
    def boom(ctx, params):
        raise ValueError("synthetic blow-up")

    registry = {"boom": ExperimentSpec(name="boom", summary="always fails",
                                       normalize=lambda raw: {}, run=boom)}
    run = execute("boom", None, tmp_path / "f", registry=registry)
    assert not run.passed
    assert run.verdicts[0].criterion == "boom:completed"
    assert "synthetic blow-up" in run.verdicts[0].note
    # the manifest still lands so the failure is inspectable
    doc = json.loads((tmp_path / "f" / "manifest.json").read_text())
    assert doc["verdicts"][0]["passed"] is False


def test_main_runs_a_utility(tmp_path, capsys):
    code = main(["multiplier-dump", "--out", str(tmp_path / "u"),
                 "--alpha", "1", "--dim", "2"])
    assert code == 0
    out = capsys.readouterr().out
    assert "manifest.json" in out
    assert "FAIL" not in out
    assert (tmp_path / "u" / "multiplier.csv").exists()


def test_main_config_run_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "tail.toml"
    cfg.write_text('experiment = "tail-decay"\n'
                   '[params]\nexponents = [-0.7]\n')
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "t1")])
    assert code == 0
    capsys.readouterr()

    # quadrature agreement cannot reach 1e-15, so the verdict fails honestly
    strict = tmp_path / "strict.toml"
    strict.write_text('experiment = "tail-decay"\n'
                      '[params]\nexponents = [-0.7]\nagree_tol = 1e-15\n')
    code = main(["run", "--config", str(strict), "--out", str(tmp_path / "t2")])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out

    code = main(["run", "--config", str(tmp_path / "missing.toml")])
    captured = capsys.readouterr()
    assert code == 2
    assert "config error:" in captured.err


def test_main_rejects_unknown_config_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('experiment = "regions"\nextra = 1\n')
    assert main(["run", "--config", str(cfg)]) == 2
    assert "extra: unknown field" in capsys.readouterr().err
