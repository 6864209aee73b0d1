import subprocess
import sys

import pytest

from layerwise import cli, hermite, validate


def test_validate_passes_on_clean_build(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    for name, _, _ in validate.CHECKS:
        assert name in out
    assert "measured=" in out and "FAIL" not in out


def test_validate_catches_relu_coefficient_mutation(monkeypatch, capsys):
    real = hermite.relu_hermite_coeff
    monkeypatch.setattr(hermite, "relu_hermite_coeff", lambda k: real(k) + 1e-3)
    checks = {c.name: c for c in validate.run_validate()}
    assert not checks["relu_coefficients_vs_quadrature"].passed
    assert not checks["relu_reconstruction_parseval"].passed
    assert cli.main(["validate"]) == 1


def test_sweep_subcommand(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('d = 5\nm = 10\nn_exponents = [1.0]\nn_test = 500\nmethods = ["rf"]\n')
    out = tmp_path / "o.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out), "--seeds", "2", "--profile", "fast"]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert (tmp_path / "o.summary.json").exists()


def test_resolve_config_overrides(tmp_path):
    args = cli.build_parser().parse_args(["transfer", "--profile", "fast", "--seeds", "5", "--resample-stage2",
                                          "--workers", "3", "--out", "x.csv"])
    cfg = cli.resolve_config(args)
    assert cfg.kind == "transfer" and cfg.seeds == list(range(5)) and cfg.n_test == 10_000
    assert cfg.train.resample_stage2 and cfg.workers == 3 and cfg.out == "x.csv"
    args = cli.build_parser().parse_args(["diagnose"])
    assert cli.resolve_config(args).out == "results/diagnose"


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        cli.main(["plot"])


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.csv"
    cfg = tmp_path / "c.toml"
    cfg.write_text("[csq]\nd = 50\nM = 20\nepsilon = 0.5\ntaus = [0.6]\n")
    res = subprocess.run([sys.executable, "-m", "layerwise", "csq", "--config", str(cfg), "--out", str(out)],
                         capture_output=True, text=True, check=True)
    assert "query_lower_bound" in res.stdout
    assert out.read_text().startswith("M,d,p,eps_cert,tau,query_lower_bound,survivors_after_q_queries")
