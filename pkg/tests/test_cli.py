import json
import math
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from roughheat import ConfigError, io
from roughheat.cli import main
from roughheat.experiments import (ExperimentConfig, cmd_convergence, cmd_run_scheme, cmd_sample_sheet,
                                   derive_seed, load_config, selftest)


def run_cli(*args, capsys=None):
    code = main([str(a) for a in args])
    out = capsys.readouterr() if capsys else None
    return code, out


# ---- configuration

def test_config_precedence(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[sheet]\nh0 = 0.3   # inline comment\nkappa = 0.02\n[experiment]\nlevels = 1, 2\n"
                   "seeds = 4\nalpha = 0.7\n[output]\nemit_plots = yes\n")
    cfg = load_config(ini, env={})
    assert cfg.h0 == 0.3 and cfg.levels == (1, 2) and cfg.seeds == 4 and cfg.emit_plots
    cfg = load_config(ini, env={"RHEAT_ALPHA": "0.8", "RHEAT_SEEDS": "5,9"})
    assert cfg.alpha == 0.8 and cfg.seed_list() == [5, 9]
    cfg = load_config(ini, env={"RHEAT_ALPHA": "0.8"}, overrides={"alpha": 0.9, "seed": None})
    assert cfg.alpha == 0.9 and cfg.seed == 0


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[sheet]\nhurst = 0.3\n")
    with pytest.raises(ConfigError):
        load_config(bad, env={})
    bad.write_text("no section header\n")
    with pytest.raises(ConfigError):
        load_config(bad, env={})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini", env={})
    for kw in ({"alpha": 0.25}, {"variant": "nope"}, {"levels": ()}, {"seeds": 0}, {"kappa": 0.0},
               {"pad": 1.0}, {"h0": 1.2}):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)
    with pytest.raises(ConfigError):
        load_config(None, env={"RHEAT_LEVELS": "one"})


def test_alpha_threshold_only_in_rough_regime():
    ExperimentConfig(h0=0.4, h1=0.3, alpha=0.1)
    with pytest.raises(ConfigError):
        ExperimentConfig(h0=0.25, h1=0.25, alpha=0.25)


def test_kappa_warning():
    with pytest.warns(UserWarning, match="kappa"):
        cfg = ExperimentConfig(kappa=0.1)
    assert cfg.warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ExperimentConfig(kappa=0.05)


def test_derived_seeds_are_stable():
    assert derive_seed(0, 0) == derive_seed(0, 0)
    assert len({derive_seed(0, r) for r in range(50)}) == 50
    assert derive_seed(1, 0) != derive_seed(0, 0)
    assert ExperimentConfig(seeds=3, seed=9).seed_list() == [derive_seed(9, r) for r in range(3)]


def test_raw_variant_uses_infinite_cutoff():
    cfg = ExperimentConfig(variant="raw_sheet_kappa_infinity")
    assert math.isinf(cfg.kappa) and cfg.sheet_config(1, 0).raw


# ---- commands

def test_sample_sheet_shape_and_hash(tmp_path):
    cfg = ExperimentConfig(levels=(1,), out=str(tmp_path / "a"))
    (p,) = cmd_sample_sheet(cfg)
    cols, rows, vals = io.read_table_csv(p)
    assert vals.shape == (3, 9)
    meta = json.loads(p.with_name(p.name + ".json").read_text())
    assert meta["config"]["seed_list"] == cfg.seed_list() and meta["seed"] == cfg.seed_list()[0]
    (q,) = cmd_sample_sheet(ExperimentConfig(levels=(1,), out=str(tmp_path / "b")))
    assert io.sha256_file(p) == io.sha256_file(q) == meta["sha256"]


def test_sample_sheet_published_configuration(tmp_path):
    with pytest.warns(UserWarning, match="kappa"):
        cfg = ExperimentConfig(h0=0.25, h1=0.25, kappa=1.0, levels=(3,), m0=10000, m1=1000,
                               out=str(tmp_path), emit_plots=True)
    paths = cmd_sample_sheet(cfg)
    _, _, vals = io.read_table_csv(paths[0])
    assert vals.shape == (9, 129)
    assert np.all(vals[0] == 0) and np.all(vals[:, 64] == 0)
    assert (tmp_path / "sheet_n3_r0.svg").exists() and (tmp_path / "sheet_n3_r0.dat").exists()


def test_run_scheme_shape_and_zero_noise(tmp_path):
    cfg = ExperimentConfig(levels=(1,), stride=1, out=str(tmp_path / "a"))
    csv_path, bin_path = cmd_run_scheme(cfg)
    n, table = io.read_binary(bin_path)
    # 2^(4n) + 1 rows, 2N - 1 columns with N = 2^(3n + 1)
    assert n == 1 and table.shape == (17, 31)
    cols, rows, vals = io.read_table_csv(csv_path)
    assert np.array_equal(vals, table) and np.allclose(rows, np.arange(17) / 16)
    assert np.any(table != 0)
    _, zb = cmd_run_scheme(ExperimentConfig(levels=(1,), zero_noise=True, out=str(tmp_path / "z")))
    assert not io.read_binary(zb)[1].any()


def test_run_scheme_level_three_budget(tmp_path):
    # documented budget: 30 s and 1 GB for a single n = 3 run (measured ~1.5 s, ~100 MB)
    start = time.perf_counter()
    cfg = ExperimentConfig(levels=(3,), kappa=0.05, out=str(tmp_path), emit_plots=True)
    _, b = cmd_run_scheme(cfg)
    assert time.perf_counter() - start < 30
    n, table = io.read_binary(b)
    assert n == 3 and table.shape == (2**12 // 16 + 1, 2 * 2**10 - 1)
    assert (tmp_path / "scheme_n3_r0.svg").exists()


def test_synchronized_variant_marked_experimental(tmp_path):
    cfg = ExperimentConfig(levels=(2,), variant="synchronized_grid", out=str(tmp_path), stride=1)
    _, b = cmd_run_scheme(cfg)
    meta = json.loads(b.with_name(b.name + ".json").read_text())
    assert meta["status"] == "EXPERIMENTAL"
    assert io.read_binary(b)[1].shape == (5, 2 * 2**5 - 1)


def test_convergence_single_level_has_no_rate(tmp_path):
    report, results, paths = cmd_convergence(ExperimentConfig(levels=(1,), out=str(tmp_path)))
    assert len(report.errors) == 1 and report.fitted_rate is None
    assert report.errors[0] > 0
    assert results[0].errors.shape == (1, 4)          # three interior times and t = 1


def test_convergence_synthetic_is_zero(tmp_path):
    report, _, _ = cmd_convergence(ExperimentConfig(levels=(1, 2), seeds=2, synthetic=True,
                                                    out=str(tmp_path)))
    assert report.errors == (0.0, 0.0) and report.fitted_rate is None


def test_convergence_independent_of_threads(tmp_path):
    base = dict(levels=(1, 2), seeds=4, emit_plots=True)
    cmd_convergence(ExperimentConfig(**base, threads=1, out=str(tmp_path / "a")))
    r, _, _ = cmd_convergence(ExperimentConfig(**base, threads=3, out=str(tmp_path / "b")))
    for name in ("convergence_report.csv", "convergence_errors.csv", "convergence.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert r.fitted_rate is not None and r.fitted_rate > 0


# ---- self-test and the command line

def test_selftest_passes_and_is_stable(capsys):
    code, first = run_cli("selftest", capsys=capsys)
    assert code == 0 and "FAIL" not in first.out
    code, second = run_cli("selftest", capsys=capsys)
    assert first.out == second.out


def test_selftest_detects_stiffness_fault(capsys):
    checks = {c.name: c.passed for c in selftest(["stiffness_sign"])}
    assert not checks["specialized = generic Galerkin"]
    code, out = run_cli("selftest", "--inject-fault", "stiffness_sign", capsys=capsys)
    assert code == 2 and "FAIL" in out.out


def test_cli_exit_codes(tmp_path, capsys):
    code, _ = run_cli("run-scheme", "--levels", "1", "--out", tmp_path / "ok", capsys=capsys)
    assert code == 0
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nalpha = 0.1\n")
    code, out = run_cli("convergence", "--config", bad, "--out", tmp_path / "x", capsys=capsys)
    assert code == 1 and "alpha" in out.err
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _ = run_cli("sample-sheet", "--levels", "1", "--out", blocker / "sub", capsys=capsys)
    assert code == 1
    code, _ = run_cli("sample-sheet", "--bogus", capsys=capsys)
    assert code == 1


def test_cli_convergence_prints_rate(tmp_path, capsys):
    code, out = run_cli("convergence", "--levels", "1,2", "--seeds", "3", "--seed", "5", "--threads", "2",
                        "--out", tmp_path, "--emit-plots", capsys=capsys)
    assert code == 0 and "fitted rate" in out.out
    assert (tmp_path / "convergence.svg").exists() and (tmp_path / "convergence.dat").exists()


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "roughheat", "sample-sheet", "--levels", "1",
                        "--out", str(tmp_path)], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "sheet_n1_r0.csv" in r.stdout
