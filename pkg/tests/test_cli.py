"""Command-line flows: run, compare, sweep, validation exit codes."""

import json
import os
import subprocess
import sys

import pytest

from extlab import cli
from extlab.normalizer import SolverError

_BASE = {
    "system": {"kind": "exchangeable_copula",
               "generator": {"family": "clayton", "alpha": 1.0}},
    "n": 200,
    "replicates": 2000,
    "s_grid": {"start": 0.1, "stop": 0.9, "count": 5},
    "seed": 4242,
    "analyses": ["psi", "partial_indices", "tail_indices", "compare"],
}


def _cfg(tmp_path, name="cfg.json", **overrides):
    cfg = json.loads(json.dumps(_BASE))
    cfg.update(overrides)
    for key in [k for k, v in overrides.items() if v is None]:
        cfg.pop(key)
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=1))
    return path


def _run(*argv, env_extra=None):
    env = os.environ.copy()
    env.pop("EXTLAB_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "extlab.cli", *argv],
                          capture_output=True, text=True, env=env, timeout=300)


def _main(*argv, monkeypatch=None, env_seed=None):
    if monkeypatch is not None:
        if env_seed is None:
            monkeypatch.delenv("EXTLAB_SEED", raising=False)
        else:
            monkeypatch.setenv("EXTLAB_SEED", env_seed)
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def canonical(tmp_path_factory):
    """Three runs of one config: two worker counts and a JSON rendering."""
    root = tmp_path_factory.mktemp("cli")
    cfg = _cfg(root)
    paths = {"cfg": cfg, "w1": root / "w1.csv", "w3": root / "w3.csv",
             "json": root / "run.json"}
    for args, out in ((("--workers", "1"), paths["w1"]),
                      (("--workers", "3"), paths["w3"])):
        proc = _run("run", "--config", str(cfg), *args, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
    proc = _run("run", "--config", str(cfg), "--format", "json",
                "--out", str(paths["json"]))
    assert proc.returncode == 0, proc.stderr
    return paths


# ---------------------------------------------------------------------------
# run

def test_list_systems():
    proc = _run("list-systems")
    assert proc.returncode == 0
    for kind in ("exchangeable_copula", "random_threshold", "power_law_graph"):
        assert kind in proc.stdout


def test_run_stdout_csv(tmp_path):
    proc = _run("run", "--config", str(_cfg(tmp_path)))
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0] == "# extlab result"
    assert "s,u_n,psi_hat,stderr,psi_ref,z" in lines
    data = [ln for ln in lines if ln and not ln.startswith(("#", "s,"))]
    assert len(data) == 5
    for ln in data:
        s, u_n, psi_hat, stderr, psi_ref, z = map(float, ln.split(","))
        assert 0.0 < s < 1.0 and 0.0 < u_n < 1.0
        assert abs(z) < 6.0  # exact reference available for this family
    summary = json.loads([ln for ln in lines if ln.startswith("# summary: ")][0][11:])
    assert len(summary["config_sha256"]) == 64
    assert summary["solver_method"] == "closed_form"
    assert "runtime" in proc.stderr


def test_workers_do_not_change_bytes(canonical):
    assert canonical["w1"].read_bytes() == canonical["w3"].read_bytes()


def test_json_format_and_shared_hash(canonical):
    payload = json.loads(canonical["json"].read_text())
    assert len(payload["rows"]) == 5
    idx = payload["summary"]["indices"]
    for key in ("theta_minus", "theta_plus", "theta0", "theta1",
                "grid_mean_slope", "isotonic_violation"):
        assert key in idx
    # format and destination are execution details: same provenance hash
    csv_summary = json.loads(
        [ln for ln in canonical["w1"].read_text().splitlines()
         if ln.startswith("# summary: ")][0][11:]
    )
    assert payload["summary"]["config_sha256"] == csv_summary["config_sha256"]
    assert payload["summary"]["max_abs_z"] == csv_summary["max_abs_z"]


def test_seed_sources(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path, seed=None, replicates=1000, n=50)
    assert _main("run", "--config", str(cfg), "--seed", "777",
                 monkeypatch=monkeypatch) == 0
    assert "# seed: 777" in capsys.readouterr().out
    assert _main("run", "--config", str(cfg),
                 monkeypatch=monkeypatch, env_seed="778") == 0
    assert "# seed: 778" in capsys.readouterr().out
    assert _main("run", "--config", str(cfg), monkeypatch=monkeypatch) == 2
    assert "no seed" in capsys.readouterr().err
    assert _main("run", "--config", str(cfg),
                 monkeypatch=monkeypatch, env_seed="not-a-number") == 2
    assert "EXTLAB_SEED" in capsys.readouterr().err


def test_cli_seed_overrides_config(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path, replicates=1000, n=50)
    assert _main("run", "--config", str(cfg), "--seed", "9",
                 monkeypatch=monkeypatch) == 0
    assert "# seed: 9" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# validation exit codes

@pytest.mark.parametrize(
    "overrides,needle",
    [
        ({"system": {"kind": "weibull"}}, "unknown system kind"),
        ({"replicates": 10}, "below minimum"),
        ({"s_grid": [0.9, 0.1]}, "ascending"),
        ({"s_grid": [0.5, 1.5]}, "strictly in (0, 1)"),
        ({"s_grid": {"start": 0.1, "stop": 0.9}}, "start/stop/count"),
        ({"frobnicate": 1}, "unknown config fields"),
        ({"analyses": ["psi", "bogus"]}, "unknown analyses"),
        ({"n": None}, "missing required field"),
        ({"format": "xml"}, "format must be csv or json"),
        ({"def2_bounds": [2.0, 1.0]}, "def2_bounds"),
        ({"seed": "abc"}, "seed must be an integer"),
    ],
)
def test_invalid_configs_exit_2(tmp_path, capsys, monkeypatch, overrides, needle):
    cfg = _cfg(tmp_path, **overrides)
    assert _main("run", "--config", str(cfg), monkeypatch=monkeypatch) == 2
    err = capsys.readouterr().err
    assert needle in err
    assert f"{cfg}:" in err  # message carries file and line


def test_error_messages_carry_line_numbers(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path, system={"kind": "weibull"})
    assert _main("run", "--config", str(cfg), monkeypatch=monkeypatch) == 2
    err = capsys.readouterr().err
    line = json.dumps(json.loads(cfg.read_text()), indent=1).splitlines()
    lineno = next(i + 1 for i, ln in enumerate(line) if '"weibull"' in ln)
    assert f"{cfg}:{lineno}:" in err


def test_invalid_json_and_missing_file(tmp_path, capsys, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert _main("run", "--config", str(bad), monkeypatch=monkeypatch) == 2
    assert "invalid JSON" in capsys.readouterr().err
    assert _main("run", "--config", str(tmp_path / "gone.json"),
                 monkeypatch=monkeypatch) == 2


def test_stage_validation_is_located(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path, system={"kind": "stable_size_gumbel",
                                 "beta": 0.5, "gamma": 2.0}, n=5,
               analyses=["psi"])
    assert _main("run", "--config", str(cfg), monkeypatch=monkeypatch) == 2
    assert f"{cfg}:" in capsys.readouterr().err


def test_replicate_override_checked(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path)
    assert _main("run", "--config", str(cfg), "--replicates", "10",
                 monkeypatch=monkeypatch) == 2
    assert "below minimum" in capsys.readouterr().err


def test_solver_failure_exits_3(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path)

    def boom(*a, **k):
        raise SolverError("no bracket anywhere")

    monkeypatch.setattr(cli, "estimate_psi", boom)
    assert _main("run", "--config", str(cfg), monkeypatch=monkeypatch) == 3
    assert "solver failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# compare

def test_compare_identical_runs(canonical, capsys, monkeypatch):
    code = _main("compare", str(canonical["w1"]), str(canonical["w3"]),
                 monkeypatch=monkeypatch)
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["max_abs_dpsi"] == 0.0
    assert report["points"] == 5
    assert all(v == 0.0 for v in report["index_deltas"].values())


def test_compare_reads_both_formats(canonical, capsys, monkeypatch):
    code = _main("compare", str(canonical["w1"]), str(canonical["json"]),
                 "--tolerance", "0.001", monkeypatch=monkeypatch)
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["within_tolerance"] is True
    assert report["max_abs_dpsi"] == 0.0


def test_compare_tolerance_fails_on_different_systems(tmp_path, canonical,
                                                      capsys, monkeypatch):
    other_cfg = _cfg(tmp_path, system={"kind": "duplicated_iid", "m": 2},
                     analyses=["psi", "partial_indices"])
    out = tmp_path / "dup.csv"
    assert _main("run", "--config", str(other_cfg), "--out", str(out),
                 monkeypatch=monkeypatch) == 0
    capsys.readouterr()
    code = _main("compare", str(canonical["w1"]), str(out),
                 "--tolerance", "0.001", monkeypatch=monkeypatch)
    assert code == 1
    report = json.loads(capsys.readouterr().out)
    assert report["within_tolerance"] is False
    assert report["max_abs_dpsi"] > 0.05


def test_compare_grid_mismatch(tmp_path, canonical, capsys, monkeypatch):
    cfg = _cfg(tmp_path, s_grid={"start": 0.1, "stop": 0.9, "count": 7})
    out = tmp_path / "seven.csv"
    assert _main("run", "--config", str(cfg), "--out", str(out),
                 monkeypatch=monkeypatch) == 0
    capsys.readouterr()
    assert _main("compare", str(canonical["w1"]), str(out),
                 monkeypatch=monkeypatch) == 2
    assert "grid mismatch" in capsys.readouterr().err


def test_compare_def2_gap(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path, system={"kind": "duplicated_iid", "m": 2}, n=50,
               analyses=["psi", "def2_fit", "compare"],
               def2_bounds=[0.1, 2.0])
    out = tmp_path / "def2.csv"
    assert _main("run", "--config", str(cfg), "--out", str(out),
                 monkeypatch=monkeypatch) == 0
    capsys.readouterr()
    assert _main("compare", str(out), str(out), monkeypatch=monkeypatch) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["def1_def2_gap_a"] == pytest.approx(report["def1_def2_gap_b"])
    assert abs(report["def1_def2_gap_a"]) < 0.1  # both notions sit near 1/2 here
    summary = json.loads(
        [ln for ln in out.read_text().splitlines()
         if ln.startswith("# summary: ")][0][11:]
    )
    assert summary["indices"]["theta_def2"] == pytest.approx(0.5, abs=0.05)
    assert "theta_minus" not in summary["indices"]  # analysis not requested


# ---------------------------------------------------------------------------
# sweep

def test_sweep_nested_params(tmp_path):
    cfg = _cfg(tmp_path, replicates=1000, n=100)
    out_dir = tmp_path / "grid"
    proc = _run("sweep", "--config", str(cfg), "--out-dir", str(out_dir),
                "--param", "system.generator.alpha=1.0,2.0")
    assert proc.returncode == 0, proc.stderr
    files = sorted(p.name for p in out_dir.iterdir())
    assert files == ["cfg__alpha-1.0.csv", "cfg__alpha-2.0.csv"]
    for p in out_dir.iterdir():
        assert "# extlab result" in p.read_text()


def test_sweep_keeps_going_after_bad_combo(tmp_path):
    cfg = _cfg(tmp_path, replicates=1000, n=100)
    out_dir = tmp_path / "grid2"
    proc = _run("sweep", "--config", str(cfg), "--out-dir", str(out_dir),
                "--param", "replicates=2000,10")
    assert proc.returncode == 2
    assert (out_dir / "cfg__replicates-2000.csv").exists()
    assert not (out_dir / "cfg__replicates-10.csv").exists()
    assert "below minimum" in proc.stderr


def test_sweep_requires_params(tmp_path, capsys, monkeypatch):
    cfg = _cfg(tmp_path)
    assert _main("sweep", "--config", str(cfg), "--out-dir", str(tmp_path / "x"),
                 monkeypatch=monkeypatch) == 2
    assert "--param" in capsys.readouterr().err
