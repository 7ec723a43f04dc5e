import json
import math
import subprocess
import sys

import pytest

from dissipative_qml import __version__
from dissipative_qml.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, THREADS_ENV, load_config, main, resolve_threads
from dissipative_qml.config import SCHEMAS, ConfigError, parse_config

FAST_ITER = {"n_realizations": 60, "n_iterations": 40}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def data_files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "manifest.json"}


class TestParseConfig:
    def test_minimal_sweep_defaults(self):
        cfg = parse_config('{"experiment": "qrl_sweep"}')
        p = cfg.params
        assert (p["reward_rate"], p["punishment_rate"], p["n_realizations"], p["n_iterations"]) == (0.9, 20 / 9, 1000, 500)
        assert cfg.master_seed == 0 and cfg.output_dir == "out"
        assert p["tau_num"] == 25 and p["tau_stop"] == 4 * math.pi

    def test_reward_rate_domain(self):
        with pytest.raises(ConfigError) as exc:
            parse_config('{"experiment": "qrl_sweep", "params": {"reward_rate": 1.5}}')
        assert exc.value.errors == ["reward_rate must lie in (0,1)"]

    def test_errors_accumulate(self):
        doc = {"experiment": "qrl_sweep", "extra": 1, "params": {"reward_rate": 1.5, "n_iterations": 0, "bogus": 2}}
        with pytest.raises(ConfigError) as exc:
            parse_config(json.dumps(doc))
        errs = exc.value.errors
        assert len(errs) == 4
        assert "reward_rate must lie in (0,1)" in errs
        assert any("bogus" in e for e in errs) and any("extra" in e for e in errs)

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("{not json", "malformed JSON"),
            ("[1, 2]", "JSON object"),
            ("{}", "missing required key 'experiment'"),
            ('{"experiment": "qrl_dance"}', "unknown experiment"),
            ('{"experiment": "qrc", "master_seed": -1}', "master_seed"),
            ('{"experiment": "qrc", "master_seed": 18446744073709551616}', "master_seed"),
            ('{"experiment": "qrc", "params": {"n_qubits": 9}}', "n_qubits"),
            ('{"experiment": "classify", "params": {"reservoir": "cold"}}', "reservoir"),
            ('{"experiment": "qrl_iterations", "params": {"initial_state": [[1, 0], [1, 0]]}}', "initial_state"),
            ('{"experiment": "qrl_sweep", "params": {"tau_start": 3, "tau_stop": 1}}', "tau_stop"),
            ('{"experiment": "qrl_sweep", "params": {"n_realizations": true}}', "n_realizations"),
        ],
    )
    def test_rejects(self, text, fragment):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert any(fragment in e for e in exc.value.errors)

    def test_max_seed_accepted(self):
        assert parse_config('{"experiment": "qrc", "master_seed": 18446744073709551615}').master_seed == 2**64 - 1

    def test_seeds_default_to_master(self):
        cfg = parse_config('{"experiment": "qrc", "master_seed": 17, "params": {"split_seed": 3}}')
        assert (cfg.params["data_seed"], cfg.params["circuit_seed"], cfg.params["split_seed"]) == (17, 17, 3)

    @pytest.mark.parametrize("experiment", sorted(SCHEMAS))
    def test_round_trip(self, experiment):
        cfg = parse_config(json.dumps({"experiment": experiment, "master_seed": 5}))
        assert parse_config(json.dumps(cfg.to_dict())) == cfg


class TestOverrides:
    def test_out_and_seed(self):
        cfg = load_config('{"experiment": "classify"}', output_dir="elsewhere", master_seed=9)
        assert cfg.output_dir == "elsewhere" and cfg.master_seed == 9 and cfg.params["data_seed"] == 9

    def test_threads(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_threads(None) == 1
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads(None) == 3
        assert resolve_threads(2) == 2
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ConfigError):
            resolve_threads(None)
        with pytest.raises(ConfigError):
            resolve_threads(0)


class TestRun:
    def test_iterations_writes_three_csvs(self, tmp_path):
        doc = {"experiment": "qrl_iterations", "output_dir": str(tmp_path / "out"),
               "params": {"T_tilde": 0.3, "tau_tilde": 1.0, "gamma0_values": [0, 0.5, 1], **FAST_ITER}}
        assert main(["run", write(tmp_path, doc)]) == EXIT_OK
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["iterations_gamma0_0p0.csv", "iterations_gamma0_0p5.csv", "iterations_gamma0_1p0.csv",
                         "manifest.json"]
        lines = (tmp_path / "out" / "iterations_gamma0_0p5.csv").read_text().splitlines()
        assert lines[0] == "k,W_k,F_k,F_minus_k,F_plus_k" and len(lines) == 41

    def test_manifest(self, tmp_path):
        doc = {"experiment": "qrl_sweep", "master_seed": 3, "output_dir": str(tmp_path / "out"),
               "params": {"tau_values": [1.0, 2.0], "configs": [[0.5, 0.3]], **FAST_ITER}}
        assert main(["run", write(tmp_path, doc), "--threads", "2"]) == EXIT_OK
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["library_version"] == __version__
        assert manifest["seeds"]["master_seed"] == 3
        assert manifest["wall_clock_seconds"] >= 0
        assert manifest["outputs"] == ["sweep.csv"]
        cfg = parse_config(json.dumps(manifest["config"]))
        assert cfg.to_dict() == manifest["config"]
        assert cfg == parse_config(json.dumps(doc))

    @pytest.mark.parametrize(
        "experiment,params",
        [
            ("qrl_sweep", {"tau_values": [0.5, 6.0], **FAST_ITER}),
            ("qrl_iterations", FAST_ITER),
            ("lindblad_steady", {"nbar": 0.5, "n_random_states": 4}),
            ("lindblad_steady", {"reservoir": "squeezed", "r": 0.2, "n_random_states": 4}),
            ("classify", {"n_records": 30}),
            ("qrc", {"n_qubits": 3, "n_samples": 20, "p_values": [0.01, 0.05]}),
        ],
    )
    def test_rerun_is_byte_identical(self, tmp_path, experiment, params):
        doc = {"experiment": experiment, "master_seed": 11, "params": params}
        path = write(tmp_path, doc)
        assert main(["run", path, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(["run", path, "--out", str(tmp_path / "b"), "--threads", "4"]) == EXIT_OK
        a, b = data_files(tmp_path / "a"), data_files(tmp_path / "b")
        assert a and a == b

    def test_seed_changes_output(self, tmp_path):
        path = write(tmp_path, {"experiment": "qrl_iterations", "params": FAST_ITER})
        main(["run", path, "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["run", path, "--out", str(tmp_path / "b"), "--seed", "2"])
        assert data_files(tmp_path / "a") != data_files(tmp_path / "b")

    def test_lindblad_outputs(self, tmp_path):
        doc = {"experiment": "lindblad_steady", "output_dir": str(tmp_path / "o"), "params": {"n_random_states": 5}}
        assert main(["run", write(tmp_path, doc)]) == EXIT_OK
        summary = json.loads((tmp_path / "o" / "steady_state.json").read_text())
        assert summary["kernel_dimension"] == 4 and summary["completely_positive"]
        assert summary["max_trace_distance"] < 1e-6
        assert len(summary["kraus"]) == 3

    def test_classify_outputs(self, tmp_path):
        doc = {"experiment": "classify", "output_dir": str(tmp_path / "o")}
        assert main(["run", write(tmp_path, doc)]) == EXIT_OK
        metrics = (tmp_path / "o" / "metrics.csv").read_text().splitlines()
        assert metrics == ["split,accuracy,n_records", "train,1.0,28", "test,1.0,12"]

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        path = write(tmp_path, {"experiment": "qrl_iterations", "params": FAST_ITER})
        assert main(["run", path, "--out", str(blocker / "sub")]) == EXIT_RUNTIME
        assert blocker.read_text() == ""
        assert sorted(p.name for p in tmp_path.iterdir()) == ["cfg.json", "file"]

    def test_runtime_error_removes_partial_outputs(self, tmp_path):
        doc = {"experiment": "classify", "output_dir": str(tmp_path / "o"),
               "params": {"dataset_csv": str(tmp_path / "missing.csv")}}
        assert main(["run", write(tmp_path, doc)]) == EXIT_RUNTIME
        assert not (tmp_path / "o").exists()

    def test_existing_directory_kept_clean_on_failure(self, tmp_path):
        out = tmp_path / "o"
        out.mkdir()
        (out / "keep.txt").write_text("x")
        bad = tmp_path / "bad.csv"
        bad.write_text("f1,f2,f3,f4,label\n1,0,0,0,1\n")
        doc = {"experiment": "classify", "output_dir": str(out), "params": {"dataset_csv": str(bad)}}
        assert main(["run", write(tmp_path, doc)]) == EXIT_RUNTIME
        assert sorted(p.name for p in out.iterdir()) == ["keep.txt"]

    def test_config_error_exit(self, tmp_path, caplog):
        path = write(tmp_path, {"experiment": "qrl_sweep", "params": {"reward_rate": 1.5, "punishment_rate": 0.5}})
        assert main(["run", path]) == EXIT_CONFIG
        err = caplog.text
        assert "reward_rate must lie in (0,1)" in err and "punishment_rate" in err

    def test_missing_config_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_validate_prints_resolved(self, tmp_path, capsys):
        assert main(["validate", write(tmp_path, {"experiment": "qrc"})]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["params"]["lambda"] == 1e-3 and out["params"]["n_qubits"] == 4


def test_console_entry_point(tmp_path):
    path = write(tmp_path, {"experiment": "qrl_sweep", "params": {"reward_rate": 2}})
    proc = subprocess.run([sys.executable, "-m", "dissipative_qml", "validate", path], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    assert "reward_rate must lie in (0,1)" in proc.stderr
    help_text = subprocess.run([sys.executable, "-m", "dissipative_qml", "--help"], capture_output=True, text=True).stdout
    assert "punishment_rate" in help_text and "DQML_THREADS" in help_text
