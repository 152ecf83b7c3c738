import csv
import io
import json

import pytest

from curiefield import cli
from curiefield.errors import QuadratureError
from curiefield.experiments import REGISTRY, ExperimentConfig, run_experiment
from curiefield.errors import DomainError

NAMES = ["verify-definetti", "verify-laplace-indicator", "verify-decomposition",
         "verify-subcritical", "verify-critical", "verify-window", "verify-supercritical",
         "verify-bridge", "verify-sheet", "verify-functional-supercritical",
         "verify-functional-subcritical", "verify-series", "verify-ising", "verify-gumbel"]


def _run(argv, tmp_path, capsys):
    code = cli.main(argv + ["--out-dir", str(tmp_path)])
    return code, capsys.readouterr()


class TestList:
    def test_registry(self):
        assert list(REGISTRY) == NAMES

    def test_text(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out
        for name in NAMES:
            assert name in out

    def test_json(self, capsys):
        assert cli.main(["list", "--json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["name"] for r in rows] == NAMES
        assert all(r["anchor"] and r["description"] for r in rows)


class TestRun:
    def test_definetti(self, tmp_path, capsys):
        code, out = _run(["verify-definetti", "--n", "12", "--beta", "0.8"], tmp_path, capsys)
        assert code == 0 and "verify-definetti: PASS" in out.out
        report = json.loads((tmp_path / "verify-definetti" / "report.json").read_text())
        assert report["schema"] == "1" and report["passed"] and "version" in report
        tv = [v for k, v in report["statistics"].items() if k.startswith("tv")]
        assert tv and max(tv) <= 1e-8
        for key, verdict in report["verdicts"].items():
            assert verdict["threshold"] in report["thresholds"]

    def test_csv_columns(self, tmp_path, capsys):
        code, _ = _run(["verify-subcritical", "--n", "64,256", "--replicas", "20000",
                        "--seed", "7"], tmp_path, capsys)
        folder = tmp_path / "verify-subcritical"
        with (folder / "histogram.csv").open() as fh:
            assert next(csv.reader(fh)) == ["bin_left", "bin_right", "count", "density"]
        with (folder / "cdf.csv").open() as fh:
            assert next(csv.reader(fh)) == ["x", "empirical", "limit"]

    def test_format_json_only(self, tmp_path, capsys):
        _run(["verify-series", "--format", "json"], tmp_path, capsys)
        assert [p.name for p in (tmp_path / "verify-series").iterdir()] == ["report.json"]

    def test_failure_exit_code(self, tmp_path, capsys):
        code, out = _run(["verify-laplace-indicator", "--contour-T", "100"], tmp_path, capsys)
        assert code == 1 and "FAIL" in out.out

    def test_env_out_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("CURIEFIELD_OUT_DIR", str(tmp_path / "env"))
        assert cli.main(["verify-series", "--format", "json"]) == 0
        assert (tmp_path / "env" / "verify-series" / "report.json").exists()

    def test_ising_example(self, tmp_path, capsys):
        code, out = _run(["verify-ising", "--graph", "cycle4", "--beta", "0.6", "--steps",
                          "200000", "--seed", "3"], tmp_path, capsys)
        assert code == 0, out.out

    def test_same_seed_same_statistics(self, tmp_path, capsys):
        argv = ["verify-supercritical", "--n", "1024", "--replicas", "20000", "--seed", "5"]
        _run(argv + ["--workers", "1"], tmp_path / "a", capsys)
        _run(argv + ["--workers", "2"], tmp_path / "b", capsys)
        a = json.loads((tmp_path / "a" / "verify-supercritical" / "report.json").read_text())
        b = json.loads((tmp_path / "b" / "verify-supercritical" / "report.json").read_text())
        for key in ("statistics", "thresholds", "verdicts", "info"):
            assert a[key] == b[key]


class TestConfig:
    def test_key_value_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# subcritical\nbeta = 0.5\nn = 64,256\nreplicas = 5000\nseed = 1\n")
        code, _ = _run(["verify-subcritical", "--config", str(cfg), "--replicas", "6000"],
                       tmp_path, capsys)
        report = json.loads((tmp_path / "verify-subcritical" / "report.json").read_text())
        assert report["sample_sizes"]["replicas"] == 6000
        assert report["params"]["n"] == [64, 256]

    def test_json_file(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"beta": [0.5], "seed": 3, "contour-T": 50}))
        assert cli.load_config_file(cfg) == {"beta": [0.5], "seed": 3, "contour_T": 50.0}

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("temperature = 3\n")
        code, out = _run(["verify-series", "--config", str(cfg)], tmp_path, capsys)
        assert code == cli.EXIT_INVALID and "temperature" in out.err

    def test_missing_file(self, tmp_path, capsys):
        code, _ = _run(["verify-series", "--config", str(tmp_path / "nope")], tmp_path, capsys)
        assert code == cli.EXIT_IO


class TestExitCodes:
    def test_unknown_experiment(self, tmp_path, capsys):
        code, out = _run(["verify-everything"], tmp_path, capsys)
        assert code == cli.EXIT_UNKNOWN == 2 and "unknown" in out.err

    @pytest.mark.parametrize("argv", [["verify-subcritical"],
                                      ["verify-subcritical", "--seed", "1", "--replicas", "0"],
                                      ["verify-subcritical", "--seed", "1", "--beta", "1.5"],
                                      ["verify-series", "--workers", "0"],
                                      ["verify-critical", "--seed", "1", "--n", "4096,1024"]])
    def test_invalid(self, tmp_path, capsys, argv):
        code, _ = _run(argv, tmp_path, capsys)
        assert code == cli.EXIT_INVALID

    def test_io_error(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = cli.main(["verify-series", "--out-dir", str(blocker)])
        assert code == cli.EXIT_IO

    def test_numeric_failure(self, tmp_path, capsys, monkeypatch):
        def broken(config):
            raise QuadratureError("did not converge", estimates=[1.0, 2.0])
        monkeypatch.setattr(cli, "run_experiment", broken)
        code, out = _run(["verify-series"], tmp_path, capsys)
        assert code == cli.EXIT_NUMERIC and "numerical" in out.err

    def test_codes_distinct(self):
        codes = [cli.EXIT_OK, cli.EXIT_FAILED, cli.EXIT_UNKNOWN, cli.EXIT_INVALID, cli.EXIT_IO,
                 cli.EXIT_NUMERIC]
        assert len(set(codes)) == len(codes)


class TestRunExperiment:
    def test_seed_required_for_random(self):
        with pytest.raises(DomainError):
            run_experiment(ExperimentConfig("verify-gumbel"))

    def test_unknown(self):
        with pytest.raises(KeyError):
            run_experiment(ExperimentConfig("nope"))

    def test_timing_outside_statistics(self):
        report, _ = run_experiment(ExperimentConfig("verify-series"))
        assert "wall_clock_s" in report.timing
        assert "wall_clock_s" not in report.statistics_json()
