"""Command-line interface and pipeline orchestration."""

import json
import subprocess
import sys

import pytest
import yaml

from coactnet.cli import main
from coactnet.pipeline import PipelineConfig, run_pipeline

SIM_GRID = {"start": 0.0, "stop": 2.0, "step": 0.05}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "1", "--seed", "7", "--out", str(out)]) == 0
    return out


def config_file(tmp_path, sim_dir, name="cfg.yaml", **overrides):
    cfg = {
        "input": {"events": str(sim_dir / "events.jsonl"),
                  "ground_truth": str(sim_dir / "ground_truth.csv")},
        "layers": ["all"],
        "kernel": {"eps": 1e-6, "time_unit": "minutes"},
        "beta_grid": SIM_GRID,
        "seed": 0,
        "output": {"dir": str(tmp_path / "out")},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return path


class TestSimulate:
    def test_writes_events_and_ground_truth(self, sim_dir):
        lines = (sim_dir / "events.jsonl").read_text().splitlines()
        assert len(lines) >= 1015
        record = json.loads(lines[0])
        assert set(record) >= {"user", "timestamp", "action_type", "content"}
        gt = (sim_dir / "ground_truth.csv").read_text()
        assert gt.count("coordinated") == 6


class TestRunPipeline:
    def test_full_run_produces_artifacts_and_scores(self, tmp_path, sim_dir):
        cfg = PipelineConfig.from_yaml(config_file(tmp_path, sim_dir))
        result = run_pipeline(cfg)
        out = tmp_path / "out"
        for name in ("users.csv", "partition.csv", "report.json",
                     "manifest.json", "evaluation.json", "sweep_all.csv",
                     "layer_all.csv", "layer_all.graphml"):
            assert (out / name).exists()
        evaluation = json.loads((out / "evaluation.json").read_text())
        assert evaluation["f1_star"] == 1.0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config_hash"] == cfg.config_hash()
        assert result.partition.n_communities >= 2

    def test_reruns_are_byte_identical(self, tmp_path, sim_dir):
        cfg = PipelineConfig.from_yaml(config_file(tmp_path, sim_dir))
        names = ("partition.csv", "sweep_all.csv", "report.json",
                 "evaluation.json", "manifest.json")
        run_pipeline(cfg)
        out = tmp_path / "out"
        first = {name: (out / name).read_bytes() for name in names}
        run_pipeline(cfg)
        for name in names:
            assert (out / name).read_bytes() == first[name]

    def test_empty_action_type_list_fails_validation(self, tmp_path, sim_dir):
        path = config_file(tmp_path, sim_dir, action_types=[])
        rc = main(["run", "--config", str(path)])
        assert rc == 1

    def test_failed_run_removes_partial_artifacts(self, tmp_path, sim_dir):
        out = tmp_path / "out"
        path = config_file(tmp_path, sim_dir)
        raw = yaml.safe_load(path.read_text())
        raw["input"]["ground_truth"] = str(tmp_path / "missing.csv")
        path.write_text(yaml.safe_dump(raw))
        rc = main(["run", "--config", str(path)])
        assert rc == 2
        assert not out.exists() or not any(out.iterdir())


class TestDecomposedStages:
    def test_subcommands_reproduce_pipeline_artifacts(self, tmp_path, sim_dir):
        cfg_path = config_file(tmp_path, sim_dir)
        assert main(["run", "--config", str(cfg_path)]) == 0
        out = tmp_path / "out"
        dec = tmp_path / "dec"
        rc = main(["cluster", "--users", str(out / "users.csv"),
                   "--layer-csv", str(out / "layer_all.csv"),
                   "--seed", "0", "--out", str(dec)])
        assert rc == 0
        assert (dec / "partition.csv").read_bytes() == \
            (out / "partition.csv").read_bytes()

    def test_evaluate_subcommand(self, tmp_path, sim_dir, capsys):
        cfg_path = config_file(tmp_path, sim_dir)
        assert main(["run", "--config", str(cfg_path)]) == 0
        out = tmp_path / "out"
        rc = main(["evaluate", "--partition", str(out / "partition.csv"),
                   "--ground-truth", str(sim_dir / "ground_truth.csv")])
        assert rc == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["f1_star"] == 1.0

    def test_tune_beta_exponent_graph(self, tmp_path, capsys):
        edges = tmp_path / "edges.csv"
        edges.write_text("u,v,exponent\na,b,1.0\nb,c,1.0\na,c,1.2\n"
                         "d,e,1.0\ne,f,1.0\nd,f,0.9\nc,d,6.0\n")
        rc = main(["tune-beta", "--exponent-edges", str(edges),
                   "--out", str(tmp_path / "sweep"), "--format", "json",
                   "--grid-stop", "5.0", "--grid-step", "0.1"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 <= payload["beta_star"] <= 5.0
        assert (tmp_path / "sweep" / "sweep_parametric.csv").exists()


class TestBaselineSubcommand:
    def test_baseline_json_output(self, tmp_path, sim_dir, capsys):
        rc = main(["baseline", "synchronized-actions",
                   "--events", str(sim_dir / "events.jsonl"),
                   "--action-type", "hashtag",
                   "--ground-truth", str(sim_dir / "ground_truth.csv"),
                   "--seed", "0", "--out", str(tmp_path)])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["kind"] == "partition"
        assert "evaluation" in payload
        assert (tmp_path / "baseline_synchronized-actions.json").exists()

    def test_unknown_events_path_is_runtime_error(self, capsys):
        rc = main(["baseline", "bloc", "--events", "/nonexistent.jsonl"])
        assert rc == 2
        err = json.loads(capsys.readouterr().err.strip())
        assert "error" in err


class TestRank:
    def test_rank_over_score_files(self, tmp_path, capsys):
        rows = ["method,dataset,f1_star",
                "alpha,d1,0.9", "alpha,d2,0.8",
                "beta,d1,0.4", "beta,d2,0.9"]
        path = tmp_path / "scores.csv"
        path.write_text("\n".join(rows) + "\n")
        rc = main(["rank", str(path), "--out", str(tmp_path / "ranks"),
                   "--format", "json"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["alpha"] == 1.5
        assert payload["beta"] == 1.5
        text = (tmp_path / "ranks" / "average_ranks.csv").read_text()
        assert text.splitlines()[0] == "method,average_rank"


class TestProcessLevel:
    def test_console_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "coactnet.cli",
                               "--version"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip()

    def test_validation_error_json_on_stderr(self, capsys):
        rc = main(["run"])  # neither --config nor --events
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"]["type"] == "ValidationError"
