import pytest

from safecma import plots
from safecma.cli import main
from safecma.runner import ExperimentConfig, run_experiment


@pytest.fixture(scope="module")
def summary_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg = ExperimentConfig(problem="sphere", dim=5, safety="first-coordinate",
                           algo="safe-cmaes", budget=160, trials=2, seed=77,
                           out_dir=str(out))
    return run_experiment(cfg)


class TestReadSummary:
    def test_reads_label_and_axis(self, summary_file):
        data = plots.read_summary(summary_file)
        assert data["label"] == "safe-cmaes"
        assert len(data["evals"]) > 0

    def test_rejects_wrong_schema(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("evals,foo\n1,2\n")
        with pytest.raises(plots.SummarySchemaError):
            plots.read_summary(bad)


class TestRender:
    def test_single_series(self, summary_file, tmp_path):
        out = plots.render([summary_file], tmp_path / "fig.png")
        assert out.exists() and out.stat().st_size > 0

    def test_sweep_mode(self, summary_file, tmp_path):
        out = plots.render([summary_file, summary_file],
                           tmp_path / "sweep.png", mode="sweep")
        assert out.exists()

    def test_deterministic_bytes(self, summary_file, tmp_path):
        a = plots.render([summary_file], tmp_path / "a.png")
        b = plots.render([summary_file], tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_list_problems(self, capsys):
        assert main(["list-problems"]) == 0
        out = capsys.readouterr().out
        assert "sphere" in out and "rosenbrock" in out

    def test_plot_command(self, summary_file, tmp_path):
        out = tmp_path / "cli_fig.png"
        assert main(["plot", "--summary", str(summary_file),
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_plot_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,summary\n")
        code = main(["plot", "--summary", str(bad),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2

    def test_run_command(self, tmp_path):
        code = main(["run", "--problem", "sphere", "--dim", "5",
                     "--safety", "first-coordinate", "--algo", "cmaes",
                     "--budget", "80", "--trials", "1", "--seed", "5",
                     "--out", str(tmp_path / "r")])
        assert code == 0
        assert (tmp_path / "r" / "summary.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        code = main(["run", "--budget", "1", "--out", str(tmp_path / "r2")])
        assert code == 2
