import numpy as np
import pytest

from distkoop.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestExperimentCommand:
    def test_circle_spectrum_writes_declared_artifacts(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "experiment", "circle_spectrum", "--out", str(out), "--seed", "3",
            "--set", "experiment.repeats=2", "--set", "bank.n_bins=12",
            "--set", "data.m=8", "--set", "data.k=100", "--set", "data.n_sko=500",
        )
        assert code == 0
        for name in ("config.echo", "results.csv", "spectrum.csv", "manifest",
                     "spectrum.png", "eigenfunctions.png"):
            assert (out / name).exists(), name
        echo = (out / "config.echo").read_text()
        assert "[experiment]" in echo and "seed = 3" in echo

    def test_no_figures_skips_rendering(self, tmp_path):
        out = tmp_path / "nofig"
        code = run_cli(
            "experiment", "circle_spectrum", "--out", str(out), "--seed", "3",
            "--set", "experiment.repeats=1", "--set", "bank.n_bins=10",
            "--set", "data.m=5", "--set", "data.k=50", "--set", "data.n_sko=200",
            "--no-figures",
        )
        assert code == 0
        assert (out / "results.csv").exists()
        assert not list(out.glob("*.png"))

    def test_missing_seed_exits_2_and_cleans_up(self, tmp_path, capsys):
        out = tmp_path / "noseed"
        code = run_cli("experiment", "circle_spectrum", "--out", str(out))
        assert code == 2
        assert "experiment.seed" in capsys.readouterr().err
        assert not out.exists() or not list(out.iterdir())

    def test_bad_override_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "experiment", "circle_spectrum", "--out", str(tmp_path / "x"),
            "--seed", "1", "--set", "nodots",
        )
        assert code == 2
        assert "nodots" in capsys.readouterr().err

    def test_sde_predict_report_artifacts(self, tmp_path):
        out = tmp_path / "sde"
        code = run_cli(
            "experiment", "sde_predict", "--out", str(out), "--seed", "8",
            "--set", "experiment.repeats=2", "--set", "data.m=20", "--set", "data.k=40",
            "--set", "prediction.t_pred=0.3", "--set", "prediction.grid_points=11",
            "--set", "prediction.n_reference_samples=20",
        )
        assert code == 0
        assert (out / "results.csv").read_text().splitlines()[0] == "t,mse_mean,mse_stderr"
        assert (out / "results.png").exists()

    def test_convergence_report_artifacts(self, tmp_path):
        out = tmp_path / "conv"
        code = run_cli(
            "experiment", "convergence", "--out", str(out), "--seed", "9",
            "--set", "bank.n_bins=4", "--set", "convergence.m_grid=50,100,200",
            "--set", "convergence.m_oracle=1000", "--set", "convergence.sampler_k=20",
        )
        assert code == 0
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == "m,frobenius,frobenius_stderr,weighted"
        assert "slope=" in (out / "manifest").read_text()
        assert (out / "results.png").exists()

    def test_sensitivity_report_artifacts(self, tmp_path):
        out = tmp_path / "sens"
        code = run_cli(
            "experiment", "sensitivity", "--out", str(out), "--seed", "10", "--no-figures",
            "--set", "experiment.repeats=2", "--set", "bank.n_bins=8",
            "--set", "data.n_grid=4,16,64",
        )
        assert code == 0
        assert (out / "results.csv").read_text().startswith("n_samples,")

    def test_variance_predict_report_artifacts(self, tmp_path):
        out = tmp_path / "var"
        code = run_cli(
            "experiment", "variance_predict", "--out", str(out), "--seed", "11", "--no-figures",
            "--set", "experiment.repeats=2", "--set", "data.m=15", "--set", "data.k=30",
            "--set", "prediction.t_pred=0.2", "--set", "prediction.grid_points=9",
            "--set", "prediction.n_reference_samples=20",
        )
        assert code == 0
        assert "fit_rank=" in (out / "manifest").read_text()

    def test_repeat_run_byte_identical(self, tmp_path):
        args = (
            "experiment", "noise_sweep", "--seed", "5", "--no-figures",
            "--set", "experiment.repeats=2", "--set", "bank.n_bins=10",
            "--set", "data.n_budget=256", "--set", "data.sigma_grid=0,0.5",
        )
        assert run_cli(*args, "--out", str(tmp_path / "a")) == 0
        assert run_cli(*args, "--out", str(tmp_path / "b")) == 0
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


class TestFilePipeline:
    def test_simulate_fit_spectrum_predict_compose(self, tmp_path):
        sim = tmp_path / "sim"
        assert run_cli(
            "simulate", "--out", str(sim), "--seed", "2",
            "--set", "bank.n_bins=8", "--set", "data.m=16", "--set", "data.k=64",
            "--set", "data.n_sko=100",
        ) == 0
        assert (sim / "snapshots.npz").exists()
        assert (sim / "trajectory.csv").exists()

        fit = tmp_path / "fit"
        assert run_cli("fit", "--out", str(fit), "--snapshots", str(sim / "snapshots")) == 0
        assert (fit / "operator.npy").exists() and (fit / "operator.json").exists()

        spec = tmp_path / "spec"
        assert run_cli("spectrum", "--out", str(spec), "--operator", str(fit / "operator")) == 0
        lines = (spec / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "index,re,im,modulus"
        assert len(lines) == 9

        pred = tmp_path / "pred"
        assert run_cli(
            "predict", "--out", str(pred), "--operator", str(fit / "operator"),
            "--steps", "5", "--dirac-at", "1.0",
        ) == 0
        rows = (pred / "predictions.csv").read_text().splitlines()
        assert len(rows) == 7  # header + 6 steps
        first = rows[1].split(",")
        assert float(first[0]) == 0

    def test_predict_from_v0_file(self, tmp_path):
        sim, fit = tmp_path / "s", tmp_path / "f"
        run_cli("simulate", "--out", str(sim), "--seed", "4",
                "--set", "bank.n_bins=4", "--set", "data.m=8", "--set", "data.k=32",
                "--set", "data.n_sko=50")
        run_cli("fit", "--out", str(fit), "--snapshots", str(sim / "snapshots"))
        v0 = tmp_path / "v0.csv"
        v0.write_text("0.25,0.25,0.25,0.25\n")
        out = tmp_path / "p"
        assert run_cli("predict", "--out", str(out), "--operator", str(fit / "operator"),
                       "--steps", "3", "--v0", str(v0)) == 0
        assert (out / "predictions.csv").exists()

    def test_fit_missing_file_exits_1(self, tmp_path, capsys):
        code = run_cli("fit", "--out", str(tmp_path / "o"), "--snapshots", str(tmp_path / "nope"))
        assert code == 1
        assert not (tmp_path / "o" / "manifest").exists()


class TestGridCommand:
    def test_synthetic_forecast(self, tmp_path):
        out = tmp_path / "grid"
        code = run_cli(
            "grid", "forecast", "--out", str(out), "--seed", "6",
            "--train", "40", "--horizon", "3",
            "--set", "grid.synthetic_frames=50",
        )
        assert code == 0
        for name in ("results.csv", "forecast.csv", "spectrum.csv", "forecast.png", "manifest"):
            assert (out / name).exists(), name

    def test_external_data_forecast(self, tmp_path):
        from distkoop.grid_io import RasterSequence, write_raster

        rng = np.random.default_rng(0)
        frames = np.abs(rng.random((30, 6, 6)))
        write_raster(
            RasterSequence(frames=frames, cadence_seconds=60.0, meta={}),
            tmp_path / "data", format="flat_binary",
        )
        out = tmp_path / "fcst"
        code = run_cli(
            "grid", "forecast", "--out", str(out), "--seed", "1",
            "--data", str(tmp_path / "data"), "--train", "20", "--horizon", "2",
            "--patches", "3x3", "--no-figures",
        )
        assert code == 0
        rows = (out / "results.csv").read_text().splitlines()
        assert len(rows) == 3

    def test_bad_patches_spec_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "grid", "forecast", "--out", str(tmp_path / "g"), "--seed", "1",
            "--patches", "44",
        )
        assert code == 2


class TestParser:
    def test_help_lists_config_keys(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("experiment", "--help")
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "model.nu" in text
        assert "experiment.seed = (required)" in text

    def test_unknown_experiment_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("experiment", "bogus", "--out", "x", "--seed", "1")
        assert exc.value.code == 2
