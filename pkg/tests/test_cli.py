"""Tests for the command-line runs and the dataset writers."""

import json
import math

import numpy as np
import pandas as pd
import pytest

import entanglement.entropy_solver as entropy_solver
import runs.cli
from runs.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, main
from runs.fig_datasets import LEADING_COLUMNS, parallel_map
from runs.run_config import ConfigError, RunConfig, build_parser, config_from_args, parse_grid
from utils.utils_output import default_output_path, load_schema, sibling_path


class TestGrids:
    def test_inclusive_grid(self):
        assert parse_grid("0:1:5") == pytest.approx((0.0, 0.25, 0.5, 0.75, 1.0))

    def test_single_point(self):
        assert parse_grid("0.3") == (0.3,)

    @pytest.mark.parametrize("text", ["0:1", "0:1:0", "a:b:c", "0:1:2.5"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_grid(text)


class TestRunConfig:
    def test_default_eta_grid(self):
        config = config_from_args(build_parser().parse_args(["sweep", "--photons", "1"]))
        assert len(config.etas) == 101
        assert config.etas[0] == 0.0 and config.etas[-1] == 1.0
        assert config.taus == pytest.approx((math.asinh(math.sqrt(0.5)),))

    def test_fig2_defaults(self):
        config = config_from_args(build_parser().parse_args(["fig2"]))
        assert config.photon_numbers == (0.5, 1.0, 3.0)
        assert (config.alpha_max, config.beta_max) == (5, 5)

    def test_tau_converted_to_photons(self):
        config = config_from_args(build_parser().parse_args(["entropy", "--eta", "0.5", "--tau", "1.0"]))
        assert config.photon_numbers == pytest.approx((2 * math.sinh(1.0) ** 2,))

    def test_source_required(self):
        with pytest.raises(ConfigError):
            config_from_args(build_parser().parse_args(["entropy", "--eta", "0.5"]))

    def test_tau_and_photons_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["sweep", "--tau", "1", "--photons", "1"])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mode": "plot", "etas": (0.5,)},
            {"mode": "sweep", "etas": ()},
            {"mode": "sweep", "etas": (1.2,)},
            {"mode": "sweep", "etas": (0.5,), "kkt_tol": 0.0},
            {"mode": "sweep", "etas": (0.5,), "workers": 0},
            {"mode": "fig1", "etas": (0.5,), "xis": (1.0,)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_corrupt_prefactor_switches_variant(self):
        config = RunConfig(mode="oracle-check", etas=(0.5,), taus=(0.5,), corrupt_prefactor=True)
        assert config.model_params(0.5, 0.5).variant == "typeset"


class TestOutputPaths:
    def test_default_path(self):
        assert default_output_path("oracle-check", "csv").name == "oracle_check.csv"
        assert default_output_path("fig2", "json").parent.name == "data"

    def test_sibling(self, tmp_path):
        assert sibling_path(tmp_path / "fig1.csv", "polytopes", ".json").name == "fig1_polytopes.json"


class TestWorkerPool:
    def test_keeps_order(self):
        assert parallel_map(abs, [-3, 1, -2, 5], workers=2) == [3, 1, 2, 5]
        assert parallel_map(abs, [-3, 1], workers=1) == [3, 1]


class TestModes:
    def test_probs(self, tmp_path):
        output = tmp_path / "probs.csv"
        code = main(["probs", "--eta", "0.5", "--tau", "0.5", "--alpha-max", "1", "--beta-max", "1", "--output", str(output)])
        assert code == EXIT_OK
        table = pd.read_csv(output)
        assert len(table) == 9
        assert list(table.columns) == load_schema()["tables"]["probs"]["columns"]
        assert (table["probability"] > 0).all()

    def test_mu_is_deterministic(self, tmp_path):
        paths = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for path in paths:
            args = ["mu", "--eta", "0.4", "0.8", "--photons", "1", "--alpha-max", "2", "--beta-max", "2", "--output", str(path)]
            assert main(args) == EXIT_OK
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_polytope_is_json(self, tmp_path):
        output = tmp_path / "polytopes.csv"
        code = main(["polytope", "--alpha-max", "2", "--beta-max", "2", "--output", str(output)])
        assert code == EXIT_OK
        document = json.loads(output.with_suffix(".json").read_text())
        assert len(document["polytopes"]) == 9
        two_photon = next(p for p in document["polytopes"] if p["block"] == [1, 1])
        assert two_photon["halfspaces"]["b"] == pytest.approx([0.5], abs=1e-9)

    def test_entropy_breakdown(self, tmp_path):
        output = tmp_path / "entropy.json"
        code = main(["entropy", "--eta", "0.5", "--tau", "0.8", "--alpha-max", "3", "--beta-max", "3", "--format", "json", "--output", str(output)])
        assert code == EXIT_OK
        records = json.loads(output.read_text())
        assert len(records) == 16
        assert list(records[0]) == load_schema()["tables"]["entropy"]["columns"]

    def test_fig1(self, tmp_path):
        output = tmp_path / "fig1.csv"
        code = main(["fig1", "--xi-grid", "0:0.9:4", "--output", str(output)])
        assert code == EXIT_OK
        table = pd.read_csv(output)
        assert len(table) == 12
        start = table[(table["alpha"] == 1) & (table["xi"] == 0.0)].iloc[0]
        assert start["mu_0"] == pytest.approx(1.0)
        assert np.isnan(start["mu_2"])
        assert (table["margin"] < 0).all()
        assert not table["is_ppt"].any()
        polytopes = json.loads((tmp_path / "fig1_polytopes.json").read_text())
        assert [p["block"] for p in polytopes["polytopes"]] == [[1, 1], [2, 2], [3, 3]]

    def test_fig1_json_document(self, tmp_path):
        output = tmp_path / "fig1.json"
        assert main(["fig1", "--xi-grid", "0:0.5:2", "--format", "json", "--output", str(output)]) == EXIT_OK
        document = json.loads(output.read_text())
        assert len(document["trajectories"]) == 6
        assert document["trajectories"][0]["mu_2"] is None

    def test_sweep_columns(self, tmp_path):
        output = tmp_path / "sweep.csv"
        code = main(["sweep", "--photons", "1", "--eta-grid", "0.5:1:2", "--alpha-max", "2", "--beta-max", "2", "--output", str(output)])
        assert code == EXIT_OK
        table = pd.read_csv(output)
        assert list(table.columns) == LEADING_COLUMNS + [f"E_R({a},{b})" for a in range(3) for b in range(3)]
        np.testing.assert_allclose(table.iloc[:, 6:].sum(axis=1), table["E_R_total"], atol=1e-12)


class TestExitCodes:
    def test_invalid_eta(self, tmp_path):
        assert main(["entropy", "--eta", "1.5", "--tau", "1", "--output", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_missing_source(self, tmp_path):
        assert main(["sweep", "--output", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("occupied")
        output = blocker / "probs.csv"
        code = main(["probs", "--eta", "0.5", "--tau", "0.5", "--alpha-max", "0", "--beta-max", "0", "--output", str(output)])
        assert code == EXIT_CONFIG

    def test_no_loss_entropy(self, tmp_path):
        output = tmp_path / "entropy.csv"
        code = main(["entropy", "--eta", "1.0", "--photons", "1", "--alpha-max", "5", "--beta-max", "5", "--output", str(output)])
        assert code == EXIT_OK
        table = pd.read_csv(output)
        assert np.isfinite(table["weighted"]).all()
        assert table["certified"].all()

    @pytest.mark.parametrize("error", [ValueError("array must not contain infs or NaNs"), np.linalg.LinAlgError("SVD did not converge")], ids=["value_error", "linalg_error"])
    def test_numerical_errors_exit_two(self, tmp_path, monkeypatch, error):
        def failing(config):
            raise error

        monkeypatch.setitem(runs.cli.MODE_RUNNERS, "entropy", failing)
        assert main(["entropy", "--eta", "0.5", "--tau", "1", "--output", str(tmp_path / "x.csv")]) == EXIT_CHECK_FAILED

    def test_uncertified_entropy_exits_two(self, tmp_path, monkeypatch):
        monkeypatch.setattr(entropy_solver, "kkt_residual", lambda *args, **kwargs: 1e-3)
        output = tmp_path / "entropy.csv"
        code = main(["entropy", "--eta", "0.5", "--tau", "0.8", "--alpha-max", "2", "--beta-max", "2", "--output", str(output)])
        assert code == EXIT_CHECK_FAILED
        table = pd.read_csv(output)
        assert not table["certified"].all()

    def test_uncertified_sweep_exits_two(self, tmp_path, monkeypatch):
        monkeypatch.setattr(entropy_solver, "kkt_residual", lambda *args, **kwargs: 1e-3)
        output = tmp_path / "sweep.csv"
        code = main(["sweep", "--photons", "1", "--eta-grid", "0.5:1:2", "--alpha-max", "2", "--beta-max", "2", "--output", str(output)])
        assert code == EXIT_CHECK_FAILED
        assert output.exists()

    def test_oracle_check_passes(self, tmp_path):
        output = tmp_path / "oracle.csv"
        code = main(["oracle-check", "--eta", "0.6", "--tau", "0.5", "--u-samples", "3", "--output", str(output)])
        assert code == EXIT_OK
        report = pd.read_csv(output)
        assert list(report.columns) == load_schema()["tables"]["oracle_check"]["columns"]
        assert set(report["check"]) == {"probability", "mu", "symmetry_source", "symmetry_lossy", "kraus_completeness"}
        assert report["passed"].all()

    def test_corrupt_prefactor_fails(self, tmp_path):
        output = tmp_path / "oracle.csv"
        code = main(["oracle-check", "--eta", "0.6", "--tau", "0.5", "--u-samples", "3", "--corrupt-prefactor", "--output", str(output)])
        assert code == EXIT_CHECK_FAILED
        report = pd.read_csv(output).set_index("check")
        assert not report.loc["probability", "passed"]
        assert report.loc["mu", "passed"]


@pytest.mark.slow
class TestFigureCurves:
    def test_entanglement_curves(self, tmp_path):
        output = tmp_path / "fig2.csv"
        assert main(["fig2", "--eta-grid", "0:1:6", "--workers", "2", "--output", str(output)]) == EXIT_OK
        table = pd.read_csv(output)
        assert len(table) == 18

        curves = {n: group.sort_values("eta") for n, group in table.groupby("N")}
        assert sorted(curves) == [0.5, 1.0, 3.0]
        for photons, curve in curves.items():
            values = curve["E_R_total"].to_numpy()
            assert values[0] == 0.0
            assert np.all(np.diff(values) >= -1e-9)
            assert np.all(values[1:] > 0.0)

            tau = math.asinh(math.sqrt(photons / 2))
            t2 = math.tanh(tau) ** 2
            endpoint = math.fsum(
                (a + 1) * t2**a / math.cosh(tau) ** 4 * math.log2(a + 1) for a in range(6)
            )
            assert values[-1] == pytest.approx(endpoint, abs=1e-6)

        for low, high in ((0.5, 1.0), (1.0, 3.0)):
            mask = curves[low]["eta"].to_numpy() >= 0.2
            assert np.all(
                curves[high]["E_R_total"].to_numpy()[mask] >= curves[low]["E_R_total"].to_numpy()[mask]
            )
