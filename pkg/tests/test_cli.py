import json

import pytest

from metricbundle.cli import (
    ConfigError,
    REGISTRY,
    emit_report,
    list_scenarios,
    main,
    run_scenario,
)

FAST_GRID = {"grid": {"counts": [64, 128]}}


class TestRegistry:
    def test_contains_expected_scenarios(self):
        names = [entry["scenario"] for entry in list_scenarios()]
        assert "gauss-bonnet" in names
        assert "index-additivity" in names

    def test_registry_size(self):
        assert len(list_scenarios()) == 7

    def test_listing_is_sorted_and_described(self):
        entries = list_scenarios()
        assert entries == sorted(entries, key=lambda e: e["scenario"])
        assert all(entry["description"] for entry in entries)


class TestRunScenario:
    def test_gauss_bonnet(self):
        report = run_scenario({"scenario": "gauss-bonnet", **FAST_GRID})
        assert report.overall_pass
        row = report.results[0]
        assert row.name == "euler_characteristic"
        assert abs(row.raw - 2.0) < 1e-3

    def test_chern_degree(self):
        report = run_scenario({"scenario": "chern-degree", **FAST_GRID})
        assert report.overall_pass
        assert report.results[0].rounded == 3

    def test_riemann_roch_scan_rows(self):
        report = run_scenario({"scenario": "riemann-roch-scan", **FAST_GRID})
        assert len(report.results) == 7
        for row, n in zip(report.results, range(-3, 4)):
            assert abs(row.raw - (n + 1)) < 2e-3
        assert report.overall_pass

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            run_scenario({"scenario": "does-not-exist"})

    def test_bad_descriptor(self):
        with pytest.raises(ConfigError, match="descriptor"):
            run_scenario({"scenario": "chern-degree", "bundles": ["nonsense:q=1"], **FAST_GRID})

    def test_inputs_echoed(self):
        report = run_scenario({"scenario": "gauss-bonnet", **FAST_GRID})
        assert report.inputs["scenario"] == "gauss-bonnet"
        assert report.inputs["grid"]["counts"] == [64, 128]
        assert report.inputs["tolerance"] == REGISTRY["gauss-bonnet"].defaults["tolerance"]


class TestEmitReport:
    def test_json_schema(self, tmp_path):
        report = run_scenario({"scenario": "gauss-bonnet", **FAST_GRID})
        path = tmp_path / "out.json"
        emit_report(report, str(path), "json")
        doc = json.loads(path.read_text())
        assert set(doc) == {"scenario", "inputs", "results", "timings", "version"}
        assert doc["results"][0]["name"] == "euler_characteristic"
        assert isinstance(doc["results"][0]["raw"], float)
        assert set(doc["results"][0]) == {"name", "raw", "rounded", "tolerance", "pass"}

    def test_csv_header(self, tmp_path):
        report = run_scenario({"scenario": "gauss-bonnet", **FAST_GRID})
        path = tmp_path / "out.csv"
        emit_report(report, str(path), "csv")
        first = path.read_text().splitlines()[0]
        assert first == "name,raw,rounded,tolerance,pass"

    def test_byte_identical_reruns(self, tmp_path):
        paths = []
        for k in range(2):
            report = run_scenario({"scenario": "multinorm-report", "seed": 12})
            path = tmp_path / f"run{k}.json"
            emit_report(report, str(path), "json")
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]


class TestMainEntry:
    def test_version(self, capsys):
        assert main(["version"]) == 0
        assert capsys.readouterr().out.strip() == "0.1.0"

    def test_list_json(self, capsys):
        assert main(["list", "--json"]) == 0
        entries = json.loads(capsys.readouterr().out)
        assert len(entries) == 7

    def test_run_with_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": "chern-degree", **FAST_GRID}))
        out = tmp_path / "report.json"
        code = main(["run", "--config", str(cfg), "--output", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["scenario"] == "chern-degree"

    def test_run_with_set_overrides(self, tmp_path):
        out = tmp_path / "r.json"
        code = main(
            [
                "run",
                "--scenario",
                "chern-degree",
                "--set",
                'bundles=["monopole:n=-2"]',
                "--set",
                "grid.counts=[64,128]",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["results"][0]["rounded"] == -2

    def test_exit_codes(self, tmp_path, capsys):
        assert main(["run", "--scenario", "no-such"]) == 1
        assert (
            main(["run", "--scenario", "chern-degree", "--set", 'bundles=["x:y=1"]']) == 1
        )
        bad_dir = tmp_path / "missing" / "out.json"
        assert (
            main(
                [
                    "run",
                    "--scenario",
                    "gauss-bonnet",
                    "--set",
                    "grid.counts=[64,128]",
                    "--output",
                    str(bad_dir),
                ]
            )
            == 3
        )
        # A clean run whose criteria fail exits with the numerical-failure code.
        assert (
            main(
                [
                    "run",
                    "--scenario",
                    "gauss-bonnet",
                    "--set",
                    "grid.counts=[64,128]",
                    "--set",
                    "tolerance=1e-12",
                    "--output",
                    str(tmp_path / "fail.json"),
                ]
            )
            == 2
        )

    def test_malformed_config_file(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert main(["run", "--config", str(cfg)]) == 1
