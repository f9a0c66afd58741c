import json

import pytest

from blockstab.cli import main

from conftest import write_series_csv


@pytest.fixture
def series_csv(tmp_path):
    path = tmp_path / "series.csv"
    write_series_csv(path)
    return path


# -- bound ---------------------------------------------------------------------


def test_bound_prints_reference_values(capsys):
    assert main(["bound", "--q", "40", "--p", "104", "--phi", "0.8", "-B", "50"]) == 0
    out = capsys.readouterr().out
    assert "0.823529" in out
    bound_line = [l for l in out.splitlines() if l.startswith("bound")][0]
    value = float(bound_line.split("=")[1].split("(")[0])
    assert round(value, 2) == 25.34


def test_bound_solves_phi(capsys):
    assert main(["bound", "--q", "10", "--p", "100", "--l", "0.05", "-B", "50"]) == 0
    out = capsys.readouterr().out
    assert "phi = 0.610000" in out


def test_bound_theta_override(capsys):
    assert main(["bound", "--q", "40", "--p", "200", "--phi", "0.7", "--theta", "0.2", "-B", "50"]) == 0
    out = capsys.readouterr().out
    assert "1.282051" in out


def test_bound_requires_phi_or_l(capsys):
    assert main(["bound", "--q", "10", "--p", "100"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "config"
    assert any("phi/l" in m for m in err["messages"])


def test_bound_off_grid_phi_is_config_error(capsys):
    assert main(["bound", "--q", "10", "--p", "100", "--phi", "0.805", "-B", "50"]) == 2


def test_bound_infeasible_target_is_numerical(capsys):
    assert main(["bound", "--q", "40", "--p", "104", "--l", "0.001", "-B", "50"]) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "numerical"


# -- select -------------------------------------------------------------------


def select_args(series_csv, out, workers="1", extra=()):
    return [
        "select",
        "--input", str(series_csv),
        "--target", "Y",
        "--endo-lags", "3",
        "--exo-lags", "1",
        "--q", "0.2",
        "--phi", "0.8",
        "-B", "25",
        "--block-length", "16",
        "--seed", "7",
        "--workers", workers,
        "--output", str(out),
        *extra,
    ]


def test_select_report_contents(tmp_path, series_csv):
    out = tmp_path / "report.json"
    assert main(select_args(series_csv, out)) == 0
    report = json.loads(out.read_text())
    p = len(report["scores"])
    assert p == 3 + 7  # three response lags plus seven candidates
    assert report["q"] == max(1, int(0.2 * p))
    # thresholding a q-calibrated base at phi > 0.5 stays at or below q
    assert len(report["stable_set"]) <= report["q"]
    assert report["lambda_q"] > 0
    assert report["params"]["seed"] == 7
    assert "workers" not in report["params"]
    assert report["bound"] is not None


def test_select_deterministic_across_worker_counts(tmp_path, series_csv):
    out1 = tmp_path / "r1.json"
    out4 = tmp_path / "r4.json"
    assert main(select_args(series_csv, out1, workers="1")) == 0
    assert main(select_args(series_csv, out4, workers="4")) == 0
    assert out1.read_bytes() == out4.read_bytes()


def test_select_unknown_column_fails_fast(tmp_path, series_csv, capsys):
    args = select_args(series_csv, tmp_path / "r.json")
    args[args.index("--target") + 1] = "nope"
    assert main(args) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "data"
    assert "nope" in err["messages"][0]


def test_select_rejects_phi_and_l_together(tmp_path, series_csv, capsys):
    assert main(select_args(series_csv, tmp_path / "r.json", extra=["--l", "0.1"])) == 2
    err = json.loads(capsys.readouterr().err)
    assert any("exactly one" in m for m in err["messages"])


def test_select_requires_phi_or_l(tmp_path, series_csv):
    args = select_args(series_csv, tmp_path / "r.json")
    i = args.index("--phi")
    del args[i : i + 2]
    assert main(args) == 2


def test_select_solves_phi_from_l(tmp_path, series_csv):
    out = tmp_path / "r.json"
    args = select_args(series_csv, out)
    i = args.index("--phi")
    args[i : i + 2] = ["--l", "0.2"]
    assert main(args) == 0
    report = json.loads(out.read_text())
    assert report["phi_solved"] is True
    assert report["bound"] <= 0.2 * len(report["scores"])


def test_select_missing_file_is_data_error(tmp_path, capsys):
    assert main(select_args(tmp_path / "missing.csv", tmp_path / "r.json")) == 3


def test_config_errors_enumerate_every_field(tmp_path, series_csv, capsys):
    args = [
        "select",
        "--input", str(series_csv),
        "--target", "Y",
        "--endo-lags", "-1",
        "--exo-lags", "0",
        "--q", "-3",
        "--phi", "1.5",
        "--output", str(tmp_path / "r.json"),
    ]
    assert main(args) == 2
    err = json.loads(capsys.readouterr().err)
    joined = " ".join(err["messages"])
    assert "endo-lags" in joined and "q:" in joined and "phi" in joined


# -- simulate -----------------------------------------------------------------


def test_simulate_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    args = [
        "simulate",
        "--T", "300",
        "--n-true", "2",
        "--n-decoy", "2",
        "--n-noise", "1",
        "--beta-sd", "0.6",
        "--sigmas", "0,0.5",
        "--n-seeds", "2",
        "--q", "3",
        "--phi", "0.8",
        "-B", "5",
        "--block-length", "15",
        "--seed", "3",
        "--methods", "bpa,lasso_q",
        "--output", str(out),
    ]
    assert main(args) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "sigma,seed,method,tpr,fpr"
    assert len(lines) == 1 + 2 * 2 * 2


def test_simulate_deterministic(tmp_path):
    outs = []
    for name, workers in (("a.csv", "1"), ("b.csv", "3")):
        out = tmp_path / name
        args = [
            "simulate", "--T", "240", "--n-true", "2", "--n-decoy", "1", "--n-noise", "1",
            "--beta-sd", "0.6", "--sigmas", "0.5", "--n-seeds", "1", "--q", "2",
            "-B", "4", "--block-length", "12", "--seed", "9", "--methods", "bpa",
            "--workers", workers, "--output", str(out),
        ]
        assert main(args) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


# -- forecast -----------------------------------------------------------------


def test_forecast_outputs(tmp_path, series_csv):
    prefix = tmp_path / "cmp"
    args = [
        "forecast",
        "--input", str(series_csv),
        "--target", "Y",
        "--endo-lags", "3",
        "--exo-lags", "1",
        "--q", "4",
        "--phi", "0.8",
        "-B", "8",
        "--block-length", "16",
        "--seed", "1",
        "--methods", "bpa,lasso_q",
        "--train-fraction", "0.67",
        "--output", str(prefix),
    ]
    assert main(args) == 0
    payload = json.loads((tmp_path / "cmp.json").read_text())
    assert {r["method"] for r in payload["results"]} == {"bpa", "lasso_q"}
    for r in payload["results"]:
        assert r["error"] is None
        assert r["rmse"] >= 0
    table = (tmp_path / "cmp.csv").read_text().splitlines()
    assert table[0].startswith("method,")
    assert len(table) == 3
